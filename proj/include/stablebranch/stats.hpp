#ifndef STABLEBRANCH_STATS_HPP
#define STABLEBRANCH_STATS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "stablebranch/rng.hpp"

namespace stablebranch {

// Survival function of the Kolmogorov distribution, Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x);

// Two-sample Kolmogorov-Smirnov test; returns asymptotic p-value.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// One-sample KS against a CDF evaluated at the sample points.
KsResult ks_one_sample(std::span<const double> sample, double (*cdf)(double));
KsResult ks_one_sample_sorted(std::span<const double> sorted, std::span<const double> cdf_at);

// Ordinary least squares y = a + b x; returns slope, intercept and the
// standard error of the slope under iid residuals.
struct LinearFit {
  double slope;
  double intercept;
  double slope_stderr;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double median(std::vector<double> v);             // by copy; v may be unsorted
double quantile(std::vector<double> v, double q)
    ;                                             // linear interpolation, q in [0,1]

// Percentile bootstrap CI for the median of `v`.
struct Interval {
  double lo;
  double hi;
};
Interval bootstrap_median_ci(std::span<const double> v, int n_resamples,
                             double level, RngStream rng);

// log(sum(exp(a_i))) computed stably.
double log_sum_exp(std::span<const double> a);

// Online log-space accumulator for sum of exp(a_i) and sum of exp(2 a_i);
// mean/std_error recover the moments of exp(a).
class LogMomentAccumulator {
 public:
  void add(double log_weight);
  void merge(const LogMomentAccumulator& other);
  std::uint64_t count() const { return n_; }
  double mean() const;          // (1/n) sum exp(a_i)
  double second_moment() const; // (1/n) sum exp(2 a_i)
  double std_error() const;     // sqrt(max(m2 - mean^2, 0) / n)
  double log_mean() const;

 private:
  // running max-shifted sums: sum exp(a_i - shift)
  double shift1_ = 0, sum1_ = 0;
  double shift2_ = 0, sum2_ = 0;
  std::uint64_t n_ = 0;
};

}  // namespace stablebranch

#endif
