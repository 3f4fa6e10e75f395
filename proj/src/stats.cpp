#include "stablebranch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stablebranch {

double kolmogorov_q(double x) {
  if (x <= 0.0) return 1.0;
  if (x > 8.0) return 0.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_from_stat(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  // Stephens' small-sample correction
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const std::size_t na = sa.size(), nb = sb.size();
  if (na == 0 || nb == 0) throw std::invalid_argument("ks_two_sample: empty sample");
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < na && j < nb) {
    if (sa[i] <= sb[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / na;
    const double fb = static_cast<double>(j) / nb;
    d = std::max(d, std::fabs(fa - fb));
  }
  const double n_eff = static_cast<double>(na) * nb / static_cast<double>(na + nb);
  return {d, ks_p_from_stat(d, n_eff)};
}

KsResult ks_one_sample(std::span<const double> sample, double (*cdf)(double)) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  std::vector<double> c(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) c[i] = cdf(s[i]);
  return ks_one_sample_sorted(s, c);
}

KsResult ks_one_sample_sorted(std::span<const double> sorted,
                              std::span<const double> cdf_at) {
  const std::size_t n = sorted.size();
  if (n == 0 || cdf_at.size() != n)
    throw std::invalid_argument("ks_one_sample: bad input");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::fabs(cdf_at[i] - lo), std::fabs(hi - cdf_at[i])));
  }
  return {d, ks_p_from_stat(d, static_cast<double>(n))};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit: need n >= 2");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate x");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - intercept - slope * x[i];
    rss += r * r;
  }
  const double se =
      n > 2 ? std::sqrt(rss / (static_cast<double>(n - 2) * sxx)) : 0.0;
  return {slope, intercept, se};
}

double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty");
  std::sort(v.begin(), v.end());
  if (q <= 0.0) return v.front();
  if (q >= 1.0) return v.back();
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

Interval bootstrap_median_ci(std::span<const double> v, int n_resamples,
                             double level, RngStream rng) {
  if (v.empty()) throw std::invalid_argument("bootstrap_median_ci: empty");
  std::vector<double> medians(n_resamples);
  std::vector<double> resample(v.size());
  for (int b = 0; b < n_resamples; ++b) {
    for (std::size_t i = 0; i < v.size(); ++i)
      resample[i] = v[static_cast<std::size_t>(rng.uniform01() * v.size())];
    medians[b] = median(resample);
  }
  const double a = (1.0 - level) / 2.0;
  return {quantile(medians, a), quantile(medians, 1.0 - a)};
}

double log_sum_exp(std::span<const double> a) {
  if (a.empty()) return -std::numeric_limits<double>::infinity();
  double m = a[0];
  for (double x : a) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : a) s += std::exp(x - m);
  return m + std::log(s);
}

namespace {

// sum holds Sum exp(a_i - shift); (shift=0, sum=0) encodes "no finite terms".
void lse_push(double& shift, double& sum, double a) {
  if (sum == 0.0) {
    shift = a;
    sum = 1.0;
  } else if (a > shift) {
    sum = sum * std::exp(shift - a) + 1.0;
    shift = a;
  } else {
    sum += std::exp(a - shift);
  }
}

void lse_combine(double& shift, double& sum, double oshift, double osum) {
  if (osum == 0.0) return;
  if (sum == 0.0) {
    shift = oshift;
    sum = osum;
    return;
  }
  const double m = std::max(shift, oshift);
  sum = sum * std::exp(shift - m) + osum * std::exp(oshift - m);
  shift = m;
}

}  // namespace

void LogMomentAccumulator::add(double log_weight) {
  ++n_;
  if (log_weight == -std::numeric_limits<double>::infinity()) return;
  lse_push(shift1_, sum1_, log_weight);
  lse_push(shift2_, sum2_, 2.0 * log_weight);
}

void LogMomentAccumulator::merge(const LogMomentAccumulator& other) {
  lse_combine(shift1_, sum1_, other.shift1_, other.sum1_);
  lse_combine(shift2_, sum2_, other.shift2_, other.sum2_);
  n_ += other.n_;
}

double LogMomentAccumulator::mean() const {
  if (n_ == 0 || sum1_ == 0.0) return 0.0;
  return std::exp(shift1_) * sum1_ / static_cast<double>(n_);
}

double LogMomentAccumulator::second_moment() const {
  if (n_ == 0 || sum2_ == 0.0) return 0.0;
  return std::exp(shift2_) * sum2_ / static_cast<double>(n_);
}

double LogMomentAccumulator::std_error() const {
  if (n_ < 2) return 0.0;
  const double m = mean();
  const double var = std::max(second_moment() - m * m, 0.0);
  return std::sqrt(var / static_cast<double>(n_));
}

double LogMomentAccumulator::log_mean() const {
  if (n_ == 0 || sum1_ == 0.0) return -std::numeric_limits<double>::infinity();
  return shift1_ + std::log(sum1_) - std::log(static_cast<double>(n_));
}

}  // namespace stablebranch
