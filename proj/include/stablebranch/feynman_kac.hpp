#ifndef STABLEBRANCH_FEYNMAN_KAC_HPP
#define STABLEBRANCH_FEYNMAN_KAC_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "stablebranch/branching.hpp"
#include "stablebranch/catalyst.hpp"
#include "stablebranch/stable_motion.hpp"

namespace stablebranch {

struct FkEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  double t = 0.0;
  std::optional<double> kappa;
  std::uint64_t hits = 0;        // paths with the indicator satisfied
  bool no_hit = false;           // kappa too deep for this sample size
  double regime_kappa_scaled = 0.0;  // kappa t^{-1/alpha}; tail regime diagnostic
  double cov_probe = 0.0;        // coefficient of variation from the 100-path probe
};

struct FkOptions {
  double step = 1e-3;
  std::uint64_t probe_paths = 100;  // pre-run variance probe; 0 disables
};

// Monte Carlo estimate of E_x[exp(A_t^nu)], nu = nu_scale * mu, over n
// independent paths. Weights are held in log space and combined through a
// log-sum-exp accumulator, so strong catalysts cannot overflow.
FkEstimate estimate_exp_functional(const CatalystSpec& mu,
                                   const StableParams& motion, double nu_scale,
                                   const Point& x0, double t, std::uint64_t n,
                                   const FkOptions& opts, RngStream rng);

// E_x[exp(A_t^nu); |X_t| >= kappa]. With kappa = 0 this reproduces
// estimate_exp_functional exactly on the same seeds (identical draw order).
FkEstimate estimate_tail_functional(const CatalystSpec& mu,
                                    const StableParams& motion, double nu_scale,
                                    const Point& x0, double t, double kappa,
                                    std::uint64_t n, const FkOptions& opts,
                                    RngStream rng);

// One path sweep, many horizons: estimates at each t in t_list (sorted
// ascending) share paths, which tightens slope regressions across horizons.
std::vector<FkEstimate> estimate_exp_functional_multi(
    const CatalystSpec& mu, const StableParams& motion, double nu_scale,
    const Point& x0, std::span<const double> t_list, std::uint64_t n,
    const FkOptions& opts, RngStream rng);

// Cloning estimator of the same functional for horizons where the plain
// sample mean is outside its useful regime (relative variance of e^{A_t}
// grows like exp((lambda(2 nu) - 2 lambda(nu)) t), so one rare excursion
// dominates long horizons). A population of walkers is resampled
// systematically every `block_dt` in proportion to the block weights
// e^{nu dA}; the product of block-mean weights is an unbiased estimator of
// E_x[exp(A_t^nu)]. No change of path measure is involved. Returns the log
// estimate at each horizon (horizons are rounded to block boundaries).
std::vector<double> estimate_exp_functional_cloning(
    const CatalystSpec& mu, const StableParams& motion, double nu_scale,
    const Point& x0, std::span<const double> t_list, std::uint64_t n_walkers,
    double block_dt, double step, RngStream rng);

// Two-sided Many-to-One comparison: branching-ensemble mean of Z_t(f) against
// the single-particle estimate of E_x[exp(A_t^{(Q-1)mu}) f(X_t)], with
// f = 1_{B(0, ball_radius)}. With historical=true the indicator is instead
// applied to the running maximum sup_{s<=t}|X_s| >= kappa on both sides.
struct ManyToOneReport {
  double branching_mean = 0.0;
  double branching_se = 0.0;
  double fk_mean = 0.0;
  double fk_se = 0.0;
  double z_score = 0.0;
  std::uint64_t n_per_side = 0;
};

struct ManyToOneSetup {
  CatalystSpec mu;
  OffspringLaw offspring;
  StableParams motion;
  Point x0{};
  double t = 5.0;
  double step = 1e-3;
  std::uint64_t population_cap = 1'000'000;
  bool historical = false;
  double ball_radius = 1.0;  // f support when historical == false
  double kappa = 0.0;        // running-max threshold when historical == true
};

ManyToOneReport many_to_one_pair(const ManyToOneSetup& setup, std::uint64_t n,
                                 RngStream rng);

// Empirical running-maximum tail check against the marginal-tail sandwich
// P(|X_1| >= kappa) <= P(M_1 >= kappa) <= 2 P(|X_1| >= kappa). The path
// maximum is observed on the step grid; the report notes the one-sided bias.
struct RunningMaxReport {
  double p_max = 0.0;          // empirical P(grid max >= kappa)
  double p_max_se = 0.0;
  double p_marginal = 0.0;     // empirical P(|X_1| >= kappa)
  double band_lo = 0.0;        // reference tail with CI slack
  double band_hi = 0.0;
  bool within_band = false;
  bool insufficient_hits = false;
  std::uint64_t hits = 0;
};

// `exact_marginal_tail`: P(|X_1| >= kappa) from a closed form when known
// (alpha=1, d=1); pass <= 0 to use the empirical marginal instead.
RunningMaxReport running_max_sandwich_check(const StableParams& motion,
                                            const Point& x0, double kappa,
                                            std::uint64_t n, double step,
                                            double exact_marginal_tail,
                                            RngStream rng);

}  // namespace stablebranch

#endif
