#ifndef STABLEBRANCH_STABLE_MOTION_HPP
#define STABLEBRANCH_STABLE_MOTION_HPP

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "stablebranch/rng.hpp"

namespace stablebranch {

// Largest spatial dimension supported by the path/particle containers.
inline constexpr int kMaxDim = 4;

using Point = std::array<double, kMaxDim>;

double norm(const Point& p, int dim);
Point sub(const Point& a, const Point& b);
double dist(const Point& a, const Point& b, int dim);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Isotropic alpha-stable motion with characteristic function
// E exp(i xi . X_t) = exp(-t |xi|^alpha / 2), the semigroup of (1/2)(-Delta)^{alpha/2}.
struct StableParams {
  double alpha = 1.5;
  int dim = 1;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 2.0))
      throw ConfigError("StableParams: alpha must lie in (0,2)");
    if (dim < 1) throw ConfigError("StableParams: dim must be >= 1");
  }
};

// Discrete skeleton of a path: positions[k] is the state at times[k].
struct PathGrid {
  std::vector<double> times;
  std::vector<Point> positions;
  int dim = 1;
};

// Standard symmetric alpha-stable variate (cf exp(-|xi|^alpha)) by the
// Chambers-Mallows-Stuck transform; exact in law for all alpha in (0,2).
double sample_standard_symmetric(double alpha, RngStream& rng);

// Positive stable variate with Laplace transform exp(-u^rho), 0 < rho < 1
// (Kanter's representation).
double sample_positive_stable(double rho, RngStream& rng);

// Increment X_dt - X_0. d=1 uses the exact one-dimensional transform with the
// scale (dt/2)^{1/alpha} matching the exponent |xi|^alpha/2; d>=2 uses
// Gaussian subordination (see sample_increment_subordinated).
Point sample_increment(const StableParams& params, double dt, RngStream& rng);

// Subordinated construction valid for any d >= 1: X = sqrt(tau) Z with Z
// standard d-dim normal, tau = (dt 2^{alpha/2-1})^{2/alpha} S and S positive
// (alpha/2)-stable. The subordinator scale makes the characteristic exponent
// exactly |xi|^alpha/2.
Point sample_increment_subordinated(const StableParams& params, double dt,
                                    RngStream& rng);

// Hot-loop variant of sample_increment for a fixed (params, dt): the scale
// factors and exponents are computed once, and the one-dimensional transform
// evaluates both angles through one sincos pair each.
class IncrementSampler {
 public:
  IncrementSampler(const StableParams& params, double dt);

  double draw1(RngStream& rng) const;  // d = 1 only
  Point draw(RngStream& rng) const;

  double step() const { return dt_; }

 private:
  double alpha_;
  int dim_;
  double dt_;
  double inv_alpha_;
  double frac_;        // (1 - alpha) / alpha
  double scale1_;      // (dt/2)^{1/alpha}
  double rho_;         // alpha / 2
  double rho_frac_;    // (1 - rho) / rho and friends for the subordinator
  double rho_exp_a_;   // rho / (1 - rho)
  double rho_exp_b_;   // 1 / (1 - rho)
  double tau_scale_;   // (dt 2^{alpha/2 - 1})^{1/rho}
};

PathGrid sample_path(const StableParams& params, const Point& x0,
                     std::span<const double> times, RngStream& rng);

// Limit constant C = lim r^{d+alpha} g(r) of the transition density profile:
// alpha 2^{alpha-2} sin(alpha pi/2) Gamma((d+alpha)/2) Gamma(alpha/2) / pi^{d/2+1}.
double tail_constant(const StableParams& params);

// Surface area of the unit sphere in R^d.
double unit_ball_surface(int dim);

// First-order approximation of P(|X_1| >= r) for large r:
// omega_d C r^{-alpha} / alpha. Asymptotic, not exact.
double tail_probability_reference(const StableParams& params, double r);

// Exact law for alpha=1, d=1: X_1 is Cauchy with scale 1/2.
double cauchy_half_cdf(double x);
double cauchy_half_abs_tail(double r);  // P(|X_1| >= r)

}  // namespace stablebranch

#endif
