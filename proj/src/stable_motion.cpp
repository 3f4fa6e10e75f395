#include "stablebranch/stable_motion.hpp"

#include <cmath>

namespace stablebranch {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double norm(const Point& p, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

Point sub(const Point& a, const Point& b) {
  Point r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
  return r;
}

double dist(const Point& a, const Point& b, int dim) {
  double s = 0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double sample_standard_symmetric(double alpha, RngStream& rng) {
  const double u = kPi * (rng.uniform_oo() - 0.5);  // (-pi/2, pi/2)
  const double w = rng.exponential();
  if (alpha == 1.0) return std::tan(u);
  const double a = alpha * u;
  return std::sin(a) / std::pow(std::cos(u), 1.0 / alpha) *
         std::pow(std::cos(u - a) / w, (1.0 - alpha) / alpha);
}

double sample_positive_stable(double rho, RngStream& rng) {
  const double u = kPi * rng.uniform_oo();  // (0, pi)
  const double w = rng.exponential();
  const double a = std::sin((1.0 - rho) * u) *
                   std::pow(std::sin(rho * u), rho / (1.0 - rho)) /
                   std::pow(std::sin(u), 1.0 / (1.0 - rho));
  return std::pow(a / w, (1.0 - rho) / rho);
}

Point sample_increment(const StableParams& params, double dt, RngStream& rng) {
  params.validate();
  if (dt < 0.0) throw DomainError("sample_increment: dt must be >= 0");
  if (dt == 0.0) return Point{};
  return IncrementSampler(params, dt).draw(rng);
}

IncrementSampler::IncrementSampler(const StableParams& params, double dt)
    : alpha_(params.alpha), dim_(params.dim), dt_(dt) {
  params.validate();
  if (!(dt > 0.0)) throw DomainError("IncrementSampler: dt must be > 0");
  inv_alpha_ = 1.0 / alpha_;
  frac_ = (1.0 - alpha_) / alpha_;
  scale1_ = std::pow(dt / 2.0, inv_alpha_);
  rho_ = alpha_ / 2.0;
  rho_frac_ = (1.0 - rho_) / rho_;
  rho_exp_a_ = rho_ / (1.0 - rho_);
  rho_exp_b_ = 1.0 / (1.0 - rho_);
  tau_scale_ = std::pow(dt * std::pow(2.0, alpha_ / 2.0 - 1.0), 1.0 / rho_);
}

double IncrementSampler::draw1(RngStream& rng) const {
  const double u = kPi * (rng.uniform_oo() - 0.5);
  const double w = rng.exponential();
  double su, cu, sa, ca;
  sincos(u, &su, &cu);
  if (alpha_ == 1.0) return scale1_ * su / cu;
  sincos(alpha_ * u, &sa, &ca);
  const double cos_diff = cu * ca + su * sa;  // cos(u - alpha u)
  return scale1_ * sa * std::pow(cu, -inv_alpha_) *
         std::pow(cos_diff / w, frac_);
}

Point IncrementSampler::draw(RngStream& rng) const {
  Point out{};
  if (dim_ == 1) {
    out[0] = draw1(rng);
    return out;
  }
  // positive (alpha/2)-stable subordinator, then a Gaussian fill
  const double u = kPi * rng.uniform_oo();
  const double w = rng.exponential();
  const double a = std::sin((1.0 - rho_) * u) *
                   std::pow(std::sin(rho_ * u), rho_exp_a_) /
                   std::pow(std::sin(u), rho_exp_b_);
  const double s = std::pow(a / w, rho_frac_);
  const double sd = std::sqrt(tau_scale_ * s);
  for (int c = 0; c < dim_; c += 2) {
    const double r = std::sqrt(-2.0 * std::log(rng.uniform_oo()));
    double sz, cz;
    sincos(2.0 * kPi * rng.uniform01(), &sz, &cz);
    out[c] = sd * r * cz;
    if (c + 1 < dim_) out[c + 1] = sd * r * sz;
  }
  return out;
}

Point sample_increment_subordinated(const StableParams& params, double dt,
                                    RngStream& rng) {
  params.validate();
  if (dt < 0.0) throw DomainError("sample_increment: dt must be >= 0");
  Point out{};
  if (dt == 0.0) return out;
  const double rho = params.alpha / 2.0;
  const double s = sample_positive_stable(rho, rng);
  const double tau =
      std::pow(dt * std::pow(2.0, params.alpha / 2.0 - 1.0), 1.0 / rho) * s;
  const double sd = std::sqrt(tau);
  for (int i = 0; i < params.dim; ++i) out[i] = sd * rng.normal();
  return out;
}

PathGrid sample_path(const StableParams& params, const Point& x0,
                     std::span<const double> times, RngStream& rng) {
  params.validate();
  if (times.empty()) throw DomainError("sample_path: empty time grid");
  if (times[0] < 0.0) throw DomainError("sample_path: times must start at >= 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw DomainError("sample_path: times must be strictly increasing");

  PathGrid path;
  path.dim = params.dim;
  path.times.assign(times.begin(), times.end());
  path.positions.resize(times.size());
  path.positions[0] = x0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const Point inc = sample_increment(params, times[k] - times[k - 1], rng);
    for (int i = 0; i < params.dim; ++i)
      path.positions[k][i] = path.positions[k - 1][i] + inc[i];
  }
  return path;
}

double tail_constant(const StableParams& params) {
  params.validate();
  const double a = params.alpha;
  const double d = params.dim;
  return a * std::pow(2.0, a - 2.0) * std::sin(a * kPi / 2.0) *
         std::tgamma((d + a) / 2.0) * std::tgamma(a / 2.0) /
         std::pow(kPi, d / 2.0 + 1.0);
}

double unit_ball_surface(int dim) {
  return 2.0 * std::pow(kPi, dim / 2.0) / std::tgamma(dim / 2.0);
}

double tail_probability_reference(const StableParams& params, double r) {
  params.validate();
  if (!(r > 0.0)) throw DomainError("tail_probability_reference: r must be > 0");
  return unit_ball_surface(params.dim) * tail_constant(params) *
         std::pow(r, -params.alpha) / params.alpha;
}

double cauchy_half_cdf(double x) { return 0.5 + std::atan(2.0 * x) / kPi; }

double cauchy_half_abs_tail(double r) {
  return 1.0 - (2.0 / kPi) * std::atan(2.0 * r);
}

}  // namespace stablebranch
