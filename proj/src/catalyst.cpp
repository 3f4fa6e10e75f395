#include "stablebranch/catalyst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablebranch {

std::string to_string(CatalystKind k) {
  switch (k) {
    case CatalystKind::point_mass: return "point_mass";
    case CatalystKind::ball_indicator: return "ball_indicator";
    case CatalystKind::grid_density: return "grid_density";
    case CatalystKind::sphere_surface: return "sphere_surface";
  }
  return "?";
}

double GridDensityData::value_at(double x) const {
  if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin()) return values.front();
  if (it == xs.end()) return values.back();
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return values[j - 1] * (1.0 - w) + values[j] * w;
}

std::vector<std::string> GridDensityData::validate() const {
  std::vector<std::string> errs;
  if (xs.size() < 2) errs.push_back("grid_density: need at least two grid points");
  if (xs.size() != values.size())
    errs.push_back("grid_density: coordinate/value column length mismatch");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) {
      errs.push_back("grid_density: coordinates must be strictly increasing");
      break;
    }
  for (double v : values)
    if (v < 0.0) {
      errs.push_back("grid_density: density values must be nonnegative");
      break;
    }
  return errs;
}

double CatalystSpec::rate_at(const Point& x, int dim) const {
  switch (kind) {
    case CatalystKind::point_mass:
      return std::fabs(x[0] - center[0]) <= tube_epsilon
                 ? mass / (2.0 * tube_epsilon)
                 : 0.0;
    case CatalystKind::ball_indicator:
      return dist(x, center, dim) <= radius ? mass : 0.0;
    case CatalystKind::grid_density:
      return grid.value_at(x[0]);
    case CatalystKind::sphere_surface:
      return std::fabs(norm(x, dim) - radius) <= tube_epsilon
                 ? mass / (2.0 * tube_epsilon)
                 : 0.0;
  }
  return 0.0;
}

double CatalystSpec::support_radius(int dim) const {
  switch (kind) {
    case CatalystKind::point_mass:
      return std::fabs(center[0]) + tube_epsilon;
    case CatalystKind::ball_indicator:
      return norm(center, dim) + radius;
    case CatalystKind::grid_density:
      return grid.xs.empty()
                 ? 0.0
                 : std::max(std::fabs(grid.xs.front()), std::fabs(grid.xs.back()));
    case CatalystKind::sphere_surface:
      return radius + tube_epsilon;
  }
  return 0.0;
}

double CatalystSpec::max_step(double alpha) const {
  if (!is_singular()) return std::numeric_limits<double>::infinity();
  return std::pow(tube_epsilon / 4.0, alpha);
}

std::vector<std::string> CatalystSpec::validate(const StableParams& motion) const {
  std::vector<std::string> errs;
  switch (kind) {
    case CatalystKind::point_mass:
      if (motion.dim != 1)
        errs.push_back("point_mass catalyst requires d = 1");
      if (!(motion.alpha > 1.0))
        errs.push_back("point_mass catalyst requires alpha > 1");
      if (!(mass > 0.0)) errs.push_back("point_mass: mass must be > 0");
      break;
    case CatalystKind::ball_indicator:
      if (!(mass > 0.0)) errs.push_back("ball_indicator: density must be > 0");
      if (!(radius > 0.0)) errs.push_back("ball_indicator: radius must be > 0");
      break;
    case CatalystKind::grid_density: {
      if (motion.dim != 1)
        errs.push_back("grid_density catalyst requires d = 1 in this version");
      auto ge = grid.validate();
      errs.insert(errs.end(), ge.begin(), ge.end());
      break;
    }
    case CatalystKind::sphere_surface:
      if (!(motion.dim > motion.alpha))
        errs.push_back("sphere_surface catalyst requires d > alpha");
      if (!(motion.alpha > 1.0))
        errs.push_back("sphere_surface catalyst requires alpha > 1");
      if (!(mass > 0.0)) errs.push_back("sphere_surface: density must be > 0");
      if (!(radius > 0.0)) errs.push_back("sphere_surface: radius must be > 0");
      break;
  }
  if (is_singular() && !(tube_epsilon > 0.0))
    errs.push_back("tube_epsilon must be > 0 for singular catalysts");
  return errs;
}

double OffspringLaw::mean_q() const {
  double q = 0;
  for (const auto& [n, p] : probabilities) q += n * p;
  return q;
}

double OffspringLaw::second_factorial_r() const {
  double r = 0;
  for (const auto& [n, p] : probabilities) r += static_cast<double>(n) * (n - 1) * p;
  return r;
}

int OffspringLaw::sample(RngStream& rng) const {
  double u = rng.uniform01();
  for (const auto& [n, p] : probabilities) {
    if (u < p) return n;
    u -= p;
  }
  return probabilities.back().first;
}

std::vector<std::string> OffspringLaw::validate() const {
  std::vector<std::string> errs;
  if (probabilities.empty()) {
    errs.push_back("offspring: no probabilities given");
    return errs;
  }
  double sum = 0;
  for (const auto& [n, p] : probabilities) {
    if (n < 1)
      errs.push_back("offspring: p_0 is not part of the model (splits always "
                     "produce at least one particle); n must be >= 1");
    if (p < 0.0 || p > 1.0)
      errs.push_back("offspring: probabilities must lie in [0,1]");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    errs.push_back("offspring: probabilities must sum to 1");
  return errs;
}

std::pair<double, double> q_r_moments(const OffspringLaw& law) {
  return {law.mean_q(), law.second_factorial_r()};
}

double pcaf_increment(const CatalystSpec& spec, const PathGrid& path,
                      std::size_t begin, std::size_t end, double step,
                      const StableParams& motion) {
  if (begin >= end || end > path.positions.size())
    throw DomainError("pcaf_increment: empty or out-of-range slice");
  if (spec.is_singular() && step > spec.max_step(motion.alpha) * (1.0 + 1e-12))
    throw ConfigError("pcaf_increment: step violates the step/epsilon rule "
                      "step <= (epsilon/4)^alpha");
  double a = 0.0;
  for (std::size_t k = begin; k + 1 < end; ++k)
    a += spec.rate_at(path.positions[k], motion.dim) * step;
  return a;
}

double pcaf_increment(const CatalystSpec& spec, const PathGrid& path,
                      double step, const StableParams& motion) {
  return pcaf_increment(spec, path, 0, path.positions.size(), step, motion);
}

}  // namespace stablebranch
