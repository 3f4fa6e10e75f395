#ifndef STABLEBRANCH_CATALYST_HPP
#define STABLEBRANCH_CATALYST_HPP

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stablebranch/rng.hpp"
#include "stablebranch/stable_motion.hpp"

namespace stablebranch {

enum class CatalystKind { point_mass, ball_indicator, grid_density, sphere_surface };

std::string to_string(CatalystKind k);

// Nonnegative density sampled on a strictly increasing 1-d grid; zero outside
// [xs.front(), xs.back()], linearly interpolated inside.
struct GridDensityData {
  std::vector<double> xs;
  std::vector<double> values;

  double value_at(double x) const;
  std::vector<std::string> validate() const;
};

// The branching-rate measure. Singular variants (point mass, sphere surface)
// are realised as epsilon-tube mollifications of the occupation measure; the
// rate seen by a path at position x is then mass/(2 epsilon) inside the tube.
struct CatalystSpec {
  CatalystKind kind = CatalystKind::point_mass;
  double mass = 1.0;          // point: total mass; ball/sphere: density
  Point center{};             // point / ball
  double radius = 0.0;        // ball / sphere
  double tube_epsilon = 0.05; // mollification width for singular variants
  GridDensityData grid;       // grid_density only

  bool is_singular() const {
    return kind == CatalystKind::point_mass || kind == CatalystKind::sphere_surface;
  }

  // Instantaneous PCAF accumulation rate at x (the mollified density of mu).
  double rate_at(const Point& x, int dim) const;

  // Radius of a ball around the origin containing the (fattened) support.
  double support_radius(int dim) const;

  // Largest legal simulation step for this spec: singular variants require
  // step^{1/alpha} <= tube_epsilon/4, i.e. step <= (epsilon/4)^alpha.
  double max_step(double alpha) const;

  std::vector<std::string> validate(const StableParams& motion) const;
};

// Offspring law {p_n}_{n>=1}, space-independent, finite support. p_0 is
// structurally absent: a split always produces at least one particle.
struct OffspringLaw {
  std::vector<std::pair<int, double>> probabilities;  // (n, p_n), n >= 1

  double mean_q() const;               // Q = sum n p_n
  double second_factorial_r() const;   // R = sum n(n-1) p_n
  int sample(RngStream& rng) const;
  std::vector<std::string> validate() const;

  static OffspringLaw binary() { return OffspringLaw{{{2, 1.0}}}; }
};

// (Q, R) moments of the offspring law.
std::pair<double, double> q_r_moments(const OffspringLaw& law);

// PCAF increment of mu over a contiguous path slice sampled at spacing
// `step`, by the left-endpoint rule: each of the positions[0..n-2] contributes
// rate(position) * step. Additive over concatenated slices by construction.
double pcaf_increment(const CatalystSpec& spec, const PathGrid& path,
                      std::size_t begin, std::size_t end, double step,
                      const StableParams& motion);
double pcaf_increment(const CatalystSpec& spec, const PathGrid& path,
                      double step, const StableParams& motion);

}  // namespace stablebranch

#endif
