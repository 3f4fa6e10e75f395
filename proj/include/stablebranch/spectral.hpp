#ifndef STABLEBRANCH_SPECTRAL_HPP
#define STABLEBRANCH_SPECTRAL_HPP

#include <span>
#include <string>
#include <vector>

#include "stablebranch/catalyst.hpp"
#include "stablebranch/stable_motion.hpp"

namespace stablebranch {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed form for the spectral bottom of (1/2)(-Delta)^{alpha/2} - c delta_0
// in d = 1, alpha in (1,2); c is the effective mass (Q-1) x raw mass.
// Returns -(c 2^{1/alpha} / (alpha sin(pi/alpha)))^{alpha/(alpha-1)}.
double lambda_point_catalyst(double c_eff, double alpha);

// Critical radius r* for the surface measure c delta_r in d > alpha,
// alpha in (1,2): the spectral bottom is negative iff r > r*.
double sphere_catalyst_threshold(double c_eff, double alpha, int dim);

struct SpectralGridSpec {
  double half_length = 50.0;  // box is [-L, L), periodic
  int nodes = 1 << 14;
};

struct SpectralResult {
  double lambda = 0.0;
  bool bound_state = false;
  std::vector<double> h_grid;  // L2-normalised ground state, empty if none
  SpectralGridSpec grid;
  double residual = 0.0;
  int iterations = 0;
  // h is extended outside the box by its boundary value; flagged here so
  // downstream consumers see the approximation.
  std::string boundary_extension = "constant";

  double spacing() const { return 2.0 * grid.half_length / grid.nodes; }
  double node_x(int j) const { return -grid.half_length + spacing() * j; }
};

// Smallest eigenvalue of H = (1/2)(-Delta)^{alpha/2} - V on the periodic box
// [-L, L) with N nodes, for V >= 0 with compact support strictly inside the
// box. The fractional Laplacian acts as the Fourier multiplier |xi_k|^alpha;
// the bound state is located through the resolvent of the multiplier part
// restricted to the support cells of V (a small symmetric eigenproblem per
// candidate lambda, monotone in lambda, solved by bisection). If no
// meaningfully negative state exists the result reports spectral bottom 0.
SpectralResult lambda_numeric(std::span<const double> v_grid, double alpha,
                              double half_length, int nodes, double tol = 1e-10);

// Cell-averaged potential of (q_minus_1 x mu) on the solver grid. Masses of
// singular variants are conserved exactly; a tube narrower than a cell
// degrades gracefully to a single-cell (grid-delta) representation.
std::vector<double> discretize_potential(const CatalystSpec& spec,
                                         double q_minus_1, double half_length,
                                         int nodes);

// Convenience: discretize + solve for a full catalyst spec.
SpectralResult lambda_numeric_for(const CatalystSpec& spec, double q_minus_1,
                                  double alpha, double half_length, int nodes,
                                  double tol = 1e-10);

// Pointwise evaluation of the ground state by linear interpolation on the
// grid, constant extension outside the box. Requires a bound state.
double eigenfunction_eval(const SpectralResult& result, double x);

// Mass renormalisation for the epsilon-tube realisation of a point catalyst:
// returns the run mass c_run such that the tube operator with potential
// (q_minus_1 c_run / 2 eps) 1_{|x - x0| <= eps} has spectral bottom exactly
// `lambda_target` on the given box. Exploits linearity of the potential in
// the mass, so a single resolvent evaluation suffices.
double calibrate_tube_mass(const CatalystSpec& point_spec, double q_minus_1,
                           double alpha, double lambda_target,
                           double half_length = 100.0, int nodes = 1 << 18);

}  // namespace stablebranch

#endif
