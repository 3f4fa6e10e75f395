#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "stablebranch/spectral.hpp"

using namespace stablebranch;

namespace {

CatalystSpec point(double c, double eps) {
  CatalystSpec s;
  s.kind = CatalystKind::point_mass;
  s.mass = c;
  s.tube_epsilon = eps;
  return s;
}

// Independent oracle: assemble the discretized operator densely from the
// multiplier definition (no FFT, no resolvent) and call a direct eigensolver.
double dense_bottom_eigenvalue(const std::vector<double>& v, double alpha,
                               double half_length) {
  const int n = static_cast<int>(v.size());
  const double dxi = M_PI / half_length;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double kin = 0.0;
      for (int k = 0; k <= n / 2; ++k) {
        const double m = 0.5 * std::pow(dxi * k, alpha);
        const double c = std::cos(2.0 * M_PI * k * (j - l) / n);
        kin += (k == 0 || k == n / 2 ? 1.0 : 2.0) * m * c;
      }
      h(j, l) = kin / n;
    }
  for (int j = 0; j < n; ++j) h(j, j) -= v[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  return es.eigenvalues()(0);
}

}  // namespace

TEST_CASE("closed-form point-catalyst eigenvalue") {
  // c=1, alpha=1.5: exactly -256/(81 sqrt(3))
  CHECK(lambda_point_catalyst(1.0, 1.5) ==
        doctest::Approx(-256.0 / (81.0 * std::sqrt(3.0))).epsilon(1e-14));
  CHECK(lambda_point_catalyst(1.0, 1.5) ==
        doctest::Approx(-1.8247119618832617).epsilon(1e-14));
  CHECK(lambda_point_catalyst(0.3, 1.5) ==
        doctest::Approx(-0.049267222970848065).epsilon(1e-13));
  // strictly decreasing in c, superlinearly (exponent alpha/(alpha-1) = 3)
  const double l1 = lambda_point_catalyst(0.5, 1.5);
  const double l2 = lambda_point_catalyst(1.0, 1.5);
  CHECK(l2 < l1);
  CHECK(l2 / l1 == doctest::Approx(8.0).epsilon(1e-12));
  CHECK_THROWS_AS(lambda_point_catalyst(1.0, 0.9), DomainError);
  CHECK_THROWS_AS(lambda_point_catalyst(1.0, 2.0), DomainError);
  CHECK_THROWS_AS(lambda_point_catalyst(0.0, 1.5), DomainError);
}

TEST_CASE("sphere catalyst threshold radius") {
  // pinned by an independent high-precision evaluation of the Gamma factors
  CHECK(sphere_catalyst_threshold(1.0, 1.5, 2) ==
        doctest::Approx(0.040997819065471999).epsilon(1e-12));
  // homogeneity: doubling c scales r* by 2^{-1/(alpha-1)}
  const double r1 = sphere_catalyst_threshold(1.0, 1.5, 2);
  const double r2 = sphere_catalyst_threshold(2.0, 1.5, 2);
  CHECK(r2 / r1 == doctest::Approx(std::pow(2.0, -2.0)).epsilon(1e-12));
  // strictly decreasing in c
  CHECK(sphere_catalyst_threshold(3.0, 1.5, 2) < r2);
  CHECK_THROWS_AS(sphere_catalyst_threshold(1.0, 1.5, 1), DomainError);
  CHECK_THROWS_AS(sphere_catalyst_threshold(1.0, 0.8, 2), DomainError);
}

TEST_CASE("V = 0 has spectral bottom 0") {
  std::vector<double> v(1 << 10, 0.0);
  const auto res = lambda_numeric(v, 1.5, 20.0, 1 << 10);
  CHECK(res.lambda == 0.0);
  CHECK(!res.bound_state);
  CHECK_THROWS_AS(eigenfunction_eval(res, 0.0), DomainError);
}

TEST_CASE("numeric solver agrees with a dense-matrix oracle") {
  const int n = 256;
  const double el = 8.0;
  std::vector<double> v(n, 0.0);
  // a lopsided two-bump potential exercises the general code path
  for (int j = 0; j < n; ++j) {
    const double x = -el + 2.0 * el * j / n;
    if (std::fabs(x - 0.5) < 0.6) v[j] += 1.3;
    if (std::fabs(x + 1.2) < 0.3) v[j] += 0.7;
  }
  const auto res = lambda_numeric(v, 1.5, el, n, 1e-12);
  const double dense = dense_bottom_eigenvalue(v, 1.5, el);
  CHECK(res.bound_state);
  CHECK(res.lambda == doctest::Approx(dense).epsilon(1e-8));
  CHECK(res.residual < 1e-7);
}

TEST_CASE("mollified point catalyst converges to the closed form") {
  // refinement ladder: the tube narrows with the grid (eps tied to h), the
  // high-frequency cutoff grows, and lambda approaches the point-measure value
  const double exact = lambda_point_catalyst(1.0, 1.5);
  const double el = 10.0;
  double prev_err = 1e9;
  for (int logn : {16, 18}) {
    const int n = 1 << logn;
    const double h = 2.0 * el / n;
    const auto v = discretize_potential(point(1.0, h / 4.0), 1.0, el, n);
    const auto res = lambda_numeric(v, 1.5, el, n, 1e-11);
    const double err = std::fabs(res.lambda - exact) / std::fabs(exact);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 0.05);
}

TEST_CASE("potential monotonicity: scaling V down raises lambda") {
  const double el = 20.0;
  const int n = 1 << 12;
  auto v1 = discretize_potential(point(1.0, 0.1), 1.0, el, n);
  auto v2 = v1;
  for (auto& x : v2) x *= 0.5;
  auto v3 = v1;
  for (auto& x : v3) x *= 0.25;
  const double l1 = lambda_numeric(v1, 1.5, el, n).lambda;
  const double l2 = lambda_numeric(v2, 1.5, el, n).lambda;
  const double l3 = lambda_numeric(v3, 1.5, el, n).lambda;
  CHECK(l1 < l2);
  CHECK(l2 < l3);
  CHECK(l3 < 0.0);
}

TEST_CASE("ground state: positive, even for even V, unit L2 norm") {
  const double el = 20.0;
  const int n = 1 << 12;
  const auto v = discretize_potential(point(1.0, 0.1), 1.0, el, n);
  const auto res = lambda_numeric(v, 1.5, el, n);
  REQUIRE(res.bound_state);
  double min_h = 1e300, norm2 = 0.0;
  for (double x : res.h_grid) {
    min_h = std::min(min_h, x);
    norm2 += x * x;
  }
  CHECK(min_h > 0.0);
  CHECK(norm2 * res.spacing() == doctest::Approx(1.0).epsilon(1e-10));
  // evenness about the center: the potential sits at x = 0 = node n/2
  for (int j = 1; j < n / 2; j += 97)
    CHECK(res.h_grid[n / 2 + j] ==
          doctest::Approx(res.h_grid[n / 2 - j]).epsilon(1e-6));
}

TEST_CASE("eigenfunction evaluation: nodes, interpolation, extension") {
  const double el = 20.0;
  const int n = 1 << 12;
  const auto v = discretize_potential(point(1.0, 0.1), 1.0, el, n);
  const auto res = lambda_numeric(v, 1.5, el, n);
  REQUIRE(res.bound_state);
  const int j = n / 2 + 5;
  CHECK(eigenfunction_eval(res, res.node_x(j)) ==
        doctest::Approx(res.h_grid[j]).epsilon(1e-12));
  const double xm = 0.5 * (res.node_x(j) + res.node_x(j + 1));
  CHECK(eigenfunction_eval(res, xm) ==
        doctest::Approx(0.5 * (res.h_grid[j] + res.h_grid[j + 1])).epsilon(1e-12));
  // symmetric values
  CHECK(eigenfunction_eval(res, 3.3) ==
        doctest::Approx(eigenfunction_eval(res, -3.3)).epsilon(1e-5));
  // constant extension beyond the box
  CHECK(eigenfunction_eval(res, 1e9) == res.h_grid.back());
}

TEST_CASE("interpolated h keeps unit discrete norm") {
  const double el = 20.0;
  const int n = 1 << 12;
  const auto v = discretize_potential(point(1.0, 0.1), 1.0, el, n);
  const auto res = lambda_numeric(v, 1.5, el, n);
  REQUIRE(res.bound_state);
  // quadrature of the interpolant over the grid midpoints stays within tol
  double s = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const double xm = 0.5 * (res.node_x(j) + res.node_x(j + 1));
    const double hm = eigenfunction_eval(res, xm);
    s += hm * hm * res.spacing();
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("tube mass calibration pins the tube operator to the point value") {
  const double alpha = 1.5;
  const double target = lambda_point_catalyst(0.3, alpha);
  const auto spec = point(0.3, 0.05);
  const double c_run = calibrate_tube_mass(spec, 1.0, alpha, target, 50.0, 1 << 16);
  CHECK(c_run > 0.3);   // the tube needs extra mass to bind as deeply
  CHECK(c_run < 0.40);
  auto run_spec = spec;
  run_spec.mass = c_run;
  const auto res = lambda_numeric_for(run_spec, 1.0, alpha, 50.0, 1 << 16);
  CHECK(res.lambda == doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("potential discretization conserves mass and rejects bad input") {
  const double el = 10.0;
  const int n = 1 << 10;
  const double dx = 2.0 * el / n;
  for (double eps : {0.3, 0.01, 1e-6}) {
    const auto v = discretize_potential(point(0.7, eps), 2.0, el, n);
    double mass = 0.0;
    for (double x : v) mass += x * dx;
    CHECK(mass == doctest::Approx(2.0 * 0.7).epsilon(1e-12));
  }
  CatalystSpec sphere;
  sphere.kind = CatalystKind::sphere_surface;
  sphere.mass = 1.0;
  sphere.radius = 1.0;
  CHECK_THROWS_AS(discretize_potential(sphere, 1.0, el, n), ConfigError);
  // support sticking out of the box
  CatalystSpec far = point(1.0, 0.1);
  far.center[0] = 11.0;
  CHECK_THROWS_AS(discretize_potential(far, 1.0, el, n), ConfigError);
}
