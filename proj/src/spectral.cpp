#include "stablebranch/spectral.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <mutex>

namespace stablebranch {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW planning is not thread-safe; plan creation is serialised.
std::mutex g_fftw_mutex;

// Real even spectra <-> real grid functions on the periodic box.
class HalfSpectrumTransform {
 public:
  explicit HalfSpectrumTransform(int n) : n_(n), spec_(n / 2 + 1), grid_(n) {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan_c2r_ = fftw_plan_dft_c2r_1d(
        n_, reinterpret_cast<fftw_complex*>(spec_.data()), grid_.data(),
        FFTW_ESTIMATE);
    plan_r2c_ = fftw_plan_dft_r2c_1d(
        n_, grid_.data(), reinterpret_cast<fftw_complex*>(spec_.data()),
        FFTW_ESTIMATE);
  }
  ~HalfSpectrumTransform() {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan_c2r_);
    fftw_destroy_plan(plan_r2c_);
  }
  HalfSpectrumTransform(const HalfSpectrumTransform&) = delete;
  HalfSpectrumTransform& operator=(const HalfSpectrumTransform&) = delete;

  // grid <- (1/N) sum_k spec_k exp(i xi_k x); spec must be real and even.
  void synthesize(std::span<const double> real_spec, std::vector<double>& out) {
    for (int k = 0; k <= n_ / 2; ++k) spec_[k] = {real_spec[k], 0.0};
    fftw_execute(plan_c2r_);
    out.assign(grid_.begin(), grid_.end());
    const double inv = 1.0 / n_;
    for (double& v : out) v *= inv;
  }

  // real half-spectrum of a real grid function
  void analyze(std::span<const double> grid_fn, std::vector<double>& out_real) {
    std::copy(grid_fn.begin(), grid_fn.end(), grid_.begin());
    fftw_execute(plan_r2c_);
    out_real.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) out_real[k] = spec_[k].real();
  }

  void analyze_complex(std::span<const double> grid_fn,
                       std::vector<std::complex<double>>& out) {
    std::copy(grid_fn.begin(), grid_fn.end(), grid_.begin());
    fftw_execute(plan_r2c_);
    out.assign(spec_.begin(), spec_.end());
  }

  void synthesize_complex(std::span<const std::complex<double>> spec,
                          std::vector<double>& out) {
    std::copy(spec.begin(), spec.end(), spec_.begin());
    fftw_execute(plan_c2r_);
    out.assign(grid_.begin(), grid_.end());
    const double inv = 1.0 / n_;
    for (double& v : out) v *= inv;
  }

 private:
  int n_;
  std::vector<std::complex<double>> spec_;
  std::vector<double> grid_;
  fftw_plan plan_c2r_;
  fftw_plan plan_r2c_;
};

std::vector<double> multiplier_half(double alpha, double half_length, int nodes) {
  std::vector<double> m(nodes / 2 + 1);
  const double dxi = kPi / half_length;
  for (int k = 0; k <= nodes / 2; ++k)
    m[k] = 0.5 * std::pow(dxi * k, alpha);
  return m;
}

// Reduced secular operator: B(lambda)_{ij} = sqrt(V_i V_j) g_lambda(x_i - x_j)
// with g_lambda(x) the kernel of (K - lambda)^{-1}, K the multiplier part.
// Its largest eigenvalue theta(lambda) is increasing in lambda on (-inf, 0);
// lambda is the spectral bottom of K - V iff theta(lambda) = 1.
class SecularProblem {
 public:
  SecularProblem(std::span<const double> v_grid, double alpha,
                 double half_length, int nodes)
      : n_(nodes), fft_(nodes), mult_(multiplier_half(alpha, half_length, nodes)) {
    for (int j = 0; j < n_; ++j)
      if (v_grid[j] > 0.0) {
        support_.push_back(j);
        sqv_.push_back(std::sqrt(v_grid[j]));
      }
  }

  bool empty() const { return support_.empty(); }
  const std::vector<int>& support() const { return support_; }

  // g_lambda on the whole grid (one synthesis pass).
  void resolvent_kernel(double lambda, std::vector<double>& g) {
    std::vector<double> spec(mult_.size());
    for (std::size_t k = 0; k < mult_.size(); ++k)
      spec[k] = 1.0 / (mult_[k] - lambda);
    fft_.synthesize(spec, g);
  }

  double theta(double lambda, std::vector<double>* eigvec = nullptr) {
    resolvent_kernel(lambda, g_);
    const int p = static_cast<int>(support_.size());
    Eigen::MatrixXd b(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j <= i; ++j) {
        int diff = support_[i] - support_[j];
        if (diff < 0) diff += n_;
        const double val = sqv_[i] * sqv_[j] * g_[diff];
        b(i, j) = val;
        b(j, i) = val;
      }
    if (p <= 400) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
      if (eigvec) {
        const auto v = es.eigenvectors().col(p - 1);
        eigvec->assign(v.data(), v.data() + p);
      }
      return es.eigenvalues()(p - 1);
    }
    // power iteration; B is symmetric positive semidefinite for lambda < 0
    Eigen::VectorXd v = Eigen::VectorXd::Ones(p).normalized();
    double theta_prev = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd w = b * v;
      const double th = v.dot(w);
      const double nw = w.norm();
      if (nw == 0.0) return 0.0;
      v = w / nw;
      if (std::fabs(th - theta_prev) <= 1e-14 * std::max(1.0, std::fabs(th)) &&
          it > 10)
        break;
      theta_prev = th;
    }
    if (eigvec) eigvec->assign(v.data(), v.data() + p);
    return v.dot(b * v);
  }

  // Assemble the full-grid eigenfunction u = (K - lambda)^{-1} (V u|_S) from
  // the reduced eigenvector y (u_i = y_i / sqrt(V_i) on the support).
  void eigenfunction(double lambda, std::span<const double> y,
                     std::vector<double>& u) {
    std::vector<double> rhs(n_, 0.0);
    for (std::size_t i = 0; i < support_.size(); ++i)
      rhs[support_[i]] = sqv_[i] * y[i];
    std::vector<std::complex<double>> spec;
    fft_.analyze_complex(rhs, spec);
    for (std::size_t k = 0; k < spec.size(); ++k)
      spec[k] /= (mult_[k] - lambda);
    fft_.synthesize_complex(spec, u);
  }

  // || (K - V) u - lambda u ||_2 / || u ||_2
  double residual(double lambda, std::span<const double> v_grid,
                  std::span<const double> u) {
    std::vector<std::complex<double>> spec;
    fft_.analyze_complex(u, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= mult_[k];
    std::vector<double> ku;
    fft_.synthesize_complex(spec, ku);
    double num = 0, den = 0;
    for (int j = 0; j < n_; ++j) {
      const double r = ku[j] - v_grid[j] * u[j] - lambda * u[j];
      num += r * r;
      den += u[j] * u[j];
    }
    return std::sqrt(num / den);
  }

 private:
  int n_;
  HalfSpectrumTransform fft_;
  std::vector<double> mult_;
  std::vector<int> support_;
  std::vector<double> sqv_;
  std::vector<double> g_;
};

}  // namespace

double lambda_point_catalyst(double c_eff, double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw DomainError("lambda_point_catalyst: requires alpha in (1,2), d = 1");
  if (!(c_eff > 0.0)) throw DomainError("lambda_point_catalyst: c must be > 0");
  const double base = c_eff * std::pow(2.0, 1.0 / alpha) /
                      (alpha * std::sin(kPi / alpha));
  return -std::pow(base, alpha / (alpha - 1.0));
}

double sphere_catalyst_threshold(double c_eff, double alpha, int dim) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw DomainError("sphere_catalyst_threshold: requires alpha in (1,2)");
  if (!(dim > alpha))
    throw DomainError("sphere_catalyst_threshold: requires d > alpha");
  if (!(c_eff > 0.0)) throw DomainError("sphere_catalyst_threshold: c must be > 0");
  const double log_num = 0.5 * std::log(kPi) +
                         std::lgamma((dim + alpha - 2.0) / 2.0) +
                         std::lgamma(alpha / 2.0);
  const double log_den = std::log(c_eff) + std::lgamma((dim - alpha) / 2.0) +
                         std::lgamma((alpha - 1.0) / 2.0);
  return std::exp((log_num - log_den) / (alpha - 1.0));
}

SpectralResult lambda_numeric(std::span<const double> v_grid, double alpha,
                              double half_length, int nodes, double tol) {
  if (nodes < 4 || (nodes & (nodes - 1)) != 0)
    throw ConfigError("lambda_numeric: nodes must be a power of two >= 4");
  if (static_cast<int>(v_grid.size()) != nodes)
    throw ConfigError("lambda_numeric: potential length != nodes");
  for (double v : v_grid)
    if (v < 0.0) throw ConfigError("lambda_numeric: potential must be >= 0");

  SpectralResult result;
  result.grid = {half_length, nodes};

  SecularProblem problem(v_grid, alpha, half_length, nodes);
  if (problem.empty()) {
    // V = 0: spectrum of the multiplier alone, bottom at 0.
    result.lambda = 0.0;
    result.bound_state = false;
    return result;
  }

  // theta is increasing with theta(0-) = +inf, so a root below 0 exists;
  // bracket it from below, then bisect.
  double hi = -1e-14;
  double lo = -1.0;
  int iters = 0;
  while (problem.theta(lo) >= 1.0) {
    lo *= 4.0;
    if (++iters > 60) throw SolverError("lambda_numeric: bracketing failed");
  }
  while (hi - lo > tol * std::max(1.0, std::fabs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (problem.theta(mid) >= 1.0)
      hi = mid;
    else
      lo = mid;
    if (++iters > 300)
      throw SolverError("lambda_numeric: bisection failed to converge");
  }
  const double lambda = 0.5 * (lo + hi);
  result.iterations = iters;

  if (lambda > -tol * 10.0) {
    // numerically indistinguishable from the essential spectrum edge
    result.lambda = 0.0;
    result.bound_state = false;
    return result;
  }

  std::vector<double> y;
  problem.theta(lambda, &y);
  std::vector<double> u;
  problem.eigenfunction(lambda, y, u);

  // normalise in L2(dx) and fix the sign; the ground state has no nodes
  const double dx = 2.0 * half_length / nodes;
  double s2 = 0, s1 = 0;
  for (double v : u) {
    s2 += v * v;
    s1 += v;
  }
  const double scale = (s1 < 0 ? -1.0 : 1.0) / std::sqrt(s2 * dx);
  for (double& v : u) v *= scale;

  result.lambda = lambda;
  result.bound_state = true;
  result.residual = problem.residual(lambda, v_grid, u);
  result.h_grid = std::move(u);
  if (result.residual > 1e-6 * std::max(1.0, std::fabs(lambda)))
    throw SolverError("lambda_numeric: residual " +
                      std::to_string(result.residual) +
                      " after bisection (lambda = " + std::to_string(lambda) +
                      ", " + std::to_string(iters) + " iterations)");
  return result;
}

std::vector<double> discretize_potential(const CatalystSpec& spec,
                                         double q_minus_1, double half_length,
                                         int nodes) {
  const double dx = 2.0 * half_length / nodes;
  std::vector<double> v(nodes, 0.0);

  auto add_interval = [&](double lo, double hi, double density) {
    // cell-averaged overlap keeps the total mass exact
    for (int j = 0; j < nodes; ++j) {
      const double x = -half_length + dx * j;
      const double olap =
          std::max(0.0, std::min(hi, x + dx / 2) - std::max(lo, x - dx / 2));
      v[j] += density * olap / dx;
    }
  };

  switch (spec.kind) {
    case CatalystKind::point_mass: {
      const double eps = std::max(spec.tube_epsilon, dx / 4.0);
      add_interval(spec.center[0] - eps, spec.center[0] + eps,
                   q_minus_1 * spec.mass / (2.0 * eps));
      break;
    }
    case CatalystKind::ball_indicator:
      add_interval(spec.center[0] - spec.radius, spec.center[0] + spec.radius,
                   q_minus_1 * spec.mass);
      break;
    case CatalystKind::grid_density:
      for (int j = 0; j < nodes; ++j) {
        const double x = -half_length + dx * j;
        v[j] = q_minus_1 * spec.grid.value_at(x);
      }
      break;
    case CatalystKind::sphere_surface:
      throw ConfigError(
          "discretize_potential: sphere_surface has no 1-d numerical "
          "representation; only the threshold formula is available");
  }

  if (spec.support_radius(1) >= half_length)
    throw ConfigError("discretize_potential: catalyst support reaches the box "
                      "boundary; enlarge half_length");
  return v;
}

SpectralResult lambda_numeric_for(const CatalystSpec& spec, double q_minus_1,
                                  double alpha, double half_length, int nodes,
                                  double tol) {
  const auto v = discretize_potential(spec, q_minus_1, half_length, nodes);
  return lambda_numeric(v, alpha, half_length, nodes, tol);
}

double eigenfunction_eval(const SpectralResult& result, double x) {
  if (!result.bound_state || result.h_grid.empty())
    throw DomainError("eigenfunction_eval: no bound state (lambda >= 0)");
  const double dx = result.spacing();
  const double pos = (x + result.grid.half_length) / dx;
  if (pos <= 0.0) return result.h_grid.front();
  if (pos >= result.grid.nodes - 1) return result.h_grid.back();
  const int j = static_cast<int>(pos);
  const double w = pos - j;
  return result.h_grid[j] * (1.0 - w) + result.h_grid[j + 1] * w;
}

double calibrate_tube_mass(const CatalystSpec& point_spec, double q_minus_1,
                           double alpha, double lambda_target,
                           double half_length, int nodes) {
  if (point_spec.kind != CatalystKind::point_mass)
    throw ConfigError("calibrate_tube_mass: only point_mass catalysts");
  if (!(lambda_target < 0.0))
    throw DomainError("calibrate_tube_mass: lambda_target must be < 0");
  // theta(lambda) is linear in the potential scale: with unit effective mass
  // theta-hat(lambda_target) determined, the calibrated effective mass is
  // 1/theta-hat and the raw run mass divides out (Q-1).
  CatalystSpec unit = point_spec;
  unit.mass = 1.0;
  const auto v = discretize_potential(unit, 1.0, half_length, nodes);
  SecularProblem problem(v, alpha, half_length, nodes);
  const double theta_hat = problem.theta(lambda_target);
  if (!(theta_hat > 0.0))
    throw SolverError("calibrate_tube_mass: degenerate secular value");
  return 1.0 / (theta_hat * q_minus_1);
}

}  // namespace stablebranch
