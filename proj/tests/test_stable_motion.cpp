#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stablebranch/rng.hpp"
#include "stablebranch/stable_motion.hpp"
#include "stablebranch/stats.hpp"

using namespace stablebranch;

namespace {

std::vector<double> draw_1d(double alpha, double dt, int n, RngStream rng) {
  const StableParams p{alpha, 1};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = sample_increment(p, dt, rng)[0];
  return out;
}

}  // namespace

TEST_CASE("dt=0 gives the zero vector") {
  RngStream rng(1, 0);
  for (int d : {1, 2, 3}) {
    const StableParams p{1.5, d};
    const Point z = sample_increment(p, 0.0, rng);
    for (int c = 0; c < d; ++c) CHECK(z[c] == 0.0);
  }
}

TEST_CASE("invalid alpha is rejected") {
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_increment({2.0, 1}, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(sample_increment({0.0, 1}, 1.0, rng), ConfigError);
  CHECK_THROWS_AS(sample_increment({1.5, 0}, 1.0, rng), ConfigError);
}

TEST_CASE("alpha=1, d=1, dt=1 is Cauchy with scale 1/2") {
  auto x = draw_1d(1.0, 1.0, 20000, RngStream(101, 0));
  const auto ks = ks_one_sample(x, cauchy_half_cdf);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("scaling identity: X_4 equals 4^{1/alpha} X_1 in law") {
  for (double alpha : {1.0, 1.5}) {
    auto x4 = draw_1d(alpha, 4.0, 20000, RngStream(102, 1));
    auto x1 = draw_1d(alpha, 1.0, 20000, RngStream(102, 2));
    for (auto& v : x1) v *= std::pow(4.0, 1.0 / alpha);
    CHECK(ks_two_sample(x4, x1).p_value > 0.01);
  }
}

TEST_CASE("characteristic function matches exp(-t|xi|^alpha/2)") {
  // direct oracle for the sampler scale in d = 1 and d = 2
  const int n = 200000;
  for (double alpha : {0.8, 1.0, 1.5}) {
    RngStream rng(103, static_cast<std::uint64_t>(10 * alpha));
    const StableParams p{alpha, 1};
    double s = 0, s2 = 0;
    const double xi = 1.0;
    for (int i = 0; i < n; ++i) {
      const double c = std::cos(xi * sample_increment(p, 1.0, rng)[0]);
      s += c;
      s2 += c * c;
    }
    const double emp = s / n;
    const double se = std::sqrt((s2 / n - emp * emp) / n);
    const double target = std::exp(-std::pow(xi, alpha) / 2.0);
    CHECK(std::fabs(emp - target) < 5.0 * se);
  }
  for (double alpha : {1.0, 1.5}) {
    RngStream rng(104, static_cast<std::uint64_t>(10 * alpha));
    const StableParams p{alpha, 2};
    double s = 0, s2 = 0;
    const double xi0 = 0.6, xi1 = 0.3;
    for (int i = 0; i < n; ++i) {
      const Point v = sample_increment(p, 1.0, rng);
      const double c = std::cos(xi0 * v[0] + xi1 * v[1]);
      s += c;
      s2 += c * c;
    }
    const double emp = s / n;
    const double se = std::sqrt((s2 / n - emp * emp) / n);
    const double r = std::sqrt(xi0 * xi0 + xi1 * xi1);
    const double target = std::exp(-std::pow(r, alpha) / 2.0);
    CHECK(std::fabs(emp - target) < 5.0 * se);
  }
}

TEST_CASE("positive stable subordinator has Laplace transform exp(-u^rho)") {
  const int n = 200000;
  for (double rho : {0.5, 0.75}) {
    RngStream rng(105, static_cast<std::uint64_t>(100 * rho));
    double s = 0, s2 = 0;
    const double u = 1.0;
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(-u * sample_positive_stable(rho, rng));
      s += e;
      s2 += e * e;
    }
    const double emp = s / n;
    const double se = std::sqrt((s2 / n - emp * emp) / n);
    CHECK(std::fabs(emp - std::exp(-std::pow(u, rho))) < 5.0 * se);
  }
}

TEST_CASE("d=1 subordinated construction agrees with the direct transform") {
  const StableParams p{1.5, 1};
  const int n = 50000;
  RngStream r1(106, 1), r2(106, 2);
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = sample_increment(p, 1.0, r1)[0];
    b[i] = sample_increment_subordinated(p, 1.0, r2)[0];
  }
  CHECK(ks_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("coordinate signs are fair coins") {
  const StableParams p{1.5, 2};
  RngStream rng(107, 0);
  const int n = 20000;
  int pos0 = 0, pos1 = 0;
  for (int i = 0; i < n; ++i) {
    const Point v = sample_increment(p, 1.0, rng);
    pos0 += v[0] > 0;
    pos1 += v[1] > 0;
  }
  const double se = std::sqrt(n / 4.0);
  CHECK(std::fabs(pos0 - n / 2.0) < 4.5 * se);
  CHECK(std::fabs(pos1 - n / 2.0) < 4.5 * se);
}

TEST_CASE("sample_path basics") {
  const StableParams p{1.5, 1};
  RngStream rng(108, 0);
  Point x0{};
  x0[0] = 2.5;

  const double single[1] = {0.0};
  const PathGrid one = sample_path(p, x0, single, rng);
  CHECK(one.positions.size() == 1);
  CHECK(one.positions[0][0] == 2.5);

  CHECK_THROWS_AS(sample_path(p, x0, std::span<const double>{}, rng), DomainError);
  const double bad[2] = {0.0, 0.0};
  CHECK_THROWS_AS(sample_path(p, x0, bad, rng), DomainError);

  const double times[3] = {0.0, 0.5, 2.0};
  const PathGrid path = sample_path(p, x0, times, rng);
  CHECK(path.positions.size() == 3);
  CHECK(path.positions[0][0] == 2.5);
  CHECK(path.times[2] == 2.0);
}

TEST_CASE("median displacement scales like t^{1/alpha}") {
  const StableParams p{1.5, 1};
  const int n = 30000;
  RngStream rng(109, 0);
  std::vector<double> m1(n), m16(n);
  for (int i = 0; i < n; ++i) {
    m1[i] = std::fabs(sample_increment(p, 1.0, rng)[0]);
    m16[i] = std::fabs(sample_increment(p, 16.0, rng)[0]);
  }
  const double slope =
      (std::log(median(m16)) - std::log(median(m1))) / std::log(16.0);
  CHECK(slope == doctest::Approx(1.0 / 1.5).epsilon(0.05));
}

TEST_CASE("tail constant closed-form values") {
  // alpha=1, d=1: 1/(2 pi); alpha=1, d=3: 1/(2 pi^2)
  CHECK(tail_constant({1.0, 1}) ==
        doctest::Approx(0.15915494309189534).epsilon(1e-13));
  CHECK(tail_constant({1.0, 3}) ==
        doctest::Approx(0.050660591821168886).epsilon(1e-13));
  for (double alpha : {0.5, 1.0, 1.3, 1.9})
    for (int d : {1, 2, 3, 4})
      CHECK(tail_constant({alpha, d}) > 0.0);
}

TEST_CASE("tail probability reference values and monotonicity") {
  const StableParams p{1.0, 1};
  // omega_1 C / alpha / r at r=100: 1/(100 pi)
  CHECK(tail_probability_reference(p, 100.0) ==
        doctest::Approx(0.0031830988618379067).epsilon(1e-13));
  // the exact Cauchy(1/2) tail at 100 differs only in the r^{-3} correction
  CHECK(cauchy_half_abs_tail(100.0) ==
        doctest::Approx(0.0031830723364119383).epsilon(1e-12));
  CHECK(tail_probability_reference(p, 100.0) /
            cauchy_half_abs_tail(100.0) ==
        doctest::Approx(1.0).epsilon(1e-4));
  CHECK(tail_probability_reference(p, 10.0) >
        tail_probability_reference(p, 20.0));
  CHECK_THROWS_AS(tail_probability_reference(p, 0.0), DomainError);
  CHECK_THROWS_AS(tail_probability_reference(p, -1.0), DomainError);
}

TEST_CASE("empirical tail matches the reference at the 500-exceedance point") {
  const StableParams p{1.5, 1};
  RngStream rng(110, 0);
  const int n = 1000000;
  std::vector<double> ax(n);
  for (int i = 0; i < n; ++i) ax[i] = std::fabs(sample_increment(p, 1.0, rng)[0]);
  std::nth_element(ax.begin(), ax.begin() + (n - 500), ax.end());
  const double kappa = ax[n - 500];
  const double phat = 500.0 / n;
  const double target = unit_ball_surface(1) * tail_constant(p) / p.alpha;
  CHECK(std::pow(kappa, p.alpha) * phat ==
        doctest::Approx(target).epsilon(0.10));
}

TEST_CASE("running-max sandwich on the grid skeleton") {
  // P(|X_1| >= k) <= P(M_1 >= k) <= 2 P(|X_1| >= k); grid max biases low
  const StableParams p{1.0, 1};
  RngStream rng(111, 0);
  const int n = 40000;
  const double kappa = 10.0;
  const double step = 0.01;
  int hits_max = 0, hits_marg = 0;
  for (int i = 0; i < n; ++i) {
    RngStream prng = rng.substream(i);
    double x = 0.0, mx = 0.0;
    for (int s = 0; s < 100; ++s) {
      x += sample_increment(p, step, prng)[0];
      mx = std::max(mx, std::fabs(x));
    }
    hits_max += mx >= kappa;
    hits_marg += std::fabs(x) >= kappa;
  }
  const double pm = static_cast<double>(hits_max) / n;
  const double px = static_cast<double>(hits_marg) / n;
  const double se = std::sqrt(px * (1 - px) / n);
  CHECK(pm >= px);  // exact: the grid contains t = 1
  CHECK(pm <= 2.0 * (px + 4.0 * se));
}
