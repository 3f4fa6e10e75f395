#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "stablebranch/branching.hpp"
#include "stablebranch/stats.hpp"

using namespace stablebranch;

namespace {

CatalystSpec ball(double c, double radius) {
  CatalystSpec s;
  s.kind = CatalystKind::ball_indicator;
  s.mass = c;
  s.radius = radius;
  return s;
}

CatalystSpec point(double c, double eps) {
  CatalystSpec s;
  s.kind = CatalystKind::point_mass;
  s.mass = c;
  s.tube_epsilon = eps;
  return s;
}

RunSpec weak_point_run(double horizon) {
  RunSpec spec;
  spec.dynamics.motion = {1.5, 1};
  spec.dynamics.catalyst = point(0.3, 0.05);
  spec.dynamics.offspring = OffspringLaw::binary();
  spec.dynamics.step = spec.dynamics.catalyst.max_step(1.5);
  spec.horizon = horizon;
  for (double t = 2.0; t <= horizon + 1e-9; t += 2.0)
    spec.snapshot_times.push_back(t);
  return spec;
}

}  // namespace

TEST_CASE("threshold schedule families") {
  ThresholdScheduleSpec constant{0.1, ThresholdScheduleSpec::AKind::constant, 2.0};
  CHECK(constant.kappa_at(0.0) == doctest::Approx(2.0));
  CHECK(constant.kappa_at(10.0) == doctest::Approx(2.0 * std::exp(1.0)));
  ThresholdScheduleSpec power{0.1, ThresholdScheduleSpec::AKind::power, 0.5};
  CHECK(power.kappa_at(4.0) == doctest::Approx(2.0 * std::exp(0.4)));
  // monotone increasing over the horizon
  ThresholdScheduleSpec log_a{0.05, ThresholdScheduleSpec::AKind::log_shift, 0.0};
  double prev = 0.0;
  for (double t = 0.0; t < 50.0; t += 1.0) {
    CHECK(log_a.kappa_at(t) > prev);
    prev = log_a.kappa_at(t);
  }
}

TEST_CASE("no-branching trajectory equals a single stable path from one seed") {
  RunSpec spec = weak_point_run(2.0);
  const std::uint64_t seed = 77;
  const RngStream rep_rng = RngStream(seed, 0).substream(0);

  PopulationState state = initial_population({}, rep_rng);
  state.particles[0].split_threshold = std::numeric_limits<double>::infinity();
  const int n_steps = 100;
  for (int s = 0; s < n_steps; ++s)
    CHECK(advance(state, spec.dynamics) == RunStatus::completed);
  REQUIRE(state.particles.size() == 1);

  // replay the particle's draws by hand
  RngStream replay = rep_rng.substream(0);
  (void)replay.exponential();  // the birth threshold
  double x = 0.0;
  for (int s = 0; s < n_steps; ++s)
    x += sample_increment(spec.dynamics.motion, spec.dynamics.step, replay)[0];
  CHECK(state.particles[0].position[0] == x);
  CHECK(state.particles[0].pcaf_accum > 0.0);
}

TEST_CASE("unreachable catalyst keeps N_t = 1") {
  RunSpec spec = weak_point_run(2.0);
  spec.x0[0] = 500.0;  // far from the tube; horizon too short to reach it
  const auto result = run_replication(spec, 5, 0);
  CHECK(result.status == RunStatus::completed);
  for (const auto& s : result.log) CHECK(s.n_particles == 1);
}

TEST_CASE("a forced split replaces the parent with children at X_{T-}") {
  BranchingDynamics dyn;
  dyn.motion = {1.5, 1};
  dyn.catalyst = ball(1.0, 1e6);  // rate 1 everywhere
  dyn.offspring = OffspringLaw::binary();
  dyn.step = 0.01;

  PopulationState state = initial_population({}, RngStream(9, 9));
  state.particles[0].split_threshold = 1e-12;  // crosses on the first step
  const Point site = state.particles[0].position;
  const std::uint64_t parent_id = state.particles[0].id;

  CHECK(advance(state, dyn) == RunStatus::completed);
  REQUIRE(state.particles.size() == 2);
  for (const auto& child : state.particles) {
    CHECK(child.parent_id == parent_id);
    CHECK(child.birth_time == doctest::Approx(0.01));
    CHECK(child.position[0] == site[0]);  // pre-displacement site
    CHECK(child.pcaf_accum == 0.0);
    CHECK(child.split_threshold > 0.0);
  }
  CHECK(state.particles[0].split_threshold != state.particles[1].split_threshold);
  CHECK(state.split_events == 1);
}

TEST_CASE("population cap aborts instead of truncating") {
  BranchingDynamics dyn;
  dyn.motion = {1.5, 1};
  dyn.catalyst = ball(1000.0, 1e6);  // splits almost immediately
  dyn.offspring = OffspringLaw::binary();
  dyn.step = 0.01;
  dyn.population_cap = 1;

  RunSpec spec;
  spec.dynamics = dyn;
  spec.horizon = 5.0;
  spec.snapshot_times = {1.0, 2.0};
  const auto result = run_replication(spec, 3, 0);
  CHECK(result.status == RunStatus::aborted_population_cap);
  CHECK(result.log.size() < 2);  // partial log
}

TEST_CASE("same seed reproduces the run bit-exactly; seeds differ") {
  RunSpec spec = weak_point_run(10.0);
  spec.keep_final_state = true;
  const auto a = run_replication(spec, 123, 4);
  const auto b = run_replication(spec, 123, 4);
  const auto c = run_replication(spec, 124, 4);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].t == b.log[i].t);
    CHECK(a.log[i].n_particles == b.log[i].n_particles);
    CHECK(a.log[i].max_abs == b.log[i].max_abs);
  }
  REQUIRE(a.final_state.has_value());
  REQUIRE(b.final_state.has_value());
  CHECK(a.final_state->particles.size() == b.final_state->particles.size());
  for (std::size_t i = 0; i < a.final_state->particles.size(); ++i)
    CHECK(a.final_state->particles[i].position[0] ==
          b.final_state->particles[i].position[0]);

  bool differs = c.log.size() != a.log.size();
  for (std::size_t i = 0; !differs && i < a.log.size(); ++i)
    differs = a.log[i].max_abs != c.log[i].max_abs;
  CHECK(differs);
}

TEST_CASE("N_t is nondecreasing and snapshots are consistent") {
  RunSpec spec = weak_point_run(30.0);
  spec.kappa_list = {1.0, 5.0, 25.0};
  const auto result = run_replication(spec, 11, 2);
  std::uint64_t prev_n = 0;
  for (const auto& s : result.log) {
    CHECK(s.n_particles >= prev_n);
    prev_n = s.n_particles;
    // counts are nonincreasing in kappa and bounded by N_t
    CHECK(s.kappa_counts[0] >= s.kappa_counts[1]);
    CHECK(s.kappa_counts[1] >= s.kappa_counts[2]);
    CHECK(s.kappa_counts[0] <= s.n_particles);
    // L_t consistency with the kappa counts
    for (std::size_t k = 0; k < spec.kappa_list.size(); ++k) {
      if (s.kappa_counts[k] > 0) CHECK(s.max_abs >= spec.kappa_list[k]);
      if (s.max_abs < spec.kappa_list[k]) CHECK(s.kappa_counts[k] == 0);
    }
  }
}

TEST_CASE("lineage maxima dominate particle positions and inherit") {
  RunSpec spec = weak_point_run(20.0);
  spec.keep_final_state = true;
  const auto result = run_replication(spec, 21, 0);
  REQUIRE(result.final_state.has_value());
  for (const auto& p : result.final_state->particles) {
    CHECK(p.lineage_max_abs >= std::fabs(p.position[0]));
    CHECK(p.birth_time >= 0.0);
    CHECK(p.birth_time <= spec.horizon + 1e-9);
  }
}

TEST_CASE("snapshot of a hand-built population") {
  PopulationState state;
  state.clock = 3.0;
  Particle a;
  a.position[0] = 3.0;
  Particle b;
  b.position[0] = -5.0;
  state.particles = {a, b};
  const double kappas[1] = {4.0};
  const auto snap = make_snapshot(state, kappas, {}, nullptr);
  CHECK(snap.n_particles == 2);
  CHECK(snap.max_abs == 5.0);
  CHECK(snap.kappa_counts[0] == 1);
  CHECK(std::isnan(snap.martingale));

  // single particle at the origin
  PopulationState origin;
  Particle o;
  origin.particles = {o};
  const double ks[2] = {0.5, 2.0};
  const auto s0 = make_snapshot(origin, ks, {}, nullptr);
  CHECK(s0.max_abs == 0.0);
  CHECK(s0.n_particles == 1);
  CHECK(s0.kappa_counts[0] == 0);
  CHECK(s0.kappa_counts[1] == 0);
}

TEST_CASE("splitting clock realises P(T > t | path) = exp(-A_t)") {
  // with rate 1 everywhere, A_t = t exactly, so the PCAF at the first split
  // is the exponential threshold rounded up to the step grid
  BranchingDynamics dyn;
  dyn.motion = {1.5, 1};
  dyn.catalyst = ball(1.0, 1e9);
  dyn.offspring = OffspringLaw{{{1, 1.0}}};  // keep a single lineage
  dyn.step = 0.005;

  const int n = 3000;
  std::vector<double> first_split;
  int censored = 0;
  for (int i = 0; i < n; ++i) {
    PopulationState state =
        initial_population({}, RngStream(31, 0).substream(i));
    const std::uint64_t root = state.particles[0].id;
    bool split = false;
    for (int s = 0; s < 3000; ++s) {
      const double before = state.particles[0].pcaf_accum;
      (void)advance(state, dyn);
      if (state.particles[0].id != root) {
        first_split.push_back(before + dyn.step);  // pcaf at the crossing step
        split = true;
        break;
      }
    }
    if (!split) ++censored;
  }
  CHECK(censored < n / 100);
  const auto ks = ks_one_sample(
      first_split, +[](double x) { return 1.0 - std::exp(-x); });
  CHECK(ks.p_value > 0.005);
}

TEST_CASE("ensemble runner is deterministic and ordered by index") {
  RunSpec spec = weak_point_run(10.0);
  const auto ens1 = run_ensemble(spec, 55, 6);
  const auto ens2 = run_ensemble(spec, 55, 6);
  REQUIRE(ens1.size() == 6);
  for (int r = 0; r < 6; ++r) {
    CHECK(ens1[r].replication_index == r);
    REQUIRE(ens1[r].log.size() == ens2[r].log.size());
    for (std::size_t i = 0; i < ens1[r].log.size(); ++i) {
      CHECK(ens1[r].log[i].n_particles == ens2[r].log[i].n_particles);
      CHECK(ens1[r].log[i].max_abs == ens2[r].log[i].max_abs);
    }
  }
}
