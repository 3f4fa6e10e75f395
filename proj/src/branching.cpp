#include "stablebranch/branching.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace stablebranch {

double ThresholdScheduleSpec::a_of(double t) const {
  switch (a_kind) {
    case AKind::constant: return a_param;
    case AKind::log_shift: return std::log1p(t) + 1.0;
    case AKind::power: return std::pow(std::max(t, 1.0), a_param);
  }
  return 1.0;
}

PopulationState initial_population(const Point& x0, const RngStream& rep_rng) {
  PopulationState state;
  Particle root;
  root.id = 0;
  root.parent_id = Particle::kNoParent;
  root.birth_time = 0.0;
  root.position = x0;
  root.rng = rep_rng.substream(0);
  root.split_threshold = root.rng.exponential();
  root.lineage_max_abs = 0.0;  // dim filled by caller via advance/make_snapshot
  state.next_id = 1;
  state.particles.push_back(root);
  return state;
}

RunStatus advance(PopulationState& state, const BranchingDynamics& dyn) {
  return advance(state, dyn, IncrementSampler(dyn.motion, dyn.step));
}

RunStatus advance(PopulationState& state, const BranchingDynamics& dyn,
                  const IncrementSampler& sampler) {
  const int dim = dyn.motion.dim;
  struct SplitEvent {
    std::size_t index;
    Point site;
    double lineage_max;
  };
  std::vector<SplitEvent> splits;

  for (std::size_t i = 0; i < state.particles.size(); ++i) {
    Particle& p = state.particles[i];
    const double da = dyn.catalyst.rate_at(p.position, dim) * dyn.step;
    p.pcaf_accum += da;
    if (p.pcaf_accum >= p.split_threshold) {
      splits.push_back({i, p.position, p.lineage_max_abs});
      continue;  // the step's displacement is discarded; children sit at X_{T-}
    }
    const Point inc = sampler.draw(p.rng);
    for (int c = 0; c < dim; ++c) p.position[c] += inc[c];
    p.lineage_max_abs = std::max(p.lineage_max_abs, norm(p.position, dim));
  }

  state.clock += dyn.step;

  if (!splits.empty()) {
    std::vector<std::size_t> dead;
    dead.reserve(splits.size());
    for (const SplitEvent& ev : splits) {
      // copy out of the vector: the push_back below may reallocate
      const std::uint64_t parent_id = state.particles[ev.index].id;
      RngStream parent_rng = state.particles[ev.index].rng;
      const int n_children = dyn.offspring.sample(parent_rng);
      for (int c = 0; c < n_children; ++c) {
        Particle child;
        child.id = state.next_id++;
        child.parent_id = parent_id;
        child.birth_time = state.clock;
        child.position = ev.site;
        child.pcaf_accum = 0.0;
        child.lineage_max_abs = ev.lineage_max;
        child.rng = parent_rng.substream(child.id);
        child.split_threshold = child.rng.exponential();
        state.particles.push_back(child);
      }
      dead.push_back(ev.index);
      ++state.split_events;
    }
    // remove parents, preserving id order of survivors
    std::vector<Particle> alive;
    alive.reserve(state.particles.size() - dead.size());
    std::size_t d = 0;
    for (std::size_t i = 0; i < state.particles.size(); ++i) {
      if (d < dead.size() && dead[d] == i) {
        ++d;
        continue;
      }
      alive.push_back(std::move(state.particles[i]));
    }
    state.particles = std::move(alive);
  }

  if (state.particles.size() > dyn.population_cap)
    return RunStatus::aborted_population_cap;
  return RunStatus::completed;
}

Snapshot make_snapshot(const PopulationState& state,
                       std::span<const double> kappa_list,
                       std::span<const ThresholdScheduleSpec> schedules,
                       const SpectralResult* spectral) {
  Snapshot snap;
  snap.t = state.clock;
  snap.n_particles = state.particles.size();
  snap.kappa_counts.assign(kappa_list.size(), 0);
  snap.schedule_counts.assign(schedules.size(), 0);

  std::vector<double> sched_kappa(schedules.size());
  for (std::size_t s = 0; s < schedules.size(); ++s)
    sched_kappa[s] = schedules[s].kappa_at(state.clock);

  double mart = 0.0;
  const bool with_mart = spectral != nullptr && spectral->bound_state;
  double max_abs = 0.0;
  for (const Particle& p : state.particles) {
    // dim is not stored per particle; positions beyond the motion's dim are 0
    double r2 = 0.0;
    for (int c = 0; c < kMaxDim; ++c) r2 += p.position[c] * p.position[c];
    const double r = std::sqrt(r2);
    max_abs = std::max(max_abs, r);
    for (std::size_t k = 0; k < kappa_list.size(); ++k)
      if (r >= kappa_list[k]) ++snap.kappa_counts[k];
    for (std::size_t s = 0; s < schedules.size(); ++s)
      if (r >= sched_kappa[s]) ++snap.schedule_counts[s];
    if (with_mart) mart += eigenfunction_eval(*spectral, p.position[0]);
  }
  snap.max_abs = max_abs;
  if (with_mart)
    snap.martingale = std::exp(spectral->lambda * state.clock) * mart;
  return snap;
}

ReplicationResult run_replication(const RunSpec& spec, std::uint64_t seed,
                                  int replication_index) {
  ReplicationResult result;
  result.replication_index = replication_index;

  const RngStream rep_rng =
      RngStream(seed, 0).substream(static_cast<std::uint64_t>(replication_index));
  PopulationState state = initial_population(spec.x0, rep_rng);
  state.particles[0].lineage_max_abs = norm(spec.x0, spec.dynamics.motion.dim);

  const double dt = spec.dynamics.step;
  const std::int64_t total_steps =
      static_cast<std::int64_t>(std::llround(spec.horizon / dt));
  std::size_t next_snap = 0;

  auto maybe_snapshot = [&]() {
    while (next_snap < spec.snapshot_times.size() &&
           state.clock >= spec.snapshot_times[next_snap] - dt * 0.5) {
      result.log.push_back(make_snapshot(state, spec.kappa_list, spec.schedules,
                                         spec.spectral));
      ++next_snap;
    }
  };

  const IncrementSampler sampler(spec.dynamics.motion, spec.dynamics.step);
  maybe_snapshot();
  for (std::int64_t s = 0; s < total_steps; ++s) {
    const RunStatus st = advance(state, spec.dynamics, sampler);
    if (st == RunStatus::aborted_population_cap) {
      result.status = st;
      break;
    }
    maybe_snapshot();
  }
  if (spec.keep_final_state) result.final_state = std::move(state);
  return result;
}

int thread_budget() {
  if (const char* env = std::getenv("SBRANCH_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::vector<ReplicationResult> run_ensemble(const RunSpec& spec,
                                            std::uint64_t seed,
                                            int replications) {
  std::vector<ReplicationResult> results(replications);
  const int n_threads = std::min(thread_budget(), std::max(replications, 1));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= replications) return;
      results[r] = run_replication(spec, seed, r);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

}  // namespace stablebranch
