#ifndef STABLEBRANCH_BRANCHING_HPP
#define STABLEBRANCH_BRANCHING_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "stablebranch/catalyst.hpp"
#include "stablebranch/rng.hpp"
#include "stablebranch/spectral.hpp"
#include "stablebranch/stable_motion.hpp"

namespace stablebranch {

struct Particle {
  std::uint64_t id = 0;
  std::uint64_t parent_id = kNoParent;
  double birth_time = 0.0;
  Point position{};
  double pcaf_accum = 0.0;       // A along own lifetime, resets at birth
  double split_threshold = 0.0;  // unit-exponential draw
  double lineage_max_abs = 0.0;  // sup |X_s| along the whole ancestral line
  RngStream rng;

  static constexpr std::uint64_t kNoParent = ~std::uint64_t{0};
};

struct PopulationState {
  double clock = 0.0;
  std::vector<Particle> particles;
  std::uint64_t next_id = 0;
  std::uint64_t split_events = 0;
};

// Exponentially-spaced kappa schedule kappa(t) = exp(delta t) a(t).
struct ThresholdScheduleSpec {
  enum class AKind { constant, log_shift, power };
  double delta = 0.0;
  AKind a_kind = AKind::constant;
  double a_param = 1.0;  // constant: a0; power: exponent p of t^p

  double a_of(double t) const;
  double kappa_at(double t) const { return std::exp(delta * t) * a_of(t); }
};

struct Snapshot {
  double t = 0.0;
  std::uint64_t n_particles = 0;
  double max_abs = 0.0;  // L_t
  double martingale = std::numeric_limits<double>::quiet_NaN();  // M_t
  std::vector<std::uint64_t> kappa_counts;     // one per configured kappa
  std::vector<std::uint64_t> schedule_counts;  // one per threshold schedule
};

enum class RunStatus { completed, aborted_population_cap };

struct ReplicationResult {
  int replication_index = 0;
  RunStatus status = RunStatus::completed;
  std::vector<Snapshot> log;
  std::optional<PopulationState> final_state;  // kept on request
};

struct BranchingDynamics {
  StableParams motion;
  CatalystSpec catalyst;   // raw branching measure mu (clock uses mu, not (Q-1)mu)
  OffspringLaw offspring;
  double step = 0.0;
  std::uint64_t population_cap = 1'000'000;
};

// Spawn the initial single-particle population at x0. The per-particle
// streams derive from `rep_rng`, so a replication is a pure function of
// (master seed, replication index).
PopulationState initial_population(const Point& x0, const RngStream& rep_rng);

// Advance all particles by one step: each position moves by an exact stable
// increment, the PCAF accrues by the left-endpoint rule, and a particle whose
// accumulated PCAF crosses its exponential threshold is replaced at the end
// of the step by n ~ offspring fresh particles at its pre-step position
// (the pre-jump point stands in for X_{T-}). Returns aborted status when the
// population would exceed the cap.
RunStatus advance(PopulationState& state, const BranchingDynamics& dyn);
RunStatus advance(PopulationState& state, const BranchingDynamics& dyn,
                  const IncrementSampler& sampler);

Snapshot make_snapshot(const PopulationState& state,
                       std::span<const double> kappa_list,
                       std::span<const ThresholdScheduleSpec> schedules,
                       const SpectralResult* spectral);

struct RunSpec {
  BranchingDynamics dynamics;
  Point x0{};
  double horizon = 0.0;
  std::vector<double> snapshot_times;  // strictly increasing, <= horizon
  std::vector<double> kappa_list;
  std::vector<ThresholdScheduleSpec> schedules;
  const SpectralResult* spectral = nullptr;  // for M_t; may be null
  bool keep_final_state = false;
};

// One full replication; deterministic given (seed, replication index).
ReplicationResult run_replication(const RunSpec& spec, std::uint64_t seed,
                                  int replication_index);

// All replications, fanned out over a thread pool; results ordered by index.
// Thread count: SBRANCH_THREADS if set, else hardware concurrency.
std::vector<ReplicationResult> run_ensemble(const RunSpec& spec,
                                            std::uint64_t seed,
                                            int replications);

int thread_budget();

}  // namespace stablebranch

#endif
