#ifndef STABLEBRANCH_CONFIG_HPP
#define STABLEBRANCH_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "stablebranch/branching.hpp"
#include "stablebranch/catalyst.hpp"
#include "stablebranch/stable_motion.hpp"

#include "json.hpp"

namespace stablebranch {

// Project-wide numeric defaults. Every tunable that appears in more than one
// place lives here.
namespace defaults {
inline constexpr double kTubeEpsilon = 0.05;
inline constexpr double kBoxHalfLength = 50.0;   // spectral box
inline constexpr int kBoxNodes = 1 << 14;        // spectral nodes
inline constexpr std::uint64_t kPopulationCap = 1'000'000;
inline constexpr double kConditioningQuantile = 0.2;
inline constexpr double kSpectralTol = 1e-10;
// default simulation step: (epsilon/4)^alpha, the boundary of the legal range
double step_for(double alpha, double epsilon);
}  // namespace defaults

struct SnapshotSchedule {
  enum class Kind { geometric, linear, explicit_list };
  Kind kind = Kind::geometric;
  int count = 24;
  double t_min = 1.0;
  std::vector<double> times;  // explicit_list only

  std::vector<double> materialize(double horizon) const;
};

struct SpectralOptions {
  double half_length = defaults::kBoxHalfLength;
  int nodes = defaults::kBoxNodes;
  double tol = defaults::kSpectralTol;
};

struct SimConfig {
  StableParams motion;
  CatalystSpec catalyst;
  OffspringLaw offspring = OffspringLaw::binary();
  Point x0{};
  double step = 0.0;  // 0 = derive from the step/epsilon rule
  double horizon = 50.0;
  SnapshotSchedule snapshots;
  std::vector<double> kappa_list;
  std::vector<ThresholdScheduleSpec> schedules;
  int replications = 1;
  std::uint64_t seed = 1;
  std::uint64_t population_cap = defaults::kPopulationCap;
  double conditioning_quantile = defaults::kConditioningQuantile;
  // renormalise the tube mass of a point catalyst so the mollified operator
  // matches the closed-form spectral bottom of the point measure
  bool calibrate_point_mass = true;
  SpectralOptions spectral;
  std::string out_dir = "out";

  double effective_step() const;
  std::vector<std::string> validate() const;

  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j, const std::string& base_dir);
};

// Load, apply key=value overrides (dotted paths, e.g. catalyst.mass=0.5),
// validate. Throws ConfigError listing every violation, not just the first.
SimConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides = {});

SimConfig parse_config_json(const nlohmann::json& j, const std::string& base_dir);

// columns: coordinate,value rows; used for grid_density catalysts
GridDensityData load_grid_density_csv(const std::string& path);

}  // namespace stablebranch

#endif
