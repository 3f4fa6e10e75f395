#include "stablebranch/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stablebranch {

namespace defaults {
double step_for(double alpha, double epsilon) {
  return std::pow(epsilon / 4.0, alpha);
}
}  // namespace defaults

std::vector<double> SnapshotSchedule::materialize(double horizon) const {
  std::vector<double> out;
  switch (kind) {
    case Kind::explicit_list:
      out = times;
      break;
    case Kind::linear: {
      for (int i = 1; i <= count; ++i)
        out.push_back(t_min + (horizon - t_min) * (i - 1) /
                                  std::max(count - 1, 1));
      break;
    }
    case Kind::geometric: {
      const double ratio =
          count > 1 ? std::pow(horizon / t_min, 1.0 / (count - 1)) : 1.0;
      double t = t_min;
      for (int i = 0; i < count; ++i) {
        out.push_back(std::min(t, horizon));
        t *= ratio;
      }
      break;
    }
  }
  return out;
}

double SimConfig::effective_step() const {
  if (step > 0.0) return step;
  if (catalyst.is_singular())
    return defaults::step_for(motion.alpha, catalyst.tube_epsilon);
  return defaults::step_for(motion.alpha, defaults::kTubeEpsilon);
}

std::vector<std::string> SimConfig::validate() const {
  std::vector<std::string> errs;
  if (!(motion.alpha > 0.0 && motion.alpha < 2.0))
    errs.push_back("motion.alpha: must lie in (0,2)");
  if (motion.dim < 1 || motion.dim > kMaxDim)
    errs.push_back("motion.dim: must lie in [1," + std::to_string(kMaxDim) + "]");

  if (errs.empty()) {
    auto ce = catalyst.validate(motion);
    for (auto& e : ce) errs.push_back("catalyst." + e);
  }
  auto oe = offspring.validate();
  for (auto& e : oe) errs.push_back("offspring." + e);

  const double dt = effective_step();
  if (!(dt > 0.0)) errs.push_back("step: must be > 0");
  if (catalyst.is_singular() && errs.empty() &&
      dt > catalyst.max_step(motion.alpha) * (1.0 + 1e-12))
    errs.push_back(
        "step: violates step <= (tube_epsilon/4)^alpha (got " +
        std::to_string(dt) + ", limit " +
        std::to_string(catalyst.max_step(motion.alpha)) + ")");

  if (!(horizon > 0.0)) errs.push_back("horizon: must be > 0");
  if (replications < 1) errs.push_back("replications: must be >= 1");
  if (population_cap < 1) errs.push_back("population_cap: must be >= 1");
  if (conditioning_quantile < 0.0 || conditioning_quantile >= 1.0)
    errs.push_back("conditioning_quantile: must lie in [0,1)");

  if (snapshots.kind == SnapshotSchedule::Kind::explicit_list) {
    for (std::size_t i = 0; i < snapshots.times.size(); ++i) {
      if (snapshots.times[i] > horizon) {
        errs.push_back("snapshots.times: exceed the horizon");
        break;
      }
      if (i > 0 && snapshots.times[i] <= snapshots.times[i - 1]) {
        errs.push_back("snapshots.times: must be strictly increasing");
        break;
      }
    }
  } else {
    if (snapshots.count < 1) errs.push_back("snapshots.count: must be >= 1");
    if (!(snapshots.t_min > 0.0 && snapshots.t_min <= horizon))
      errs.push_back("snapshots.t_min: must lie in (0, horizon]");
  }
  for (double k : kappa_list)
    if (k < 0.0) {
      errs.push_back("kappa_list: entries must be >= 0");
      break;
    }
  for (const auto& s : schedules)
    if (!(s.delta > 0.0)) {
      errs.push_back("threshold_schedules: delta must be > 0");
      break;
    }
  if (spectral.nodes < 4 || (spectral.nodes & (spectral.nodes - 1)) != 0)
    errs.push_back("spectral.nodes: must be a power of two >= 4");
  if (!(spectral.half_length > 0.0))
    errs.push_back("spectral.half_length: must be > 0");
  return errs;
}

namespace {

CatalystKind catalyst_kind_from(const std::string& s) {
  if (s == "point_mass") return CatalystKind::point_mass;
  if (s == "ball_indicator") return CatalystKind::ball_indicator;
  if (s == "grid_density") return CatalystKind::grid_density;
  if (s == "sphere_surface") return CatalystKind::sphere_surface;
  throw ConfigError("catalyst.variant: unknown variant '" + s + "'");
}

Point point_from(const nlohmann::json& j) {
  Point p{};
  if (j.is_number()) {
    p[0] = j.get<double>();
    return p;
  }
  if (!j.is_array() || j.size() > kMaxDim)
    throw ConfigError("expected a coordinate array of length <= " +
                      std::to_string(kMaxDim));
  for (std::size_t i = 0; i < j.size(); ++i) p[i] = j[i].get<double>();
  return p;
}

nlohmann::json point_to(const Point& p, int dim) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

}  // namespace

GridDensityData load_grid_density_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("grid_density: cannot open '" + path + "'");
  GridDensityData g;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ','))
      throw ConfigError("grid_density: expected 'coordinate,value' rows in " + path);
    if (first) {
      first = false;
      // tolerate a header row
      try {
        (void)std::stod(a);
      } catch (...) {
        continue;
      }
    }
    g.xs.push_back(std::stod(a));
    g.values.push_back(std::stod(b));
  }
  return g;
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json j;
  j["motion"] = {{"alpha", motion.alpha}, {"dim", motion.dim}};
  nlohmann::json c;
  c["variant"] = to_string(catalyst.kind);
  c["mass"] = catalyst.mass;
  c["center"] = point_to(catalyst.center, motion.dim);
  c["radius"] = catalyst.radius;
  c["tube_epsilon"] = catalyst.tube_epsilon;
  if (catalyst.kind == CatalystKind::grid_density) {
    c["grid_xs"] = catalyst.grid.xs;
    c["grid_values"] = catalyst.grid.values;
  }
  j["catalyst"] = c;
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [n, p] : offspring.probabilities)
    probs[std::to_string(n)] = p;
  j["offspring"] = {{"probabilities", probs}};
  j["x0"] = point_to(x0, motion.dim);
  j["step"] = step;
  j["horizon"] = horizon;
  nlohmann::json snap;
  switch (snapshots.kind) {
    case SnapshotSchedule::Kind::geometric: snap["kind"] = "geometric"; break;
    case SnapshotSchedule::Kind::linear: snap["kind"] = "linear"; break;
    case SnapshotSchedule::Kind::explicit_list: snap["kind"] = "explicit"; break;
  }
  snap["count"] = snapshots.count;
  snap["t_min"] = snapshots.t_min;
  snap["times"] = snapshots.times;
  j["snapshots"] = snap;
  j["kappa_list"] = kappa_list;
  nlohmann::json scheds = nlohmann::json::array();
  for (const auto& s : schedules) {
    nlohmann::json e;
    e["delta"] = s.delta;
    switch (s.a_kind) {
      case ThresholdScheduleSpec::AKind::constant: e["a"] = "constant"; break;
      case ThresholdScheduleSpec::AKind::log_shift: e["a"] = "log"; break;
      case ThresholdScheduleSpec::AKind::power: e["a"] = "power"; break;
    }
    e["a_param"] = s.a_param;
    scheds.push_back(e);
  }
  j["threshold_schedules"] = scheds;
  j["replications"] = replications;
  j["seed"] = seed;
  j["population_cap"] = population_cap;
  j["conditioning_quantile"] = conditioning_quantile;
  j["calibrate_point_mass"] = calibrate_point_mass;
  j["spectral"] = {{"half_length", spectral.half_length},
                   {"nodes", spectral.nodes},
                   {"tol", spectral.tol}};
  j["out_dir"] = out_dir;
  return j;
}

SimConfig SimConfig::from_json(const nlohmann::json& j,
                               const std::string& base_dir) {
  SimConfig cfg;
  const auto& jm = j.at("motion");
  cfg.motion.alpha = jm.at("alpha").get<double>();
  cfg.motion.dim = jm.value("dim", 1);

  const auto& jc = j.at("catalyst");
  cfg.catalyst.kind = catalyst_kind_from(jc.at("variant").get<std::string>());
  cfg.catalyst.mass = jc.value("mass", 1.0);
  if (jc.contains("center")) cfg.catalyst.center = point_from(jc["center"]);
  cfg.catalyst.radius = jc.value("radius", 0.0);
  cfg.catalyst.tube_epsilon = jc.value("tube_epsilon", defaults::kTubeEpsilon);
  if (cfg.catalyst.kind == CatalystKind::grid_density) {
    if (jc.contains("grid_file")) {
      std::filesystem::path p = jc["grid_file"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.catalyst.grid = load_grid_density_csv(p.string());
    } else {
      cfg.catalyst.grid.xs = jc.value("grid_xs", std::vector<double>{});
      cfg.catalyst.grid.values = jc.value("grid_values", std::vector<double>{});
    }
  }

  if (j.contains("offspring")) {
    cfg.offspring.probabilities.clear();
    const auto& probs = j["offspring"].at("probabilities");
    for (auto it = probs.begin(); it != probs.end(); ++it) {
      int n = 0;
      try {
        n = std::stoi(it.key());
      } catch (...) {
        throw ConfigError("offspring.probabilities: keys must be integers");
      }
      cfg.offspring.probabilities.emplace_back(n, it.value().get<double>());
    }
    std::sort(cfg.offspring.probabilities.begin(),
              cfg.offspring.probabilities.end());
  }

  if (j.contains("x0")) cfg.x0 = point_from(j["x0"]);
  cfg.step = j.value("step", 0.0);
  cfg.horizon = j.value("horizon", 50.0);

  if (j.contains("snapshots")) {
    const auto& js = j["snapshots"];
    const std::string kind = js.value("kind", "geometric");
    if (kind == "geometric")
      cfg.snapshots.kind = SnapshotSchedule::Kind::geometric;
    else if (kind == "linear")
      cfg.snapshots.kind = SnapshotSchedule::Kind::linear;
    else if (kind == "explicit")
      cfg.snapshots.kind = SnapshotSchedule::Kind::explicit_list;
    else
      throw ConfigError("snapshots.kind: unknown kind '" + kind + "'");
    cfg.snapshots.count = js.value("count", 24);
    cfg.snapshots.t_min = js.value("t_min", 1.0);
    cfg.snapshots.times = js.value("times", std::vector<double>{});
  }

  cfg.kappa_list = j.value("kappa_list", std::vector<double>{});
  if (j.contains("threshold_schedules")) {
    for (const auto& e : j["threshold_schedules"]) {
      ThresholdScheduleSpec s;
      s.delta = e.at("delta").get<double>();
      const std::string a = e.value("a", "constant");
      if (a == "constant")
        s.a_kind = ThresholdScheduleSpec::AKind::constant;
      else if (a == "log")
        s.a_kind = ThresholdScheduleSpec::AKind::log_shift;
      else if (a == "power")
        s.a_kind = ThresholdScheduleSpec::AKind::power;
      else
        throw ConfigError("threshold_schedules.a: unknown family '" + a + "'");
      s.a_param = e.value("a_param", 1.0);
      cfg.schedules.push_back(s);
    }
  }

  cfg.replications = j.value("replications", 1);
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.population_cap = j.value("population_cap", defaults::kPopulationCap);
  cfg.conditioning_quantile =
      j.value("conditioning_quantile", defaults::kConditioningQuantile);
  cfg.calibrate_point_mass = j.value("calibrate_point_mass", true);
  if (j.contains("spectral")) {
    const auto& sp = j["spectral"];
    cfg.spectral.half_length = sp.value("half_length", defaults::kBoxHalfLength);
    cfg.spectral.nodes = sp.value("nodes", defaults::kBoxNodes);
    cfg.spectral.tol = sp.value("tol", defaults::kSpectralTol);
  }
  cfg.out_dir = j.value("out_dir", std::string("out"));
  return cfg;
}

namespace {

// "a.b.c=value" appplied onto a json document; values parse as json when
// possible, else as strings.
void apply_override(nlohmann::json& j, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + kv + "': expected key=value");
  const std::string path = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + kv + "': empty key");
    if (dot == std::string::npos) {
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(value);
      } catch (...) {
        parsed = value;
      }
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

SimConfig parse_config_json(const nlohmann::json& j, const std::string& base_dir) {
  SimConfig cfg = SimConfig::from_json(j, base_dir);
  auto errs = cfg.validate();
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

SimConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  for (const auto& kv : overrides) apply_override(j, kv);
  return parse_config_json(
      j, std::filesystem::path(path).parent_path().string());
}

}  // namespace stablebranch
