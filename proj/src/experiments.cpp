#include "stablebranch/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "stablebranch/io.hpp"
#include "stablebranch/stats.hpp"

namespace stablebranch {

std::string to_string(Observable o) {
  switch (o) {
    case Observable::log_Lt: return "log_Lt";
    case Observable::log_Nt: return "log_Nt";
    case Observable::log_Nt_kappa: return "log_Nt_kappa";
  }
  return "?";
}

std::string to_string(SlopeEstimator e) {
  return e == SlopeEstimator::pathwise_median ? "pathwise_median"
                                              : "ensemble_mean";
}

std::string to_string(Conditioning c) {
  return c == Conditioning::none ? "none" : "survival_proxy";
}

nlohmann::json GrowthReport::to_json() const {
  nlohmann::json j;
  j["observable"] = to_string(observable);
  j["estimator"] = to_string(estimator);
  j["conditioning"] = to_string(conditioning);
  j["slope"] = slope;
  j["slope_ci"] = {ci_lo, ci_hi};
  j["target"] = target;
  j["t_range"] = {t_lo, t_hi};
  j["replications"] = replications_used;
  j["aborted_fraction"] = aborted_fraction;
  j["valid"] = valid;
  if (schedule_delta) j["schedule_delta"] = *schedule_delta;
  return j;
}

double Ensemble::aborted_fraction() const {
  if (reps.empty()) return 0.0;
  int aborted = 0;
  for (const auto& r : reps)
    if (r.status != RunStatus::completed) ++aborted;
  return static_cast<double>(aborted) / static_cast<double>(reps.size());
}

std::vector<int> Ensemble::selected(Conditioning c, double quantile) const {
  std::vector<int> idx;
  for (int r = 0; r < static_cast<int>(reps.size()); ++r)
    if (reps[r].status == RunStatus::completed && !reps[r].log.empty())
      idx.push_back(r);
  if (c == Conditioning::none || !spectral || idx.empty()) return idx;

  std::vector<double> final_m;
  for (int r : idx) final_m.push_back(reps[r].log.back().martingale);
  const double cut = stablebranch::quantile(final_m, quantile);
  std::vector<int> kept;
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (final_m[i] > cut) kept.push_back(idx[i]);
  return kept.empty() ? idx : kept;
}

Ensemble run_experiment_ensemble(const SimConfig& config) {
  Ensemble ens;
  ens.config = config;
  ens.calibrated_mass = config.catalyst.mass;

  CatalystSpec run_catalyst = config.catalyst;
  const double q_minus_1 = config.offspring.mean_q() - 1.0;

  try {
    if (config.catalyst.kind == CatalystKind::point_mass && q_minus_1 > 0.0) {
      const double lambda_target = lambda_point_catalyst(
          q_minus_1 * config.catalyst.mass, config.motion.alpha);
      ens.lambda = lambda_target;
      if (config.calibrate_point_mass) {
        ens.calibrated_mass = calibrate_tube_mass(
            config.catalyst, q_minus_1, config.motion.alpha, lambda_target,
            config.spectral.half_length, config.spectral.nodes);
        run_catalyst.mass = ens.calibrated_mass;
      }
      ens.spectral = lambda_numeric_for(
          run_catalyst, q_minus_1, config.motion.alpha,
          config.spectral.half_length, config.spectral.nodes,
          config.spectral.tol);
    } else if (config.motion.dim == 1 && q_minus_1 > 0.0 &&
               config.catalyst.kind != CatalystKind::sphere_surface) {
      ens.spectral = lambda_numeric_for(
          config.catalyst, q_minus_1, config.motion.alpha,
          config.spectral.half_length, config.spectral.nodes,
          config.spectral.tol);
      ens.lambda = ens.spectral->lambda;
    }
  } catch (const ConfigError&) {
    // catalyst not representable on the spectral box (e.g. support outside);
    // run without martingale weighting and keep the closed-form target if any
    ens.spectral.reset();
    run_catalyst.mass = config.catalyst.mass;
    ens.calibrated_mass = config.catalyst.mass;
  }

  RunSpec spec;
  spec.dynamics = {config.motion, run_catalyst, config.offspring,
                   config.effective_step(), config.population_cap};
  spec.x0 = config.x0;
  spec.horizon = config.horizon;
  spec.snapshot_times = config.snapshots.materialize(config.horizon);
  spec.kappa_list = config.kappa_list;
  spec.schedules = config.schedules;
  spec.spectral = ens.spectral && ens.spectral->bound_state
                      ? &*ens.spectral
                      : nullptr;
  ens.snapshot_times = spec.snapshot_times;
  ens.reps = run_ensemble(spec, config.seed, config.replications);
  return ens;
}

namespace {

// per-replication (t, log value) points of an observable in the window
struct SeriesExtractor {
  Observable obs;
  std::optional<int> schedule_index;

  double value(const Snapshot& s) const {
    switch (obs) {
      case Observable::log_Lt: return s.max_abs;
      case Observable::log_Nt: return static_cast<double>(s.n_particles);
      case Observable::log_Nt_kappa:
        return static_cast<double>(s.schedule_counts.at(
            static_cast<std::size_t>(schedule_index.value())));
    }
    return 0.0;
  }
};

}  // namespace

GrowthReport growth_report(const Ensemble& ens, Observable obs,
                           SlopeEstimator est, Conditioning cond,
                           double t_lo, double t_hi, double target,
                           std::optional<int> schedule_index) {
  GrowthReport rep;
  rep.observable = obs;
  rep.estimator = est;
  rep.conditioning = cond;
  rep.target = target;
  rep.t_lo = t_lo;
  rep.t_hi = t_hi;
  rep.aborted_fraction = ens.aborted_fraction();
  rep.valid = rep.aborted_fraction <= 0.20;
  if (schedule_index) rep.schedule_delta =
      ens.config.schedules.at(static_cast<std::size_t>(*schedule_index)).delta;

  const SeriesExtractor ex{obs, schedule_index};
  const auto idx = ens.selected(cond, ens.config.conditioning_quantile);
  rep.replications_used = static_cast<int>(idx.size());
  if (idx.empty()) {
    rep.valid = false;
    return rep;
  }

  if (est == SlopeEstimator::pathwise_median) {
    std::vector<double> slopes;
    for (int r : idx) {
      std::vector<double> ts, ys;
      for (const Snapshot& s : ens.reps[r].log) {
        if (s.t < t_lo - 1e-9 || s.t > t_hi + 1e-9) continue;
        const double v = ex.value(s);
        if (v <= 0.0) continue;  // zero counts carry no log information
        ts.push_back(s.t);
        ys.push_back(std::log(v));
      }
      if (ts.size() < 3) continue;
      slopes.push_back(linear_fit(ts, ys).slope);
    }
    if (slopes.empty()) {
      rep.valid = false;
      return rep;
    }
    rep.slope = median(slopes);
    rep.replications_used = static_cast<int>(slopes.size());
    const Interval ci = bootstrap_median_ci(
        slopes, 1000, 0.95, RngStream(ens.config.seed, 0xB007));
    rep.ci_lo = ci.lo;
    rep.ci_hi = ci.hi;
  } else {
    // ensemble mean at each snapshot, then one regression
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < ens.snapshot_times.size(); ++k) {
      double sum = 0.0;
      int cnt = 0;
      double tt = 0.0;
      for (int r : idx) {
        if (k >= ens.reps[r].log.size()) continue;
        const Snapshot& s = ens.reps[r].log[k];
        tt = s.t;
        sum += ex.value(s);
        ++cnt;
      }
      if (cnt == 0 || tt < t_lo - 1e-9 || tt > t_hi + 1e-9) continue;
      const double m = sum / cnt;
      if (m <= 0.0) continue;
      ts.push_back(tt);
      ys.push_back(std::log(m));
    }
    if (ts.size() < 3) {
      rep.valid = false;
      return rep;
    }
    const LinearFit fit = linear_fit(ts, ys);
    rep.slope = fit.slope;
    rep.ci_lo = fit.slope - 2.0 * fit.slope_stderr;
    rep.ci_hi = fit.slope + 2.0 * fit.slope_stderr;
  }
  return rep;
}

GrowthReport growth_exponent_Lt(const SimConfig& config, double t_lo,
                                double t_hi, Conditioning cond) {
  Ensemble ens = run_experiment_ensemble(config);
  const double target =
      ens.lambda < 0.0 ? -ens.lambda / config.motion.alpha : 0.0;
  return growth_report(ens, Observable::log_Lt,
                       SlopeEstimator::pathwise_median, cond, t_lo, t_hi,
                       target);
}

GrowthReport growth_exponent_Nt(const SimConfig& config, double t_lo,
                                double t_hi, SlopeEstimator est) {
  Ensemble ens = run_experiment_ensemble(config);
  const double target = ens.lambda < 0.0 ? -ens.lambda : 0.0;
  return growth_report(ens, Observable::log_Nt, est, Conditioning::none, t_lo,
                       t_hi, target);
}

nlohmann::json ScanReport::to_json() const {
  nlohmann::json j;
  j["slopes_monotone"] = slopes_monotone;
  j["zero_fraction_monotone"] = zero_fraction_monotone;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json je;
    je["delta"] = e.delta;
    je["supercritical"] = e.supercritical;
    je["zero_fraction"] = e.zero_fraction;
    je["target"] = e.target;
    if (e.slope) je["slope_report"] = e.slope->to_json();
    if (e.slope_pathwise) je["slope_report_pathwise"] = e.slope_pathwise->to_json();
    arr.push_back(je);
  }
  j["entries"] = arr;
  return j;
}

ScanReport threshold_scan(const Ensemble& ens, double t_lo, double t_hi) {
  ScanReport report;
  const double lambda = ens.lambda;
  const double alpha = ens.config.motion.alpha;
  const double crit = -lambda / alpha;

  const auto idx = ens.selected(Conditioning::none, 0.0);
  for (std::size_t s = 0; s < ens.config.schedules.size(); ++s) {
    ScanEntry entry;
    entry.delta = ens.config.schedules[s].delta;
    if (std::fabs(entry.delta - crit) <= 1e-12 * std::max(1.0, crit))
      throw DomainError(
          "threshold_scan: delta at the critical value -lambda/alpha is "
          "excluded (boundary case)");
    entry.supercritical = entry.delta > crit;
    entry.target = entry.supercritical ? 0.0 : -lambda - alpha * entry.delta;

    int zero = 0, total = 0;
    for (int r : idx) {
      if (ens.reps[r].log.empty()) continue;
      ++total;
      if (ens.reps[r].log.back().schedule_counts.at(s) == 0) ++zero;
    }
    entry.zero_fraction =
        total > 0 ? static_cast<double>(zero) / total : 0.0;

    if (!entry.supercritical) {
      entry.slope = growth_report(ens, Observable::log_Nt_kappa,
                                  SlopeEstimator::ensemble_mean,
                                  Conditioning::none, t_lo, t_hi, entry.target,
                                  static_cast<int>(s));
      entry.slope_pathwise = growth_report(
          ens, Observable::log_Nt_kappa, SlopeEstimator::pathwise_median,
          Conditioning::none, t_lo, t_hi, entry.target, static_cast<int>(s));
    }
    report.entries.push_back(std::move(entry));
  }

  // dichotomy ordering across deltas; the slope ordering is asserted on the
  // pathwise medians
  std::vector<std::size_t> order(report.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.entries[a].delta < report.entries[b].delta;
  });
  double prev_slope = std::numeric_limits<double>::infinity();
  double prev_zero = -1.0;
  for (std::size_t i : order) {
    const auto& e = report.entries[i];
    if (e.slope_pathwise) {
      if (e.slope_pathwise->slope > prev_slope + 1e-12)
        report.slopes_monotone = false;
      prev_slope = e.slope_pathwise->slope;
    }
    if (e.zero_fraction < prev_zero - 1e-12)
      report.zero_fraction_monotone = false;
    prev_zero = e.zero_fraction;
  }
  return report;
}

void write_ensemble_outputs(const Ensemble& ens,
                            const std::vector<GrowthReport>& reports,
                            const std::optional<ScanReport>& scan) {
  namespace fs = std::filesystem;
  const fs::path dir(ens.config.out_dir);
  fs::create_directories(dir);

  std::vector<std::string> cols = {"t", "N", "L", "M"};
  for (double k : ens.config.kappa_list)
    cols.push_back("kappa_" + format_double(k));
  for (const auto& s : ens.config.schedules)
    cols.push_back("kdelta_" + format_double(s.delta));

  for (const auto& rep : ens.reps) {
    const std::string name =
        "rep_" + std::to_string(rep.replication_index) + ".csv";
    CsvWriter csv((dir / name).string(), cols);
    for (const Snapshot& s : rep.log) {
      std::vector<double> row = {s.t, static_cast<double>(s.n_particles),
                                 s.max_abs, s.martingale};
      for (auto c : s.kappa_counts) row.push_back(static_cast<double>(c));
      for (auto c : s.schedule_counts) row.push_back(static_cast<double>(c));
      csv.write_row(row);
    }
    nlohmann::json info;
    info["replication"] = rep.replication_index;
    info["master_seed"] = ens.config.seed;
    csv.finish(rep.status == RunStatus::completed ? "completed"
                                                  : "aborted_population_cap",
               info);
  }

  // flat CSV: one row per replication per observable
  {
    CsvWriter flat((dir / "slopes.csv").string(),
                   {"observable", "replication", "slope"});
    for (Observable obs :
         {Observable::log_Lt, Observable::log_Nt}) {
      const SeriesExtractor ex{obs, std::nullopt};
      for (const auto& rep : ens.reps) {
        std::vector<double> ts, ys;
        for (const Snapshot& s : rep.log) {
          const double v = ex.value(s);
          if (v <= 0.0) continue;
          ts.push_back(s.t);
          ys.push_back(std::log(v));
        }
        if (ts.size() < 3) continue;
        flat.write_raw_row({to_string(obs),
                            std::to_string(rep.replication_index),
                            format_double(linear_fit(ts, ys).slope)});
      }
    }
    flat.finish();
  }

  nlohmann::json meta;
  meta["config"] = ens.config.to_json();
  meta["lambda"] = ens.lambda;
  meta["calibrated_mass"] = ens.calibrated_mass;
  meta["replications"] = ens.reps.size();
  meta["aborted_fraction"] = ens.aborted_fraction();
  nlohmann::json jreports = nlohmann::json::array();
  for (const auto& r : reports) jreports.push_back(r.to_json());
  meta["growth_reports"] = jreports;
  if (scan) meta["threshold_scan"] = scan->to_json();
  write_json_file((dir / "run.json").string(), meta);
}

}  // namespace stablebranch
