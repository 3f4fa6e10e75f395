#include "stablebranch/feynman_kac.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "stablebranch/stats.hpp"

namespace stablebranch {

namespace {

struct HorizonAccum {
  LogMomentAccumulator weighted;   // exp(A) (optionally gated by indicator)
  std::uint64_t hits = 0;
};

enum class GateKind { none, terminal_radius, terminal_ball, running_max };

// Shared path kernel: all estimators walk paths the same way, drawing one
// increment per step from the path's own stream, so seed-matched variants
// coincide path by path.
void sweep_paths(const CatalystSpec& mu, const StableParams& motion,
                 double nu_scale, const Point& x0,
                 std::span<const double> t_list, double kappa, GateKind gate,
                 double step, std::uint64_t n, RngStream base,
                 std::vector<HorizonAccum>& out) {
  if (mu.is_singular() && step > mu.max_step(motion.alpha) * (1.0 + 1e-12))
    throw ConfigError("feynman_kac: step violates step <= (epsilon/4)^alpha");

  const int dim = motion.dim;
  const std::size_t n_h = t_list.size();
  std::vector<std::int64_t> step_of(n_h);
  for (std::size_t h = 0; h < n_h; ++h) {
    step_of[h] = static_cast<std::int64_t>(std::llround(t_list[h] / step));
    if (h > 0 && step_of[h] <= step_of[h - 1])
      throw DomainError("feynman_kac: horizons must be increasing");
  }
  const std::int64_t total_steps = step_of.back();

  // Paths are reduced within fixed blocks and blocks merged in index order,
  // so the result is bit-identical for any thread count or schedule.
  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t n_blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<HorizonAccum>> block_acc(
      n_blocks, std::vector<HorizonAccum>(n_h));
  std::atomic<std::uint64_t> next{0};
  const IncrementSampler sampler(motion, step);
  const bool track_max = gate == GateKind::running_max;

  auto worker = [&]() {
    for (;;) {
      const std::uint64_t blk = next.fetch_add(1);
      if (blk >= n_blocks) return;
      auto& acc = block_acc[blk];
      const std::uint64_t lo = blk * kBlock;
      const std::uint64_t hi = std::min(n, lo + kBlock);
      for (std::uint64_t path = lo; path < hi; ++path) {
        RngStream rng = base.substream(path);
        Point x = x0;
        double a = 0.0;  // PCAF of raw mu along the grid
        double run_max = norm(x, dim);
        std::size_t h = 0;
        for (std::int64_t s = 0; s < total_steps && h < n_h; ++s) {
          a += mu.rate_at(x, dim) * step;
          const Point inc = sampler.draw(rng);
          for (int c = 0; c < dim; ++c) x[c] += inc[c];
          if (track_max) run_max = std::max(run_max, norm(x, dim));
          while (h < n_h && s + 1 == step_of[h]) {
            bool pass = true;
            switch (gate) {
              case GateKind::none: break;
              case GateKind::terminal_radius: pass = norm(x, dim) >= kappa; break;
              case GateKind::terminal_ball: pass = norm(x, dim) <= kappa; break;
              case GateKind::running_max: pass = run_max >= kappa; break;
            }
            if (pass) {
              acc[h].weighted.add(nu_scale * a);
              ++acc[h].hits;
            } else {
              // a miss is a zero weight; the accumulator counts it and adds
              // nothing to either sum
              acc[h].weighted.add(-std::numeric_limits<double>::infinity());
            }
            ++h;
          }
        }
      }
    }
  };

  const int n_threads = std::min<std::uint64_t>(thread_budget(), n_blocks);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  out.assign(n_h, {});
  for (auto& part : block_acc)
    for (std::size_t h = 0; h < n_h; ++h) {
      out[h].weighted.merge(part[h].weighted);
      out[h].hits += part[h].hits;
    }
}

FkEstimate finalize(const HorizonAccum& acc, double t, std::uint64_t n,
                    std::optional<double> kappa, double alpha) {
  FkEstimate est;
  est.n_samples = n;
  est.t = t;
  est.kappa = kappa;
  est.hits = acc.hits;
  est.value = acc.weighted.mean();
  est.std_error = acc.weighted.std_error();
  est.no_hit = kappa.has_value() && acc.hits == 0;
  if (kappa) est.regime_kappa_scaled = *kappa * std::pow(t, -1.0 / alpha);
  return est;
}

double cov_probe_run(const CatalystSpec& mu, const StableParams& motion,
                     double nu_scale, const Point& x0, double t, double step,
                     std::uint64_t probe_paths, RngStream rng) {
  if (probe_paths < 2) return 0.0;
  std::vector<HorizonAccum> acc;
  const double ts[1] = {t};
  sweep_paths(mu, motion, nu_scale, x0, ts, 0.0, GateKind::none, step,
              probe_paths, rng.substream(0xFC0BE), acc);
  const double m = acc[0].weighted.mean();
  return m > 0.0 ? acc[0].weighted.std_error() *
                       std::sqrt(static_cast<double>(probe_paths)) / m
                 : 0.0;
}

}  // namespace

FkEstimate estimate_exp_functional(const CatalystSpec& mu,
                                   const StableParams& motion, double nu_scale,
                                   const Point& x0, double t, std::uint64_t n,
                                   const FkOptions& opts, RngStream rng) {
  if (n < 2) throw DomainError("estimate_exp_functional: need n >= 2");
  std::vector<HorizonAccum> acc;
  const double ts[1] = {t};
  sweep_paths(mu, motion, nu_scale, x0, ts, 0.0, GateKind::none, opts.step, n,
              rng, acc);
  FkEstimate est = finalize(acc[0], t, n, std::nullopt, motion.alpha);
  if (opts.probe_paths >= 2)
    est.cov_probe = cov_probe_run(mu, motion, nu_scale, x0, t, opts.step,
                                  opts.probe_paths, rng);
  return est;
}

FkEstimate estimate_tail_functional(const CatalystSpec& mu,
                                    const StableParams& motion, double nu_scale,
                                    const Point& x0, double t, double kappa,
                                    std::uint64_t n, const FkOptions& opts,
                                    RngStream rng) {
  if (n < 2) throw DomainError("estimate_tail_functional: need n >= 2");
  if (kappa < 0.0) throw DomainError("estimate_tail_functional: kappa >= 0");
  std::vector<HorizonAccum> acc;
  const double ts[1] = {t};
  sweep_paths(mu, motion, nu_scale, x0, ts, kappa, GateKind::terminal_radius,
              opts.step, n, rng, acc);
  return finalize(acc[0], t, n, kappa, motion.alpha);
}

std::vector<FkEstimate> estimate_exp_functional_multi(
    const CatalystSpec& mu, const StableParams& motion, double nu_scale,
    const Point& x0, std::span<const double> t_list, std::uint64_t n,
    const FkOptions& opts, RngStream rng) {
  if (n < 2) throw DomainError("estimate_exp_functional_multi: need n >= 2");
  std::vector<HorizonAccum> acc;
  sweep_paths(mu, motion, nu_scale, x0, t_list, 0.0, GateKind::none, opts.step,
              n, rng, acc);
  std::vector<FkEstimate> out;
  out.reserve(t_list.size());
  for (std::size_t h = 0; h < t_list.size(); ++h)
    out.push_back(finalize(acc[h], t_list[h], n, std::nullopt, motion.alpha));
  return out;
}

std::vector<double> estimate_exp_functional_cloning(
    const CatalystSpec& mu, const StableParams& motion, double nu_scale,
    const Point& x0, std::span<const double> t_list, std::uint64_t n_walkers,
    double block_dt, double step, RngStream rng) {
  if (n_walkers < 2)
    throw DomainError("estimate_exp_functional_cloning: need n >= 2");
  if (mu.is_singular() && step > mu.max_step(motion.alpha) * (1.0 + 1e-12))
    throw ConfigError("feynman_kac: step violates step <= (epsilon/4)^alpha");

  const int dim = motion.dim;
  const std::int64_t steps_per_block =
      static_cast<std::int64_t>(std::llround(block_dt / step));
  if (steps_per_block < 1)
    throw DomainError("estimate_exp_functional_cloning: block_dt < step");

  std::vector<std::int64_t> block_of(t_list.size());
  for (std::size_t h = 0; h < t_list.size(); ++h) {
    block_of[h] = static_cast<std::int64_t>(std::llround(t_list[h] / block_dt));
    if (h > 0 && block_of[h] <= block_of[h - 1])
      throw DomainError("estimate_exp_functional_cloning: horizons collide");
  }
  const std::int64_t n_blocks = block_of.back();

  const IncrementSampler sampler(motion, step);
  std::vector<Point> xs(n_walkers, x0);
  std::vector<double> log_w(n_walkers, 0.0);
  RngStream resample_rng = rng.substream(0x5E5A);

  std::vector<double> out;
  out.reserve(t_list.size());
  double cum_log = 0.0;
  std::size_t h = 0;

  std::vector<Point> xs_next(n_walkers);
  for (std::int64_t b = 0; b < n_blocks && h < t_list.size(); ++b) {
    // advance every walker through the block; per-(block, walker) streams
    // keep the sweep deterministic under any thread schedule
    const RngStream block_rng = rng.substream(1).substream(b);
    const std::uint64_t n = n_walkers;
    const int n_threads = thread_budget();
    std::atomic<std::uint64_t> next{0};
    constexpr std::uint64_t kChunk = 1024;
    auto worker = [&]() {
      for (;;) {
        const std::uint64_t c = next.fetch_add(1);
        const std::uint64_t lo = c * kChunk;
        if (lo >= n) return;
        const std::uint64_t hi = std::min(n, lo + kChunk);
        for (std::uint64_t i = lo; i < hi; ++i) {
          RngStream wrng = block_rng.substream(i);
          Point x = xs[i];
          double a = 0.0;
          for (std::int64_t s = 0; s < steps_per_block; ++s) {
            a += mu.rate_at(x, dim) * step;
            const Point inc = sampler.draw(wrng);
            for (int c2 = 0; c2 < dim; ++c2) x[c2] += inc[c2];
          }
          xs[i] = x;
          log_w[i] = nu_scale * a;
        }
      }
    };
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    const double lse = log_sum_exp(log_w);
    cum_log += lse - std::log(static_cast<double>(n_walkers));
    while (h < t_list.size() && b + 1 == block_of[h]) {
      out.push_back(cum_log);
      ++h;
    }

    // systematic resampling proportional to the block weights
    const double u0 = resample_rng.uniform01() / static_cast<double>(n_walkers);
    double cdf = 0.0;
    std::size_t i = 0;
    for (std::uint64_t j = 0; j < n_walkers; ++j) {
      const double target =
          u0 + static_cast<double>(j) / static_cast<double>(n_walkers);
      while (cdf + std::exp(log_w[i] - lse) < target && i + 1 < n_walkers) {
        cdf += std::exp(log_w[i] - lse);
        ++i;
      }
      xs_next[j] = xs[i];
    }
    xs.swap(xs_next);
    std::fill(log_w.begin(), log_w.end(), 0.0);
  }
  return out;
}

ManyToOneReport many_to_one_pair(const ManyToOneSetup& setup, std::uint64_t n,
                                 RngStream rng) {
  ManyToOneReport report;
  report.n_per_side = n;
  const double q = setup.offspring.mean_q();

  // branching side: mean of Z_t(f) over n independent replications
  RunSpec run;
  run.dynamics = {setup.motion, setup.mu, setup.offspring, setup.step,
                  setup.population_cap};
  run.x0 = setup.x0;
  run.horizon = setup.t;
  run.snapshot_times = {};
  run.keep_final_state = true;

  const int reps = static_cast<int>(n);
  std::vector<ReplicationResult> ens =
      run_ensemble(run, rng.substream(1).key(), reps);
  std::vector<double> zf;
  zf.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    // capped replications never reached the horizon; their counts are not
    // Z_t(f) samples
    if (ens[r].status != RunStatus::completed || !ens[r].final_state) continue;
    double count = 0.0;
    for (const Particle& p : ens[r].final_state->particles) {
      const bool in =
          setup.historical
              ? p.lineage_max_abs >= setup.kappa
              : norm(p.position, setup.motion.dim) <= setup.ball_radius;
      if (in) count += 1.0;
    }
    zf.push_back(count);
  }
  if (zf.size() < 2)
    throw DomainError("many_to_one_pair: too few completed replications");
  report.branching_mean = mean(zf);
  report.branching_se =
      std::sqrt(sample_variance(zf) / static_cast<double>(zf.size()));

  // single-particle side: E[e^{A^{(Q-1)mu}} f(X_t)]
  std::vector<HorizonAccum> acc;
  const double ts[1] = {setup.t};
  if (setup.historical) {
    sweep_paths(setup.mu, setup.motion, q - 1.0, setup.x0, ts, setup.kappa,
                GateKind::running_max, setup.step, n, rng.substream(2), acc);
  } else {
    sweep_paths(setup.mu, setup.motion, q - 1.0, setup.x0, ts,
                setup.ball_radius, GateKind::terminal_ball, setup.step, n,
                rng.substream(2), acc);
  }

  report.fk_mean = acc[0].weighted.mean();
  report.fk_se = acc[0].weighted.std_error();
  const double denom = std::sqrt(report.branching_se * report.branching_se +
                                 report.fk_se * report.fk_se);
  report.z_score =
      denom > 0 ? (report.branching_mean - report.fk_mean) / denom : 0.0;
  return report;
}

RunningMaxReport running_max_sandwich_check(const StableParams& motion,
                                            const Point& x0, double kappa,
                                            std::uint64_t n, double step,
                                            double exact_marginal_tail,
                                            RngStream rng) {
  if (!(kappa > norm(x0, motion.dim)))
    throw DomainError("running_max_sandwich_check: requires |x0| < kappa");

  const int dim = motion.dim;
  const std::int64_t steps = static_cast<std::int64_t>(std::llround(1.0 / step));
  const int n_threads = thread_budget();
  const IncrementSampler sampler(motion, step);
  std::vector<std::uint64_t> hits_max(n_threads, 0), hits_marg(n_threads, 0);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&](int tid) {
    for (;;) {
      const std::uint64_t path = next.fetch_add(1);
      if (path >= n) return;
      RngStream prng = rng.substream(path);
      Point x = x0;
      double run_max = norm(x, dim);
      for (std::int64_t s = 0; s < steps; ++s) {
        const Point inc = sampler.draw(prng);
        for (int c = 0; c < dim; ++c) x[c] += inc[c];
        run_max = std::max(run_max, norm(x, dim));
      }
      if (run_max >= kappa) ++hits_max[tid];
      if (norm(x, dim) >= kappa) ++hits_marg[tid];
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker, i);
  for (auto& th : pool) th.join();

  RunningMaxReport rep;
  std::uint64_t hm = 0, hx = 0;
  for (int i = 0; i < n_threads; ++i) {
    hm += hits_max[i];
    hx += hits_marg[i];
  }
  rep.hits = hm;
  rep.p_max = static_cast<double>(hm) / static_cast<double>(n);
  rep.p_marginal = static_cast<double>(hx) / static_cast<double>(n);
  rep.p_max_se = std::sqrt(rep.p_max * (1.0 - rep.p_max) / static_cast<double>(n));
  rep.insufficient_hits = hm < 50;

  const double p_ref =
      exact_marginal_tail > 0.0 ? exact_marginal_tail : rep.p_marginal;
  const double se_rel =
      p_ref > 0 ? std::sqrt(p_ref * (1.0 - p_ref) / static_cast<double>(n)) / p_ref
                : 0.0;
  rep.band_lo = p_ref * (1.0 - 3.0 * se_rel);
  rep.band_hi = 2.0 * p_ref * (1.0 + 3.0 * se_rel);
  rep.within_band = rep.p_max >= rep.band_lo && rep.p_max <= rep.band_hi;
  return rep;
}

}  // namespace stablebranch
