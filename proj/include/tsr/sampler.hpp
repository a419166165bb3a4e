#pragma once

// Reverse-time integrators: DDPM ancestral, DDIM (eta = 0), Euler probability-
// flow ODE, and Euler-Maruyama reverse SDE. Each consumes a ScoreField and a
// RescalePolicy. TSR multiplies the prediction by r_t; CNS leaves the
// prediction alone, multiplies the SDE/ancestral drift score by k and the
// injected noise by 1/sqrt(k); CFG is applied inside the score field itself.
//
// Time runs on a uniform grid from 1 - t_clip down to t_clip. Randomness is
// drawn from one per-element counter-derived stream (seed, batch index):
// d normals at initialization, then d per stochastic step, so batches are
// bit-reproducible and elements may be integrated in parallel.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/rescale.hpp"
#include "tsr/rng.hpp"
#include "tsr/schedule.hpp"
#include "tsr/score_field.hpp"

namespace tsr {

enum class SamplerKind { ddpm, ddim, euler_ode, euler_sde };

inline std::string sampler_kind_name(SamplerKind k) {
  switch (k) {
    case SamplerKind::ddpm: return "ddpm";
    case SamplerKind::ddim: return "ddim";
    case SamplerKind::euler_ode: return "euler_ode";
    case SamplerKind::euler_sde: return "euler_sde";
  }
  return "ddpm";
}

inline SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "ddpm") return SamplerKind::ddpm;
  if (name == "ddim") return SamplerKind::ddim;
  if (name == "euler_ode") return SamplerKind::euler_ode;
  if (name == "euler_sde") return SamplerKind::euler_sde;
  throw param_error("unknown sampler kind: " + name);
}

/// Step counts at which discretization error sits below the 3% acceptance
/// tolerances for the stochastic samplers (see the convergence tests).
inline int default_steps(SamplerKind k) {
  switch (k) {
    case SamplerKind::ddpm: return 1000;
    case SamplerKind::ddim: return 50;
    case SamplerKind::euler_ode: return 100;
    case SamplerKind::euler_sde: return 1000;
  }
  return 1000;
}

struct SamplerConfig {
  SamplerKind kind = SamplerKind::ddpm;
  int steps = 1000;
  Schedule schedule = Schedule::vp();
  std::uint64_t seed = 0;
  int batch = 1;

  static SamplerConfig create(SamplerKind kind, int steps, Schedule schedule,
                              std::uint64_t seed, int batch) {
    if (steps < 2) throw param_error("sampler steps must be at least 2");
    if (batch < 1) throw param_error("sampler batch must be at least 1");
    return {kind, steps, std::move(schedule), seed, batch};
  }
};

struct BatchMeta {
  SamplerKind kind = SamplerKind::ddpm;
  RescalePolicy policy;
  Schedule schedule = Schedule::vp();
  int steps = 0;
  std::uint64_t seed = 0;
  int batch = 0;
};

struct SampleBatch {
  RowMat points;
  BatchMeta meta;
};

/// Uniform reverse-time grid: steps+1 nodes from t_max down to t_min, exact at
/// both endpoints.
inline std::vector<double> time_grid(const Schedule& s, int steps) {
  if (steps < 2) throw param_error("time_grid: steps must be at least 2");
  std::vector<double> grid(static_cast<size_t>(steps) + 1);
  const double n = static_cast<double>(steps);
  for (int i = 1; i < steps; ++i)
    grid[static_cast<size_t>(i)] =
        (static_cast<double>(steps - i) * s.t_max() + static_cast<double>(i) * s.t_min()) / n;
  // endpoints set exactly; the blend above can land 1 ulp outside the domain
  grid.front() = s.t_max();
  grid.back() = s.t_min();
  return grid;
}

namespace detail {

// --- shared per-row update kernels -----------------------------------------

// DDPM/DDIM coefficients for one transition t -> t_next.
struct AncestralCoeffs {
  double a_t, s_t, a_s, s_s;
  double factor;      // prediction multiplier r_t (1 for none/cfg/cns)
  double noise_mult;  // cns 1/sqrt(k), else 1 (ancestral noise only)
  double dir_coeff;   // coefficient on eps~ in the update
  double post_std;    // ancestral posterior std (0 for ddim)
};

inline AncestralCoeffs ancestral_coeffs(const Schedule& sched, double t, double t_next,
                                        const RescalePolicy& policy, bool stochastic) {
  if (sched.kind() != ScheduleKind::vp_linear_beta)
    throw schedule_error("ancestral samplers require the vp schedule");
  if (!(t_next < t)) throw param_error("ancestral step needs decreasing times");
  if (!stochastic && policy.kind == RescalePolicy::Kind::cns)
    throw policy_error("cns applies to stochastic samplers only");

  AncestralCoeffs c{};
  std::tie(c.a_t, c.s_t) = sched.alpha_sigma(t);
  std::tie(c.a_s, c.s_s) = sched.alpha_sigma(t_next);
  c.factor = (policy.kind == RescalePolicy::Kind::tsr)
                 ? tsr_factor(policy.k, policy.sigma, sched.snr(t))
                 : 1.0;
  c.noise_mult =
      (policy.kind == RescalePolicy::Kind::cns) ? cns_noise_scale(policy.k) : 1.0;
  if (stochastic) {
    const double ratio = c.a_t / c.a_s;
    const double post_var = (c.s_s * c.s_s / (c.s_t * c.s_t)) *
                            std::max(0.0, c.s_t * c.s_t - ratio * ratio * c.s_s * c.s_s);
    c.post_std = std::sqrt(post_var);
    c.dir_coeff = std::sqrt(std::max(0.0, c.s_s * c.s_s - post_var));
  } else {
    c.post_std = 0.0;
    c.dir_coeff = c.s_s;
  }
  return c;
}

// One ancestral update over a row block; S holds scores of X's rows at t.
// `streams` (aligned with rows) is null for the deterministic DDIM path;
// stochastic rows always consume exactly d draws.
inline void ancestral_update(Eigen::Ref<RowMat> X, Eigen::Ref<const RowMat> S,
                             const AncestralCoeffs& c, RngStream* streams) {
  const Eigen::Index d = X.cols();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double eps_eff = c.factor * (-c.s_t * S(i, j));
      const double x0 = (X(i, j) - c.s_t * eps_eff) / c.a_t;
      double xn = c.a_s * x0 + c.dir_coeff * eps_eff;
      if (streams) xn += c.post_std * c.noise_mult * streams[i].normal();
      X(i, j) = xn;
    }
}

// Euler-Maruyama coefficients for the reverse SDE on [t, t+dt], dt < 0.
struct SdeCoeffs {
  double f, g2_eff;    // drift: f x - g2_eff * score_mult * s
  double score_mult;   // r for tsr, k for cns, 1 otherwise
  double noise_coeff;  // g * noise_mult * sqrt(-dt)
  double dt;
};

inline SdeCoeffs sde_coeffs(const Schedule& sched, double t, double dt,
                            const RescalePolicy& policy) {
  if (sched.kind() != ScheduleKind::vp_linear_beta)
    throw schedule_error("euler_sde requires the vp schedule");
  if (!(dt < 0.0)) throw param_error("euler_sde step needs dt < 0");
  SdeCoeffs c{};
  const auto [f, g] = sched.drift_diffusion(t);
  c.f = f;
  c.dt = dt;
  double nm = 1.0;
  c.score_mult = 1.0;
  if (policy.kind == RescalePolicy::Kind::tsr)
    c.score_mult = tsr_factor(policy.k, policy.sigma, sched.snr(t));
  else if (policy.kind == RescalePolicy::Kind::cns) {
    nm = cns_noise_scale(policy.k);
    c.score_mult = policy.k;
  }
  c.g2_eff = (g * nm) * (g * nm);
  c.noise_coeff = g * nm * std::sqrt(-dt);
  return c;
}

// Null `streams` integrates the drift alone (zero noise draws).
inline void sde_update(Eigen::Ref<RowMat> X, Eigen::Ref<const RowMat> S,
                       const SdeCoeffs& c, RngStream* streams) {
  const Eigen::Index d = X.cols();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double drift = c.f * X(i, j) - c.g2_eff * c.score_mult * S(i, j);
      double xn = X(i, j) + drift * c.dt;
      if (streams) xn += c.noise_coeff * streams[i].normal();
      X(i, j) = xn;
    }
}

// Probability-flow Euler step: x' = x + v~ dt with
// v = (ad x - D s)/a and v~ = (r (a v - ad x) + ad x)/a, composed exactly as
// the public velocity conversions do.
struct OdeCoeffs {
  double a, ad, D, r, dt;
};

inline OdeCoeffs ode_coeffs(const Schedule& sched, double t, double dt,
                            const RescalePolicy& policy) {
  if (!(dt < 0.0)) throw param_error("euler_ode step needs dt < 0");
  if (policy.kind == RescalePolicy::Kind::cns)
    throw policy_error("cns applies to stochastic samplers only");
  OdeCoeffs c{};
  const auto [a, sg] = sched.alpha_sigma(t);
  const auto [ad, sgd] = sched.alpha_sigma_dot(t);
  c.a = a;
  c.ad = ad;
  c.D = sg * (a * sgd - ad * sg);
  c.r = (policy.kind == RescalePolicy::Kind::tsr)
            ? tsr_factor(policy.k, policy.sigma, sched.snr(t))
            : 1.0;
  c.dt = dt;
  return c;
}

inline void ode_update(Eigen::Ref<RowMat> X, Eigen::Ref<const RowMat> S,
                       const OdeCoeffs& c) {
  const Eigen::Index d = X.cols();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = (c.ad * X(i, j) - c.D * S(i, j)) / c.a;
      const double vt = (c.r * (c.a * v - c.ad * X(i, j)) + c.ad * X(i, j)) / c.a;
      X(i, j) = X(i, j) + vt * c.dt;
    }
}

}  // namespace detail

// --- public per-point step operations ---------------------------------------

/// One DDPM ancestral transition t -> t_next (both in the clipped domain,
/// t_next < t). Consumes exactly dim(x) normal draws from rng.
inline Vec ddpm_step(const Vec& x, double t, double t_next, const ScoreField& field,
                     const RescalePolicy& policy, const Schedule& sched,
                     RngStream& rng) {
  const auto c = detail::ancestral_coeffs(sched, t, t_next, policy, true);
  RowMat X = x.transpose();
  RowMat S = field.score(x, t).transpose();
  detail::ancestral_update(X, S, c, &rng);
  return X.row(0).transpose();
}

/// One deterministic DDIM transition t -> t_next.
inline Vec ddim_step(const Vec& x, double t, double t_next, const ScoreField& field,
                     const RescalePolicy& policy, const Schedule& sched) {
  const auto c = detail::ancestral_coeffs(sched, t, t_next, policy, false);
  RowMat X = x.transpose();
  RowMat S = field.score(x, t).transpose();
  detail::ancestral_update(X, S, c, nullptr);
  return X.row(0).transpose();
}

/// One Euler-Maruyama reverse-SDE step of size dt < 0. Consumes dim(x) draws.
inline Vec euler_sde_step(const Vec& x, double t, double dt, const ScoreField& field,
                          const RescalePolicy& policy, const Schedule& sched,
                          RngStream& rng) {
  const auto c = detail::sde_coeffs(sched, t, dt, policy);
  RowMat X = x.transpose();
  RowMat S = field.score(x, t).transpose();
  detail::sde_update(X, S, c, &rng);
  return X.row(0).transpose();
}

/// One probability-flow Euler step of size dt < 0 (flow or vp schedule).
inline Vec euler_ode_step(const Vec& x, double t, double dt, const ScoreField& field,
                          const RescalePolicy& policy, const Schedule& sched) {
  const auto c = detail::ode_coeffs(sched, t, dt, policy);
  RowMat X = x.transpose();
  RowMat S = field.score(x, t).transpose();
  detail::ode_update(X, S, c);
  return X.row(0).transpose();
}

/// Standard-normal prior draws, one derived stream per batch element.
inline RowMat init_prior(const SamplerConfig& cfg, int dim) {
  if (dim < 1) throw param_error("init_prior: dim must be positive");
  RowMat X(cfg.batch, dim);
  for (int i = 0; i < cfg.batch; ++i) {
    RngStream rs = RngStream::derived(cfg.seed, static_cast<std::uint64_t>(i));
    for (int j = 0; j < dim; ++j) X(i, j) = rs.normal();
  }
  return X;
}

namespace detail {

inline void validate_run(const SamplerConfig& cfg, const RescalePolicy& policy) {
  const bool vp = cfg.schedule.kind() == ScheduleKind::vp_linear_beta;
  const bool stochastic =
      cfg.kind == SamplerKind::ddpm || cfg.kind == SamplerKind::euler_sde;
  if (!vp && cfg.kind != SamplerKind::euler_ode)
    throw config_error("sampler '" + sampler_kind_name(cfg.kind) +
                       "' requires the vp schedule");
  if (!stochastic && policy.kind == RescalePolicy::Kind::cns)
    throw config_error("policy 'cns' applies to stochastic samplers only; sampler '" +
                       sampler_kind_name(cfg.kind) + "' is deterministic");
}

// Full trajectory for a contiguous row block whose global element indices
// start at `first`. Self-contained so blocks can run on separate threads with
// results identical to sequential execution.
inline void run_rows(const SamplerConfig& cfg, const ScoreField& field,
                     const RescalePolicy& policy, const std::vector<double>& grid,
                     Eigen::Ref<RowMat> X, int first) {
  const int rows = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  std::vector<RngStream> streams;
  streams.reserve(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i)
    streams.push_back(
        RngStream::derived(cfg.seed, static_cast<std::uint64_t>(first + i)));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = streams[static_cast<size_t>(i)].normal();

  RowMat S(rows, d);
  for (int i = 0; i + 1 < static_cast<int>(grid.size()); ++i) {
    const double t = grid[static_cast<size_t>(i)];
    const double t_next = grid[static_cast<size_t>(i) + 1];
    field.score_batch(X, t, S);
    switch (cfg.kind) {
      case SamplerKind::ddpm:
        ancestral_update(X, S, ancestral_coeffs(cfg.schedule, t, t_next, policy, true),
                         streams.data());
        break;
      case SamplerKind::ddim:
        ancestral_update(X, S, ancestral_coeffs(cfg.schedule, t, t_next, policy, false),
                         nullptr);
        break;
      case SamplerKind::euler_sde:
        sde_update(X, S, sde_coeffs(cfg.schedule, t, t_next - t, policy),
                   streams.data());
        break;
      case SamplerKind::euler_ode:
        ode_update(X, S, ode_coeffs(cfg.schedule, t, t_next - t, policy));
        break;
    }
  }
}

}  // namespace detail

/// Integrate a full batch. `workers` > 1 splits the batch into contiguous row
/// blocks integrated on separate threads; the per-element RNG derivation makes
/// the result identical to the sequential run.
inline SampleBatch run(const SamplerConfig& cfg, const ScoreField& field,
                       const RescalePolicy& policy, int workers = 1) {
  if (cfg.steps < 2) throw param_error("sampler steps must be at least 2");
  if (cfg.batch < 1) throw param_error("sampler batch must be at least 1");
  detail::validate_run(cfg, policy);

  const int d = field.dim();
  const auto grid = time_grid(cfg.schedule, cfg.steps);
  RowMat X(cfg.batch, d);

  const int nw = std::max(1, std::min(workers, cfg.batch));
  if (nw == 1) {
    detail::run_rows(cfg, field, policy, grid, X, 0);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(nw));
    const int base = cfg.batch / nw, extra = cfg.batch % nw;
    int row = 0;
    for (int w = 0; w < nw; ++w) {
      const int count = base + (w < extra ? 1 : 0);
      const int start = row;
      row += count;
      threads.emplace_back([&, w, start, count] {
        try {
          detail::run_rows(cfg, field, policy, grid, X.middleRows(start, count), start);
        } catch (...) {
          errors[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  if (!X.allFinite()) throw domain_error("sampler produced non-finite values");
  return {std::move(X), BatchMeta{cfg.kind, policy, cfg.schedule, cfg.steps, cfg.seed,
                                  cfg.batch}};
}

/// Reproduce a batch bit-exactly from its metadata.
inline SampleBatch rerun_from_meta(const BatchMeta& meta, const ScoreField& field,
                                   int workers = 1) {
  return run(SamplerConfig::create(meta.kind, meta.steps, meta.schedule, meta.seed,
                                   meta.batch),
             field, meta.policy, workers);
}

}  // namespace tsr
