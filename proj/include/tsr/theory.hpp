#pragma once

// Numerical validators for the score-approximation error bounds and for the
// non-equivalence of counteracted noise scaling.
//
// The score-mismatch functional for a k-sharpened mixture is
//
//   Error(t) = E_{x ~ p_t^k} (1/sigma_{t,k}^2) | sum_n (w^1_n(x) - w^k_n(x)) delta_n(x) |
//
// with delta_n = x - alpha_t mu_n and w^j the responsibilities of the noisy
// mixture at sharpening j. It is bounded by two closed forms, one
// exponentially tight at small t, one polynomial at large t:
//
//   B_exp  = 6 (alpha Dmax / s_k^2) exp(-alpha^2 D^2 / (8 s_1^2))
//   B_poly = (alpha Dmax / (4 s_k^2)) (1/s_k^2 - 1/s_1^2) N (d s_k^2 + alpha^2 Dmax^2)
//
// where s_j^2 = alpha^2 sigma^2 / j + sigma_t^2, D/Dmax are the extreme
// pairwise mean distances, N the component count, d the dimension. Both use
// the same responsibility/score kernels the samplers consume.
//
// The CNS check compares grad log q_t against k * grad log p_t, where q_0 is
// the locally scaled mixture (means kept, sigma -> sigma/sqrt(k)) and q_t its
// noisy marginal at per-mode noise variance sigma_t^2 / k.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/mixture.hpp"
#include "tsr/rng.hpp"
#include "tsr/schedule.hpp"

namespace tsr {

struct BoundReport {
  double t = 0.0;
  double error_mc = 0.0;
  double mc_stderr = 0.0;
  double b_exp = 0.0;
  double b_poly = 0.0;
  bool satisfied = false;
};

/// Slack applied to the bound side of the satisfaction test (plus 3 stderr).
inline constexpr double kBoundSlack = 0.05;

/// Monte-Carlo estimate of Error(t) with exact draws from p_t^k.
/// Returns (estimate, standard error).
inline std::pair<double, double> error_mc(const GaussianMixture& mix, const Schedule& s,
                                          double t, double k, int n,
                                          std::uint64_t seed) {
  if (!(k > 0.0)) throw param_error("error_mc: k must be positive");
  if (n < 1000) throw param_error("error_mc: need at least 1000 samples");
  const auto pk = mixture_noisy_params(mix, s, t, k);
  const double sk = std::sqrt(pk.var);
  const auto p1 = mixture_noisy_params(mix, s, t, 1.0);
  const int nc = mix.components();
  const int d = mix.dim();

  std::vector<double> cum(static_cast<size_t>(nc));
  double acc = 0.0;
  for (int m = 0; m < nc; ++m) {
    acc += mix.weights[m];
    cum[static_cast<size_t>(m)] = acc;
  }
  cum.back() = 1.0;

  RngStream rng(seed);
  double sum = 0.0, sum_sq = 0.0;
  Vec x(d), diff(d);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int m = 0;
    while (m + 1 < nc && u > cum[static_cast<size_t>(m)]) ++m;
    for (int j = 0; j < d; ++j) x[j] = pk.means(m, j) + sk * rng.normal();

    const Vec w1 = isotropic_responsibilities(p1.means, mix.weights, p1.var, x);
    const Vec wk = isotropic_responsibilities(pk.means, mix.weights, pk.var, x);
    diff.setZero();
    for (int c = 0; c < nc; ++c)
      diff += (w1[c] - wk[c]) * (x - pk.means.row(c).transpose());
    const double val = diff.norm() / pk.var;
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  return {mean, std::sqrt(var / n)};
}

namespace detail {
inline void check_bound_args(const GaussianMixture& mix, double k) {
  if (!(k >= 1.0))
    throw param_error("error bounds are defined for sharpening (k >= 1) only");
  (void)mix;
}
}  // namespace detail

/// Exponential-regime upper bound on Error(t).
inline double bound_exp(const MixtureGeometry& geom, const GaussianMixture& mix,
                        const Schedule& s, double t, double k) {
  detail::check_bound_args(mix, k);
  const auto [a, sg] = s.alpha_sigma(t);
  const double s1 = a * a * mix.sigma * mix.sigma + sg * sg;
  const double skv = a * a * mix.sigma * mix.sigma / k + sg * sg;
  return 6.0 * (a * geom.delta_max / skv) *
         std::exp(-a * a * geom.delta * geom.delta / (8.0 * s1));
}

/// Polynomial-regime upper bound on Error(t). Zero when k = 1.
inline double bound_poly(const MixtureGeometry& geom, const GaussianMixture& mix,
                         const Schedule& s, double t, double k) {
  detail::check_bound_args(mix, k);
  const auto [a, sg] = s.alpha_sigma(t);
  const double s1 = a * a * mix.sigma * mix.sigma + sg * sg;
  const double skv = a * a * mix.sigma * mix.sigma / k + sg * sg;
  const double n = static_cast<double>(mix.components());
  const double d = static_cast<double>(mix.dim());
  return (a * geom.delta_max / (4.0 * skv)) * (1.0 / skv - 1.0 / s1) * n *
         (d * skv + a * a * geom.delta_max * geom.delta_max);
}

/// One BoundReport per grid point; each point draws from its own derived seed.
inline std::vector<BoundReport> validate_bounds(const GaussianMixture& mix,
                                                const Schedule& s, double k,
                                                const std::vector<double>& t_grid,
                                                int n, std::uint64_t seed) {
  const auto geom = mixture_geometry(mix);
  std::vector<BoundReport> reports;
  reports.reserve(t_grid.size());
  for (size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    BoundReport rep;
    rep.t = t;
    std::tie(rep.error_mc, rep.mc_stderr) =
        error_mc(mix, s, t, k, n, derive_seed(seed, i));
    rep.b_exp = bound_exp(geom, mix, s, t, k);
    rep.b_poly = bound_poly(geom, mix, s, t, k);
    rep.satisfied = rep.error_mc <= std::min(rep.b_exp, rep.b_poly) *
                                        (1.0 + kBoundSlack) +
                                    3.0 * rep.mc_stderr;
    reports.push_back(rep);
  }
  return reports;
}

/// | grad log q_t(x) - k grad log p_t(x) | for the locally scaled target.
/// Vanishes identically for any single Gaussian (where local and global
/// scaling coincide); genuinely positive only for multi-mode mixtures.
inline double cns_gap(const GaussianMixture& mix, const Schedule& s, double t, double k,
                      const Vec& x) {
  if (s.kind() != ScheduleKind::vp_linear_beta)
    throw schedule_error("cns_gap is defined on the vp schedule");
  if (!(k > 0.0)) throw param_error("cns_gap: k must be positive");
  if (x.size() != mix.dim()) throw param_error("cns_gap: dimension mismatch");
  const auto [a, sg] = s.alpha_sigma(t);
  // q_t: means alpha mu, per-mode variance (alpha^2 sigma^2 + sigma_t^2) / k
  const double var_q = (a * a * mix.sigma * mix.sigma + sg * sg) / k;
  const Vec grad_q = isotropic_score(a * mix.means, mix.weights, var_q, x);
  const Vec grad_p = mixture_score(mix, x, s, t, 1.0);
  return (grad_q - k * grad_p).norm();
}

}  // namespace tsr
