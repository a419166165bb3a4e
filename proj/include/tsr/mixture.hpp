#pragma once

// Isotropic Gaussian mixtures and their noisy marginals.
//
// For a mixture p_0 = sum_m w_m N(mu_m, sigma^2 I) pushed through the forward
// process x_t = alpha_t x_0 + sigma_t eps, the marginal at time t is again a
// mixture with means alpha_t mu_m and shared isotropic variance
//
//   var_{t,k} = alpha_t^2 sigma^2 / k + sigma_t^2,
//
// where k = 1 is the plain marginal and k > 1 the locally sharpened target
// (per-mode variance divided by k, means and weights untouched). Everything
// here is computed in log space: the well-separated regimes exercised by the
// error-bound validators underflow naive exponentials.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/rng.hpp"
#include "tsr/schedule.hpp"

namespace tsr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct GaussianMixture {
  Mat means;    // N x d, one component mean per row
  Vec weights;  // N, positive, sums to 1
  double sigma = 1.0;

  int components() const { return static_cast<int>(means.rows()); }
  int dim() const { return static_cast<int>(means.cols()); }

  /// Validating constructor.
  static GaussianMixture create(Mat means, Vec weights, double sigma) {
    if (means.rows() < 1) throw param_error("mixture needs at least one component");
    if (weights.size() != means.rows())
      throw param_error("mixture weights/means size mismatch");
    if (!(sigma > 0.0)) throw param_error("mixture sigma must be positive");
    if (!means.allFinite()) throw param_error("mixture means must be finite");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0)) throw param_error("mixture weights must be positive");
      sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) throw param_error("mixture weights must sum to 1");
    return GaussianMixture{std::move(means), std::move(weights), sigma};
  }

  /// 1D mixture with uniform weights.
  static GaussianMixture uniform1d(const std::vector<double>& mean_values, double sigma) {
    const auto n = static_cast<Eigen::Index>(mean_values.size());
    Mat m(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) m(i, 0) = mean_values[static_cast<size_t>(i)];
    return create(std::move(m), Vec::Constant(n, 1.0 / static_cast<double>(n)), sigma);
  }

  /// Single isotropic Gaussian.
  static GaussianMixture single(const Vec& mean, double sigma) {
    Mat m(1, mean.size());
    m.row(0) = mean.transpose();
    return create(std::move(m), Vec::Constant(1, 1.0), sigma);
  }
};

/// Pairwise mean-distance extremes (Delta, Delta_max). A single-component
/// mixture has no pairs; both values are 0 there and the error bounds that
/// consume them collapse to 0 as well.
struct MixtureGeometry {
  double delta = 0.0;      // min_{i != j} |mu_i - mu_j|
  double delta_max = 0.0;  // max_{i != j} |mu_i - mu_j|
};

inline MixtureGeometry mixture_geometry(const GaussianMixture& mix) {
  const int n = mix.components();
  if (n < 2) return {};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (mix.means.row(i) - mix.means.row(j)).norm();
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  if (!(lo > 0.0)) throw param_error("mixture has coincident component means");
  return {lo, hi};
}

struct NoisyMixtureParams {
  Mat means;         // alpha_t * mu_m
  double var = 0.0;  // alpha_t^2 sigma^2 / k + sigma_t^2 (shared, isotropic)
};

/// Parameters of the noisy marginal of the (optionally k-sharpened) mixture.
inline NoisyMixtureParams mixture_noisy_params(const GaussianMixture& mix,
                                               const Schedule& s, double t, double k) {
  if (!(k > 0.0)) throw param_error("mixture_noisy_params: k must be positive");
  const auto [a, sg] = s.alpha_sigma(t);
  return {a * mix.means, a * a * mix.sigma * mix.sigma / k + sg * sg};
}

// ---------------------------------------------------------------------------
// Low-level isotropic-mixture kernels (shared by score, density, theory code)
// ---------------------------------------------------------------------------

/// log of sum_m weights_m N(x; means_m, var I), computed via log-sum-exp.
inline double isotropic_log_pdf(const Mat& means, const Vec& weights, double var,
                                const Vec& x) {
  const Eigen::Index n = means.rows();
  double max_lw = -std::numeric_limits<double>::infinity();
  Vec lw(n);
  for (Eigen::Index m = 0; m < n; ++m) {
    const double d2 = (x.transpose() - means.row(m)).squaredNorm();
    lw[m] = std::log(weights[m]) - d2 / (2.0 * var);
    max_lw = std::max(max_lw, lw[m]);
  }
  double acc = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) acc += std::exp(lw[m] - max_lw);
  const double d = static_cast<double>(means.cols());
  return max_lw + std::log(acc) - 0.5 * d * std::log(2.0 * std::numbers::pi * var);
}

/// Posterior component probabilities at x (softmax of log component mass).
inline Vec isotropic_responsibilities(const Mat& means, const Vec& weights, double var,
                                      const Vec& x) {
  const Eigen::Index n = means.rows();
  Vec lw(n);
  double max_lw = -std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < n; ++m) {
    const double d2 = (x.transpose() - means.row(m)).squaredNorm();
    lw[m] = std::log(weights[m]) - d2 / (2.0 * var);
    max_lw = std::max(max_lw, lw[m]);
  }
  Vec w(n);
  double acc = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    w[m] = std::exp(lw[m] - max_lw);
    acc += w[m];
  }
  w /= acc;
  return w;
}

/// Score of the isotropic mixture: -(1/var) sum_m w_m(x) (x - means_m).
inline Vec isotropic_score(const Mat& means, const Vec& weights, double var,
                           const Vec& x) {
  const Vec w = isotropic_responsibilities(means, weights, var, x);
  Vec acc = Vec::Zero(x.size());
  for (Eigen::Index m = 0; m < means.rows(); ++m)
    acc += w[m] * (x - means.row(m).transpose());
  return -acc / var;
}

// ---------------------------------------------------------------------------
// Schedule-aware wrappers
// ---------------------------------------------------------------------------

namespace detail {
inline void check_point(const GaussianMixture& mix, const Vec& x) {
  if (x.size() != mix.dim()) throw param_error("point dimension mismatch");
  if (!x.allFinite()) throw param_error("point must be finite");
}
}  // namespace detail

/// Responsibilities w_{t,m}^k(x) of the noisy (k-sharpened) mixture.
inline Vec responsibilities(const GaussianMixture& mix, const Vec& x, const Schedule& s,
                            double t, double k) {
  detail::check_point(mix, x);
  const auto p = mixture_noisy_params(mix, s, t, k);
  return isotropic_responsibilities(p.means, mix.weights, p.var, x);
}

/// Exact score of the noisy marginal: k = 1 is the pretrained-score oracle,
/// k != 1 the ground-truth locally scaled score.
inline Vec mixture_score(const GaussianMixture& mix, const Vec& x, const Schedule& s,
                         double t, double k) {
  detail::check_point(mix, x);
  const auto p = mixture_noisy_params(mix, s, t, k);
  return isotropic_score(p.means, mix.weights, p.var, x);
}

/// Exact log-density of the noisy marginal (used by gradient checks).
inline double mixture_log_pdf(const GaussianMixture& mix, const Vec& x, const Schedule& s,
                              double t, double k) {
  detail::check_point(mix, x);
  const auto p = mixture_noisy_params(mix, s, t, k);
  return isotropic_log_pdf(p.means, mix.weights, p.var, x);
}

/// n exact draws from the k-sharpened data mixture (means kept, std sigma/sqrt(k)).
/// Rows of the result are points. Deterministic under seed.
inline Mat sample_mixture(const GaussianMixture& mix, double k, int n, std::uint64_t seed) {
  if (!(k > 0.0)) throw param_error("sample_mixture: k must be positive");
  if (n < 1) throw param_error("sample_mixture: n must be at least 1");
  const int d = mix.dim();
  const int nc = mix.components();
  // cumulative weights for the categorical draw
  std::vector<double> cum(static_cast<size_t>(nc));
  double acc = 0.0;
  for (int m = 0; m < nc; ++m) {
    acc += mix.weights[m];
    cum[static_cast<size_t>(m)] = acc;
  }
  cum.back() = 1.0;
  const double scaled_sigma = mix.sigma / std::sqrt(k);
  Mat out(n, d);
  RngStream rng(seed);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int m = 0;
    while (m + 1 < nc && u > cum[static_cast<size_t>(m)]) ++m;
    for (int j = 0; j < d; ++j) out(i, j) = mix.means(m, j) + scaled_sigma * rng.normal();
  }
  return out;
}

}  // namespace tsr
