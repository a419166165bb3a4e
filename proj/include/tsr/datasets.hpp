#pragma once

// Finite 2D datasets and the exact score of their noisy empirical marginal.
//
// A dataset {x_i} pushed through x_t = alpha_t x_0 + sigma_t eps has marginal
// (1/n) sum_i N(alpha_t x_i, sigma_t^2 I); its score is what a small denoiser
// network trained on the dataset approximates, so we use it directly as the
// score provider for the 2D experiments.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "tsr/errors.hpp"
#include "tsr/mixture.hpp"
#include "tsr/rng.hpp"
#include "tsr/schedule.hpp"

namespace tsr {

struct EmpiricalField {
  Mat points;  // n x d, one data point per row

  int count() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

/// Points uniform over the 8 "black" cells of a 4x4 alternating grid on
/// [-2, 2]^2. Cell (i, j) covers [-2 + i, -1 + i] x [-2 + j, -1 + j] and is
/// occupied when i + j is even. No jitter: every point lies inside its cell.
inline EmpiricalField make_checkerboard(int n, std::uint64_t seed) {
  if (n < 1) throw param_error("make_checkerboard: n must be at least 1");
  // occupied cells in row-major order
  int cells[8][2];
  int c = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if ((i + j) % 2 == 0) {
        cells[c][0] = i;
        cells[c][1] = j;
        ++c;
      }
  Mat pts(n, 2);
  RngStream rng(seed);
  for (int p = 0; p < n; ++p) {
    const int idx = std::min(7, static_cast<int>(rng.uniform() * 8.0));
    pts(p, 0) = -2.0 + cells[idx][0] + rng.uniform();
    pts(p, 1) = -2.0 + cells[idx][1] + rng.uniform();
  }
  return {std::move(pts)};
}

/// 2D spiral (theta cos theta, theta sin theta)/(3 pi), theta uniform in
/// [1.5 pi, 4.5 pi], scaled by 4/3 so the outer arm reaches radius 2, plus
/// isotropic Gaussian jitter of std 0.03.
inline EmpiricalField make_swissroll(int n, std::uint64_t seed) {
  if (n < 1) throw param_error("make_swissroll: n must be at least 1");
  constexpr double jitter = 0.03;
  const double pi = std::numbers::pi;
  Mat pts(n, 2);
  RngStream rng(seed);
  for (int p = 0; p < n; ++p) {
    const double theta = 1.5 * pi + 3.0 * pi * rng.uniform();
    const double scale = (4.0 / 3.0) / (3.0 * pi);
    pts(p, 0) = scale * theta * std::cos(theta) + jitter * rng.normal();
    pts(p, 1) = scale * theta * std::sin(theta) + jitter * rng.normal();
  }
  return {std::move(pts)};
}

/// Exact score of the noisy empirical marginal at a single point,
/// log-sum-exp stabilized against the far-from-data regime.
inline Vec empirical_score(const EmpiricalField& field, const Vec& x, const Schedule& s,
                           double t) {
  if (x.size() != field.dim()) throw param_error("empirical_score: dimension mismatch");
  s.check_time(t);
  const auto [a, sg] = s.alpha_sigma(t);
  const double var = sg * sg;
  const Eigen::Index n = field.points.rows();

  Vec lw(n);
  double max_lw = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d2 = (x.transpose() - a * field.points.row(i)).squaredNorm();
    lw[i] = -d2 / (2.0 * var);
    max_lw = std::max(max_lw, lw[i]);
  }
  double norm = 0.0;
  Vec mean = Vec::Zero(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = std::exp(lw[i] - max_lw);
    norm += w;
    mean += w * field.points.row(i).transpose();
  }
  mean *= a / norm;
  return (mean - x) / var;
}

}  // namespace tsr
