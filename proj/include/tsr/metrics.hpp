#pragma once

// Quantitative summaries of sample batches: per-mode occupancy and spread
// (nearest-mean assignment), exact 1D Wasserstein-1 distance, and occupied-
// cell coverage on the checkerboard grid.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/mixture.hpp"
#include "tsr/sampler.hpp"

namespace tsr {

struct ModeStats {
  Vec fractions;             // per mode, count / batch
  Mat means;                 // per mode empirical mean (zero rows if empty)
  Vec stds;                  // per mode pooled isotropic std (0 if < 2 points)
  double unassigned = 0.0;   // fraction farther than the cutoff from every mean
};

/// Nearest-mean mode assignment over raw points. `k_eff` sets the expected
/// scaled spread: points farther than cutoff_multiplier * sigma / sqrt(k_eff)
/// from every mean are counted as unassigned. Ties go to the lower index.
inline ModeStats assign_modes(const RowMat& points, const GaussianMixture& mix,
                              double cutoff_multiplier = 5.0, double k_eff = 1.0) {
  if (points.rows() < 1) throw param_error("assign_modes: empty batch");
  if (points.cols() != mix.dim()) throw param_error("assign_modes: dimension mismatch");
  if (!(cutoff_multiplier > 0.0))
    throw param_error("assign_modes: cutoff multiplier must be positive");
  if (!(k_eff > 0.0)) throw param_error("assign_modes: k_eff must be positive");

  const int nm = mix.components();
  const Eigen::Index n = points.rows();
  const int d = mix.dim();
  const double cutoff = cutoff_multiplier * mix.sigma / std::sqrt(k_eff);

  std::vector<int> counts(static_cast<size_t>(nm), 0);
  Mat sums = Mat::Zero(nm, d);
  std::vector<int> labels(static_cast<size_t>(n), -1);
  int n_unassigned = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d2 = (points.row(i) - mix.means.row(0)).squaredNorm();
    for (int m = 1; m < nm; ++m) {
      const double d2 = (points.row(i) - mix.means.row(m)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = m;
      }
    }
    if (best_d2 > cutoff * cutoff) {
      ++n_unassigned;
      continue;
    }
    labels[static_cast<size_t>(i)] = best;
    ++counts[static_cast<size_t>(best)];
    sums.row(best) += points.row(i);
  }

  ModeStats stats;
  stats.fractions = Vec::Zero(nm);
  stats.means = Mat::Zero(nm, d);
  stats.stds = Vec::Zero(nm);
  stats.unassigned = static_cast<double>(n_unassigned) / static_cast<double>(n);
  for (int m = 0; m < nm; ++m) {
    stats.fractions[m] =
        static_cast<double>(counts[static_cast<size_t>(m)]) / static_cast<double>(n);
    if (counts[static_cast<size_t>(m)] > 0)
      stats.means.row(m) = sums.row(m) / counts[static_cast<size_t>(m)];
  }
  // pooled isotropic std: coordinate-wise variance about the mode mean
  Vec ss = Vec::Zero(nm);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int m = labels[static_cast<size_t>(i)];
    if (m >= 0) ss[m] += (points.row(i) - stats.means.row(m)).squaredNorm();
  }
  for (int m = 0; m < nm; ++m)
    if (counts[static_cast<size_t>(m)] > 1)
      stats.stds[m] = std::sqrt(
          ss[m] / (static_cast<double>(d) *
                   (static_cast<double>(counts[static_cast<size_t>(m)]) - 1.0)));
  return stats;
}

/// Batch overload: the cutoff scales with the policy's target k.
inline ModeStats assign_modes(const SampleBatch& batch, const GaussianMixture& mix,
                              double cutoff_multiplier = 5.0) {
  return assign_modes(batch.points, mix, cutoff_multiplier, batch.meta.policy.k_eff());
}

/// Exact empirical W1 between 1D samples: mean absolute difference of sorted
/// arrays. Unequal sizes: the larger is reduced to evenly spaced order
/// statistics of the smaller's size.
inline double wasserstein1(Vec a, Vec b) {
  if (a.size() < 1 || b.size() < 1) throw param_error("wasserstein1: empty input");
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  if (a.size() > b.size()) std::swap(a, b);  // a is the smaller
  const Eigen::Index n = a.size(), N = b.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<Eigen::Index>(
        (static_cast<double>(i) + 0.5) * static_cast<double>(N) /
        static_cast<double>(n));
    acc += std::abs(a[i] - b[std::min(idx, N - 1)]);
  }
  return acc / static_cast<double>(n);
}

/// 4x4 alternating grid on [lo, hi]^2; cell (i, j) is occupied iff i + j even.
struct CheckerGrid {
  double lo = -2.0;
  double hi = 2.0;

  static constexpr int side = 4;

  /// Occupied cells in row-major order.
  static std::array<std::pair<int, int>, 8> occupied_cells() {
    std::array<std::pair<int, int>, 8> cells{};
    int c = 0;
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j)
        if ((i + j) % 2 == 0) cells[static_cast<size_t>(c++)] = {i, j};
    return cells;
  }
};

struct CoverageReport {
  std::array<std::pair<int, int>, 8> cells;  // occupied cells, row-major
  Vec fractions;                             // mass per occupied cell
  double outside = 0.0;  // mass not inside any occupied cell (off-grid or
                         // unoccupied cell)
};

/// Fraction of points per occupied cell; everything else is `outside`.
inline CoverageReport grid_coverage(const RowMat& points,
                                    const CheckerGrid& grid = {}) {
  if (points.rows() < 1) throw param_error("grid_coverage: empty batch");
  if (points.cols() != 2) throw param_error("grid_coverage: points must be 2D");

  CoverageReport rep;
  rep.cells = CheckerGrid::occupied_cells();
  rep.fractions = Vec::Zero(8);
  const double cell = (grid.hi - grid.lo) / CheckerGrid::side;
  Eigen::Index n_outside = 0;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    const int i = static_cast<int>(std::floor((points(p, 0) - grid.lo) / cell));
    const int j = static_cast<int>(std::floor((points(p, 1) - grid.lo) / cell));
    if (i < 0 || i >= CheckerGrid::side || j < 0 || j >= CheckerGrid::side ||
        (i + j) % 2 != 0) {
      ++n_outside;
      continue;
    }
    // row-major rank of (i, j) among occupied cells: cells per full row pair
    const int idx = i * 2 + j / 2;
    rep.fractions[idx] += 1.0;
  }
  rep.fractions /= static_cast<double>(points.rows());
  rep.outside = static_cast<double>(n_outside) / static_cast<double>(points.rows());
  return rep;
}

}  // namespace tsr
