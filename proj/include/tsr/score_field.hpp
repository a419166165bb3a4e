#pragma once

// Score providers consumed by the samplers. A ScoreField evaluates the score
// of the noisy marginal at (x, t); `score_batch` is the hot path (one call per
// sampler step over the whole batch) and defaults to a row loop, which the
// empirical field overrides with a vectorized kernel.

#include <Eigen/Dense>

#include "tsr/datasets.hpp"
#include "tsr/errors.hpp"
#include "tsr/mixture.hpp"
#include "tsr/rescale.hpp"
#include "tsr/schedule.hpp"

namespace tsr {

// Batches are row-major so a row (one point) is contiguous.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual int dim() const = 0;

  /// Score at a single point.
  virtual Vec score(const Vec& x, double t) const = 0;

  /// Scores for every row of X, written into `out` (same shape, caller-
  /// allocated). Thread-safe: may be called concurrently on disjoint row
  /// blocks of the same batch.
  virtual void score_batch(Eigen::Ref<const RowMat> X, double t,
                           Eigen::Ref<RowMat> out) const {
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      out.row(i) = score(X.row(i).transpose(), t).transpose();
  }
};

/// Exact score of the (optionally k-sharpened) noisy Gaussian mixture.
class MixtureScoreField final : public ScoreField {
 public:
  MixtureScoreField(GaussianMixture mix, Schedule sched, double k = 1.0)
      : mix_(std::move(mix)), sched_(std::move(sched)), k_(k) {
    if (!(k > 0.0)) throw param_error("MixtureScoreField: k must be positive");
  }

  int dim() const override { return mix_.dim(); }

  Vec score(const Vec& x, double t) const override {
    return mixture_score(mix_, x, sched_, t, k_);
  }

  void score_batch(Eigen::Ref<const RowMat> X, double t,
                   Eigen::Ref<RowMat> out) const override {
    const auto p = mixture_noisy_params(mix_, sched_, t, k_);
    const Eigen::Index m = X.rows(), nc = p.means.rows();
    const double inv2v = 1.0 / (2.0 * p.var);
    Eigen::ArrayXd lw(nc), w(nc);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index c = 0; c < nc; ++c)
        lw[c] = std::log(mix_.weights[c]) -
                (X.row(i) - p.means.row(c)).squaredNorm() * inv2v;
      w = (lw - lw.maxCoeff()).exp();
      w /= w.sum();
      out.row(i) = (w.matrix().transpose() * p.means - X.row(i)) / p.var;
    }
  }

  const GaussianMixture& mixture() const { return mix_; }
  const Schedule& schedule() const { return sched_; }

 private:
  GaussianMixture mix_;
  Schedule sched_;
  double k_;
};

/// Exact score of the noisy empirical marginal of a finite dataset.
class EmpiricalScoreField final : public ScoreField {
 public:
  EmpiricalScoreField(EmpiricalField data, Schedule sched)
      : data_(std::move(data)), sched_(std::move(sched)) {
    if (data_.count() < 1) throw param_error("EmpiricalScoreField: empty dataset");
  }

  int dim() const override { return data_.dim(); }

  Vec score(const Vec& x, double t) const override {
    return empirical_score(data_, x, sched_, t);
  }

  // Softmax over all data points per batch row, vectorized over the dataset:
  // score(x) = (alpha ybar(x) - x)/sigma_t^2 with ybar the responsibility-
  // weighted data mean.
  void score_batch(Eigen::Ref<const RowMat> X, double t,
                   Eigen::Ref<RowMat> out) const override {
    sched_.check_time(t);
    const auto [a, sg] = sched_.alpha_sigma(t);
    const double inv2v = 1.0 / (2.0 * sg * sg);
    const Eigen::Index m = X.rows(), n = data_.points.rows(), d = X.cols();
    if (d != data_.points.cols())
      throw param_error("EmpiricalScoreField: dimension mismatch");

    // scaled data columns, computed once per step
    Mat sy = a * data_.points;
    Eigen::ArrayXd d2(n), w(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      d2 = (sy.col(0).array() - X(i, 0)).square();
      for (Eigen::Index j = 1; j < d; ++j) d2 += (sy.col(j).array() - X(i, j)).square();
      w = ((d2.minCoeff() - d2) * inv2v).exp();
      const double norm = w.sum();
      for (Eigen::Index j = 0; j < d; ++j)
        out(i, j) = (a * w.matrix().dot(data_.points.col(j)) / norm - X(i, j)) *
                    (2.0 * inv2v);
    }
  }

  const EmpiricalField& data() const { return data_; }

 private:
  EmpiricalField data_;
  Schedule sched_;
};

/// Classifier-free guidance combination of two fields:
/// s = s_uncond + w (s_cond - s_uncond). Holds non-owning references.
class CfgScoreField final : public ScoreField {
 public:
  CfgScoreField(const ScoreField& cond, const ScoreField& uncond, double w)
      : cond_(&cond), uncond_(&uncond), w_(w) {
    if (cond.dim() != uncond.dim())
      throw param_error("CfgScoreField: dimension mismatch");
    if (!std::isfinite(w)) throw param_error("CfgScoreField: w must be finite");
  }

  int dim() const override { return cond_->dim(); }

  Vec score(const Vec& x, double t) const override {
    return cfg_combine(cond_->score(x, t), uncond_->score(x, t), w_);
  }

  void score_batch(Eigen::Ref<const RowMat> X, double t,
                   Eigen::Ref<RowMat> out) const override {
    RowMat sc(X.rows(), X.cols()), su(X.rows(), X.cols());
    cond_->score_batch(X, t, sc);
    uncond_->score_batch(X, t, su);
    out = su + w_ * (sc - su);
  }

  double w() const { return w_; }

 private:
  const ScoreField* cond_;
  const ScoreField* uncond_;
  double w_;
};

}  // namespace tsr
