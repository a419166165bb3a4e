#include <cmath>
#include <doctest.h>

#include "tsr/mixture.hpp"

using namespace tsr;

namespace {

// Invert alpha(t) on the VP schedule by bisection (alpha is strictly decreasing).
double time_for_alpha(const Schedule& s, double target) {
  double lo = s.t_min(), hi = s.t_max();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (s.alpha_sigma(mid).first > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("noisy marginal parameters at alpha = 0.6") {
  const auto s = Schedule::vp();
  const double t = time_for_alpha(s, 0.6);
  const auto [a, sg] = s.alpha_sigma(t);
  REQUIRE(std::abs(a - 0.6) < 1e-12);

  const auto mix = GaussianMixture::single(Vec::Zero(1), 1.0);
  const auto p1 = mixture_noisy_params(mix, s, t, 1.0);
  CHECK(std::abs(p1.var - 1.0) < 1e-9);  // 0.36 + 0.64
  CHECK(std::abs(p1.means(0, 0)) < 1e-15);

  const auto p4 = mixture_noisy_params(mix, s, t, 4.0);
  CHECK(std::abs(p4.var - 0.73) < 1e-9);  // 0.36/4 + 0.64

  // As t -> 1 the alpha^2 sigma^2 / k term vanishes and k stops mattering.
  const double t_late = s.t_max();
  const double var_t = std::pow(s.alpha_sigma(t_late).second, 2);
  for (double k : {1.0, 4.0, 100.0})
    CHECK(std::abs(mixture_noisy_params(mix, s, t_late, k).var - var_t) < 5e-5);

  CHECK_THROWS_AS((void)mixture_noisy_params(mix, s, t, 0.0), param_error);
  CHECK_THROWS_AS((void)mixture_noisy_params(mix, s, t, -2.0), param_error);
}

TEST_CASE("single-component score is linear with slope -1/var") {
  const auto s = Schedule::vp();
  const double t = time_for_alpha(s, 0.6);
  const auto mix = GaussianMixture::single(Vec::Zero(1), 1.0);

  Vec x(1);
  x << 1.0;
  CHECK(std::abs(mixture_score(mix, x, s, t, 1.0)(0) - (-1.0)) < 1e-9);

  // slope check at a second abscissa, against the closed-form coefficient
  const auto mix2 = GaussianMixture::single(Vec::Constant(1, 0.7), 0.8);
  const auto p = mixture_noisy_params(mix2, s, 0.37, 3.0);
  for (double xv : {-1.5, 0.2, 2.0}) {
    Vec q(1);
    q << xv;
    const double expected = -(xv - p.means(0, 0)) / p.var;
    CHECK(std::abs(mixture_score(mix2, q, s, 0.37, 3.0)(0) - expected) < 1e-12);
  }
}

TEST_CASE("symmetric two-component mixture has zero score at the origin") {
  const auto s = Schedule::vp();
  Mat means(2, 2);
  means << -1.3, 0.4, 1.3, -0.4;
  const auto mix = GaussianMixture::create(means, Vec::Constant(2, 0.5), 0.6);
  const Vec sc = mixture_score(mix, Vec::Zero(2), s, 0.5, 2.0);
  CHECK(sc.norm() < 1e-14);
}

TEST_CASE("responsibilities: degenerate and symmetric cases") {
  const auto s = Schedule::vp();

  const auto solo = GaussianMixture::single(Vec::Constant(1, 1.0), 0.4);
  const Vec w1 = responsibilities(solo, Vec::Constant(1, -2.0), s, 0.3, 1.0);
  REQUIRE(w1.size() == 1);
  CHECK(w1[0] == 1.0);

  const auto pair = GaussianMixture::uniform1d({-2.0, 2.0}, 0.5);
  const Vec weq = responsibilities(pair, Vec::Zero(1), s, 0.4, 1.0);
  CHECK(std::abs(weq[0] - 0.5) < 1e-15);
  CHECK(std::abs(weq[1] - 0.5) < 1e-15);
}

TEST_CASE("responsibilities: well-separated components are decisive") {
  const auto s = Schedule::vp();
  const auto mix = GaussianMixture::uniform1d({-5.0, 5.0}, 0.1);
  const double t = s.t_min();  // noisy std ~ sigma, so separation/std ~ 100
  const auto p = mixture_noisy_params(mix, s, t, 1.0);
  REQUIRE((p.means.row(1) - p.means.row(0)).norm() / std::sqrt(p.var) > 10.0);

  const Vec at_mean0 = p.means.row(0).transpose();
  const Vec w = responsibilities(mix, at_mean0, s, t, 1.0);
  CHECK(w[0] > 0.999);
}

TEST_CASE("score equals finite-difference gradient of log-density") {
  RngStream rng(20260816);
  const auto vp = Schedule::vp();
  const auto flow = Schedule::flow();
  const double h = 1e-6;
  double max_err = 0.0;
  double max_norm_gap = 0.0;

  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 3.0);
    const int nc = 1 + static_cast<int>(rng.uniform() * 5.0);
    Mat means(nc, d);
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < d; ++j) means(i, j) = 2.0 * rng.normal();
    Vec w(nc);
    for (int i = 0; i < nc; ++i) w[i] = 0.2 + rng.uniform();
    w /= w.sum();
    // renormalize exactly enough for the validating constructor
    w[nc - 1] = 1.0 - w.head(nc - 1).sum();
    const double sigma = 0.3 + 1.2 * rng.uniform();
    const auto mix = GaussianMixture::create(means, w, sigma);

    const Schedule& s = (trial % 2 == 0) ? vp : flow;
    const double t = s.t_min() + (s.t_max() - s.t_min()) * rng.uniform();
    const double k = (trial % 3 == 0) ? 4.0 : 1.0;
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = 2.0 * rng.normal();

    const Vec sc = mixture_score(mix, x, s, t, k);
    for (int j = 0; j < d; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd =
          (mixture_log_pdf(mix, xp, s, t, k) - mixture_log_pdf(mix, xm, s, t, k)) /
          (2.0 * h);
      max_err = std::max(max_err, std::abs(sc[j] - fd));
    }

    const Vec resp = responsibilities(mix, x, s, t, k);
    max_norm_gap = std::max(max_norm_gap, std::abs(resp.sum() - 1.0));
    CHECK(resp.minCoeff() >= 0.0);
  }
  CHECK(max_err < 1e-5);
  CHECK(max_norm_gap < 1e-12);
}

TEST_CASE("k-scaled score at t_clip matches the score of the k-scaled mixture") {
  const auto s = Schedule::vp();
  const double k = 10.0;
  Mat means(2, 1);
  means << -2.0, 1.0;
  Vec w(2);
  w << 0.4, 0.6;
  const auto mix = GaussianMixture::create(means, w, 0.5);
  const auto scaled = GaussianMixture::create(means, w, 0.5 / std::sqrt(k));

  const double t = s.t_min();
  for (double xv : {-2.3, -1.0, 0.4, 1.2}) {
    Vec x(1);
    x << xv;
    const double a = mixture_score(mix, x, s, t, k)(0);
    const double b = mixture_score(scaled, x, s, t, 1.0)(0);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("sample_mixture: scaled std, weights, and determinism") {
  const auto single = GaussianMixture::single(Vec::Constant(1, 2.0), 0.5);
  const Mat draws = sample_mixture(single, 4.0, 50000, 11);
  const double mean = draws.col(0).mean();
  const double sd = std::sqrt((draws.col(0).array() - mean).square().sum() /
                              static_cast<double>(draws.rows() - 1));
  CHECK(std::abs(sd - 0.25) < 0.0025);  // sigma/sqrt(k) = 0.25, within 1%
  CHECK(std::abs(mean - 2.0) < 0.01);

  Mat means(2, 1);
  means << -10.0, 10.0;
  Vec w(2);
  w << 0.3, 0.7;
  const auto pair = GaussianMixture::create(means, w, 1.0);
  const Mat pd = sample_mixture(pair, 1.0, 100000, 12);
  const double frac_right =
      static_cast<double>((pd.col(0).array() > 0.0).count()) / 100000.0;
  CHECK(std::abs(frac_right - 0.7) < 0.01);

  // conditional means: classify by sign, compare against component means
  double sum_l = 0.0, sum_r = 0.0;
  int n_l = 0, n_r = 0;
  for (Eigen::Index i = 0; i < pd.rows(); ++i) {
    if (pd(i, 0) > 0.0) {
      sum_r += pd(i, 0);
      ++n_r;
    } else {
      sum_l += pd(i, 0);
      ++n_l;
    }
  }
  CHECK(std::abs(sum_l / n_l - (-10.0)) < 5.0 / std::sqrt(static_cast<double>(n_l)));
  CHECK(std::abs(sum_r / n_r - 10.0) < 5.0 / std::sqrt(static_cast<double>(n_r)));

  const Mat again = sample_mixture(pair, 1.0, 100, 99);
  const Mat same = sample_mixture(pair, 1.0, 100, 99);
  const Mat other = sample_mixture(pair, 1.0, 100, 100);
  CHECK((again - same).cwiseAbs().maxCoeff() == 0.0);
  CHECK((again - other).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS((void)sample_mixture(pair, 0.0, 10, 1), param_error);
  CHECK_THROWS_AS((void)sample_mixture(pair, 1.0, 0, 1), param_error);
}

TEST_CASE("mixture validation and geometry") {
  Mat means(2, 1);
  means << -1.0, 1.0;
  Vec good(2);
  good << 0.5, 0.5;

  Vec bad_sum(2);
  bad_sum << 0.5, 0.6;
  CHECK_THROWS_AS((void)GaussianMixture::create(means, bad_sum, 1.0), param_error);
  Vec bad_sign(2);
  bad_sign << 1.5, -0.5;
  CHECK_THROWS_AS((void)GaussianMixture::create(means, bad_sign, 1.0), param_error);
  CHECK_THROWS_AS((void)GaussianMixture::create(means, good, 0.0), param_error);
  CHECK_THROWS_AS((void)GaussianMixture::create(means, Vec::Constant(3, 1.0 / 3), 1.0),
                  param_error);

  const auto mix = GaussianMixture::create(means, good, 1.0);
  const auto s = Schedule::vp();
  CHECK_THROWS_AS((void)mixture_score(mix, Vec::Zero(2), s, 0.5, 1.0), param_error);

  const auto six = GaussianMixture::uniform1d({-5, -3, -1, 1, 3, 5}, 0.1);
  const auto geom = mixture_geometry(six);
  CHECK(geom.delta == 2.0);
  CHECK(geom.delta_max == 10.0);

  const auto solo = GaussianMixture::single(Vec::Zero(2), 1.0);
  CHECK(mixture_geometry(solo).delta == 0.0);
  CHECK(mixture_geometry(solo).delta_max == 0.0);

  Mat dup(2, 1);
  dup << 1.0, 1.0;
  const auto dup_mix = GaussianMixture::create(dup, good, 1.0);
  CHECK_THROWS_AS((void)mixture_geometry(dup_mix), param_error);
}
