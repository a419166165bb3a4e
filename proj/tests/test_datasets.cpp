#include <cmath>
#include <doctest.h>

#include "tsr/datasets.hpp"
#include "tsr/score_field.hpp"

using namespace tsr;

TEST_CASE("checkerboard points fill exactly the occupied cells, uniformly") {
  const int n = 80000;
  const auto field = make_checkerboard(n, 7);
  REQUIRE(field.count() == n);
  REQUIRE(field.dim() == 2);

  int counts[4][4] = {};
  for (int p = 0; p < n; ++p) {
    const double x = field.points(p, 0), y = field.points(p, 1);
    const int i = static_cast<int>(std::floor(x + 2.0));
    const int j = static_cast<int>(std::floor(y + 2.0));
    REQUIRE(i >= 0);
    REQUIRE(i < 4);
    REQUIRE(j >= 0);
    REQUIRE(j < 4);
    REQUIRE((i + j) % 2 == 0);
    ++counts[i][j];
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double frac = static_cast<double>(counts[i][j]) / n;
      if ((i + j) % 2 == 0)
        CHECK(std::abs(frac - 0.125) < 0.03 * 0.125);
      else
        CHECK(frac == 0.0);
    }

  const auto again = make_checkerboard(100, 7);
  CHECK((again.points - make_checkerboard(100, 7).points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("swiss roll stays inside [-2.2, 2.2]^2 and off the origin") {
  const auto field = make_swissroll(60000, 3);
  REQUIRE(field.count() == 60000);
  for (int p = 0; p < field.count(); ++p) {
    CHECK(std::abs(field.points(p, 0)) <= 2.2);
    CHECK(std::abs(field.points(p, 1)) <= 2.2);
    const double r = field.points.row(p).norm();
    CHECK(r > 0.5);  // inner arm radius is 2/3, jitter std only 0.03
    CHECK(r <= 2.2);
  }

  CHECK_THROWS_AS((void)make_swissroll(0, 1), param_error);
  CHECK_THROWS_AS((void)make_checkerboard(-3, 1), param_error);
}

namespace {
tsr::Vec scalar_point(double v) {
  tsr::Vec q(1);
  q << v;
  return q;
}
}  // namespace

TEST_CASE("empirical score closed forms") {
  const auto s = Schedule::vp();
  const double t = 0.4;
  const auto [a, sg] = s.alpha_sigma(t);

  // single data point: plain Gaussian score
  Mat one(1, 2);
  one << 0.7, -0.3;
  const EmpiricalField f1{one};
  Vec x(2);
  x << 1.0, 0.5;
  const Vec sc = empirical_score(f1, x, s, t);
  const Vec expect = -(x - a * one.row(0).transpose()) / (sg * sg);
  CHECK((sc - expect).norm() < 1e-14);

  // dataset symmetric about the origin: zero score there
  Mat sym(4, 2);
  sym << 1.0, 0.5, -1.0, -0.5, 0.3, -0.8, -0.3, 0.8;
  CHECK(empirical_score(EmpiricalField{sym}, Vec::Zero(2), s, t).norm() < 1e-14);

  // two-point dataset == zero-width two-component mixture (var = sigma_t^2)
  Mat two(2, 1);
  two << -1.0, 1.0;
  const EmpiricalField f2{two};
  for (double xv : {-1.7, -0.2, 0.9}) {
    Vec q(1);
    q << xv;
    const Vec got = empirical_score(f2, q, s, t);
    const Vec ref = isotropic_score(a * two, Vec::Constant(2, 0.5), sg * sg, q);
    CHECK((got - ref).norm() < 1e-10);
  }

  // far from the data: stabilized, finite, pointing back at the data
  Vec far(1);
  far << 1.0e3;
  const Vec sf = empirical_score(f2, far, s, t);
  REQUIRE(std::isfinite(sf[0]));
  CHECK(sf[0] < 0.0);

  CHECK_THROWS_AS((void)empirical_score(f2, x, s, t), param_error);
  CHECK_THROWS_AS((void)empirical_score(f2, scalar_point(0.0), s, 0.0), domain_error);
}

TEST_CASE("score fields: batch path agrees with single-point path") {
  const auto s = Schedule::vp();
  RngStream rng(5150);

  // mixture field
  const auto mix = GaussianMixture::uniform1d({-5, -3, -1, 1, 3, 5}, 0.1);
  const MixtureScoreField mf(mix, s, 4.0);
  REQUIRE(mf.dim() == 1);

  // empirical field
  const EmpiricalScoreField ef(make_checkerboard(500, 21), s);
  REQUIRE(ef.dim() == 2);

  for (double t : {s.t_min(), 0.1, 0.5, 0.9}) {
    RowMat X1(40, 1);
    for (int i = 0; i < 40; ++i) X1(i, 0) = 6.0 * rng.normal();
    RowMat out1(40, 1);
    mf.score_batch(X1, t, out1);
    for (int i = 0; i < 40; ++i) {
      const Vec single = mf.score(X1.row(i).transpose(), t);
      CHECK(std::abs(out1(i, 0) - single[0]) <
            1e-10 * std::max(1.0, std::abs(single[0])));
    }

    RowMat X2(40, 2);
    for (int i = 0; i < 40; ++i)
      for (int j = 0; j < 2; ++j) X2(i, j) = 2.5 * rng.normal();
    RowMat out2(40, 2);
    ef.score_batch(X2, t, out2);
    for (int i = 0; i < 40; ++i) {
      const Vec single = ef.score(X2.row(i).transpose(), t);
      const double scale = std::max(1.0, single.norm());
      CHECK((out2.row(i).transpose() - single).norm() < 1e-10 * scale);
    }
  }
}

TEST_CASE("cfg field blends conditional and unconditional scores") {
  const auto s = Schedule::vp();
  const auto cond = GaussianMixture::single(Vec::Constant(1, 2.0), 0.5);
  const auto uncond = GaussianMixture::uniform1d({-2.0, 2.0}, 0.5);
  const MixtureScoreField fc(cond, s), fu(uncond, s);

  const CfgScoreField keep_cond(fc, fu, 1.0);
  const CfgScoreField keep_uncond(fc, fu, 0.0);
  const CfgScoreField push(fc, fu, 10.0);

  Vec x(1);
  x << 0.7;
  const double t = 0.3;
  const double sc = fc.score(x, t)[0], su = fu.score(x, t)[0];
  CHECK(keep_cond.score(x, t)[0] == sc);
  CHECK(keep_uncond.score(x, t)[0] == su);
  CHECK(std::abs(push.score(x, t)[0] - (su + 10.0 * (sc - su))) < 1e-14);

  RowMat X(8, 1), out(8, 1);
  for (int i = 0; i < 8; ++i) X(i, 0) = -2.0 + 0.5 * i;
  push.score_batch(X, t, out);
  for (int i = 0; i < 8; ++i) {
    const Vec single = push.score(X.row(i).transpose(), t);
    CHECK(std::abs(out(i, 0) - single[0]) < 1e-12 * std::max(1.0, std::abs(single[0])));
  }

  // the plain cfg_combine example: s_u = 1, s_c = 2, w = 10 -> 11
  Vec a(1), b(1);
  a << 2.0;
  b << 1.0;
  CHECK(cfg_combine(a, b, 10.0)[0] == 11.0);
}
