#pragma once

// Temporal score rescaling (TSR) and baseline prediction policies.
//
// TSR multiplies the pretrained prediction by
//
//   r_t(k, sigma) = (eta_t sigma^2 + 1) / (eta_t sigma^2 / k + 1),
//
// where eta_t is the schedule's signal-to-noise ratio. The factor is computed
// in the equivalent form k (eta sigma^2 + 1) / (eta sigma^2 + k), which stays
// finite as eta -> infinity (eta at t_clip can exceed 1e6). CNS leaves the
// prediction untouched and instead scales sampler noise by 1/sqrt(k); CFG
// blends conditional and unconditional scores before any sampler math.

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "tsr/errors.hpp"
#include "tsr/schedule.hpp"

namespace tsr {

using Vec = Eigen::VectorXd;

struct RescalePolicy {
  enum class Kind { none, tsr, cns, cfg };

  Kind kind = Kind::none;
  double k = 1.0;      // tsr, cns
  double sigma = 1.0;  // tsr
  double w = 1.0;      // cfg guidance scale

  static RescalePolicy none() { return {}; }

  static RescalePolicy tsr(double k, double sigma) {
    if (!(k > 0.0)) throw param_error("tsr policy: k must be positive");
    if (!(sigma > 0.0)) throw param_error("tsr policy: sigma must be positive");
    RescalePolicy p;
    p.kind = Kind::tsr;
    p.k = k;
    p.sigma = sigma;
    return p;
  }

  static RescalePolicy cns(double k) {
    if (!(k > 0.0)) throw param_error("cns policy: k must be positive");
    RescalePolicy p;
    p.kind = Kind::cns;
    p.k = k;
    return p;
  }

  static RescalePolicy cfg(double w) {
    if (!std::isfinite(w)) throw param_error("cfg policy: w must be finite");
    RescalePolicy p;
    p.kind = Kind::cfg;
    p.w = w;
    return p;
  }

  /// Sharpening factor the policy aims for (1 when the policy does not sharpen).
  double k_eff() const {
    return (kind == Kind::tsr || kind == Kind::cns) ? k : 1.0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::none: return "none";
      case Kind::tsr: return "tsr";
      case Kind::cns: return "cns";
      case Kind::cfg: return "cfg";
    }
    return "none";
  }
};

/// r(k, sigma, eta) in the eta-stable form. Bounds: min(1,k) <= r <= max(1,k),
/// with r -> 1 as eta -> 0 and r -> k as eta -> infinity.
inline double tsr_factor(double k, double sigma, double eta) {
  if (!(k > 0.0)) throw param_error("tsr_factor: k must be positive");
  if (!(sigma > 0.0)) throw param_error("tsr_factor: sigma must be positive");
  if (!(eta >= 0.0)) throw param_error("tsr_factor: eta must be nonnegative");
  const double es = eta * sigma * sigma;
  return k * (es + 1.0) / (es + k);
}

namespace detail {
inline double prediction_factor(const RescalePolicy& p, const Schedule& s, double t) {
  switch (p.kind) {
    case RescalePolicy::Kind::none:
      return 1.0;
    case RescalePolicy::Kind::tsr:
      return tsr_factor(p.k, p.sigma, s.snr(t));
    case RescalePolicy::Kind::cns:
      throw policy_error("cns does not rescale predictions; it scales sampler noise");
    case RescalePolicy::Kind::cfg:
      throw policy_error("cfg combines scores via cfg_combine, not a rescale factor");
  }
  throw policy_error("unknown policy kind");
}
}  // namespace detail

/// Score-space application: s~ = r_t * s. None and TSR only.
inline Vec rescale_score(const RescalePolicy& p, const Vec& score, const Schedule& s,
                         double t) {
  return detail::prediction_factor(p, s, t) * score;
}

/// Noise-prediction application: eps~ = r_t * eps (same factor as score space,
/// since s = -eps / sigma_t).
inline Vec rescale_epsilon(const RescalePolicy& p, const Vec& eps, const Schedule& s,
                           double t) {
  return detail::prediction_factor(p, s, t) * eps;
}

/// Velocity <-> score conversions at fixed (x, t). With
/// D = sigma_t (alpha_t sigmadot_t - alphadot_t sigma_t) > 0:
///
///   score    = (alphadot x - alpha v) / D
///   velocity = (alphadot x - D score) / alpha
///
/// (Flow: D = t, so score = -((1-t) v + x)/t.)
inline Vec velocity_to_score(const Vec& v, const Vec& x, const Schedule& s, double t) {
  s.check_time(t);
  const auto [a, sg] = s.alpha_sigma(t);
  const auto [ad, sgd] = s.alpha_sigma_dot(t);
  const double denom = sg * (a * sgd - ad * sg);
  if (!(std::abs(denom) > 0.0)) throw schedule_error("degenerate velocity conversion");
  return (ad * x - a * v) / denom;
}

inline Vec score_to_velocity(const Vec& score, const Vec& x, const Schedule& s,
                             double t) {
  s.check_time(t);
  const auto [a, sg] = s.alpha_sigma(t);
  const auto [ad, sgd] = s.alpha_sigma_dot(t);
  const double denom = sg * (a * sgd - ad * sg);
  if (!(std::abs(denom) > 0.0)) throw schedule_error("degenerate velocity conversion");
  return (ad * x - denom * score) / a;
}

/// Velocity-space application:
/// v~ = alpha^{-1} (r (alpha v - alphadot x) + alphadot x); the score implied
/// by v~ is exactly r times the score implied by v.
inline Vec rescale_velocity(const RescalePolicy& p, const Vec& v, const Vec& x,
                            const Schedule& s, double t) {
  s.check_time(t);
  const double r = detail::prediction_factor(p, s, t);
  if (r == 1.0) return v;  // k = 1 is the exact identity
  const auto [a, sg] = s.alpha_sigma(t);
  (void)sg;
  const double ad = s.alpha_sigma_dot(t).first;
  return ((r * (a * v.array() - ad * x.array())) + ad * x.array()).matrix() / a;
}

/// Noise multiplier for counteracted noise scaling: 1/sqrt(k).
inline double cns_noise_scale(double k) {
  if (!(k > 0.0)) throw param_error("cns_noise_scale: k must be positive");
  return 1.0 / std::sqrt(k);
}

/// Classifier-free guidance: s_u + w (s_c - s_u).
inline Vec cfg_combine(const Vec& score_cond, const Vec& score_uncond, double w) {
  if (score_cond.size() != score_uncond.size())
    throw param_error("cfg_combine: dimension mismatch");
  return score_uncond + w * (score_cond - score_uncond);
}

}  // namespace tsr
