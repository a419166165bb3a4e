#pragma once

// Forward-process coefficient schedules.
//
// A schedule defines the interpolation x_t = alpha_t * x_0 + sigma_t * eps
// with t = 0 at the data and t = 1 at pure noise. Two kinds are provided:
//
//   vp_linear_beta : variance preserving, alpha_t^2 + sigma_t^2 = 1, with
//                    linear beta(t) = beta_min + (beta_max - beta_min) t,
//                    alpha_t = exp(-B(t)/2), B(t) = integral of beta.
//   flow_linear    : alpha_t = 1 - t, sigma_t = t (rectified-flow style).
//
// All operations are defined on the clipped domain [t_clip, 1 - t_clip];
// several derived quantities (SNR, velocity conversions) are singular at the
// endpoints.

#include <cmath>
#include <string>
#include <utility>

#include "tsr/errors.hpp"

namespace tsr {

enum class ScheduleKind { vp_linear_beta, flow_linear };

class Schedule {
 public:
  /// Variance-preserving schedule with linear beta.
  static Schedule vp(double beta_min = 0.1, double beta_max = 20.0,
                     double t_clip = 1e-3) {
    if (!(beta_min > 0.0) || !(beta_max >= beta_min))
      throw param_error("vp schedule requires 0 < beta_min <= beta_max");
    return Schedule(ScheduleKind::vp_linear_beta, beta_min, beta_max, t_clip);
  }

  /// Linear interpolant alpha = 1 - t, sigma = t.
  static Schedule flow(double t_clip = 1e-3) {
    return Schedule(ScheduleKind::flow_linear, 0.0, 0.0, t_clip);
  }

  ScheduleKind kind() const { return kind_; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double t_clip() const { return t_clip_; }
  double t_min() const { return t_clip_; }
  double t_max() const { return 1.0 - t_clip_; }

  /// Throws domain_error unless t lies in [t_clip, 1 - t_clip].
  void check_time(double t) const {
    if (!(t >= t_min() && t <= t_max()))
      throw domain_error("time " + std::to_string(t) + " outside schedule domain [" +
                         std::to_string(t_min()) + ", " + std::to_string(t_max()) + "]");
  }

  /// (alpha_t, sigma_t).
  std::pair<double, double> alpha_sigma(double t) const {
    check_time(t);
    if (kind_ == ScheduleKind::flow_linear) return {1.0 - t, t};
    const double b = integrated_beta(t);
    // sqrt(1 - exp(-B)) via expm1 keeps precision for small B.
    return {std::exp(-0.5 * b), std::sqrt(-std::expm1(-b))};
  }

  /// Signal-to-noise ratio eta_t = alpha_t^2 / sigma_t^2.
  double snr(double t) const {
    const auto [a, s] = alpha_sigma(t);
    return (a * a) / (s * s);
  }

  /// Time derivatives (alpha_dot_t, sigma_dot_t).
  std::pair<double, double> alpha_sigma_dot(double t) const {
    check_time(t);
    if (kind_ == ScheduleKind::flow_linear) return {-1.0, 1.0};
    const auto [a, s] = alpha_sigma(t);
    const double b = beta(t);
    // alpha = exp(-B/2)          =>  alpha_dot = -beta/2 * alpha
    // sigma = sqrt(1 - alpha^2)  =>  sigma_dot = beta * alpha^2 / (2 sigma)
    return {-0.5 * b * a, 0.5 * b * a * a / s};
  }

  /// Reverse-SDE coefficients (f_t, g_t) with f = -beta/2, g = sqrt(beta).
  /// Defined for the VP schedule only.
  std::pair<double, double> drift_diffusion(double t) const {
    if (kind_ != ScheduleKind::vp_linear_beta)
      throw schedule_error("drift_diffusion is defined for the vp schedule only");
    if (!(t >= 0.0 && t <= 1.0))
      throw domain_error("time " + std::to_string(t) + " outside [0, 1]");
    const double b = beta(t);
    return {-0.5 * b, std::sqrt(b)};
  }

  /// beta(t) for the VP schedule.
  double beta(double t) const {
    if (kind_ != ScheduleKind::vp_linear_beta)
      throw schedule_error("beta(t) is defined for the vp schedule only");
    return beta_min_ + (beta_max_ - beta_min_) * t;
  }

 private:
  Schedule(ScheduleKind kind, double beta_min, double beta_max, double t_clip)
      : kind_(kind), beta_min_(beta_min), beta_max_(beta_max), t_clip_(t_clip) {
    if (!(t_clip > 0.0 && t_clip < 0.5))
      throw param_error("t_clip must lie in (0, 0.5)");
  }

  double integrated_beta(double t) const {
    return beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
  }

  ScheduleKind kind_;
  double beta_min_;
  double beta_max_;
  double t_clip_;
};

}  // namespace tsr
