/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace oftrack {

namespace {

// Condition number of the (column-scaled) normal matrix above which the fit
// is reported as singular.
constexpr double kMaxCondition = 1e12;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// Offset-free variant of correct_acceleration used when the tracker has to
// estimate before any offset exists.
Vec3 to_global_dynamic(const Vec3& specific_force_imu, const TrackerState& state,
                       const FusionConfig& cfg) {
  const RotationMatrix body_to_global = quat_to_matrix(state.orientation);
  const Vec3 f_global = body_to_global * (cfg.imu_to_body * specific_force_imu);
  return cfg.gain.cwiseProduct(f_global + cfg.gravity);
}

}  // namespace

void FusionConfig::validate() const {
  require(window >= 5, "fusion.n must be >= 5");
  require(velocity_window >= 2 && velocity_window <= window,
          "fusion.nv must satisfy 2 <= nv <= n");
  require(sample_period > 0.0 && std::isfinite(sample_period), "fusion.ta must be > 0");
  require(alpha > 0.0 && alpha <= 1.0, "fusion.alpha must be in (0, 1]");
  require(max_expected_accel > 0.0, "fusion.a_max must be > 0");
  require(gain.allFinite() && (gain.array() > 0.0).all(), "fusion.gain components must be > 0");
  require(jitter_tolerance >= 0.0 && jitter_tolerance < 1.0,
          "fusion.jitter_tolerance must be in [0, 1)");
  require(gravity.allFinite(), "fusion.gravity must be finite");
  require(offset_eval_fraction >= 0.0 && offset_eval_fraction <= 1.0,
          "fusion.offset_eval_fraction must be in [0, 1]");
}

TrackerState make_initial_state(const FusionConfig& cfg) {
  TrackerState s;
  s.orientation = cfg.initial_orientation;
  return s;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> build_design_matrix(std::size_t n, double sample_period) {
  if (n < 4) {
    throw Error(ErrorCode::InvalidArgument,
                "design matrix needs at least 4 rows for 3 unknowns, got " + std::to_string(n));
  }
  require(sample_period > 0.0, "sample period must be > 0");
  Eigen::Matrix<double, Eigen::Dynamic, 3> x(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) * sample_period;
    x.row(static_cast<Eigen::Index>(i - 1)) << t, t * t / 2.0, t * t * t / 6.0;
  }
  return x;
}

bool window_usable(std::span<const PositionSample> samples, const FusionConfig& cfg) {
  const double tol = cfg.jitter_tolerance * cfg.sample_period;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].valid) return false;
    if (i > 0 && std::abs(samples[i].t - samples[i - 1].t - cfg.sample_period) > tol) {
      return false;
    }
  }
  return true;
}

MotionCoefficients fit_motion_polynomial(std::span<const PositionSample> buffer,
                                         const FusionConfig& cfg) {
  if (buffer.size() < 5) {
    throw Error(ErrorCode::InvalidArgument, "cubic fit needs at least 5 samples");
  }
  if (!window_usable(buffer, cfg)) {
    throw Error(ErrorCode::OcclusionInWindow, "fit window contains occluded or irregular samples");
  }

  const std::size_t n = buffer.size() - 1;
  const Eigen::Matrix<double, Eigen::Dynamic, 3> x = build_design_matrix(n, cfg.sample_period);

  Eigen::Matrix<double, Eigen::Dynamic, 3> y(static_cast<Eigen::Index>(n), 3);
  const Vec3& ref = buffer.front().pos;
  for (std::size_t i = 1; i <= n; ++i) {
    y.row(static_cast<Eigen::Index>(i - 1)) = (buffer[i].pos - ref).transpose();
  }

  // Normal equations on columns scaled to the window span, so the condition
  // number reflects the geometry of the fit rather than the units of time.
  const double span = static_cast<double>(n) * cfg.sample_period;
  const Eigen::Vector3d scale(span, span * span / 2.0, span * span * span / 6.0);
  const Eigen::Matrix<double, Eigen::Dynamic, 3> xs = x * scale.cwiseInverse().asDiagonal();
  const Eigen::Matrix3d normal = xs.transpose() * xs;

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    throw Error(ErrorCode::SingularSystem, "cubic fit normal matrix is singular");
  }

  const Eigen::Matrix3d theta_scaled = normal.ldlt().solve(xs.transpose() * y);
  const Eigen::Matrix3d theta = scale.cwiseInverse().asDiagonal() * theta_scaled;

  MotionCoefficients c;
  c.v0 = theta.row(0).transpose();
  c.a0 = theta.row(1).transpose();
  c.jerk = theta.row(2).transpose();
  c.t0 = buffer.front().t;
  return c;
}

Vec3 expected_acceleration(const MotionCoefficients& coeffs, double t) {
  require(t >= coeffs.t0, "expected_acceleration requires t >= t0");
  return coeffs.a0 + coeffs.jerk * (t - coeffs.t0);
}

Vec3 estimate_velocity(std::span<const PositionSample> tail, const FusionConfig& cfg) {
  require(tail.size() >= 2, "velocity fit needs at least 2 samples");
  if (!window_usable(tail, cfg)) {
    throw Error(ErrorCode::OcclusionInWindow,
                "velocity window contains occluded or irregular samples");
  }
  double sxx = 0.0;
  Vec3 sxy = Vec3::Zero();
  for (std::size_t i = 1; i < tail.size(); ++i) {
    const double t = static_cast<double>(i) * cfg.sample_period;
    sxx += t * t;
    sxy += t * (tail[i].pos - tail.front().pos);
  }
  return sxy / sxx;
}

double velocity_lag(std::size_t samples, double sample_period) {
  require(samples >= 2, "velocity_lag needs at least 2 samples");
  // slope = v_ref + a/2 * S3/S2 for y = v_ref t + a t^2/2, and
  // v_newest = v_ref + a * t_m, so v_newest = slope + a (t_m - S3 / (2 S2)).
  double s2 = 0.0;
  double s3 = 0.0;
  for (std::size_t i = 1; i < samples; ++i) {
    const double t = static_cast<double>(i) * sample_period;
    s2 += t * t;
    s3 += t * t * t;
  }
  const double t_m = static_cast<double>(samples - 1) * sample_period;
  return t_m - s3 / (2.0 * s2);
}

Vec3 expected_specific_force(const Vec3& accel_global, const UnitQuaternion& body_to_global,
                             const FusionConfig& cfg) {
  const RotationMatrix imu_to_global = quat_to_matrix(body_to_global) * cfg.imu_to_body;
  return imu_to_global.inverse() * (accel_global - cfg.gravity);
}

Vec3 compute_offset(const Vec3& accel_read, const Vec3& expected_accel_global,
                    const UnitQuaternion& body_to_global, const FusionConfig& cfg) {
  return accel_read - expected_specific_force(expected_accel_global, body_to_global, cfg);
}

std::size_t offset_eval_index(const FusionConfig& cfg) {
  const double span = static_cast<double>(cfg.window - 1);
  return static_cast<std::size_t>(std::lround(cfg.offset_eval_fraction * span));
}

OffsetEstimate adjust_offset(const OffsetEstimate& prev, const Vec3& accel_read,
                             const Vec3& expected_imu, const FusionConfig& cfg, double t) {
  if (!prev.initialized) {
    throw Error(ErrorCode::NotInitialized, "adjust_offset called before the offset was computed");
  }
  OffsetEstimate next = prev;
  next.value = prev.value + cfg.alpha * (accel_read - expected_imu - prev.value);
  next.last_update_t = t;
  return next;
}

Vec3 correct_acceleration(const Vec3& accel_read, const TrackerState& state,
                          const FusionConfig& cfg) {
  if (!state.offset.initialized) {
    throw Error(ErrorCode::NotInitialized, "accelerometer offset not yet computed");
  }
  return to_global_dynamic(accel_read - state.offset.value, state, cfg);
}

Vec3 integrate_position(TrackerState& state, const Vec3& accel_global, double t) {
  const TimedPosition prev = state.last_estimate.value_or(TimedPosition{Vec3::Zero(), t});
  const double dt = t - prev.t;
  const Vec3 pos = prev.pos + state.last_velocity * dt + accel_global * (dt * dt / 2.0);
  state.last_velocity += accel_global * dt;
  state.last_estimate = TimedPosition{pos, t};
  return pos;
}

FusedPose tracking_step(TrackerState& state, const PositionSample& pos, const ImuSample& imu,
                        const FusionConfig& cfg) {
  if (state.last_t && !(pos.t > *state.last_t)) {
    throw Error(ErrorCode::NonMonotonicTime,
                "position timestamp " + std::to_string(pos.t) + " does not advance past " +
                    std::to_string(*state.last_t));
  }
  if (std::abs(imu.t - pos.t) > cfg.sample_period / 2.0) {
    throw Error(ErrorCode::Misaligned, "IMU sample at " + std::to_string(imu.t) +
                                           " is not aligned with position sample at " +
                                           std::to_string(pos.t));
  }
  require(imu.accel.allFinite() && imu.gyro.allFinite(), "non-finite IMU sample");
  require(!pos.valid || pos.pos.allFinite(), "non-finite position sample");

  // The position stream carries no attitude: it is either propagated from the
  // gyro on every tick or held at the known initial attitude while measured.
  const bool hold = cfg.orientation_mode == OrientationMode::HoldWhileTracking;
  if (state.last_t && (!hold || !pos.valid)) {
    state.orientation =
        quat_integrate(state.orientation, Vec3(cfg.imu_to_body * imu.gyro), pos.t - *state.last_t);
  }
  if (hold && pos.valid) state.orientation = cfg.initial_orientation;
  state.last_t = pos.t;

  state.buffer.push_back(BufferedTick{pos, imu.accel, state.orientation});
  while (state.buffer.size() > cfg.window) state.buffer.pop_front();
  std::vector<PositionSample> window;
  window.reserve(state.buffer.size());
  for (const BufferedTick& b : state.buffer) window.push_back(b.sample);
  const std::span<const PositionSample> samples(window);

  // Offset maintenance, measured at an instant inside the fit window.
  state.coeffs.reset();
  state.last_offset_action = OffsetAction::Carried;
  if (samples.size() == cfg.window && window_usable(samples, cfg)) {
    try {
      state.coeffs = fit_motion_polynomial(samples, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularSystem) throw;
    }
    if (state.coeffs) {
      const BufferedTick& at = state.buffer[offset_eval_index(cfg)];
      const Vec3 a_expected = expected_acceleration(*state.coeffs, at.sample.t);
      if (!state.offset.initialized) {
        state.offset.value = compute_offset(at.accel, a_expected, at.orientation, cfg);
        state.offset.initialized = true;
        state.offset.last_update_t = pos.t;
        state.last_offset_action = OffsetAction::Computed;
      } else if (a_expected.norm() > cfg.max_expected_accel) {
        state.last_offset_action = OffsetAction::Skipped;
      } else {
        state.offset =
            adjust_offset(state.offset, at.accel,
                          expected_specific_force(a_expected, at.orientation, cfg), cfg, pos.t);
        state.last_offset_action = OffsetAction::Adjusted;
      }
    }
  }

  // Velocity maintenance. The slope fit describes an instant inside the
  // window; advance it to the newest sample with the corrected acceleration.
  if (samples.size() >= cfg.velocity_window) {
    const auto tail = samples.last(cfg.velocity_window);
    if (window_usable(tail, cfg)) {
      Vec3 v = estimate_velocity(tail, cfg);
      if (state.offset.initialized) {
        v += correct_acceleration(imu.accel, state, cfg) *
             velocity_lag(cfg.velocity_window, cfg.sample_period);
      }
      state.last_velocity = v;
    }
  }

  // Estimation.
  if (!pos.valid) {
    state.mode = TrackingMode::Estimating;
    ++state.occlusion_run_length;
    const Vec3 accel = state.offset.initialized ? correct_acceleration(imu.accel, state, cfg)
                                                : to_global_dynamic(imu.accel, state, cfg);
    const Vec3 p = integrate_position(state, accel, pos.t);
    return FusedPose{pos.t, p, state.orientation, PoseSource::ImuEstimated};
  }

  state.mode = TrackingMode::Tracking;
  state.occlusion_run_length = 0;
  state.last_estimate = TimedPosition{pos.pos, pos.t};
  return FusedPose{pos.t, pos.pos, state.orientation, PoseSource::Measured};
}

Tracker::Tracker(FusionConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  state_ = make_initial_state(cfg_);
}

std::vector<std::size_t> pair_nearest(std::span<const PositionSample> positions,
                                      std::span<const ImuSample> imu, double tolerance) {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (const PositionSample& p : positions) {
    const auto it = std::lower_bound(imu.begin(), imu.end(), p.t,
                                     [](const ImuSample& s, double t) { return s.t < t; });
    std::size_t best = imu.size();
    double best_d = std::numeric_limits<double>::infinity();
    if (it != imu.end()) {
      best = static_cast<std::size_t>(it - imu.begin());
      best_d = std::abs(it->t - p.t);
    }
    if (it != imu.begin() && std::abs(std::prev(it)->t - p.t) < best_d) {
      best = static_cast<std::size_t>(std::prev(it) - imu.begin());
      best_d = std::abs(std::prev(it)->t - p.t);
    }
    if (best_d > tolerance) best = imu.size();
    if (best == imu.size()) {
      throw Error(ErrorCode::Misaligned,
                  "no IMU sample within " + std::to_string(tolerance) + " s of t=" +
                      std::to_string(p.t));
    }
    out.push_back(best);
  }
  return out;
}

std::vector<FusedPose> run_tracker(std::span<const PositionSample> positions,
                                   std::span<const ImuSample> imu, const FusionConfig& cfg) {
  Tracker tracker(cfg);
  const std::vector<std::size_t> pairs = pair_nearest(positions, imu, cfg.sample_period / 2.0);
  std::vector<FusedPose> out;
  out.reserve(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out.push_back(tracker.step(positions[i], imu[pairs[i]]));
  }
  return out;
}

}  // namespace oftrack
