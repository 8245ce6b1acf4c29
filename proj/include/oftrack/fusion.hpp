/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "oftrack/geometry.hpp"

// IMU-compensated position tracking.
//
// A precise but occludable position stream (optical motion capture) is
// buffered while it is valid. Over the last N samples a cubic motion model
// y(t) - y0 = v0 t + a0 t^2/2 + jerk t^3/6 is fitted per axis; the model's
// acceleration at an instant inside the window, expressed as the specific
// force the IMU should read, is compared against the accelerometer reading of
// that instant to estimate the accelerometer offset online. When the position stream drops
// out, the offset-corrected accelerometer drives a constant-acceleration
// dead-reckoning step from the last known position and velocity, and the
// gyroscope propagates the body orientation.
//
// Frames: global (fixed, y up), body (tracked rigid body) and IMU (sensor).
// Orientation in the state is body -> global; the mount rotation in the
// configuration is IMU -> body.

namespace oftrack {

struct PositionSample {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
  bool valid = true;  // false: occluded, pos ignored
};

struct ImuSample {
  double t = 0.0;
  Vec3 accel = Vec3::Zero();  // raw accelerometer, IMU frame, m/s^2
  Vec3 gyro = Vec3::Zero();   // angular rate, IMU frame, rad/s
};

/// Full pose of the body at an instant (optical-tracker output or ground truth).
struct PoseSample {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
  UnitQuaternion orientation;  // body -> global
};

/// Per-axis cubic model coefficients referenced to the oldest buffered sample.
struct MotionCoefficients {
  Vec3 v0 = Vec3::Zero();
  Vec3 a0 = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  double t0 = 0.0;
};

struct OffsetEstimate {
  Vec3 value = Vec3::Zero();  // IMU frame, m/s^2
  bool initialized = false;
  double last_update_t = 0.0;
};

enum class OrientationMode {
  Gyro,               // integrate the gyro on every tick
  HoldWhileTracking,  // keep initial_orientation while measured; gyro only inside gaps
};

struct FusionConfig {
  std::size_t window = 40;          // N, samples in the cubic fit
  std::size_t velocity_window = 10; // Nv, samples in the velocity fit
  double sample_period = 0.01;      // Ta, nominal position sampling period
  Vec3 gain = Vec3::Ones();         // K, per-axis accelerometer gain
  double alpha = 0.01;              // offset adjustment factor
  double max_expected_accel = 5.0;  // skip offset adjustment above this |a|
  double jitter_tolerance = 0.1;    // allowed relative deviation from Ta
  // Where inside the fit window the offset is measured, as a fraction of the
  // window span from the oldest sample. The cubic's acceleration is least
  // biased near 0.7; 1.0 measures at the newest sample.
  double offset_eval_fraction = 0.7;
  OrientationMode orientation_mode = OrientationMode::Gyro;
  RotationMatrix imu_to_body;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  UnitQuaternion initial_orientation;  // body -> global at the first sample

  /// Throws Error(InvalidArgument) naming the offending field.
  void validate() const;
};

enum class TrackingMode { Tracking, Estimating };
enum class PoseSource { Measured, ImuEstimated };

/// What the offset-maintenance block did on the latest step.
enum class OffsetAction { Carried, Computed, Adjusted, Skipped };

struct TimedPosition {
  Vec3 pos = Vec3::Zero();
  double t = 0.0;
};

/// A position sample together with the IMU reading and attitude of its tick.
struct BufferedTick {
  PositionSample sample;
  Vec3 accel = Vec3::Zero();
  UnitQuaternion orientation;
};

struct TrackerState {
  std::deque<BufferedTick> buffer;  // last N ticks, valid or not
  OffsetEstimate offset;
  std::optional<MotionCoefficients> coeffs;
  Vec3 last_velocity = Vec3::Zero();
  UnitQuaternion orientation;  // body -> global
  std::optional<TimedPosition> last_estimate;
  TrackingMode mode = TrackingMode::Tracking;
  std::size_t occlusion_run_length = 0;
  std::optional<double> last_t;
  OffsetAction last_offset_action = OffsetAction::Carried;
};

struct FusedPose {
  double t = 0.0;
  Vec3 pos = Vec3::Zero();
  UnitQuaternion orientation;
  PoseSource source = PoseSource::Measured;
};

TrackerState make_initial_state(const FusionConfig& cfg);

/// Rows i = 1..n of [i Ta, (i Ta)^2 / 2, (i Ta)^3 / 6]. Row i-1 pairs with the
/// displacement of sample i from the reference sample 0.
Eigen::Matrix<double, Eigen::Dynamic, 3> build_design_matrix(std::size_t n, double sample_period);

/// True when every sample is valid and consecutive spacing stays within the
/// jitter tolerance of the nominal period.
bool window_usable(std::span<const PositionSample> samples, const FusionConfig& cfg);

/// Least-squares cubic fit over the buffer; the first sample is the reference.
/// Throws OcclusionInWindow or SingularSystem.
MotionCoefficients fit_motion_polynomial(std::span<const PositionSample> buffer,
                                         const FusionConfig& cfg);

/// a0 + jerk (t - t0).
Vec3 expected_acceleration(const MotionCoefficients& coeffs, double t);

/// Slope-only least-squares fit over the given samples (first sample is the
/// reference). Throws OcclusionInWindow.
Vec3 estimate_velocity(std::span<const PositionSample> tail, const FusionConfig& cfg);

/// Time by which the slope-only fit over `samples` lags the newest sample
/// under constant acceleration: v_newest = slope + a * velocity_lag(...).
double velocity_lag(std::size_t samples, double sample_period);

/// Accelerometer reading (offset-free) implied by a global dynamic acceleration
/// at the given body attitude.
Vec3 expected_specific_force(const Vec3& accel_global, const UnitQuaternion& body_to_global,
                             const FusionConfig& cfg);

/// First-time offset: reading minus the expected specific force, IMU frame.
Vec3 compute_offset(const Vec3& accel_read, const Vec3& expected_accel_global,
                    const UnitQuaternion& body_to_global, const FusionConfig& cfg);

/// Index into an N-sample window at which the offset is measured.
std::size_t offset_eval_index(const FusionConfig& cfg);

/// offset + alpha (reading - expected - offset). `expected_imu` is the expected
/// specific force in the IMU frame. Throws NotInitialized.
OffsetEstimate adjust_offset(const OffsetEstimate& prev, const Vec3& accel_read,
                             const Vec3& expected_imu, const FusionConfig& cfg, double t);

/// K * (R_body_global R_imu_body (reading - offset) + g): the dynamic
/// acceleration in the global frame. Throws NotInitialized.
Vec3 correct_acceleration(const Vec3& accel_read, const TrackerState& state,
                          const FusionConfig& cfg);

/// Constant-acceleration step from the last estimate; advances last_velocity.
Vec3 integrate_position(TrackerState& state, const Vec3& accel_global, double t);

/// One tick of the tracking state machine. Throws NonMonotonicTime when time
/// does not advance and Misaligned when the IMU sample is more than Ta/2 away.
FusedPose tracking_step(TrackerState& state, const PositionSample& pos, const ImuSample& imu,
                        const FusionConfig& cfg);

class Tracker {
 public:
  explicit Tracker(FusionConfig cfg);

  FusedPose step(const PositionSample& pos, const ImuSample& imu) {
    return tracking_step(state_, pos, imu, cfg_);
  }

  const TrackerState& state() const { return state_; }
  const FusionConfig& config() const { return cfg_; }

 private:
  FusionConfig cfg_;
  TrackerState state_;
};

/// Index of the IMU sample nearest to each position sample. Throws Misaligned
/// if a position sample has no IMU sample within `tolerance`.
std::vector<std::size_t> pair_nearest(std::span<const PositionSample> positions,
                                      std::span<const ImuSample> imu, double tolerance);

/// Pairs the streams and runs a fresh tracker over them.
std::vector<FusedPose> run_tracker(std::span<const PositionSample> positions,
                                   std::span<const ImuSample> imu, const FusionConfig& cfg);

}  // namespace oftrack
