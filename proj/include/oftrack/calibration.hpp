/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <span>
#include <vector>

#include "oftrack/fusion.hpp"
#include "oftrack/geometry.hpp"

// Offline calibration: the IMU mount rotation by Kabsch registration of paired
// vectors, and the per-axis accelerometer gain K by regressing measured
// velocity on integrated acceleration.

namespace oftrack::calib {

struct PointPair {
  Vec3 source = Vec3::Zero();  // e.g. IMU frame
  Vec3 target = Vec3::Zero();  // e.g. body frame
};

/// Proper rotation R minimizing sum |R (p_i - p_mean) - (q_i - q_mean)|^2.
/// Throws DegenerateGeometry for fewer than 3 pairs or collinear points.
RotationMatrix kabsch(std::span<const PointPair> pairs);

/// RMS of |R (p_i - p_mean) - (q_i - q_mean)| over the pairs.
double registration_rms(std::span<const PointPair> pairs, const RotationMatrix& r);

struct StaticSegment {
  double start = 0.0;
  double end = 0.0;
  Vec3 mean_accel = Vec3::Zero();   // IMU frame
  UnitQuaternion body_to_global;    // from the pose stream at mid-segment
};

struct StaticDetection {
  double gyro_threshold = 0.05;  // rad/s, |gyro| below this counts as still
  double min_duration = 0.5;     // s
  double trim = 0.1;             // s dropped at each end of a segment
};

/// Still segments of an IMU trace, annotated with the body attitude.
std::vector<StaticSegment> find_static_segments(std::span<const ImuSample> imu,
                                                std::span<const PoseSample> poses,
                                                const StaticDetection& opts = {});

/// Pairs the mean specific force of each segment (IMU frame) with the gravity
/// reaction -g expressed in the body frame. Registering them gives R_imu_body.
std::vector<PointPair> gravity_pairs(std::span<const StaticSegment> segments,
                                     const Vec3& gravity);

struct GainCalibration {
  Vec3 gain = Vec3::Ones();
  Vec3 residual_rms = Vec3::Zero();  // m/s per axis
};

struct GainOptions {
  double stationary_window = 1.0;  // s at the start used to remove the offset
  double min_velocity_std = 0.05;  // m/s, per-axis excitation threshold
  double min_duration = 5.0;       // s
};

/// Per-axis slope of differentiated-position velocity against integrated
/// accelerometer velocity, both in the global frame. The trace must start at
/// rest and keep a fixed attitude. Throws InsufficientExcitation.
GainCalibration calibrate_gain(std::span<const PositionSample> positions,
                               std::span<const ImuSample> imu, const RotationMatrix& imu_to_global,
                               const GainOptions& opts = {});

}  // namespace oftrack::calib
