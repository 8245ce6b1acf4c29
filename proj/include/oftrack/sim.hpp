/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "oftrack/fusion.hpp"
#include "oftrack/geometry.hpp"

// Ground-truth motion and synthetic sensors.
//
// Trajectories are closed-form, so position, velocity, acceleration, attitude
// and body rate are exact at any instant. The accelerometer is synthesized as
// specific force in the IMU frame,
//   f = gain * R_imu_body^T R_body_global(t)^T (a(t) - g) + bias(t) + noise,
// and the gyro as the body rate in the IMU frame plus noise.

namespace oftrack::sim {

enum class TrajectoryKind {
  ArmLift,        // y-axis sinusoid, no rotation
  Circular,       // circle in the x-y plane, body yawing with the tangent
  ConstantAccel,  // p0 + v t + a t^2 / 2, no rotation
  Lissajous,      // independent per-axis sinusoids after an optional hold
  Poses,          // static attitudes joined by smooth single-axis turns
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::ArmLift;
  double amplitude = 0.35;  // arm-lift half stroke, or circle radius, m
  double period = 2.0;      // s
  double duration = 10.0;   // s
  Vec3 center = Vec3(0.0, 1.2, 0.5);

  // ConstantAccel
  Vec3 velocity = Vec3::Zero();
  Vec3 accel = Vec3(0.0, -2.0, 0.0);

  // Lissajous: center + amplitudes * sin(2 pi (t - hold) / periods + phases).
  // While t < hold the body rests at the t = hold position; a hold needs
  // phases whose sine has zero slope (+-pi/2) to keep velocity continuous.
  Vec3 amplitudes = Vec3(0.2, 0.2, 0.2);
  Vec3 periods = Vec3(2.0, 2.5, 3.0);
  Vec3 phases = Vec3::Zero();
  double hold = 0.0;

  // Poses
  std::vector<UnitQuaternion> poses;
  double pose_hold = 1.5;        // s at rest in each attitude
  double pose_transition = 1.0;  // s turning between attitudes

  void validate() const;
};

struct TruthState {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
  UnitQuaternion orientation;        // body -> global
  Vec3 body_rate = Vec3::Zero();     // angular rate in the body frame, rad/s
};

TruthState evaluate(const Trajectory& traj, double t);

/// center + (0, amplitude sin(w t), 0); identity attitude.
TruthState arm_lift_truth(double t, double amplitude, double period,
                          const Vec3& center = Vec3::Zero());

/// center + radius (cos w t, sin w t, 0); body yaws at w so its y axis stays
/// on the tangent.
TruthState circular_truth(double t, double radius, double period,
                          const Vec3& center = Vec3::Zero());

/// Six attitudes that point each body axis along +-global y in turn.
std::vector<UnitQuaternion> default_calibration_poses();

struct ImuModel {
  Vec3 bias = Vec3::Zero();          // m/s^2, IMU frame
  Vec3 bias_drift = Vec3::Zero();    // m/s^3, slow linear ramp of the bias
  Vec3 noise_sigma = Vec3::Zero();   // m/s^2
  Vec3 gain = Vec3::Ones();          // multiplicative accelerometer scale
  Vec3 gyro_noise_sigma = Vec3::Zero();
  double rate = 200.0;               // Hz
  RotationMatrix imu_to_body;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);

  static ImuModel ideal();
  static ImuModel low_cost();
  static ImuModel high_cost();
};

enum class OcclusionGenerator {
  None,
  Windows,          // explicit list
  MidStroke,        // centred on peak speed along the dominant axis
  DirectionChange,  // centred on a velocity reversal along the dominant axis
  Random,           // Poisson arrivals
};

struct OcclusionWindow {
  double start = 0.0;
  double duration = 0.0;

  double end() const { return start + duration; }
  bool contains(double t) const { return t >= start && t < start + duration; }
};

struct OcclusionSchedule {
  OcclusionGenerator generator = OcclusionGenerator::None;
  std::vector<OcclusionWindow> windows;  // generator == Windows
  double gap_duration = 0.3;
  double start_after = 2.0;     // no generated gap before this time
  double min_separation = 0.8;  // between the end of one gap and the next
  double end_margin = 0.5;      // keep generated gaps this far from the end
  double random_rate = 0.5;     // gaps per second for Random
  std::uint64_t random_seed = 1;
};

/// Concrete, sorted, non-overlapping windows for a trajectory.
std::vector<OcclusionWindow> resolve_occlusions(const OcclusionSchedule& schedule,
                                                const Trajectory& traj, double position_rate);

bool occluded(const std::vector<OcclusionWindow>& windows, double t);

struct Scenario {
  Trajectory trajectory;
  ImuModel imu = ImuModel::low_cost();
  OcclusionSchedule occlusions;
  double position_rate = 100.0;
  double position_noise_sigma = 2e-4;
  std::uint64_t seed = 42;

  void validate() const;
};

struct SimStreams {
  std::vector<PositionSample> position;
  std::vector<ImuSample> imu;
  std::vector<PoseSample> truth;  // at position instants
  std::vector<OcclusionWindow> occlusions;
};

/// Deterministic in the scenario seed.
SimStreams generate(const Scenario& scenario);

/// Accelerometer reading without noise for a given truth state.
Vec3 specific_force_reading(const ImuModel& imu, const TruthState& truth, double t);

/// Standard normal draws from mt19937_64 through the Box-Muller transform
/// (first output of each pair), so streams are reproducible across standard
/// libraries.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double operator()();
  Vec3 vec3(const Vec3& sigma);

 private:
  double uniform_open();

  std::mt19937_64 engine_;
};

}  // namespace oftrack::sim
