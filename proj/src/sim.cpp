/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace oftrack::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

TruthState lissajous_truth(const Trajectory& tr, double t) {
  const double tau = std::max(0.0, t - tr.hold);
  const bool resting = t < tr.hold;
  TruthState s;
  for (int i = 0; i < 3; ++i) {
    const double w = kTwoPi / tr.periods[i];
    const double phase = w * tau + tr.phases[i];
    s.pos[i] = tr.center[i] + tr.amplitudes[i] * std::sin(phase);
    s.vel[i] = resting ? 0.0 : tr.amplitudes[i] * w * std::cos(phase);
    s.acc[i] = resting ? 0.0 : -tr.amplitudes[i] * w * w * std::sin(phase);
  }
  return s;
}

// Smooth 0 -> angle turn over `duration`, zero rate at both ends.
void smooth_turn(double angle, double duration, double elapsed, double& theta, double& rate) {
  const double s = std::clamp(elapsed / duration, 0.0, 1.0);
  theta = angle * (s - std::sin(kTwoPi * s) / kTwoPi);
  rate = angle * (1.0 - std::cos(kTwoPi * s)) / duration;
}

TruthState poses_truth(const Trajectory& tr, double t) {
  TruthState s;
  s.pos = tr.center;
  const std::vector<UnitQuaternion>& poses = tr.poses;
  const double cycle = tr.pose_hold + tr.pose_transition;
  const double clamped = std::max(0.0, t);
  std::size_t k = static_cast<std::size_t>(clamped / cycle);
  if (k >= poses.size() - 1) {
    s.orientation = poses.back();
    return s;
  }
  const double into = clamped - static_cast<double>(k) * cycle;
  s.orientation = poses[k];
  if (into <= tr.pose_hold) return s;

  const Eigen::AngleAxisd rel(poses[k].eigen().conjugate() * poses[k + 1].eigen());
  double theta = 0.0;
  double rate = 0.0;
  smooth_turn(rel.angle(), tr.pose_transition, into - tr.pose_hold, theta, rate);
  s.orientation = poses[k] * UnitQuaternion::about_axis(rel.axis(), theta);
  s.body_rate = rel.axis() * rate;
  return s;
}

int dominant_axis(const Trajectory& traj, double rate) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  const auto n = static_cast<long>(std::floor(traj.duration * rate + 1e-9));
  for (long j = 0; j <= n; ++j) {
    const Vec3 p = evaluate(traj, static_cast<double>(j) / rate).pos;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  return static_cast<int>(axis);
}

// Instants where the chosen component of vel (or acc) changes sign, with
// linear interpolation between position instants.
std::vector<double> sign_changes(const Trajectory& traj, double rate, int axis, bool use_acc) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor(traj.duration * rate + 1e-9));
  auto value = [&](double t) {
    const TruthState s = evaluate(traj, t);
    return use_acc ? s.acc[axis] : s.vel[axis];
  };
  double t_prev = 0.0;
  double v_prev = value(0.0);
  for (long j = 1; j <= n; ++j) {
    const double t = static_cast<double>(j) / rate;
    const double v = value(t);
    if ((v_prev < 0.0 && v >= 0.0) || (v_prev > 0.0 && v <= 0.0)) {
      const double frac = v_prev / (v_prev - v);
      out.push_back(t_prev + frac * (t - t_prev));
    }
    t_prev = t;
    v_prev = v;
  }
  // A value that lands exactly on zero is reported by both neighbours.
  out.erase(std::unique(out.begin(), out.end(),
                        [rate](double a, double b) { return std::abs(a - b) < 0.5 / rate; }),
            out.end());
  return out;
}

std::vector<OcclusionWindow> place_windows(const OcclusionSchedule& sc, const Trajectory& traj,
                                           const std::vector<double>& centers) {
  std::vector<OcclusionWindow> out;
  double last_end = -std::numeric_limits<double>::infinity();
  for (double c : centers) {
    const OcclusionWindow w{c - sc.gap_duration / 2.0, sc.gap_duration};
    if (w.start < sc.start_after) continue;
    if (w.end() > traj.duration - sc.end_margin) break;
    if (w.start < last_end + sc.min_separation) continue;
    out.push_back(w);
    last_end = w.end();
  }
  return out;
}

}  // namespace

void Trajectory::validate() const {
  require(duration > 0.0, "trajectory.duration must be > 0");
  require(center.allFinite(), "trajectory.center must be finite");
  switch (kind) {
    case TrajectoryKind::ArmLift:
    case TrajectoryKind::Circular:
      require(period > 0.0, "trajectory.period must be > 0");
      require(amplitude >= 0.0, "trajectory.amplitude must be >= 0");
      break;
    case TrajectoryKind::ConstantAccel:
      require(velocity.allFinite() && accel.allFinite(), "trajectory.velocity/accel must be finite");
      break;
    case TrajectoryKind::Lissajous:
      require((periods.array() > 0.0).all(), "trajectory.periods must be > 0");
      require(hold >= 0.0, "trajectory.hold must be >= 0");
      break;
    case TrajectoryKind::Poses:
      require(poses.size() >= 2, "trajectory.poses needs at least two attitudes");
      require(pose_hold > 0.0 && pose_transition > 0.0,
              "trajectory.pose_hold and pose_transition must be > 0");
      break;
  }
}

TruthState arm_lift_truth(double t, double amplitude, double period, const Vec3& center) {
  require(period > 0.0, "arm lift period must be > 0");
  const double w = kTwoPi / period;
  TruthState s;
  s.pos = center + Vec3(0.0, amplitude * std::sin(w * t), 0.0);
  s.vel = Vec3(0.0, amplitude * w * std::cos(w * t), 0.0);
  s.acc = Vec3(0.0, -amplitude * w * w * std::sin(w * t), 0.0);
  return s;
}

TruthState circular_truth(double t, double radius, double period, const Vec3& center) {
  require(period > 0.0, "circular period must be > 0");
  const double w = kTwoPi / period;
  const double th = w * t;
  TruthState s;
  s.pos = center + radius * Vec3(std::cos(th), std::sin(th), 0.0);
  s.vel = radius * w * Vec3(-std::sin(th), std::cos(th), 0.0);
  s.acc = -radius * w * w * Vec3(std::cos(th), std::sin(th), 0.0);
  s.orientation = UnitQuaternion::about_axis(Vec3::UnitZ(), th);
  s.body_rate = Vec3(0.0, 0.0, w);
  return s;
}

std::vector<UnitQuaternion> default_calibration_poses() {
  const double h = std::numbers::pi / 2.0;
  return {
      UnitQuaternion::identity(),
      UnitQuaternion::about_axis(Vec3::UnitX(), h),
      UnitQuaternion::about_axis(Vec3::UnitX(), -h),
      UnitQuaternion::about_axis(Vec3::UnitZ(), h),
      UnitQuaternion::about_axis(Vec3::UnitZ(), -h),
      UnitQuaternion::about_axis(Vec3::UnitX(), std::numbers::pi),
  };
}

TruthState evaluate(const Trajectory& traj, double t) {
  switch (traj.kind) {
    case TrajectoryKind::ArmLift:
      return arm_lift_truth(t, traj.amplitude, traj.period, traj.center);
    case TrajectoryKind::Circular:
      return circular_truth(t, traj.amplitude, traj.period, traj.center);
    case TrajectoryKind::ConstantAccel: {
      TruthState s;
      s.pos = traj.center + traj.velocity * t + traj.accel * (t * t / 2.0);
      s.vel = traj.velocity + traj.accel * t;
      s.acc = traj.accel;
      return s;
    }
    case TrajectoryKind::Lissajous:
      return lissajous_truth(traj, t);
    case TrajectoryKind::Poses:
      return poses_truth(traj, t);
  }
  return {};
}

ImuModel ImuModel::ideal() { return ImuModel{}; }

ImuModel ImuModel::low_cost() {
  ImuModel m;
  m.bias = Vec3(0.05, -0.05, 0.05);
  m.noise_sigma = Vec3::Constant(0.02);
  m.gyro_noise_sigma = Vec3::Constant(0.003);
  return m;
}

ImuModel ImuModel::high_cost() {
  ImuModel m;
  m.bias = Vec3(0.01, -0.01, 0.01);
  m.noise_sigma = Vec3::Constant(0.005);
  m.gyro_noise_sigma = Vec3::Constant(0.001);
  return m;
}

std::vector<OcclusionWindow> resolve_occlusions(const OcclusionSchedule& sc, const Trajectory& traj,
                                                double position_rate) {
  std::vector<OcclusionWindow> out;
  switch (sc.generator) {
    case OcclusionGenerator::None:
      break;
    case OcclusionGenerator::Windows:
      out = sc.windows;
      std::sort(out.begin(), out.end(),
                [](const OcclusionWindow& a, const OcclusionWindow& b) { return a.start < b.start; });
      break;
    case OcclusionGenerator::MidStroke: {
      const int axis = dominant_axis(traj, position_rate);
      out = place_windows(sc, traj, sign_changes(traj, position_rate, axis, true));
      break;
    }
    case OcclusionGenerator::DirectionChange: {
      const int axis = dominant_axis(traj, position_rate);
      out = place_windows(sc, traj, sign_changes(traj, position_rate, axis, false));
      break;
    }
    case OcclusionGenerator::Random: {
      std::mt19937_64 engine(sc.random_seed);
      std::vector<double> centers;
      double t = sc.start_after;
      while (true) {
        // Exponential draws via the inverse CDF keep this portable.
        const double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
        t += -std::log(u) / sc.random_rate;
        if (t > traj.duration) break;
        centers.push_back(t + sc.gap_duration / 2.0);
      }
      out = place_windows(sc, traj, centers);
      break;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    require(out[i].duration > 0.0, "occlusion windows need a positive duration");
    require(out[i].start >= 0.0 && out[i].end() <= traj.duration,
            "occlusion window outside the trace duration");
    require(i == 0 || out[i].start >= out[i - 1].end(), "occlusion windows overlap");
  }
  return out;
}

bool occluded(const std::vector<OcclusionWindow>& windows, double t) {
  return std::any_of(windows.begin(), windows.end(),
                     [t](const OcclusionWindow& w) { return w.contains(t); });
}

void Scenario::validate() const {
  trajectory.validate();
  require(position_rate > 0.0, "position.rate must be > 0");
  require(imu.rate >= position_rate, "imu.rate must be >= position.rate");
  require(position_noise_sigma >= 0.0, "position.noise_sigma must be >= 0");
  require((imu.noise_sigma.array() >= 0.0).all() && (imu.gyro_noise_sigma.array() >= 0.0).all(),
          "imu noise sigmas must be >= 0");
  require((imu.gain.array() > 0.0).all(), "imu.gain must be > 0");
  require(occlusions.gap_duration > 0.0, "occlusion.gap_duration must be > 0");
  if (occlusions.generator == OcclusionGenerator::Random) {
    require(occlusions.random_rate > 0.0, "occlusion.random_rate must be > 0");
  }
}

Vec3 specific_force_reading(const ImuModel& imu, const TruthState& truth, double t) {
  const RotationMatrix imu_to_global = quat_to_matrix(truth.orientation) * imu.imu_to_body;
  const Vec3 f = imu_to_global.inverse() * (truth.acc - imu.gravity);
  return imu.gain.cwiseProduct(f) + imu.bias + imu.bias_drift * t;
}

SimStreams generate(const Scenario& sc) {
  sc.validate();
  SimStreams out;
  out.occlusions = resolve_occlusions(sc.occlusions, sc.trajectory, sc.position_rate);
  NormalSampler noise(sc.seed);
  const Vec3 pos_sigma = Vec3::Constant(sc.position_noise_sigma);

  const auto n_pos = static_cast<long>(std::floor(sc.trajectory.duration * sc.position_rate + 1e-9));
  out.position.reserve(static_cast<std::size_t>(n_pos + 1));
  out.truth.reserve(static_cast<std::size_t>(n_pos + 1));
  for (long j = 0; j <= n_pos; ++j) {
    const double t = static_cast<double>(j) / sc.position_rate;
    const TruthState s = evaluate(sc.trajectory, t);
    const Vec3 measured = s.pos + noise.vec3(pos_sigma);
    const bool valid = !occluded(out.occlusions, t);
    out.position.push_back(PositionSample{t, valid ? measured : Vec3::Zero(), valid});
    out.truth.push_back(PoseSample{t, s.pos, s.orientation});
  }

  const auto n_imu = static_cast<long>(std::floor(sc.trajectory.duration * sc.imu.rate + 1e-9));
  out.imu.reserve(static_cast<std::size_t>(n_imu + 1));
  const RotationMatrix body_to_imu = sc.imu.imu_to_body.inverse();
  for (long i = 0; i <= n_imu; ++i) {
    const double t = static_cast<double>(i) / sc.imu.rate;
    const TruthState s = evaluate(sc.trajectory, t);
    ImuSample m;
    m.t = t;
    m.accel = specific_force_reading(sc.imu, s, t) + noise.vec3(sc.imu.noise_sigma);
    m.gyro = body_to_imu * s.body_rate + noise.vec3(sc.imu.gyro_noise_sigma);
    out.imu.push_back(m);
  }
  return out;
}

double NormalSampler::uniform_open() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSampler::operator()() {
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

Vec3 NormalSampler::vec3(const Vec3& sigma) {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = sigma[i] * (*this)();
  return v;
}

}  // namespace oftrack::sim
