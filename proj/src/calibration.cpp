/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#include "oftrack/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oftrack::calib {

namespace {

struct Centered {
  Eigen::Matrix<double, 3, Eigen::Dynamic> p;
  Eigen::Matrix<double, 3, Eigen::Dynamic> q;
};

Centered center(std::span<const PointPair> pairs) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Centered c{Eigen::Matrix<double, 3, Eigen::Dynamic>(3, n),
             Eigen::Matrix<double, 3, Eigen::Dynamic>(3, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    c.p.col(i) = pairs[static_cast<std::size_t>(i)].source;
    c.q.col(i) = pairs[static_cast<std::size_t>(i)].target;
  }
  c.p.colwise() -= c.p.rowwise().mean();
  c.q.colwise() -= c.q.rowwise().mean();
  return c;
}

UnitQuaternion pose_at(std::span<const PoseSample> poses, double t) {
  const auto it = std::lower_bound(poses.begin(), poses.end(), t,
                                   [](const PoseSample& p, double x) { return p.t < x; });
  if (it == poses.end()) return poses.back().orientation;
  if (it != poses.begin() && std::abs(std::prev(it)->t - t) < std::abs(it->t - t)) {
    return std::prev(it)->orientation;
  }
  return it->orientation;
}

}  // namespace

RotationMatrix kabsch(std::span<const PointPair> pairs) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::DegenerateGeometry, "kabsch needs at least 3 point pairs");
  }
  const Centered c = center(pairs);
  const Eigen::Matrix3d h = c.p * c.q.transpose();

  // Rank of the centered source points: a line leaves the rotation about it
  // unobservable.
  const Eigen::JacobiSVD<Eigen::Matrix<double, 3, Eigen::Dynamic>> rank_svd(c.p);
  const Eigen::Vector3d sp = rank_svd.singularValues();
  if (!(sp(0) > 0.0) || sp(1) <= 1e-9 * sp(0)) {
    throw Error(ErrorCode::DegenerateGeometry, "kabsch: points are collinear");
  }

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  const double d = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * Eigen::Vector3d(1.0, 1.0, d).asDiagonal() * u.transpose();
  return RotationMatrix(r);
}

double registration_rms(std::span<const PointPair> pairs, const RotationMatrix& r) {
  if (pairs.empty()) return 0.0;
  const Centered c = center(pairs);
  const Eigen::Matrix<double, 3, Eigen::Dynamic> diff = r.matrix() * c.p - c.q;
  return std::sqrt(diff.colwise().squaredNorm().mean());
}

std::vector<StaticSegment> find_static_segments(std::span<const ImuSample> imu,
                                                std::span<const PoseSample> poses,
                                                const StaticDetection& opts) {
  if (poses.empty()) {
    throw Error(ErrorCode::InvalidArgument, "static segment detection needs a pose stream");
  }
  std::vector<StaticSegment> out;
  std::size_t i = 0;
  while (i < imu.size()) {
    if (imu[i].gyro.norm() >= opts.gyro_threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < imu.size() && imu[j + 1].gyro.norm() < opts.gyro_threshold) ++j;
    const double start = imu[i].t + opts.trim;
    const double end = imu[j].t - opts.trim;
    if (end - start >= opts.min_duration) {
      Vec3 sum = Vec3::Zero();
      std::size_t n = 0;
      for (std::size_t k = i; k <= j; ++k) {
        if (imu[k].t >= start && imu[k].t <= end) {
          sum += imu[k].accel;
          ++n;
        }
      }
      out.push_back(StaticSegment{start, end, sum / static_cast<double>(n),
                                  pose_at(poses, (start + end) / 2.0)});
    }
    i = j + 1;
  }
  return out;
}

std::vector<PointPair> gravity_pairs(std::span<const StaticSegment> segments,
                                     const Vec3& gravity) {
  std::vector<PointPair> out;
  out.reserve(segments.size());
  for (const StaticSegment& s : segments) {
    const Vec3 up_body = quat_to_matrix(s.body_to_global).inverse() * Vec3(-gravity);
    out.push_back(PointPair{s.mean_accel, up_body});
  }
  return out;
}

GainCalibration calibrate_gain(std::span<const PositionSample> positions,
                               std::span<const ImuSample> imu, const RotationMatrix& imu_to_global,
                               const GainOptions& opts) {
  if (positions.size() < 3 || imu.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "gain calibration needs non-trivial traces");
  }
  if (positions.back().t - positions.front().t < opts.min_duration) {
    throw Error(ErrorCode::InvalidArgument, "gain calibration trace shorter than " +
                                                std::to_string(opts.min_duration) + " s");
  }
  for (const PositionSample& p : positions) {
    if (!p.valid) {
      throw Error(ErrorCode::OcclusionInWindow, "gain calibration trace must be occlusion-free");
    }
  }

  // Offset (bias plus the static gravity reading) from the leading rest window.
  const double rest_end = imu.front().t + opts.stationary_window;
  Vec3 rest = Vec3::Zero();
  std::size_t n_rest = 0;
  for (const ImuSample& s : imu) {
    if (s.t > rest_end) break;
    rest += s.accel;
    ++n_rest;
  }
  if (n_rest == 0) throw Error(ErrorCode::InvalidArgument, "no IMU samples in the rest window");
  rest /= static_cast<double>(n_rest);

  // Trapezoidal integration of the rest-removed acceleration.
  std::vector<double> ti(imu.size());
  std::vector<Vec3> vi(imu.size(), Vec3::Zero());
  Vec3 prev_a = imu_to_global * Vec3(imu[0].accel - rest);
  ti[0] = imu[0].t;
  for (std::size_t k = 1; k < imu.size(); ++k) {
    const Vec3 a = imu_to_global * Vec3(imu[k].accel - rest);
    const double dt = imu[k].t - imu[k - 1].t;
    vi[k] = vi[k - 1] + (a + prev_a) * (dt / 2.0);
    ti[k] = imu[k].t;
    prev_a = a;
  }
  auto imu_velocity = [&](double t) -> Vec3 {
    const auto it = std::lower_bound(ti.begin(), ti.end(), t);
    if (it == ti.begin()) return vi.front();
    if (it == ti.end()) return vi.back();
    const auto k = static_cast<std::size_t>(it - ti.begin());
    const double f = (t - ti[k - 1]) / (ti[k] - ti[k - 1]);
    return vi[k - 1] + f * (vi[k] - vi[k - 1]);
  };

  std::vector<Vec3> xs;
  std::vector<Vec3> ys;
  for (std::size_t j = 1; j + 1 < positions.size(); ++j) {
    const double t = positions[j].t;
    if (t < ti.front() || t > ti.back()) continue;
    ys.push_back((positions[j + 1].pos - positions[j - 1].pos) /
                 (positions[j + 1].t - positions[j - 1].t));
    xs.push_back(imu_velocity(t));
  }

  GainCalibration out;
  const double n = static_cast<double>(xs.size());
  for (int axis = 0; axis < 3; ++axis) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k][axis];
      my += ys[k][axis];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k][axis] - mx) * (xs[k][axis] - mx);
      sxy += (xs[k][axis] - mx) * (ys[k][axis] - my);
    }
    const double std_x = std::sqrt(sxx / n);
    if (std_x < opts.min_velocity_std) {
      throw Error(ErrorCode::InsufficientExcitation,
                  "axis " + std::to_string(axis) + " integrated-velocity std " +
                      std::to_string(std_x) + " m/s below threshold");
    }
    const double k_axis = sxy / sxx;
    const double c = my - k_axis * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double r = ys[k][axis] - (k_axis * xs[k][axis] + c);
      ss += r * r;
    }
    out.gain[axis] = k_axis;
    out.residual_rms[axis] = std::sqrt(ss / n);
  }
  if (!(out.gain.array() > 0.0).all()) {
    throw Error(ErrorCode::InsufficientExcitation, "calibrated gain is not positive");
  }
  return out;
}

}  // namespace oftrack::calib
