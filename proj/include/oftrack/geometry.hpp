/*
 *  Copyright (C) 2026 The oftrack Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "oftrack/error.hpp"

// Small 3D geometry layer. Everything is a value type over Eigen fixed-size
// storage, templated on the scalar so the math can be exercised in long double
// when checking numerics.
//
// Frame convention: a rotation R_a_b maps coordinates expressed in frame b to
// frame a, i.e. v_a = R_a_b * v_b. Quaternions follow the Hamilton convention
// with the scalar first.

namespace oftrack {

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Tolerance used when admitting an externally supplied matrix as a rotation.
inline constexpr double kRotationAdmitTolerance = 1e-6;

/// Proper rotation matrix (orthonormal, det = +1).
template <typename Scalar>
class RotationMatrixT {
 public:
  using Matrix = Mat3T<Scalar>;
  using Vector = Vec3T<Scalar>;

  RotationMatrixT() : m_(Matrix::Identity()) {}

  /// Rejects matrices that are not orthonormal or that contain a reflection.
  explicit RotationMatrixT(const Matrix& m) : m_(m) {
    if (!m.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "rotation matrix has non-finite entries");
    }
    const Scalar ortho = (m.transpose() * m - Matrix::Identity()).cwiseAbs().maxCoeff();
    if (ortho > Scalar(kRotationAdmitTolerance)) {
      throw Error(ErrorCode::InvalidArgument,
                  "matrix is not orthonormal (max |R^T R - I| = " +
                      std::to_string(static_cast<double>(ortho)) + ")");
    }
    if (std::abs(m.determinant() - Scalar(1)) > Scalar(kRotationAdmitTolerance)) {
      throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation (det != +1)");
    }
  }

  static RotationMatrixT identity() { return RotationMatrixT(); }

  /// Right-handed rotation of `angle` radians about `axis` (need not be unit).
  static RotationMatrixT about_axis(const Vector& axis, Scalar angle) {
    return unchecked(Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix());
  }

  const Matrix& matrix() const { return m_; }
  Scalar operator()(int r, int c) const { return m_(r, c); }

  RotationMatrixT inverse() const { return unchecked(m_.transpose()); }

  friend RotationMatrixT operator*(const RotationMatrixT& a, const RotationMatrixT& b) {
    return unchecked(a.m_ * b.m_);
  }

  friend Vector operator*(const RotationMatrixT& r, const Vector& v) { return r.m_ * v; }

 private:
  // Products and transposes of proper rotations stay proper; skip the check.
  static RotationMatrixT unchecked(const Matrix& m) {
    RotationMatrixT r;
    r.m_ = m;
    return r;
  }

  Matrix m_;
};

/// Unit-norm quaternion, scalar first.
template <typename Scalar>
class UnitQuaternionT {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector = Vec3T<Scalar>;

  UnitQuaternionT() : q_(Quaternion::Identity()) {}

  /// Normalizes the given components. A zero or non-finite input is rejected.
  static UnitQuaternionT normalized(Scalar w, Scalar x, Scalar y, Scalar z) {
    Quaternion q(w, x, y, z);
    const Scalar n = q.norm();
    if (!std::isfinite(static_cast<double>(n)) || n <= Scalar(0)) {
      throw Error(ErrorCode::InvalidArgument, "quaternion has zero or non-finite norm");
    }
    UnitQuaternionT u;
    u.q_ = Quaternion(w / n, x / n, y / n, z / n);
    return u;
  }

  /// Keeps the components verbatim when their norm is within the admission
  /// tolerance of one; used when reading back stored unit quaternions.
  static UnitQuaternionT admit(Scalar w, Scalar x, Scalar y, Scalar z) {
    Quaternion q(w, x, y, z);
    if (!q.coeffs().allFinite() ||
        std::abs(q.norm() - Scalar(1)) > Scalar(kRotationAdmitTolerance)) {
      throw Error(ErrorCode::InvalidArgument, "quaternion is not unit norm");
    }
    UnitQuaternionT u;
    u.q_ = q;
    return u;
  }

  static UnitQuaternionT identity() { return UnitQuaternionT(); }

  static UnitQuaternionT about_axis(const Vector& axis, Scalar angle) {
    UnitQuaternionT u;
    u.q_ = Quaternion(Eigen::AngleAxis<Scalar>(angle, axis.normalized()));
    return u;
  }

  Scalar w() const { return q_.w(); }
  Scalar x() const { return q_.x(); }
  Scalar y() const { return q_.y(); }
  Scalar z() const { return q_.z(); }

  const Quaternion& eigen() const { return q_; }

  UnitQuaternionT conjugate() const {
    UnitQuaternionT u;
    u.q_ = q_.conjugate();
    return u;
  }

  friend UnitQuaternionT operator*(const UnitQuaternionT& a, const UnitQuaternionT& b) {
    const Quaternion p = a.q_ * b.q_;
    return normalized(p.w(), p.x(), p.y(), p.z());
  }

 private:
  Quaternion q_;
};

using RotationMatrix = RotationMatrixT<double>;
using UnitQuaternion = UnitQuaternionT<double>;

template <typename Scalar>
Vec3T<Scalar> rotate(const RotationMatrixT<Scalar>& r, const Vec3T<Scalar>& v) {
  return r.matrix() * v;
}

template <typename Scalar>
RotationMatrixT<Scalar> quat_to_matrix(const UnitQuaternionT<Scalar>& q) {
  return RotationMatrixT<Scalar>(q.eigen().toRotationMatrix());
}

template <typename Scalar>
UnitQuaternionT<Scalar> matrix_to_quat(const RotationMatrixT<Scalar>& r) {
  const Eigen::Quaternion<Scalar> q(r.matrix());
  return UnitQuaternionT<Scalar>::normalized(q.w(), q.x(), q.y(), q.z());
}

/// Composes q with the body-frame increment exp(omega * dt / 2) and renormalizes.
/// omega is the angular rate expressed in the rotated (body) frame.
template <typename Scalar>
UnitQuaternionT<Scalar> quat_integrate(const UnitQuaternionT<Scalar>& q,
                                       const Vec3T<Scalar>& omega, Scalar dt) {
  if (!(dt > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "quat_integrate requires dt > 0");
  }
  if (!omega.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "quat_integrate: non-finite angular rate");
  }
  const Vec3T<Scalar> theta = omega * dt;
  const Scalar angle = theta.norm();
  Eigen::Quaternion<Scalar> dq;
  if (angle < Scalar(1e-12)) {
    // Second-order series of exp near zero.
    dq = Eigen::Quaternion<Scalar>(Scalar(1) - angle * angle / Scalar(8), theta.x() / 2,
                                   theta.y() / 2, theta.z() / 2);
  } else {
    const Scalar s = std::sin(angle / 2) / angle;
    dq = Eigen::Quaternion<Scalar>(std::cos(angle / 2), theta.x() * s, theta.y() * s,
                                   theta.z() * s);
  }
  const Eigen::Quaternion<Scalar> p = q.eigen() * dq;
  return UnitQuaternionT<Scalar>::normalized(p.w(), p.x(), p.y(), p.z());
}

/// Angle of the relative rotation a^-1 b, in [0, pi].
template <typename Scalar>
Scalar geodesic_angle(const UnitQuaternionT<Scalar>& a, const UnitQuaternionT<Scalar>& b) {
  const Scalar d = std::abs(a.eigen().dot(b.eigen()));
  return Scalar(2) * std::acos(std::min(d, Scalar(1)));
}

template <typename Scalar>
Scalar geodesic_angle(const RotationMatrixT<Scalar>& a, const RotationMatrixT<Scalar>& b) {
  const Scalar c = ((a.matrix().transpose() * b.matrix()).trace() - Scalar(1)) / Scalar(2);
  return std::acos(std::clamp(c, Scalar(-1), Scalar(1)));
}

}  // namespace oftrack
