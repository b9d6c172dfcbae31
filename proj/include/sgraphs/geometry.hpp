#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sgraphs/errors.hpp"

namespace sgraphs {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;

using Vector6d = Vector6<double>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// ---------------------------------------------------------------------------
// SO(3) helpers
// ---------------------------------------------------------------------------

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(), v.z(), Scalar(0), -v.x(), -v.y(), v.x(), Scalar(0);
  return m;
}

template <typename Scalar>
Matrix3<Scalar> so3_exp(const Vector3<Scalar>& omega) {
  const Scalar angle = omega.norm();
  if (angle < Scalar(1e-12)) {
    return Matrix3<Scalar>::Identity() + skew(omega);
  }
  return Eigen::AngleAxis<Scalar>(angle, omega / angle).toRotationMatrix();
}

template <typename Scalar>
Vector3<Scalar> so3_log(const Matrix3<Scalar>& rotation) {
  const Eigen::AngleAxis<Scalar> aa(Eigen::Quaternion<Scalar>(rotation).normalized());
  Scalar angle = aa.angle();
  Vector3<Scalar> axis = aa.axis();
  // AngleAxis reports angles in [0, 2pi); fold into [0, pi].
  if (angle > Scalar(std::numbers::pi)) {
    angle = Scalar(2 * std::numbers::pi) - angle;
    axis = -axis;
  }
  return axis * angle;
}

/// Inverse of the right Jacobian of SO(3): d Log(R Exp(e)) / d e at e = 0.
template <typename Scalar>
Matrix3<Scalar> so3_right_jacobian_inv(const Vector3<Scalar>& phi) {
  const Scalar theta = phi.norm();
  const Matrix3<Scalar> W = skew(phi);
  Scalar coeff;
  if (theta < Scalar(1e-5)) {
    coeff = Scalar(1) / Scalar(12) + theta * theta / Scalar(720);
  } else {
    coeff = Scalar(1) / (theta * theta) - (Scalar(1) + std::cos(theta)) / (Scalar(2) * theta * std::sin(theta));
  }
  return Matrix3<Scalar>::Identity() + Scalar(0.5) * W + coeff * W * W;
}

/// Wraps an angle to (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = Scalar(std::numbers::pi);
  a = std::remainder(a, Scalar(2) * pi);
  if (a <= -pi) a += Scalar(2) * pi;
  return a;
}

// ---------------------------------------------------------------------------
// Pose3
// ---------------------------------------------------------------------------

/// Rigid-body transform. Maps points from the child frame into the parent frame.
template <typename Scalar>
struct Pose3 {
  Matrix3<Scalar> rotation = Matrix3<Scalar>::Identity();
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  Pose3() = default;
  Pose3(const Matrix3<Scalar>& r, const Vector3<Scalar>& t) : rotation(r), translation(t) {}

  static Pose3 identity() { return Pose3(); }

  static Pose3 from_translation(Scalar x, Scalar y, Scalar z) {
    return Pose3(Matrix3<Scalar>::Identity(), Vector3<Scalar>(x, y, z));
  }

  static Pose3 from_xyz_yaw(Scalar x, Scalar y, Scalar z, Scalar yaw) {
    return Pose3(Eigen::AngleAxis<Scalar>(yaw, Vector3<Scalar>::UnitZ()).toRotationMatrix(), Vector3<Scalar>(x, y, z));
  }

  /// Builds from [tx ty tz qx qy qz qw].
  static Pose3 from_tum(const Eigen::Matrix<Scalar, 7, 1>& v) {
    const Eigen::Quaternion<Scalar> q(v[6], v[3], v[4], v[5]);
    return Pose3(q.normalized().toRotationMatrix(), v.template head<3>());
  }

  Eigen::Matrix<Scalar, 7, 1> to_tum() const {
    Eigen::Quaternion<Scalar> q(rotation);
    if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
    Eigen::Matrix<Scalar, 7, 1> v;
    v << translation, q.x(), q.y(), q.z(), q.w();
    return v;
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& p) const { return rotation * p + translation; }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  template <typename Other>
  Pose3<Other> cast() const {
    return Pose3<Other>(rotation.template cast<Other>(), translation.template cast<Other>());
  }
};

using Pose3d = Pose3<double>;

/// a ⊞ b
template <typename Scalar>
Pose3<Scalar> compose(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
  return Pose3<Scalar>(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

template <typename Scalar>
Pose3<Scalar> inverse(const Pose3<Scalar>& p) {
  const Matrix3<Scalar> rt = p.rotation.transpose();
  return Pose3<Scalar>(rt, -(rt * p.translation));
}

/// ⊟a ⊞ b: pose of b expressed in the frame of a.
template <typename Scalar>
Pose3<Scalar> inverse_compose(const Pose3<Scalar>& a, const Pose3<Scalar>& b) {
  const Matrix3<Scalar> rt = a.rotation.transpose();
  return Pose3<Scalar>(rt * b.rotation, rt * (b.translation - a.translation));
}

/// Retraction on SO(3) x R^3 with body-frame increments, delta = [dt; dw]:
/// R <- R Exp(dw), t <- t + R dt.
template <typename Scalar>
Pose3<Scalar> retract(const Pose3<Scalar>& p, const Vector6<Scalar>& delta) {
  return Pose3<Scalar>(p.rotation * so3_exp<Scalar>(delta.template tail<3>()),
                       p.translation + p.rotation * delta.template head<3>());
}

/// Local coordinates of a pose: [t; Log(R)].
template <typename Scalar>
Vector6<Scalar> pose_log(const Pose3<Scalar>& p) {
  Vector6<Scalar> v;
  v << p.translation, so3_log<Scalar>(p.rotation);
  return v;
}

template <typename Scalar>
Pose3<Scalar> pose_exp(const Vector6<Scalar>& v) {
  return Pose3<Scalar>(so3_exp<Scalar>(v.template tail<3>()), v.template head<3>());
}

template <typename Scalar>
Scalar rotation_angle(const Matrix3<Scalar>& r) {
  const Scalar c = std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  return std::acos(c);
}

// ---------------------------------------------------------------------------
// Planes
// ---------------------------------------------------------------------------

/// Hessian normal form: points x on the plane satisfy normal.dot(x) == distance.
template <typename Scalar>
struct PlaneHessian {
  Vector3<Scalar> normal = Vector3<Scalar>::UnitX();
  Scalar distance = Scalar(0);

  /// Point of the plane closest to the origin.
  Vector3<Scalar> closest_point() const { return normal * distance; }

  Scalar signed_distance(const Vector3<Scalar>& x) const { return normal.dot(x) - distance; }

  /// Same plane with both normal and distance negated.
  PlaneHessian flipped() const { return {-normal, -distance}; }
};

/// Azimuth / elevation / distance parametrization.
template <typename Scalar>
struct PlaneMinimal {
  Scalar azimuth = Scalar(0);
  Scalar elevation = Scalar(0);
  Scalar distance = Scalar(0);

  Vector3<Scalar> vector() const { return {azimuth, elevation, distance}; }
  static PlaneMinimal from_vector(const Vector3<Scalar>& v) { return {v[0], v[1], v[2]}; }
};

using PlaneHessiand = PlaneHessian<double>;
using PlaneMinimald = PlaneMinimal<double>;

enum class PlaneClass { XVertical, YVertical, Horizontal };

enum class PlaneTransform { ToMap, ToSensor };

/// Coordinate chart for the minimal parametrization. Horizontal planes use a
/// chart rotated so their normals sit on the equator instead of the pole.
enum class PlaneChart { Standard, Horizontal };

inline PlaneChart chart_for(PlaneClass c) {
  return c == PlaneClass::Horizontal ? PlaneChart::Horizontal : PlaneChart::Standard;
}

/// Rotation C with v = C n, where (azimuth, elevation) are read off v.
template <typename Scalar>
Matrix3<Scalar> chart_rotation(PlaneChart chart) {
  Matrix3<Scalar> c = Matrix3<Scalar>::Identity();
  if (chart == PlaneChart::Horizontal) {
    // cyclic permutation: v = (n_z, n_x, n_y)
    c << Scalar(0), Scalar(0), Scalar(1), Scalar(1), Scalar(0), Scalar(0), Scalar(0), Scalar(1), Scalar(0);
  }
  return c;
}

/// Closest-point vector to Hessian form: n = Π/|Π|, d = |Π|.
template <typename Scalar>
PlaneHessian<Scalar> normalize_plane(const Vector3<Scalar>& pi, Scalar min_distance = Scalar(1e-6)) {
  const Scalar norm = pi.norm();
  if (!(norm > min_distance)) {
    throw DegeneratePlane("plane vector norm below threshold; plane passes through the sensor origin");
  }
  return {pi / norm, norm};
}

/// Flips the plane if needed so that distance >= 0.
template <typename Scalar>
PlaneHessian<Scalar> closest_point_form(const PlaneHessian<Scalar>& p) {
  return p.distance < Scalar(0) ? p.flipped() : p;
}

/// Moves a plane between the sensor frame and the map frame of `pose`
/// (pose maps sensor coordinates into map coordinates). The result follows
/// the closest-point convention.
template <typename Scalar>
PlaneHessian<Scalar> transform_plane(const Pose3<Scalar>& pose, const PlaneHessian<Scalar>& plane, PlaneTransform direction) {
  PlaneHessian<Scalar> out;
  if (direction == PlaneTransform::ToMap) {
    out.normal = pose.rotation * plane.normal;
    out.distance = plane.distance + out.normal.dot(pose.translation);
  } else {
    out.normal = pose.rotation.transpose() * plane.normal;
    out.distance = plane.distance - plane.normal.dot(pose.translation);
  }
  return closest_point_form(out);
}

template <typename Scalar>
PlaneMinimal<Scalar> to_minimal(const PlaneHessian<Scalar>& p, PlaneChart chart = PlaneChart::Standard) {
  const Vector3<Scalar> v = chart_rotation<Scalar>(chart) * p.normal;
  const Scalar horizontal = std::sqrt(v.x() * v.x() + v.y() * v.y());
  PlaneMinimal<Scalar> m;
  m.azimuth = std::abs(v.z()) > Scalar(1) - Scalar(1e-9) ? Scalar(0) : std::atan2(v.y(), v.x());
  m.elevation = std::atan2(v.z(), horizontal);
  m.distance = p.distance;
  return m;
}

template <typename Scalar>
Vector3<Scalar> minimal_direction(Scalar azimuth, Scalar elevation) {
  using std::cos;
  using std::sin;
  return {cos(elevation) * cos(azimuth), cos(elevation) * sin(azimuth), sin(elevation)};
}

template <typename Scalar>
PlaneHessian<Scalar> from_minimal(const PlaneMinimal<Scalar>& m, PlaneChart chart = PlaneChart::Standard) {
  const Vector3<Scalar> v = minimal_direction(m.azimuth, m.elevation);
  return {chart_rotation<Scalar>(chart).transpose() * v, m.distance};
}

/// Horizontal if |n_z| dominates, otherwise X or Y by the larger of |n_x|, |n_y|.
template <typename Scalar>
PlaneClass classify_plane(const PlaneHessian<Scalar>& p) {
  const Scalar ax = std::abs(p.normal.x());
  const Scalar ay = std::abs(p.normal.y());
  const Scalar az = std::abs(p.normal.z());
  if (az >= std::max(ax, ay)) return PlaneClass::Horizontal;
  return ax > ay ? PlaneClass::XVertical : PlaneClass::YVertical;
}

inline const char* to_string(PlaneClass c) {
  switch (c) {
    case PlaneClass::XVertical:
      return "x";
    case PlaneClass::YVertical:
      return "y";
    case PlaneClass::Horizontal:
      return "horizontal";
  }
  return "?";
}

inline PlaneClass plane_class_from_string(const std::string& s) {
  if (s == "x") return PlaneClass::XVertical;
  if (s == "y") return PlaneClass::YVertical;
  if (s == "horizontal") return PlaneClass::Horizontal;
  throw FormatError("unknown plane class '" + s + "'");
}

/// Coordinate of an axis-aligned wall along its own axis: d * sign(n . axis).
template <typename Scalar>
Scalar axis_coordinate(const PlaneHessian<Scalar>& p, int axis) {
  return p.normal[axis] >= Scalar(0) ? p.distance : -p.distance;
}

}  // namespace sgraphs
