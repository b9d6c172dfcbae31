#include "sgraphs/tracking.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "sgraphs/factors.hpp"

namespace sgraphs {

Matrix6d OdometryNoiseModel::information(const Pose3d& relative) const {
  const double length = relative.translation.norm();
  const double angle = rotation_angle<double>(relative.rotation);
  const double st = std::max(sigma_t * std::sqrt(length), min_sigma_t);
  const double sr = std::max(sigma_r * std::sqrt(angle), min_sigma_r);
  Vector6d diag;
  diag << Eigen::Vector3d::Constant(1.0 / (st * st)), Eigen::Vector3d::Constant(1.0 / (sr * sr));
  return diag.asDiagonal();
}

std::optional<int> maybe_add_keyframe(SGraph& graph, double stamp, const Pose3d& odom, const KeyframePolicy& policy,
                                      const OdometryNoiseModel& noise, std::shared_ptr<const PointCloud> scan) {
  const auto last = graph.last_keyframe();
  if (!last) return graph.add_keyframe(stamp, compose(graph.map_to_odom, odom), odom, std::move(scan));

  const Keyframe& prev = graph.keyframes.at(*last);
  const Pose3d rel = inverse_compose(prev.odom, odom);
  if (rel.translation.norm() < policy.min_translation && rotation_angle<double>(rel.rotation) < policy.min_rotation) {
    return std::nullopt;
  }
  const int id = graph.add_keyframe(stamp, compose(graph.map_to_odom, odom), odom, std::move(scan));
  graph.add_odometry(*last, id, rel, noise.information(rel));
  return id;
}

Eigen::Matrix3d default_plane_information() {
  return Eigen::Vector3d::Constant(1.0 / (0.02 * 0.02)).asDiagonal();
}

Matrix6d keyframe_covariance(const SGraph& graph, int keyframe) {
  for (auto it = graph.factors.rbegin(); it != graph.factors.rend(); ++it) {
    if (it->kind == FactorKind::Odometry && it->ids[1] == keyframe) {
      return it->information.inverse();
    }
  }
  return Matrix6d::Zero();
}

double plane_mahalanobis(const SGraph& graph, int keyframe, const PlaneHessiand& detection, int plane,
                         const Eigen::Matrix3d& measurement_information) {
  const Pose3d& pose = graph.keyframes.at(keyframe).pose;
  const PlaneLandmark& lm = graph.planes.at(plane);
  const PlaneMinimald meas = to_minimal(closest_point_form(detection), lm.chart());
  const Eigen::Vector3d r = plane_residual(pose, lm.params, meas, lm.chart());
  const PlaneJacobians J = plane_jacobians(pose, lm.params, lm.chart());
  const Eigen::Matrix3d cov =
      J.pose * keyframe_covariance(graph, keyframe) * J.pose.transpose() + measurement_information.inverse();
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(cov);
  return std::sqrt(std::max(0.0, r.dot(ldlt.solve(r))));
}

Eigen::AlignedBox3d transform_box(const Pose3d& pose, const Eigen::AlignedBox3d& box) {
  Eigen::AlignedBox3d out;
  if (box.isEmpty()) return out;
  for (int k = 0; k < 8; ++k) out.extend(pose * box.corner(static_cast<Eigen::AlignedBox3d::CornerType>(k)));
  return out;
}

std::optional<int> associate_plane(const SGraph& graph, const PlaneDetection& detection, int keyframe, double gate,
                                   const Eigen::Matrix3d& measurement_information, double support_margin) {
  const Pose3d& pose = graph.keyframes.at(keyframe).pose;
  const Eigen::AlignedBox3d bounds = transform_box(pose, detection.bounds);
  const bool check_support = std::isfinite(support_margin) && !bounds.isEmpty();
  const PlaneClass cls = classify_plane(transform_plane(pose, detection.plane, PlaneTransform::ToMap));
  const Eigen::Vector3d view = -(pose.rotation * detection.plane.normal);
  std::optional<int> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& [id, lm] : graph.planes) {
    if (lm.cls != cls) continue;
    if (!lm.facing.isZero() && lm.facing.dot(view) <= 0.0) continue;
    if (check_support && !lm.support.isEmpty() &&
        lm.support.squaredExteriorDistance(bounds) > support_margin * support_margin) {
      continue;
    }
    const double m = plane_mahalanobis(graph, keyframe, detection.plane, id, measurement_information);
    if (m < gate && m < best_distance) {
      best_distance = m;
      best = id;
    }
  }
  return best;
}

}  // namespace sgraphs
