#pragma once

#include <memory>
#include <limits>
#include <optional>

#include "sgraphs/graph.hpp"
#include "sgraphs/plane_extraction.hpp"

namespace sgraphs {

struct KeyframePolicy {
  double min_translation = 1.0;  // m
  double min_rotation = 0.5;     // rad
};

/// Random-walk odometry noise: per-axis translation sigma grows with the
/// square root of the distance travelled, rotation sigma with the square
/// root of the angle turned.
struct OdometryNoiseModel {
  double sigma_t = 0.02;  // m / sqrt(m)
  double sigma_r = 0.01;  // rad / sqrt(rad)
  double min_sigma_t = 1e-3;
  double min_sigma_r = 1e-3;

  Matrix6d information(const Pose3d& relative) const;
};

/// Adds a keyframe when the odometry moved far enough since the last one.
/// The new pose is map_to_odom * odom, and an odometry factor to the previous
/// keyframe carries the relative odometry motion.
std::optional<int> maybe_add_keyframe(SGraph& graph, double stamp, const Pose3d& odom, const KeyframePolicy& policy,
                                      const OdometryNoiseModel& noise = {},
                                      std::shared_ptr<const PointCloud> scan = nullptr);

/// Default pose-plane information: sigma 0.02 rad on both angles and 0.02 m on d.
Eigen::Matrix3d default_plane_information();

/// Mahalanobis distance between a sensor-frame detection and the prediction
/// of a mapped plane from a keyframe. The covariance adds the measurement
/// covariance to the keyframe's odometric covariance pushed through the
/// plane Jacobian.
double plane_mahalanobis(const SGraph& graph, int keyframe, const PlaneHessiand& detection, int plane,
                         const Eigen::Matrix3d& measurement_information = default_plane_information());

/// Nearest mapped plane of the detection's class (classified in the map
/// frame) under the Mahalanobis gate, or nullopt for a new landmark. Planes
/// whose recorded facing points away from the current viewing side are skipped,
/// as are planes whose observed support lies farther than `support_margin`
/// from the detection's inlier bounds.
std::optional<int> associate_plane(const SGraph& graph, const PlaneDetection& detection, int keyframe,
                                   double gate = 3.0,
                                   const Eigen::Matrix3d& measurement_information = default_plane_information(),
                                   double support_margin = std::numeric_limits<double>::infinity());

/// Axis-aligned bounds of a transformed box.
Eigen::AlignedBox3d transform_box(const Pose3d& pose, const Eigen::AlignedBox3d& box);

/// Odometric covariance of a keyframe: inverse information of the odometry
/// factor ending at it, zero for the anchor.
Matrix6d keyframe_covariance(const SGraph& graph, int keyframe);

}  // namespace sgraphs
