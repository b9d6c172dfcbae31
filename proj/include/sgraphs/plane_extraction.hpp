#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sgraphs/geometry.hpp"
#include "sgraphs/point_cloud.hpp"

namespace sgraphs {

struct FilterConfig {
  double voxel_size = 0.1;
  /// Points whose range deviates from the mean range by more than
  /// k_sigma standard deviations are dropped.
  double k_sigma = 2.0;
};

struct RansacConfig {
  double threshold = 0.03;
  int min_inliers = 100;
  int max_iters = 500;
  std::uint64_t seed = 42;
  /// Planes closer than this to the sensor origin are rejected.
  double min_plane_distance = 1e-6;
};

struct PlaneDetection {
  PlaneHessiand plane;           // sensor frame, d > 0
  int inlier_count = 0;
  double inlier_rms = 0.0;
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();  // ascending
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::AlignedBox3d bounds;   // inlier bounding box, sensor frame
  std::vector<int> inliers;      // indices into the input cloud
};

/// Voxel downsampling followed by range-statistics outlier removal.
/// Throws EmptyCloud when nothing survives.
PointCloud preprocess(const PointCloud& cloud, const FilterConfig& cfg);

/// Sequential RANSAC. Each model is refined by a trimmed least-squares fit
/// (centroid + smallest scatter eigenvector), its inliers are removed, and
/// the loop stops once the best model has fewer than min_inliers support.
std::vector<PlaneDetection> extract_planes(const PointCloud& cloud, const RansacConfig& cfg);

/// In-plane bounding-box side lengths (ascending). The first basis axis is
/// the projection of the x-axis onto the plane, or of the y-axis when x is
/// nearly parallel to the normal.
Eigen::Vector2d plane_extent(std::span<const Eigen::Vector3d> inliers, const PlaneHessiand& plane);

/// Total least-squares plane through the points.
PlaneHessiand fit_plane(std::span<const Eigen::Vector3d> points);

}  // namespace sgraphs
