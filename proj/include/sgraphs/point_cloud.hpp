#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sgraphs/geometry.hpp"

namespace sgraphs {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  double timestamp = 0.0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

PointCloud transform_cloud(const Pose3d& pose, const PointCloud& cloud);

/// One representative per occupied voxel: the input point nearest to the
/// voxel centroid. Output is ordered by voxel key, so it is deterministic.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

/// Static 3-D kd-tree over a point set for nearest-neighbour queries.
class KdTree {
public:
  KdTree() = default;
  explicit KdTree(std::span<const Eigen::Vector3d> points);

  /// Index and squared distance of the nearest point; index -1 when empty.
  std::pair<int, double> nearest(const Eigen::Vector3d& query) const;

  std::size_t size() const { return points_.size(); }

private:
  struct Node {
    int begin = 0;
    int end = 0;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end, int depth);
  void search(int node, const Eigen::Vector3d& q, int& best, double& best_sq) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
};

/// 64-bit FNV-1a over raw bytes, used for stream digests.
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace sgraphs
