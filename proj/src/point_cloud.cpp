#include "sgraphs/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace sgraphs {

PointCloud transform_cloud(const Pose3d& pose, const PointCloud& cloud) {
  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(pose * p);
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  PointCloud out;
  out.timestamp = cloud.timestamp;
  if (cloud.empty()) return out;
  if (voxel_size <= 0.0) return cloud;

  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::vector<std::pair<Key, int>> keyed;
  keyed.reserve(cloud.size());
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) {
    const Eigen::Vector3d& p = cloud.points[i];
    keyed.emplace_back(Key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                           static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                           static_cast<std::int64_t>(std::floor(p.z() / voxel_size))},
                       i);
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::size_t begin = 0;
  while (begin < keyed.size()) {
    std::size_t end = begin;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    while (end < keyed.size() && keyed[end].first == keyed[begin].first) {
      centroid += cloud.points[keyed[end].second];
      ++end;
    }
    centroid /= static_cast<double>(end - begin);
    int best = keyed[begin].second;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t k = begin; k < end; ++k) {
      const double sq = (cloud.points[keyed[k].second] - centroid).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = keyed[k].second;
      }
    }
    out.points.push_back(cloud.points[best]);
    begin = end;
  }
  return out;
}

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
  index_.resize(points_.size());
  std::iota(index_.begin(), index_.end(), 0);
  if (!points_.empty()) build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= 8) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[index_[i]]);
    hi = hi.cwiseMax(points_[index_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[index_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node_id, const Eigen::Vector3d& q, int& best, double& best_sq) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const double sq = (points_[index_[i]] - q).squaredNorm();
      if (sq < best_sq) {
        best_sq = sq;
        best = index_[i];
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  search(near, q, best, best_sq);
  if (diff * diff < best_sq) search(far, q, best, best_sq);
}

std::pair<int, double> KdTree::nearest(const Eigen::Vector3d& query) const {
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  if (!nodes_.empty()) search(0, query, best, best_sq);
  return {best, best_sq};
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace sgraphs
