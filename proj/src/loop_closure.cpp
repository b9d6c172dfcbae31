#include "sgraphs/loop_closure.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "sgraphs/errors.hpp"

namespace sgraphs {

std::vector<LoopCandidate> find_candidates(const SGraph& graph, int query, const LoopClosureConfig& cfg) {
  const Keyframe& q = graph.keyframes.at(query);
  std::vector<LoopCandidate> out;
  for (const auto& [id, kf] : graph.keyframes) {
    if (std::abs(id - query) < cfg.min_keyframe_gap) continue;
    const double dist = (kf.pose.translation - q.pose.translation).norm();
    if (dist < cfg.gate) out.push_back({query, id, inverse_compose(kf.pose, q.pose), dist});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LoopCandidate& a, const LoopCandidate& b) { return a.distance < b.distance; });
  return out;
}

LoopConstraint register_scans(const PointCloud& query, const PointCloud& match, const Pose3d& guess,
                              const LoopClosureConfig& cfg) {
  const PointCloud src = cfg.voxel_size > 0 ? voxel_downsample(query, cfg.voxel_size) : query;
  const PointCloud& dst = match;
  if (static_cast<int>(src.size()) < cfg.min_points || static_cast<int>(dst.size()) < cfg.min_points) {
    throw NoConvergence("registration: too few points");
  }
  const KdTree tree(dst.points);

  std::vector<double> radii;
  for (double r = std::max(cfg.initial_correspondence, cfg.max_correspondence); r > cfg.max_correspondence * (1 + 1e-12);
       r *= 0.5) {
    radii.push_back(r);
  }
  radii.push_back(cfg.max_correspondence);

  Pose3d T = guess;
  int iter = 0;
  Eigen::Matrix3Xd a(3, src.size()), b(3, src.size());
  for (const double radius : radii) {
    const double radius_sq = radius * radius;
    bool converged = false;
    for (int k = 0; k < cfg.max_iterations; ++k, ++iter) {
      int n = 0;
      for (const auto& p : src.points) {
        const auto [idx, sq] = tree.nearest(T * p);
        if (idx < 0 || sq > radius_sq) continue;
        a.col(n) = p;
        b.col(n) = dst.points[idx];
        ++n;
      }
      if (n < cfg.min_overlap * static_cast<double>(src.size()) || n < 3) {
        throw NoConvergence("registration: overlap too small");
      }
      const Eigen::Matrix4d m = Eigen::umeyama(a.leftCols(n), b.leftCols(n), false);
      const Pose3d next(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
      const Pose3d step = inverse_compose(T, next);
      T = next;
      if (step.translation.norm() < cfg.convergence_translation &&
          rotation_angle<double>(step.rotation) < cfg.convergence_rotation) {
        converged = true;
        ++iter;
        break;
      }
    }
    if (!converged) throw NoConvergence("registration: no convergence");
  }
  const double max_sq = cfg.max_correspondence * cfg.max_correspondence;

  double sum = 0.0;
  int n = 0;
  for (const auto& p : src.points) {
    const auto [idx, sq] = tree.nearest(T * p);
    if (idx < 0 || sq > max_sq) continue;
    sum += sq;
    ++n;
  }
  if (n < cfg.min_overlap * static_cast<double>(src.size())) throw NoConvergence("registration: overlap too small");

  LoopConstraint c;
  c.relative = T;
  c.fitness = sum / n;
  c.iterations = iter;
  if (c.fitness > cfg.accept_threshold) throw NoConvergence("registration: fitness above threshold");
  Vector6d diag;
  diag << 1, 1, 1, 10, 10, 10;
  c.information = diag.asDiagonal() * (1.0 / std::max(c.fitness, cfg.min_fitness));
  return c;
}

bool has_crossing_walls(const std::vector<PlaneDetection>& detections, double min_wall_extent) {
  std::vector<Eigen::Vector2d> walls;
  for (const PlaneDetection& d : detections) {
    const Eigen::Vector3d& n = d.plane.normal;
    if (d.extent.maxCoeff() < min_wall_extent || std::abs(n.z()) > 0.5) continue;
    walls.push_back(n.head<2>().normalized());
  }
  for (std::size_t i = 0; i < walls.size(); ++i) {
    for (std::size_t j = i + 1; j < walls.size(); ++j) {
      if (std::abs(walls[i].dot(walls[j])) < std::sqrt(0.5)) return true;
    }
  }
  return false;
}

bool add_loop_factor(SGraph& graph, const LoopConstraint& c) {
  if (graph.has_loop(c.match, c.query)) return false;
  graph.add_loop_closure(c.match, c.query, c.relative, c.information);
  return true;
}

}  // namespace sgraphs
