#include "sgraphs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Geometry>

#include "sgraphs/errors.hpp"

namespace sgraphs {

std::vector<std::pair<Pose3d, Pose3d>> associate_by_time(const TimedPoses& estimated, const TimedPoses& reference,
                                                         double max_dt) {
  std::vector<std::pair<double, std::size_t>> ref_index;
  ref_index.reserve(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) ref_index.emplace_back(reference[i].first, i);
  std::sort(ref_index.begin(), ref_index.end());

  std::vector<std::pair<Pose3d, Pose3d>> pairs;
  if (ref_index.empty()) return pairs;
  for (const auto& [stamp, pose] : estimated) {
    auto it = std::lower_bound(ref_index.begin(), ref_index.end(), std::make_pair(stamp, std::size_t{0}));
    std::size_t best = 0;
    double best_dt = std::numeric_limits<double>::infinity();
    for (auto c : {it, it == ref_index.begin() ? it : std::prev(it)}) {
      if (c == ref_index.end()) continue;
      const double dt = std::abs(c->first - stamp);
      if (dt < best_dt) {
        best_dt = dt;
        best = c->second;
      }
    }
    if (best_dt <= max_dt) pairs.emplace_back(pose, reference[best].second);
  }
  return pairs;
}

AteResult ate(const std::vector<std::pair<Pose3d, Pose3d>>& pairs) {
  if (pairs.size() < 2) throw TooFewPoses("ate needs at least two associated poses, got " + std::to_string(pairs.size()));
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    src.col(i) = pairs[i].first.translation;
    dst.col(i) = pairs[i].second.translation;
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
  AteResult r;
  r.pairs = static_cast<int>(n);
  r.alignment.rotation = T.topLeftCorner<3, 3>();
  r.alignment.translation = T.topRightCorner<3, 1>();
  const Eigen::Matrix3Xd aligned = (r.alignment.rotation * src).colwise() + r.alignment.translation;
  r.rmse = std::sqrt((aligned - dst).colwise().squaredNorm().mean());
  return r;
}

AteResult ate(const TimedPoses& estimated, const TimedPoses& reference, double max_dt) {
  return ate(associate_by_time(estimated, reference, max_dt));
}

MapRmseResult map_rmse(const PointCloud& map_points, const WorldModel& world, const MapRmseConfig& cfg) {
  MapRmseResult r;
  r.cutoff = cfg.cutoff;
  r.points_total = static_cast<int>(map_points.size());
  double sum = 0.0;
  for (const Eigen::Vector3d& p : map_points.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const WorldFace& f : world.faces) {
      const double dist = f.distance(p);
      if (dist < best && f.contains(p, cfg.face_margin)) best = dist;
    }
    if (best < cfg.cutoff) {
      sum += best * best;
      ++r.points_used;
    }
  }
  if (r.points_used == 0) throw EmptyMap("no map point lies within " + std::to_string(cfg.cutoff) + " m of the world");
  r.rmse = std::sqrt(sum / r.points_used);
  return r;
}

PointCloud aggregate_map(const SGraph& graph) {
  PointCloud out;
  for (const auto& [id, kf] : graph.keyframes) {
    if (!kf.scan) continue;
    out.points.reserve(out.size() + kf.scan->size());
    for (const Eigen::Vector3d& p : kf.scan->points) out.points.push_back(kf.pose * p);
  }
  return out;
}

StartEndError start_end_error(const TimedPoses& trajectory) {
  if (trajectory.size() < 2) return {};
  const Pose3d rel = inverse_compose(trajectory.front().second, trajectory.back().second);
  return {rel.translation.norm(), so3_log<double>(rel.rotation).norm() * 180.0 / M_PI};
}

PlaneMatchReport match_planes(const SGraph& graph, const WorldModel& world, const PlaneMatchConfig& cfg) {
  PlaneMatchReport r;
  const double cos_max = std::cos(cfg.max_angle * M_PI / 180.0);
  std::map<int, int> hits;
  for (const auto& [id, lm] : graph.planes) {
    ++r.landmarks;
    const PlaneHessiand p = lm.hessian();
    int best = -1;
    double best_offset = cfg.max_offset;
    for (const WorldPlane& w : world.planes) {
      const double c = p.normal.dot(w.plane.normal);
      if (std::abs(c) < cos_max) continue;
      const double offset = std::abs(p.distance - (c > 0 ? 1.0 : -1.0) * w.plane.distance);
      if (offset < best_offset) {
        best_offset = offset;
        best = w.id;
      }
    }
    if (best < 0) {
      ++r.unmatched;
    } else {
      ++r.matched;
      ++hits[best];
    }
  }
  r.planes_observed = static_cast<int>(hits.size());
  for (const auto& [plane, count] : hits) r.duplicates += count - 1;
  return r;
}

}  // namespace sgraphs
