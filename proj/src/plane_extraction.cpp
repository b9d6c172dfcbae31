#include "sgraphs/plane_extraction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace sgraphs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double rms_distance(std::span<const Eigen::Vector3d> pts, const PlaneHessiand& plane) {
  if (pts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : pts) {
    const double e = plane.signed_distance(p);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(pts.size()));
}

/// Refits on progressively trimmed support until no point is beyond 2.5 rms.
PlaneHessiand trimmed_refit(std::vector<Eigen::Vector3d> pts) {
  PlaneHessiand plane = fit_plane(pts);
  for (int iter = 0; iter < 20; ++iter) {
    const double rms = rms_distance(pts, plane);
    const double cut = std::max(2.5 * rms, 1e-12);
    std::vector<Eigen::Vector3d> kept;
    kept.reserve(pts.size());
    for (const auto& p : pts) {
      if (std::abs(plane.signed_distance(p)) <= cut) kept.push_back(p);
    }
    if (kept.size() == pts.size() || kept.size() < 3) break;
    pts = std::move(kept);
    plane = fit_plane(pts);
  }
  return plane;
}

}  // namespace

PlaneHessiand fit_plane(std::span<const Eigen::Vector3d> points) {
  if (points.size() < 3) throw TooFewPoints("plane fit needs at least 3 points");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d q = p - centroid;
    scatter += q * q.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  const Eigen::Vector3d n = es.eigenvectors().col(0).normalized();
  return {n, n.dot(centroid)};
}

PointCloud preprocess(const PointCloud& cloud, const FilterConfig& cfg) {
  if (cloud.empty()) throw EmptyCloud("preprocess: input cloud is empty");
  PointCloud down = voxel_downsample(cloud, cfg.voxel_size);
  if (down.empty()) throw EmptyCloud("preprocess: voxel grid produced no points");

  double mean = 0.0;
  for (const auto& p : down.points) mean += p.norm();
  mean /= static_cast<double>(down.size());
  double var = 0.0;
  for (const auto& p : down.points) {
    const double e = p.norm() - mean;
    var += e * e;
  }
  const double stddev = std::sqrt(var / static_cast<double>(down.size()));
  const double limit = std::max(cfg.k_sigma * stddev, 1e-9 * std::max(mean, 1.0));

  PointCloud out;
  out.timestamp = cloud.timestamp;
  out.points.reserve(down.size());
  for (const auto& p : down.points) {
    if (std::abs(p.norm() - mean) <= limit) out.points.push_back(p);
  }
  if (out.empty()) throw EmptyCloud("preprocess: all points removed by range filter");
  return out;
}

Eigen::Vector2d plane_extent(std::span<const Eigen::Vector3d> inliers, const PlaneHessiand& plane) {
  if (inliers.size() < 3) throw TooFewPoints("plane_extent needs at least 3 inliers");
  const Eigen::Vector3d& n = plane.normal;
  Eigen::Vector3d u = Eigen::Vector3d::UnitX() - n.x() * n;
  if (u.norm() < 0.5) u = Eigen::Vector3d::UnitY() - n.y() * n;
  u.normalize();
  const Eigen::Vector3d v = n.cross(u).normalized();

  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  for (const auto& p : inliers) {
    const Eigen::Vector2d c(p.dot(u), p.dot(v));
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  Eigen::Vector2d e = hi - lo;
  if (e[0] > e[1]) std::swap(e[0], e[1]);
  return e;
}

std::vector<PlaneDetection> extract_planes(const PointCloud& cloud, const RansacConfig& cfg) {
  if (static_cast<int>(cloud.size()) < std::max(cfg.min_inliers, 3)) {
    throw TooFewPoints("extract_planes: cloud smaller than min_inliers");
  }
  std::mt19937_64 rng(splitmix64(cfg.seed ^ std::bit_cast<std::uint64_t>(cloud.timestamp)));

  std::vector<int> remaining(cloud.size());
  for (int i = 0; i < static_cast<int>(cloud.size()); ++i) remaining[i] = i;

  std::vector<PlaneDetection> detections;
  const auto& pts = cloud.points;

  while (static_cast<int>(remaining.size()) >= cfg.min_inliers) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    int best_count = 0;
    PlaneHessiand best;
    int iters_needed = cfg.max_iters;
    for (int it = 0; it < std::min(cfg.max_iters, iters_needed); ++it) {
      const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
      if (a == b || b == c || a == c) continue;
      const Eigen::Vector3d& p0 = pts[remaining[a]];
      Eigen::Vector3d n = (pts[remaining[b]] - p0).cross(pts[remaining[c]] - p0);
      const double norm = n.norm();
      if (norm < 1e-9) continue;
      n /= norm;
      const PlaneHessiand candidate{n, n.dot(p0)};
      int count = 0;
      for (int idx : remaining) {
        if (std::abs(candidate.signed_distance(pts[idx])) <= cfg.threshold) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = candidate;
        // adaptive bound for 99.9% confidence of an all-inlier sample
        const double w = static_cast<double>(count) / static_cast<double>(remaining.size());
        const double denom = std::log(1.0 - w * w * w);
        if (denom < 0.0) iters_needed = static_cast<int>(std::ceil(std::log(1e-3) / denom)) + 1;
      }
    }
    if (best_count < cfg.min_inliers) break;

    std::vector<Eigen::Vector3d> support;
    for (int idx : remaining) {
      if (std::abs(best.signed_distance(pts[idx])) <= cfg.threshold) support.push_back(pts[idx]);
    }
    const PlaneHessiand refined = trimmed_refit(std::move(support));

    PlaneDetection det;
    std::vector<int> rest;
    std::vector<Eigen::Vector3d> inlier_pts;
    for (int idx : remaining) {
      if (std::abs(refined.signed_distance(pts[idx])) <= cfg.threshold) {
        det.inliers.push_back(idx);
        inlier_pts.push_back(pts[idx]);
      } else {
        rest.push_back(idx);
      }
    }
    if (static_cast<int>(det.inliers.size()) < cfg.min_inliers) break;
    remaining = std::move(rest);

    try {
      det.plane = normalize_plane<double>(refined.normal * refined.distance, cfg.min_plane_distance);
    } catch (const DegeneratePlane&) {
      continue;
    }
    det.inlier_count = static_cast<int>(det.inliers.size());
    det.inlier_rms = rms_distance(inlier_pts, det.plane);
    det.extent = plane_extent(inlier_pts, det.plane);
    det.centroid = Eigen::Vector3d::Zero();
    for (const auto& p : inlier_pts) {
      det.centroid += p;
      det.bounds.extend(p);
    }
    det.centroid /= static_cast<double>(inlier_pts.size());
    detections.push_back(std::move(det));
  }
  return detections;
}

}  // namespace sgraphs
