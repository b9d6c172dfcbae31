#pragma once

#include <utility>
#include <vector>

#include "sgraphs/geometry.hpp"
#include "sgraphs/graph.hpp"
#include "sgraphs/point_cloud.hpp"
#include "sgraphs/world.hpp"

namespace sgraphs {

using TimedPoses = std::vector<std::pair<double, Pose3d>>;

/// Pairs each estimated pose with the reference pose nearest in time, keeping
/// pairs closer than max_dt.
std::vector<std::pair<Pose3d, Pose3d>> associate_by_time(const TimedPoses& estimated, const TimedPoses& reference,
                                                         double max_dt);

struct AteResult {
  double rmse = 0.0;
  int pairs = 0;
  Pose3d alignment;  // applied to the estimate
};

/// Rigid (rotation + translation) alignment of the estimate onto the
/// reference followed by the RMSE of translation differences.
/// Throws TooFewPoses below two associated pairs.
AteResult ate(const TimedPoses& estimated, const TimedPoses& reference, double max_dt);
AteResult ate(const std::vector<std::pair<Pose3d, Pose3d>>& pairs);

struct MapRmseConfig {
  double cutoff = 0.5;        // points farther than this from every face are dropped
  double face_margin = 0.25;  // in-plane tolerance around face rectangles
};

struct MapRmseResult {
  double rmse = 0.0;
  int points_used = 0;
  int points_total = 0;
  double cutoff = 0.0;
};

/// RMSE of point-to-face distances of map-frame points against the world.
/// Throws EmptyMap when no point is within the cutoff.
MapRmseResult map_rmse(const PointCloud& map_points, const WorldModel& world, const MapRmseConfig& cfg = {});

/// Every keyframe scan transformed by its current pose estimate.
PointCloud aggregate_map(const SGraph& graph);

struct StartEndError {
  double translation = 0.0;  // m
  double rotation = 0.0;     // degrees
};

StartEndError start_end_error(const TimedPoses& trajectory);

struct PlaneMatchConfig {
  double max_angle = 10.0;  // degrees
  double max_offset = 0.5;  // m
};

struct PlaneMatchReport {
  int landmarks = 0;
  int matched = 0;
  int unmatched = 0;
  int duplicates = 0;  // matched landmarks beyond the first per ground-truth plane
  int planes_observed = 0;
};

PlaneMatchReport match_planes(const SGraph& graph, const WorldModel& world, const PlaneMatchConfig& cfg = {});

}  // namespace sgraphs
