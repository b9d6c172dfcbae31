#pragma once

#include <vector>

#include "sgraphs/graph.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "sgraphs/point_cloud.hpp"

namespace sgraphs {

struct LoopClosureConfig {
  int min_keyframe_gap = 10;
  double gate = 3.0;  // m
  double voxel_size = 0.2;
  double max_correspondence = 1.0;
  /// Coarse-to-fine: the correspondence radius starts here and is halved per
  /// stage until it reaches max_correspondence.
  double initial_correspondence = 3.0;
  int max_iterations = 60;
  double convergence_translation = 1e-5;
  double convergence_rotation = 1e-5;
  double min_overlap = 0.5;
  int min_points = 50;
  double accept_threshold = 0.05;  // m^2
  double min_fitness = 1e-4;       // caps the information scale
  /// Both scans of a pair must contain crossing walls at least this long;
  /// 0 disables the check.
  double min_wall_extent = 1.0;
};

struct LoopCandidate {
  int query = -1;
  int match = -1;
  Pose3d prior;  // match -> query, from current estimates
  double distance = 0.0;
};

struct LoopConstraint {
  int query = -1;
  int match = -1;
  Pose3d relative;  // pose of the query frame in the match frame
  double fitness = 0.0;
  int iterations = 0;
  Matrix6d information = Matrix6d::Identity();
};

/// Keyframes at least min_keyframe_gap ids away from `query` whose current
/// estimate lies within the gate, nearest first.
std::vector<LoopCandidate> find_candidates(const SGraph& graph, int query, const LoopClosureConfig& cfg);

/// Point-to-point ICP aligning `query` onto `match` starting from `guess`,
/// run over a shrinking correspondence radius.
/// Throws NoConvergence when the iteration does not settle, the overlap is
/// too small, or the final fitness exceeds the acceptance threshold.
LoopConstraint register_scans(const PointCloud& query, const PointCloud& match, const Pose3d& guess,
                              const LoopClosureConfig& cfg);

/// True when two vertical walls of at least `min_wall_extent` with normals
/// more than 45 degrees apart are detected, so that registration is
/// constrained in both horizontal directions.
bool has_crossing_walls(const std::vector<PlaneDetection>& detections, double min_wall_extent);

/// Appends the loop factor (match -> query). Returns false when the pair
/// already has one.
bool add_loop_factor(SGraph& graph, const LoopConstraint& constraint);

}  // namespace sgraphs
