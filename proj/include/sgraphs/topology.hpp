#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sgraphs/graph.hpp"

namespace sgraphs {

struct RoomCriterionConfig {
  double min_width = 0.5;         // lambda
  double extent_ratio_max = 3.0;
  /// Pairs no wider than this form corridors; rooms need both widths above it.
  double corridor_max_width = 2.5;
  /// Largest wall offset at which a re-detected wall is merged into the room's landmark.
  double merge_max_offset = 1.0;
  double room_information = 1.0 / (0.1 * 0.1);
  double corridor_information = 1.0 / (0.1 * 0.1);
};

/// A vertical map plane considered for a room or corridor.
struct WallCandidate {
  int id = -1;
  PlaneHessiand plane;  // map frame, closest-point form
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

WallCandidate wall_candidate(const SGraph& graph, int plane);

/// Room test on two x-walls and two y-walls (any order within each pair).
/// Normals are oriented toward `viewpoint` before the opposed-normal test;
/// walls are ordered by their signed axis coordinate d * sign(n_axis).
std::optional<RoomNode> detect_room(const std::array<WallCandidate, 4>& walls, const Eigen::Vector3d& viewpoint,
                                    const RoomCriterionConfig& cfg);

/// Corridor test on two walls of the same vertical class. The free center
/// component comes from the mean of the wall centroids.
std::optional<CorridorNode> detect_corridor(const WallCandidate& a, const WallCandidate& b,
                                            const Eigen::Vector3d& viewpoint, const RoomCriterionConfig& cfg);

enum class AssociationOutcome { Matched, New, Rejected };

struct RoomAssociation {
  AssociationOutcome outcome = AssociationOutcome::New;
  int id = -1;
  std::vector<std::pair<int, int>> merges;  // (survivor, duplicate)
};

/// Matches a candidate against existing rooms by center distance below half
/// the smallest width. Differing wall landmarks of a match are listed as
/// merges when they are unlinked and within merge_max_offset; otherwise the
/// candidate is rejected. The graph is not modified.
RoomAssociation associate_room(const SGraph& graph, const RoomNode& candidate, const RoomCriterionConfig& cfg);
RoomAssociation associate_corridor(const SGraph& graph, const CorridorNode& candidate, const RoomCriterionConfig& cfg);

struct TopologyUpdate {
  int rooms_created = 0;
  int corridors_created = 0;
  int corridors_upgraded = 0;
  int planes_merged = 0;
};

/// Runs room and corridor detection for one keyframe over the given visible
/// plane landmarks and applies the results to the graph.
TopologyUpdate update_topology(SGraph& graph, int keyframe, const std::vector<int>& visible_planes,
                               const RoomCriterionConfig& cfg);

}  // namespace sgraphs
