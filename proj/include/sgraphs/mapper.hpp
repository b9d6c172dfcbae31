#pragma once

#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

#include "sgraphs/graph.hpp"
#include "sgraphs/loop_closure.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "sgraphs/solver.hpp"
#include "sgraphs/topology.hpp"
#include "sgraphs/tracking.hpp"
#include "sgraphs/world.hpp"

namespace sgraphs {

struct MapperConfig {
  FilterConfig filter;
  RansacConfig ransac;
  KeyframePolicy keyframes;
  OdometryNoiseModel odometry;
  Eigen::Matrix3d plane_information = default_plane_information();
  double association_gate = 3.0;
  /// Detections whose larger extent is below this are ignored.
  double min_detection_extent = 0.5;
  double support_margin = 1.0;
  RoomCriterionConfig topology;
  LoopClosureConfig loop;
  SolverConfig solver;
  bool enable_topology = true;
  bool enable_loop_closure = true;
};

MapperConfig mapper_config_from_json(const nlohmann::json& j);
nlohmann::json mapper_config_to_json(const MapperConfig& cfg);

struct MapperStats {
  int keyframes = 0;
  int detections = 0;
  int landmarks_created = 0;
  int rooms_created = 0;
  int corridors_created = 0;
  int corridors_upgraded = 0;
  int planes_merged = 0;
  int loop_candidates = 0;
  int loops_accepted = 0;
  int optimizations = 0;
  double last_cost = 0.0;
};

/// Incremental front end plus batch back end: keyframe selection, plane
/// extraction and association, topology and loop closure, then a full
/// re-optimization whenever the graph changed.
class Mapper {
public:
  explicit Mapper(MapperConfig cfg);

  /// Feeds one odometry reading with its scan (sensor frame). Returns the id
  /// of the keyframe created for it, if any.
  std::optional<int> process(double stamp, const Pose3d& odom, const PointCloud& scan);

  const SGraph& graph() const { return graph_; }
  SGraph& graph() { return graph_; }
  const MapperStats& stats() const { return stats_; }
  const MapperConfig& config() const { return cfg_; }

  /// Every processed frame expressed through its latest keyframe estimate:
  /// pose_kf * inverse(odom_kf) * odom.
  std::vector<std::pair<double, Pose3d>> trajectory() const;

private:
  void optimize_graph();

  struct FrameRecord {
    double stamp;
    int keyframe;
    Pose3d odom;
  };

  MapperConfig cfg_;
  SGraph graph_;
  MapperStats stats_;
  std::vector<FrameRecord> frames_;
  std::set<int> registrable_;  // keyframes whose scans see crossing walls
};

struct RunResult {
  SGraph graph;
  MapperStats stats;
  std::vector<std::pair<double, Pose3d>> keyframe_trajectory;
  std::vector<std::pair<double, Pose3d>> trajectory;  // every frame
  double seconds = 0.0;
};

RunResult run_pipeline(const std::vector<SimFrame>& frames, const MapperConfig& cfg);

}  // namespace sgraphs
