#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgraphs/graph.hpp"
#include "sgraphs/world.hpp"

namespace sgraphs {

using Trajectory = std::vector<std::pair<double, Pose3d>>;

/// TUM format: "timestamp tx ty tz qx qy qz qw" per line, full precision.
void write_tum(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_tum(const std::filesystem::path& path);

/// ASCII PLY with double x y z vertex properties.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

LayoutSpec layout_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const LayoutSpec& layout);
NoiseSpec noise_from_json(const nlohmann::json& j);
nlohmann::json noise_to_json(const NoiseSpec& noise);

nlohmann::json world_to_json(const WorldModel& world);
WorldModel world_from_json(const nlohmann::json& j);

constexpr int kGraphSchemaVersion = 1;

/// Snapshot of every variable and factor. Scans are not included.
nlohmann::json graph_to_json(const SGraph& graph);
SGraph graph_from_json(const nlohmann::json& j);

/// Dataset directory: ground_truth.tum, odometry.tum, scans/NNNNNN.ply, world.json.
void write_dataset(const std::filesystem::path& dir, const WorldModel& world, const std::vector<SimFrame>& frames);

struct Dataset {
  WorldModel world;
  std::vector<SimFrame> frames;
  bool has_world = false;
};
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace sgraphs
