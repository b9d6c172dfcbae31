#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgraphs/geometry.hpp"
#include "sgraphs/graph.hpp"
#include "sgraphs/point_cloud.hpp"

namespace sgraphs {

// ---------------------------------------------------------------------------
// Layout and run specification
// ---------------------------------------------------------------------------

enum class SpaceKind { Room, Corridor };

/// Axis-aligned free space; its interior wall faces are at min/max.
struct SpaceSpec {
  std::string name;
  SpaceKind kind = SpaceKind::Room;
  Eigen::Vector2d min = Eigen::Vector2d::Zero();
  Eigen::Vector2d max = Eigen::Vector2d::Zero();
};

/// Opening between two spaces separated by a wall gap. `from`/`to` run along
/// the wall, `height` is the opening height above the floor.
struct DoorSpec {
  std::string a;
  std::string b;
  double from = 0.0;
  double to = 0.0;
  double height = 2.0;
};

struct SensorSpec {
  int rings = 16;
  double min_elevation = -15.0;  // degrees
  double max_elevation = 15.0;
  int azimuth_steps = 360;
  double max_range = 50.0;
};

struct TrajectorySpec {
  std::vector<Eigen::Vector3d> waypoints;  // x, y, yaw
  double speed = 0.5;     // m/s
  double yaw_rate = 0.5;  // rad/s
  double scan_rate = 1.0; // Hz
  int loops = 1;
  double sensor_height = 1.0;
};

struct LayoutSpec {
  double height = 2.6;
  std::vector<SpaceSpec> spaces;
  std::vector<DoorSpec> doors;
  TrajectorySpec trajectory;
  SensorSpec sensor;
};

struct NoiseSpec {
  double sigma_t = 0.0;      // m / sqrt(m), per axis
  double sigma_r = 0.0;      // rad / sqrt(rad), per axis
  double range_sigma = 0.0;  // m
  bool planar = false;       // restrict odometry noise to x, y, yaw
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// World model
// ---------------------------------------------------------------------------

struct WorldPlane {
  int id = 0;
  PlaneHessiand plane;  // world frame, closest-point form
};

/// Rectangle on the plane x[axis] == coord, spanning [lo, hi] in the two
/// other axes taken in cyclic order (axis+1, axis+2).
struct WorldFace {
  int plane = 0;
  int axis = 0;
  double coord = 0.0;
  Eigen::Vector2d lo = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi = Eigen::Vector2d::Zero();

  bool contains(const Eigen::Vector3d& p, double margin = 0.0) const;
  double distance(const Eigen::Vector3d& p) const;  // to the plane
};

struct WorldRoom {
  std::string name;
  RoomNode node;  // plane ids refer to WorldModel::planes
};

struct WorldCorridor {
  std::string name;
  CorridorNode node;
};

struct WorldModel {
  std::vector<WorldPlane> planes;
  std::vector<WorldFace> faces;
  std::vector<WorldRoom> rooms;
  std::vector<WorldCorridor> corridors;
  int floor = -1;
  int ceiling = -1;
  double height = 0.0;
  std::uint64_t seed = 0;

  const WorldPlane& plane(int id) const { return planes.at(static_cast<std::size_t>(id)); }
};

/// Builds wall, jamb, floor and ceiling faces plus analytic room and corridor
/// annotations. Throws InvalidLayout for overlapping spaces or doors that do
/// not connect two facing walls.
WorldModel generate_world(const LayoutSpec& layout, std::uint64_t seed = 0);

/// Nearest face hit by the ray, as (range, face index).
std::optional<std::pair<double, int>> ray_cast(const WorldModel& world, const Eigen::Vector3d& origin,
                                               const Eigen::Vector3d& direction, double max_range);

/// Unit ray directions of the scan pattern in the sensor frame.
std::vector<Eigen::Vector3d> scan_directions(const SensorSpec& sensor);

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimFrame {
  double stamp = 0.0;
  Pose3d ground_truth;
  Pose3d odometry;
  PointCloud scan;  // sensor frame
};

/// Ground-truth poses along the waypoint tour (turn in place toward the next
/// waypoint, then drive straight), sampled at the scan rate.
std::vector<std::pair<double, Pose3d>> sample_trajectory(const TrajectorySpec& traj);

/// Odometry from ground truth: each increment is perturbed in its tangent
/// space with sigma_t * sqrt(length) and sigma_r * sqrt(angle).
std::vector<Pose3d> simulate_odometry(const std::vector<Pose3d>& ground_truth, const NoiseSpec& noise);

PointCloud simulate_scan(const WorldModel& world, const Pose3d& pose, const SensorSpec& sensor, double range_sigma,
                         std::uint64_t seed);

std::vector<SimFrame> simulate_run(const WorldModel& world, const LayoutSpec& layout, const NoiseSpec& noise);

/// FNV-1a digest of every stamp, pose and scan point of a stream.
std::uint64_t stream_digest(const std::vector<SimFrame>& frames);

}  // namespace sgraphs
