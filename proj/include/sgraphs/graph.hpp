#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "sgraphs/geometry.hpp"
#include "sgraphs/point_cloud.hpp"

namespace sgraphs {

struct Keyframe {
  int id = 0;
  double stamp = 0.0;
  Pose3d pose;  // map frame
  Pose3d odom;  // odometry frame, as received
  std::shared_ptr<const PointCloud> scan;  // preprocessed, sensor frame
};

/// Plane landmark. `params` are in the minimal chart of `cls`
/// (see chart_for), and are not re-normalized while optimizing.
struct PlaneLandmark {
  int id = 0;
  PlaneClass cls = PlaneClass::XVertical;
  PlaneMinimald params;
  Eigen::Vector2d extent = Eigen::Vector2d::Zero();  // componentwise max over observations
  Eigen::Vector3d centroid_sum = Eigen::Vector3d::Zero();
  int centroid_count = 0;
  Eigen::Vector3d facing = Eigen::Vector3d::Zero();  // map-frame direction toward the observers, zero if unknown
  Eigen::AlignedBox3d support;  // map-frame bounds of the observed inliers, empty if unknown

  PlaneChart chart() const { return chart_for(cls); }
  PlaneHessiand hessian() const { return from_minimal(params, chart()); }
  Eigen::Vector3d centroid() const {
    return centroid_count > 0 ? Eigen::Vector3d(centroid_sum / centroid_count) : Eigen::Vector3d::Zero();
  }
};

/// Four-wall room: center (rho_x, rho_y), widths (w_x, w_y), and plane links
/// ordered [low-x, high-x, low-y, high-y].
struct RoomNode {
  int id = -1;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Vector2d widths = Eigen::Vector2d::Zero();
  std::array<int, 4> planes{-1, -1, -1, -1};

  Eigen::Vector4d vector() const { return {center.x(), center.y(), widths.x(), widths.y()}; }
};

enum class CorridorAxis { X, Y };

/// Two-wall corridor. An X corridor is bounded by two x-planes, so its
/// constrained center component is kappa_x; kappa_y is carried along.
struct CorridorNode {
  int id = -1;
  CorridorAxis axis = CorridorAxis::X;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double width = 0.0;
  std::array<int, 2> planes{-1, -1};

  int constrained_index() const { return axis == CorridorAxis::X ? 0 : 1; }
  Eigen::Vector3d vector() const { return {center.x(), center.y(), width}; }
};

enum class FactorKind { Odometry, PosePlane, RoomPlane, CorridorPlane, LoopClosure };

const char* to_string(FactorKind k);
FactorKind factor_kind_from_string(const std::string& s);

enum class VariableKind { Keyframe, Plane, Room, Corridor };

struct VariableRef {
  VariableKind kind = VariableKind::Keyframe;
  int id = 0;

  auto operator<=>(const VariableRef&) const = default;
};

/// Local (tangent) dimension of a variable kind.
int tangent_dim(VariableKind kind);

struct Factor {
  FactorKind kind = FactorKind::Odometry;
  /// Odometry/LoopClosure: (from keyframe, to keyframe); PosePlane: (keyframe, plane);
  /// RoomPlane: (room, plane); CorridorPlane: (corridor, plane).
  std::array<int, 2> ids{0, 0};
  Pose3d pose_measurement;           // Odometry, LoopClosure
  PlaneMinimald plane_measurement;   // PosePlane, sensor frame, in the landmark's chart
  int slot = 0;                      // RoomPlane 0..3, CorridorPlane 0..1
  Eigen::MatrixXd information;

  std::array<VariableRef, 2> variables() const;
  int residual_dim() const;
  bool robust() const { return kind == FactorKind::PosePlane || kind == FactorKind::LoopClosure; }
};

/// The situational graph: keyframes, planes, rooms, corridors and the
/// factors linking them. The keyframe with the smallest id is the gauge
/// anchor and is held fixed by the solver.
class SGraph {
public:
  std::map<int, Keyframe> keyframes;
  std::map<int, PlaneLandmark> planes;
  std::map<int, RoomNode> rooms;
  std::map<int, CorridorNode> corridors;
  std::vector<Factor> factors;
  Pose3d map_to_odom;

  int add_keyframe(double stamp, const Pose3d& pose, const Pose3d& odom, std::shared_ptr<const PointCloud> scan = nullptr);
  int add_plane(PlaneClass cls, const PlaneMinimald& params);
  int add_room(RoomNode room);
  int add_corridor(CorridorNode corridor);

  void add_odometry(int from, int to, const Pose3d& measurement, const Matrix6d& information);
  void add_loop_closure(int from, int to, const Pose3d& measurement, const Matrix6d& information);
  void add_pose_plane(int keyframe, int plane, const PlaneMinimald& measurement, const Eigen::Matrix3d& information);
  void add_room_plane(int room, int slot, double information);
  void add_corridor_plane(int corridor, int slot, double information);

  /// Re-points every factor of `duplicate` to `survivor` and drops the
  /// duplicate landmark. Room/corridor links to the duplicate are re-pointed too.
  void merge_planes(int survivor, int duplicate);

  /// Removes a corridor node and its plane factors.
  void remove_corridor(int id);

  /// Room or corridor holding the plane, if any.
  std::optional<VariableRef> plane_owner(int plane) const;

  bool has_loop(int from, int to) const;

  std::optional<int> last_keyframe() const;
  std::optional<int> anchor() const;

  /// Checks the structural invariants; returns a description of the first
  /// violation, or an empty string.
  std::string validate() const;

  // Variable access for solvers and tests.
  Eigen::VectorXd local_values(VariableRef v) const;  // not meaningful for keyframes
  void retract(VariableRef v, const Eigen::VectorXd& delta);

  int next_keyframe_id() const { return next_keyframe_; }
  int next_plane_id() const { return next_plane_; }
  int next_room_id() const { return next_room_; }
  int next_corridor_id() const { return next_corridor_; }
  void set_next_ids(int kf, int plane, int room, int corridor) {
    next_keyframe_ = kf;
    next_plane_ = plane;
    next_room_ = room;
    next_corridor_ = corridor;
  }

private:
  void check_variable(VariableRef v) const;

  int next_keyframe_ = 0;
  int next_plane_ = 0;
  int next_room_ = 0;
  int next_corridor_ = 0;
};

}  // namespace sgraphs
