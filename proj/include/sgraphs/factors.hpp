#pragma once

#include <vector>

#include <Eigen/Core>

#include "sgraphs/geometry.hpp"
#include "sgraphs/graph.hpp"

namespace sgraphs {

// Residuals of every factor kind with analytic Jacobians. Pose Jacobians are
// taken with respect to the body-frame increment [dt; dw] used by retract().

/// Log-map error of the predicted relative pose against the measurement:
/// [t; Log(R)] of meas^-1 (prev^-1 curr).
Vector6d odometry_residual(const Pose3d& prev, const Pose3d& curr, const Pose3d& measurement);

struct OdometryJacobians {
  Matrix6d prev;
  Matrix6d curr;
};
OdometryJacobians odometry_jacobians(const Pose3d& prev, const Pose3d& curr, const Pose3d& measurement);

/// Predicted sensor-frame plane (map plane moved into the sensor frame and
/// put in closest-point form) minus the measurement, in the given chart, with
/// the azimuth difference wrapped.
Eigen::Vector3d plane_residual(const Pose3d& pose, const PlaneMinimald& plane_map, const PlaneMinimald& measurement,
                               PlaneChart chart = PlaneChart::Standard);

struct PlaneJacobians {
  Eigen::Matrix<double, 3, 6> pose;
  Eigen::Matrix3d plane;
};
PlaneJacobians plane_jacobians(const Pose3d& pose, const PlaneMinimald& plane_map, PlaneChart chart = PlaneChart::Standard);

/// d(azimuth, elevation) / d(v) for a chart vector v.
Eigen::Matrix<double, 2, 3> minimal_angle_jacobian(const Eigen::Vector3d& v);

/// Signed wall coordinate of a vertical plane along x (axis 0) or y (axis 1).
double plane_axis_coordinate(const PlaneMinimald& plane, int axis);

/// which = 1..4 for [low-x, high-x, low-y, high-y].
double room_plane_residual(const RoomNode& room, const PlaneMinimald& plane, int which);

struct RoomPlaneJacobians {
  Eigen::RowVector4d room;
  Eigen::RowVector3d plane;
};
RoomPlaneJacobians room_plane_jacobians(const RoomNode& room, const PlaneMinimald& plane, int which);

/// which = 1..2 for [low, high] along the corridor's constrained axis.
double corridor_plane_residual(const CorridorNode& corridor, const PlaneMinimald& plane, int which);

struct CorridorPlaneJacobians {
  Eigen::RowVector3d corridor;  // w.r.t. [kappa_x, kappa_y, w]
  Eigen::RowVector3d plane;
};
CorridorPlaneJacobians corridor_plane_jacobians(const CorridorNode& corridor, const PlaneMinimald& plane, int which);

/// Residual and per-variable Jacobian blocks (in Factor::variables() order)
/// of a factor at the graph's current values.
struct FactorLinearization {
  Eigen::VectorXd residual;
  std::array<Eigen::MatrixXd, 2> jacobians;
};

Eigen::VectorXd factor_residual(const SGraph& graph, const Factor& factor);
FactorLinearization linearize(const SGraph& graph, const Factor& factor);

}  // namespace sgraphs
