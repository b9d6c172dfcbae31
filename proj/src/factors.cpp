#include "sgraphs/factors.hpp"

#include <cmath>

namespace sgraphs {

namespace {

struct PlanePrediction {
  Eigen::Vector3d n_sensor;  // before the closest-point flip
  double d_sensor = 0.0;     // before the closest-point flip
  double sign = 1.0;
  Eigen::Vector3d v;         // chart vector after the flip
  Eigen::Vector3d n_map;
  Eigen::Matrix<double, 3, 2> dn_map;  // d n_map / d(azimuth, elevation)
};

PlanePrediction predict_plane(const Pose3d& pose, const PlaneMinimald& plane_map, PlaneChart chart) {
  const Eigen::Matrix3d C = chart_rotation<double>(chart);
  const double ca = std::cos(plane_map.azimuth), sa = std::sin(plane_map.azimuth);
  const double ce = std::cos(plane_map.elevation), se = std::sin(plane_map.elevation);
  PlanePrediction p;
  const Eigen::Vector3d u(ce * ca, ce * sa, se);
  Eigen::Matrix<double, 3, 2> du;
  du << -ce * sa, -se * ca, ce * ca, -se * sa, 0.0, ce;
  p.n_map = C.transpose() * u;
  p.dn_map = C.transpose() * du;
  p.n_sensor = pose.rotation.transpose() * p.n_map;
  p.d_sensor = plane_map.distance - p.n_map.dot(pose.translation);
  p.sign = p.d_sensor < 0.0 ? -1.0 : 1.0;
  p.v = C * (p.sign * p.n_sensor);
  return p;
}

}  // namespace

Vector6d odometry_residual(const Pose3d& prev, const Pose3d& curr, const Pose3d& measurement) {
  return pose_log(inverse_compose(measurement, inverse_compose(prev, curr)));
}

OdometryJacobians odometry_jacobians(const Pose3d& prev, const Pose3d& curr, const Pose3d& measurement) {
  const Pose3d rel = inverse_compose(prev, curr);
  const Pose3d err = inverse_compose(measurement, rel);
  const Eigen::Matrix3d jr_inv = so3_right_jacobian_inv<double>(so3_log<double>(err.rotation));
  const Eigen::Matrix3d mrt = measurement.rotation.transpose();

  OdometryJacobians J;
  J.curr.setZero();
  J.curr.topLeftCorner<3, 3>() = err.rotation;
  J.curr.bottomRightCorner<3, 3>() = jr_inv;

  J.prev.setZero();
  J.prev.topLeftCorner<3, 3>() = -mrt;
  J.prev.topRightCorner<3, 3>() = mrt * skew<double>(rel.translation);
  J.prev.bottomRightCorner<3, 3>() = -jr_inv * rel.rotation.transpose();
  return J;
}

Eigen::Matrix<double, 2, 3> minimal_angle_jacobian(const Eigen::Vector3d& v) {
  Eigen::Matrix<double, 2, 3> J = Eigen::Matrix<double, 2, 3>::Zero();
  const double rho2 = v.x() * v.x() + v.y() * v.y();
  if (rho2 < 1e-18) return J;  // pole: azimuth is fixed by convention
  const double rho = std::sqrt(rho2);
  const double n2 = rho2 + v.z() * v.z();
  J.row(0) << -v.y() / rho2, v.x() / rho2, 0.0;
  J.row(1) << -v.z() * v.x() / (rho * n2), -v.z() * v.y() / (rho * n2), rho / n2;
  return J;
}

Eigen::Vector3d plane_residual(const Pose3d& pose, const PlaneMinimald& plane_map, const PlaneMinimald& measurement,
                               PlaneChart chart) {
  const PlanePrediction p = predict_plane(pose, plane_map, chart);
  const double rho = std::sqrt(p.v.x() * p.v.x() + p.v.y() * p.v.y());
  const double azimuth = std::abs(p.v.z()) > 1.0 - 1e-9 ? 0.0 : std::atan2(p.v.y(), p.v.x());
  const double elevation = std::atan2(p.v.z(), rho);
  return {wrap_angle(azimuth - measurement.azimuth), elevation - measurement.elevation,
          p.sign * p.d_sensor - measurement.distance};
}

PlaneJacobians plane_jacobians(const Pose3d& pose, const PlaneMinimald& plane_map, PlaneChart chart) {
  const PlanePrediction p = predict_plane(pose, plane_map, chart);
  const Eigen::Matrix3d C = chart_rotation<double>(chart);
  const Eigen::Matrix<double, 2, 3> A = minimal_angle_jacobian(p.v) * (p.sign * C);

  PlaneJacobians J;
  J.pose.setZero();
  J.pose.block<2, 3>(0, 3) = A * skew<double>(p.n_sensor);
  J.pose.block<1, 3>(2, 0) = -p.sign * p.n_sensor.transpose();

  J.plane.setZero();
  J.plane.block<2, 2>(0, 0) = A * pose.rotation.transpose() * p.dn_map;
  J.plane.block<1, 2>(2, 0) = -p.sign * pose.translation.transpose() * p.dn_map;
  J.plane(2, 2) = p.sign;
  return J;
}

double plane_axis_coordinate(const PlaneMinimald& plane, int axis) {
  const Eigen::Vector3d n = minimal_direction(plane.azimuth, plane.elevation);
  return n[axis] >= 0.0 ? plane.distance : -plane.distance;
}

namespace {

double axis_sign(const PlaneMinimald& plane, int axis) {
  return minimal_direction(plane.azimuth, plane.elevation)[axis] >= 0.0 ? 1.0 : -1.0;
}

void check_which(int which, int count) {
  if (which < 1 || which > count) throw Error("plane slot out of range");
}

}  // namespace

double room_plane_residual(const RoomNode& room, const PlaneMinimald& plane, int which) {
  check_which(which, 4);
  const int axis = (which - 1) / 2;
  const double side = (which % 2 == 1) ? -1.0 : 1.0;
  return (room.center[axis] + side * room.widths[axis] / 2.0) - plane_axis_coordinate(plane, axis);
}

RoomPlaneJacobians room_plane_jacobians(const RoomNode& /*room*/, const PlaneMinimald& plane, int which) {
  check_which(which, 4);
  const int axis = (which - 1) / 2;
  const double side = (which % 2 == 1) ? -1.0 : 1.0;
  RoomPlaneJacobians J;
  J.room.setZero();
  J.room[axis] = 1.0;
  J.room[2 + axis] = side / 2.0;
  J.plane << 0.0, 0.0, -axis_sign(plane, axis);
  return J;
}

double corridor_plane_residual(const CorridorNode& corridor, const PlaneMinimald& plane, int which) {
  check_which(which, 2);
  const int axis = corridor.constrained_index();
  const double side = which == 1 ? -1.0 : 1.0;
  return (corridor.center[axis] + side * corridor.width / 2.0) - plane_axis_coordinate(plane, axis);
}

CorridorPlaneJacobians corridor_plane_jacobians(const CorridorNode& corridor, const PlaneMinimald& plane, int which) {
  check_which(which, 2);
  const int axis = corridor.constrained_index();
  const double side = which == 1 ? -1.0 : 1.0;
  CorridorPlaneJacobians J;
  J.corridor.setZero();
  J.corridor[axis] = 1.0;
  J.corridor[2] = side / 2.0;
  J.plane << 0.0, 0.0, -axis_sign(plane, axis);
  return J;
}

Eigen::VectorXd factor_residual(const SGraph& graph, const Factor& f) {
  switch (f.kind) {
    case FactorKind::Odometry:
    case FactorKind::LoopClosure:
      return odometry_residual(graph.keyframes.at(f.ids[0]).pose, graph.keyframes.at(f.ids[1]).pose,
                               f.pose_measurement);
    case FactorKind::PosePlane: {
      const PlaneLandmark& lm = graph.planes.at(f.ids[1]);
      return plane_residual(graph.keyframes.at(f.ids[0]).pose, lm.params, f.plane_measurement, lm.chart());
    }
    case FactorKind::RoomPlane:
      return Eigen::VectorXd::Constant(
          1, room_plane_residual(graph.rooms.at(f.ids[0]), graph.planes.at(f.ids[1]).params, f.slot + 1));
    case FactorKind::CorridorPlane:
      return Eigen::VectorXd::Constant(
          1, corridor_plane_residual(graph.corridors.at(f.ids[0]), graph.planes.at(f.ids[1]).params, f.slot + 1));
  }
  return {};
}

FactorLinearization linearize(const SGraph& graph, const Factor& f) {
  FactorLinearization lin;
  lin.residual = factor_residual(graph, f);
  switch (f.kind) {
    case FactorKind::Odometry:
    case FactorKind::LoopClosure: {
      const auto J = odometry_jacobians(graph.keyframes.at(f.ids[0]).pose, graph.keyframes.at(f.ids[1]).pose,
                                        f.pose_measurement);
      lin.jacobians = {J.prev, J.curr};
      break;
    }
    case FactorKind::PosePlane: {
      const PlaneLandmark& lm = graph.planes.at(f.ids[1]);
      const auto J = plane_jacobians(graph.keyframes.at(f.ids[0]).pose, lm.params, lm.chart());
      lin.jacobians = {J.pose, J.plane};
      break;
    }
    case FactorKind::RoomPlane: {
      const auto J = room_plane_jacobians(graph.rooms.at(f.ids[0]), graph.planes.at(f.ids[1]).params, f.slot + 1);
      lin.jacobians = {J.room, J.plane};
      break;
    }
    case FactorKind::CorridorPlane: {
      const auto J =
          corridor_plane_jacobians(graph.corridors.at(f.ids[0]), graph.planes.at(f.ids[1]).params, f.slot + 1);
      lin.jacobians = {J.corridor, J.plane};
      break;
    }
  }
  return lin;
}

}  // namespace sgraphs
