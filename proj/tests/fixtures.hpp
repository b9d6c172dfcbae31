#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sgraphs/factors.hpp"
#include "sgraphs/graph.hpp"
#include "sgraphs/plane_extraction.hpp"
#include "test_util.hpp"

namespace sgraphs::test {

inline Eigen::Vector3d axis_normal(std::mt19937_64& rng, PlaneClass cls) {
  std::uniform_real_distribution<double> tilt(-0.3, 0.3);
  std::bernoulli_distribution flip(0.5);
  Eigen::Vector3d n(tilt(rng), tilt(rng), tilt(rng));
  const int axis = cls == PlaneClass::XVertical ? 0 : cls == PlaneClass::YVertical ? 1 : 2;
  n[axis] = flip(rng) ? -1.0 : 1.0;
  return n.normalized();
}

/// Random graph with every factor kind around well-conditioned values.
inline SGraph random_graph(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SGraph g;
  for (int k = 0; k < 3; ++k) {
    g.add_keyframe(k, random_pose(rng, 2.0, 2.0), Pose3d::identity());
  }
  auto noisy_pose = [&](const Pose3d& p) {
    Vector6d e;
    e << 0.3 * random_vector(rng, 1.0), 0.3 * random_vector(rng, 1.0);
    return retract<double>(p, e);
  };
  g.add_odometry(0, 1, noisy_pose(inverse_compose(g.keyframes[0].pose, g.keyframes[1].pose)), Matrix6d::Identity());
  g.add_odometry(1, 2, noisy_pose(inverse_compose(g.keyframes[1].pose, g.keyframes[2].pose)), Matrix6d::Identity());
  g.add_loop_closure(0, 2, noisy_pose(inverse_compose(g.keyframes[0].pose, g.keyframes[2].pose)),
                     Matrix6d::Identity() * 2.0);

  std::vector<int> plane_ids;
  for (PlaneClass cls : {PlaneClass::XVertical, PlaneClass::XVertical, PlaneClass::YVertical, PlaneClass::YVertical,
                         PlaneClass::Horizontal}) {
    PlaneHessiand h{axis_normal(rng, cls), 0.0};
    // keep every keyframe well away from the plane so the closest-point sign is stable
    for (int attempt = 0;; ++attempt) {
      h.distance = 4.0 + 4.0 * u(rng);
      bool ok = true;
      for (const auto& [id, kf] : g.keyframes) ok = ok && std::abs(h.signed_distance(kf.pose.translation)) > 0.5;
      if (ok) break;
    }
    const int id = g.add_plane(cls, to_minimal(h, chart_for(cls)));
    plane_ids.push_back(id);
    for (const auto& [kid, kf] : g.keyframes) {
      PlaneMinimald meas = to_minimal(transform_plane(kf.pose, h, PlaneTransform::ToSensor), chart_for(cls));
      meas.azimuth = wrap_angle(meas.azimuth + 0.05 * u(rng));
      meas.elevation += 0.05 * u(rng);
      meas.distance += 0.1 * u(rng);
      g.add_pose_plane(kid, id, meas, Eigen::Vector3d(2500, 2500, 2500).asDiagonal());
    }
  }
  RoomNode room;
  room.center = Eigen::Vector2d(u(rng), u(rng));
  room.widths = Eigen::Vector2d(4.0 + u(rng), 3.0 + u(rng));
  room.planes = {plane_ids[0], plane_ids[1], plane_ids[2], plane_ids[3]};
  const int r = g.add_room(room);
  for (int s = 0; s < 4; ++s) g.add_room_plane(r, s, 100.0);

  // corridors share the same planes here; link exclusivity is not needed for linearization
  for (CorridorAxis axis : {CorridorAxis::X, CorridorAxis::Y}) {
    CorridorNode c;
    c.axis = axis;
    c.center = Eigen::Vector2d(u(rng), u(rng));
    c.width = 2.0 + u(rng);
    c.planes = axis == CorridorAxis::X ? std::array<int, 2>{plane_ids[0], plane_ids[1]}
                                       : std::array<int, 2>{plane_ids[2], plane_ids[3]};
    const int cid = g.add_corridor(c);
    g.add_corridor_plane(cid, 0, 100.0);
    g.add_corridor_plane(cid, 1, 100.0);
  }
  return g;
}

inline Eigen::VectorXd residual_difference(const Factor& f, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd d = a - b;
  if (f.kind == FactorKind::PosePlane) d[0] = wrap_angle(d[0]);
  return d;
}

inline Eigen::MatrixXd numeric_jacobian(const SGraph& graph, const Factor& f, int k, double h = 1e-6) {
  const VariableRef var = f.variables()[k];
  const int dim = tangent_dim(var.kind);
  Eigen::MatrixXd J(f.residual_dim(), dim);
  for (int i = 0; i < dim; ++i) {
    SGraph plus = graph, minus = graph;
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(dim);
    delta[i] = h;
    plus.retract(var, delta);
    minus.retract(var, -delta);
    J.col(i) = residual_difference(f, factor_residual(plus, f), factor_residual(minus, f)) / (2.0 * h);
  }
  return J;
}

struct PlantedBox {
  PointCloud cloud;
  std::vector<PlaneHessiand> planes;  // sensor at origin, d > 0
};

/// Points on the six faces of an axis-aligned box around the origin, with
/// Gaussian offsets along each face normal.
inline PlantedBox planted_box(double sigma, std::uint64_t seed, int per_side = 45) {
  const Eigen::Vector3d lo(-3.0, -2.0, -1.0), hi(4.0, 5.0, 2.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  PlantedBox box;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double c = side == 0 ? lo[axis] : hi[axis];
      Eigen::Vector3d n = Eigen::Vector3d::Zero();
      n[axis] = side == 0 ? -1.0 : 1.0;
      box.planes.push_back({n, std::abs(c)});
      const int a = (axis + 1) % 3, b = (axis + 2) % 3;
      for (int i = 0; i < per_side; ++i) {
        for (int j = 0; j < per_side; ++j) {
          Eigen::Vector3d p;
          p[axis] = c + (sigma > 0 ? noise(rng) : 0.0);
          // stay clear of the box edges so every point has one owner
          p[a] = lo[a] + 0.1 + (hi[a] - lo[a] - 0.2) * (i + 0.5) / per_side;
          p[b] = lo[b] + 0.1 + (hi[b] - lo[b] - 0.2) * (j + 0.5) / per_side;
          box.cloud.points.push_back(p);
        }
      }
    }
  }
  box.cloud.timestamp = 1.25;
  return box;
}

inline const Eigen::Matrix3d kPlaneInfo = Eigen::Vector3d(2500, 2500, 2500).asDiagonal();

struct BoxRoom {
  SGraph graph;
  std::vector<PlaneHessiand> planes;
  int room = -1;
};

/// Noiseless keyframes inside the box x in [-2, 6], y in [-3, 4], z in [-0.5, 2.5]
/// with exact odometry, exact wall observations and a room on the four walls.
inline BoxRoom box_room() {
  BoxRoom b;
  b.planes = {{Eigen::Vector3d::UnitX(), 6.0},  {-Eigen::Vector3d::UnitX(), 2.0}, {Eigen::Vector3d::UnitY(), 4.0},
              {-Eigen::Vector3d::UnitY(), 3.0}, {Eigen::Vector3d::UnitZ(), 2.5},  {-Eigen::Vector3d::UnitZ(), 0.5}};
  std::vector<Pose3d> truth;
  for (int k = 0; k < 6; ++k) {
    const double a = 0.9 * k;
    truth.push_back(Pose3d::from_xyz_yaw(2.0 + 1.5 * std::cos(a), 0.5 + 1.2 * std::sin(a), 1.0, 0.5 * k));
  }
  for (int k = 0; k < 6; ++k) {
    b.graph.add_keyframe(k, truth[k], truth[k]);
    if (k > 0) b.graph.add_odometry(k - 1, k, inverse_compose(truth[k - 1], truth[k]), Matrix6d::Identity() * 1e4);
  }
  for (const PlaneHessiand& p : b.planes) {
    const PlaneClass cls = classify_plane(p);
    const int id = b.graph.add_plane(cls, to_minimal(closest_point_form(p), chart_for(cls)));
    b.graph.planes.at(id).extent = {2.6, 5.0};
    for (int k = 0; k < 6; ++k) {
      b.graph.add_pose_plane(
          k, id, to_minimal(transform_plane(truth[k], p, PlaneTransform::ToSensor), chart_for(cls)), kPlaneInfo);
    }
  }
  RoomNode r;
  r.center = {2.0, 0.5};
  r.widths = {8.0, 7.0};
  r.planes = {1, 0, 3, 2};
  b.room = b.graph.add_room(r);
  for (int s = 0; s < 4; ++s) b.graph.add_room_plane(b.room, s, 100.0);
  return b;
}

}  // namespace sgraphs::test
