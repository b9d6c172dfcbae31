#include "sgraphs/graph.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

namespace sgraphs {

const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::Odometry:
      return "odometry";
    case FactorKind::PosePlane:
      return "pose_plane";
    case FactorKind::RoomPlane:
      return "room_plane";
    case FactorKind::CorridorPlane:
      return "corridor_plane";
    case FactorKind::LoopClosure:
      return "loop_closure";
  }
  return "?";
}

FactorKind factor_kind_from_string(const std::string& s) {
  for (FactorKind k : {FactorKind::Odometry, FactorKind::PosePlane, FactorKind::RoomPlane, FactorKind::CorridorPlane,
                       FactorKind::LoopClosure}) {
    if (s == to_string(k)) return k;
  }
  throw FormatError("unknown factor kind '" + s + "'");
}

int tangent_dim(VariableKind kind) {
  switch (kind) {
    case VariableKind::Keyframe:
      return 6;
    case VariableKind::Plane:
      return 3;
    case VariableKind::Room:
      return 4;
    case VariableKind::Corridor:
      return 3;
  }
  return 0;
}

std::array<VariableRef, 2> Factor::variables() const {
  switch (kind) {
    case FactorKind::Odometry:
    case FactorKind::LoopClosure:
      return {VariableRef{VariableKind::Keyframe, ids[0]}, VariableRef{VariableKind::Keyframe, ids[1]}};
    case FactorKind::PosePlane:
      return {VariableRef{VariableKind::Keyframe, ids[0]}, VariableRef{VariableKind::Plane, ids[1]}};
    case FactorKind::RoomPlane:
      return {VariableRef{VariableKind::Room, ids[0]}, VariableRef{VariableKind::Plane, ids[1]}};
    case FactorKind::CorridorPlane:
      return {VariableRef{VariableKind::Corridor, ids[0]}, VariableRef{VariableKind::Plane, ids[1]}};
  }
  return {};
}

int Factor::residual_dim() const {
  switch (kind) {
    case FactorKind::Odometry:
    case FactorKind::LoopClosure:
      return 6;
    case FactorKind::PosePlane:
      return 3;
    case FactorKind::RoomPlane:
    case FactorKind::CorridorPlane:
      return 1;
  }
  return 0;
}

int SGraph::add_keyframe(double stamp, const Pose3d& pose, const Pose3d& odom, std::shared_ptr<const PointCloud> scan) {
  if (!keyframes.empty() && stamp <= keyframes.rbegin()->second.stamp) {
    throw Error("keyframe timestamps must be strictly increasing");
  }
  const int id = next_keyframe_++;
  keyframes[id] = Keyframe{id, stamp, pose, odom, std::move(scan)};
  return id;
}

int SGraph::add_plane(PlaneClass cls, const PlaneMinimald& params) {
  const int id = next_plane_++;
  PlaneLandmark lm;
  lm.id = id;
  lm.cls = cls;
  lm.params = params;
  planes[id] = lm;
  return id;
}

int SGraph::add_room(RoomNode room) {
  room.id = next_room_++;
  for (int p : room.planes) check_variable({VariableKind::Plane, p});
  rooms[room.id] = room;
  return room.id;
}

int SGraph::add_corridor(CorridorNode corridor) {
  corridor.id = next_corridor_++;
  for (int p : corridor.planes) check_variable({VariableKind::Plane, p});
  corridors[corridor.id] = corridor;
  return corridor.id;
}

void SGraph::check_variable(VariableRef v) const {
  bool ok = false;
  switch (v.kind) {
    case VariableKind::Keyframe:
      ok = keyframes.count(v.id) > 0;
      break;
    case VariableKind::Plane:
      ok = planes.count(v.id) > 0;
      break;
    case VariableKind::Room:
      ok = rooms.count(v.id) > 0;
      break;
    case VariableKind::Corridor:
      ok = corridors.count(v.id) > 0;
      break;
  }
  if (!ok) throw Error("factor references missing variable " + std::to_string(v.id));
}

void SGraph::add_odometry(int from, int to, const Pose3d& measurement, const Matrix6d& information) {
  Factor f;
  f.kind = FactorKind::Odometry;
  f.ids = {from, to};
  f.pose_measurement = measurement;
  f.information = information;
  for (const auto& v : f.variables()) check_variable(v);
  factors.push_back(std::move(f));
}

void SGraph::add_loop_closure(int from, int to, const Pose3d& measurement, const Matrix6d& information) {
  Factor f;
  f.kind = FactorKind::LoopClosure;
  f.ids = {from, to};
  f.pose_measurement = measurement;
  f.information = information;
  for (const auto& v : f.variables()) check_variable(v);
  factors.push_back(std::move(f));
}

void SGraph::add_pose_plane(int keyframe, int plane, const PlaneMinimald& measurement, const Eigen::Matrix3d& information) {
  Factor f;
  f.kind = FactorKind::PosePlane;
  f.ids = {keyframe, plane};
  f.plane_measurement = measurement;
  f.information = information;
  for (const auto& v : f.variables()) check_variable(v);
  factors.push_back(std::move(f));
}

void SGraph::add_room_plane(int room, int slot, double information) {
  Factor f;
  f.kind = FactorKind::RoomPlane;
  f.ids = {room, rooms.at(room).planes.at(slot)};
  f.slot = slot;
  f.information = Eigen::MatrixXd::Constant(1, 1, information);
  for (const auto& v : f.variables()) check_variable(v);
  factors.push_back(std::move(f));
}

void SGraph::add_corridor_plane(int corridor, int slot, double information) {
  Factor f;
  f.kind = FactorKind::CorridorPlane;
  f.ids = {corridor, corridors.at(corridor).planes.at(slot)};
  f.slot = slot;
  f.information = Eigen::MatrixXd::Constant(1, 1, information);
  for (const auto& v : f.variables()) check_variable(v);
  factors.push_back(std::move(f));
}

void SGraph::merge_planes(int survivor, int duplicate) {
  if (survivor == duplicate) return;
  check_variable({VariableKind::Plane, survivor});
  check_variable({VariableKind::Plane, duplicate});
  for (auto& f : factors) {
    if (f.kind != FactorKind::Odometry && f.kind != FactorKind::LoopClosure && f.ids[1] == duplicate) {
      f.ids[1] = survivor;
    }
  }
  for (auto& [id, room] : rooms) {
    for (int& p : room.planes) {
      if (p == duplicate) p = survivor;
    }
  }
  for (auto& [id, corridor] : corridors) {
    for (int& p : corridor.planes) {
      if (p == duplicate) p = survivor;
    }
  }
  PlaneLandmark& s = planes.at(survivor);
  const PlaneLandmark& d = planes.at(duplicate);
  s.extent = s.extent.cwiseMax(d.extent);
  s.centroid_sum += d.centroid_sum;
  s.centroid_count += d.centroid_count;
  if (s.facing.isZero()) s.facing = d.facing;
  if (!d.support.isEmpty()) s.support.extend(d.support);
  planes.erase(duplicate);
}

void SGraph::remove_corridor(int id) {
  corridors.erase(id);
  std::erase_if(factors, [id](const Factor& f) { return f.kind == FactorKind::CorridorPlane && f.ids[0] == id; });
}

std::optional<VariableRef> SGraph::plane_owner(int plane) const {
  for (const auto& [id, room] : rooms) {
    if (std::find(room.planes.begin(), room.planes.end(), plane) != room.planes.end()) {
      return VariableRef{VariableKind::Room, id};
    }
  }
  for (const auto& [id, corridor] : corridors) {
    if (std::find(corridor.planes.begin(), corridor.planes.end(), plane) != corridor.planes.end()) {
      return VariableRef{VariableKind::Corridor, id};
    }
  }
  return std::nullopt;
}

bool SGraph::has_loop(int from, int to) const {
  return std::any_of(factors.begin(), factors.end(), [&](const Factor& f) {
    return f.kind == FactorKind::LoopClosure && f.ids[0] == from && f.ids[1] == to;
  });
}

std::optional<int> SGraph::last_keyframe() const {
  if (keyframes.empty()) return std::nullopt;
  return keyframes.rbegin()->first;
}

std::optional<int> SGraph::anchor() const {
  if (keyframes.empty()) return std::nullopt;
  return keyframes.begin()->first;
}

std::string SGraph::validate() const {
  std::ostringstream err;
  for (const auto& f : factors) {
    for (const auto& v : f.variables()) {
      try {
        check_variable(v);
      } catch (const Error&) {
        err << to_string(f.kind) << " factor references missing variable " << v.id;
        return err.str();
      }
    }
    const Eigen::MatrixXd& info = f.information;
    if (info.rows() != f.residual_dim() || info.cols() != f.residual_dim()) {
      err << to_string(f.kind) << " factor has information of wrong size";
      return err.str();
    }
    if ((info - info.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, info.cwiseAbs().maxCoeff())) {
      err << to_string(f.kind) << " factor has non-symmetric information";
      return err.str();
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() != Eigen::Success) {
      err << to_string(f.kind) << " factor has non positive-definite information";
      return err.str();
    }
  }
  double last = -std::numeric_limits<double>::infinity();
  for (const auto& [id, kf] : keyframes) {
    if (kf.stamp <= last) return "keyframe timestamps not strictly increasing";
    last = kf.stamp;
  }
  std::map<int, int> owners;
  for (const auto& [id, room] : rooms) {
    for (int p : room.planes) {
      if (!planes.count(p)) return "room links missing plane";
      if (owners[p]++ > 0) return "plane " + std::to_string(p) + " linked twice";
    }
  }
  for (const auto& [id, corridor] : corridors) {
    for (int p : corridor.planes) {
      if (!planes.count(p)) return "corridor links missing plane";
      if (owners[p]++ > 0) return "plane " + std::to_string(p) + " linked twice";
    }
  }
  return {};
}

Eigen::VectorXd SGraph::local_values(VariableRef v) const {
  switch (v.kind) {
    case VariableKind::Keyframe:
      return pose_log(keyframes.at(v.id).pose);
    case VariableKind::Plane:
      return planes.at(v.id).params.vector();
    case VariableKind::Room:
      return rooms.at(v.id).vector();
    case VariableKind::Corridor:
      return corridors.at(v.id).vector();
  }
  return {};
}

void SGraph::retract(VariableRef v, const Eigen::VectorXd& delta) {
  switch (v.kind) {
    case VariableKind::Keyframe: {
      Pose3d& p = keyframes.at(v.id).pose;
      p = sgraphs::retract<double>(p, delta.head<6>());
      break;
    }
    case VariableKind::Plane: {
      PlaneMinimald& m = planes.at(v.id).params;
      m.azimuth = wrap_angle(m.azimuth + delta[0]);
      m.elevation += delta[1];
      m.distance += delta[2];
      break;
    }
    case VariableKind::Room: {
      RoomNode& r = rooms.at(v.id);
      r.center += delta.head<2>();
      r.widths += delta.segment<2>(2);
      break;
    }
    case VariableKind::Corridor: {
      CorridorNode& c = corridors.at(v.id);
      c.center += delta.head<2>();
      c.width += delta[2];
      break;
    }
  }
}

}  // namespace sgraphs
