#include "sgraphs/topology.hpp"

#include <algorithm>
#include <cmath>

namespace sgraphs {

namespace {

int axis_of(PlaneClass cls) { return cls == PlaneClass::XVertical ? 0 : 1; }

Eigen::Vector3d toward(const PlaneHessiand& p, const Eigen::Vector3d& viewpoint) {
  return p.signed_distance(viewpoint) >= 0.0 ? p.normal : Eigen::Vector3d(-p.normal);
}

struct PairResult {
  int low = -1;
  int high = -1;
  double s_low = 0.0;
  double width = 0.0;
};

std::optional<PairResult> test_pair(const WallCandidate& a, const WallCandidate& b, int axis,
                                    const Eigen::Vector3d& viewpoint, double min_width) {
  const PlaneClass expected = axis == 0 ? PlaneClass::XVertical : PlaneClass::YVertical;
  if (classify_plane(a.plane) != expected || classify_plane(b.plane) != expected) return std::nullopt;
  if (toward(a.plane, viewpoint).dot(toward(b.plane, viewpoint)) >= 0.0) return std::nullopt;
  const double sa = axis_coordinate(a.plane, axis);
  const double sb = axis_coordinate(b.plane, axis);
  PairResult r;
  if (sa <= sb) {
    r = {a.id, b.id, sa, sb - sa};
  } else {
    r = {b.id, a.id, sb, sa - sb};
  }
  if (!(r.width > min_width)) return std::nullopt;
  return r;
}

bool similar_extent(const WallCandidate& a, const WallCandidate& b, double ratio_max) {
  const double ea = a.extent.maxCoeff(), eb = b.extent.maxCoeff();
  const double lo = std::min(ea, eb), hi = std::max(ea, eb);
  return lo > 0.0 && hi <= ratio_max * lo;
}

double wall_coordinate(const SGraph& graph, int plane, int axis) {
  return axis_coordinate(closest_point_form(graph.planes.at(plane).hessian()), axis);
}

/// Shared slot comparison for rooms and corridors.
template <std::size_t N>
bool collect_merges(const SGraph& graph, const std::array<int, N>& existing, const std::array<int, N>& candidate,
                    const std::array<int, N>& axes, const RoomCriterionConfig& cfg,
                    std::vector<std::pair<int, int>>& merges) {
  for (std::size_t s = 0; s < N; ++s) {
    const int survivor = existing[s], dup = candidate[s];
    if (survivor == dup) continue;
    if (!graph.planes.count(dup) || graph.plane_owner(dup)) return false;
    if (graph.planes.at(dup).cls != graph.planes.at(survivor).cls) return false;
    const double offset = std::abs(wall_coordinate(graph, dup, axes[s]) - wall_coordinate(graph, survivor, axes[s]));
    if (!(offset < cfg.merge_max_offset)) return false;
    merges.emplace_back(survivor, dup);
  }
  return true;
}

}  // namespace

WallCandidate wall_candidate(const SGraph& graph, int plane) {
  const PlaneLandmark& lm = graph.planes.at(plane);
  return {plane, closest_point_form(lm.hessian()), lm.extent, lm.centroid()};
}

std::optional<RoomNode> detect_room(const std::array<WallCandidate, 4>& walls, const Eigen::Vector3d& viewpoint,
                                    const RoomCriterionConfig& cfg) {
  RoomNode room;
  for (int axis = 0; axis < 2; ++axis) {
    const WallCandidate& a = walls[2 * axis];
    const WallCandidate& b = walls[2 * axis + 1];
    const auto pair = test_pair(a, b, axis, viewpoint, cfg.min_width);
    if (!pair || !similar_extent(a, b, cfg.extent_ratio_max)) return std::nullopt;
    room.widths[axis] = pair->width;
    room.center[axis] = pair->width / 2.0 + pair->s_low;
    room.planes[2 * axis] = pair->low;
    room.planes[2 * axis + 1] = pair->high;
  }
  return room;
}

std::optional<CorridorNode> detect_corridor(const WallCandidate& a, const WallCandidate& b,
                                            const Eigen::Vector3d& viewpoint, const RoomCriterionConfig& cfg) {
  const PlaneClass cls = classify_plane(a.plane);
  if (cls == PlaneClass::Horizontal) return std::nullopt;
  const int axis = axis_of(cls);
  const auto pair = test_pair(a, b, axis, viewpoint, cfg.min_width);
  if (!pair) return std::nullopt;
  CorridorNode c;
  c.axis = axis == 0 ? CorridorAxis::X : CorridorAxis::Y;
  c.width = pair->width;
  c.center[axis] = pair->width / 2.0 + pair->s_low;
  c.center[1 - axis] = 0.5 * (a.centroid[1 - axis] + b.centroid[1 - axis]);
  c.planes = {pair->low, pair->high};
  return c;
}

RoomAssociation associate_room(const SGraph& graph, const RoomNode& candidate, const RoomCriterionConfig& cfg) {
  RoomAssociation out;
  for (const auto& [id, room] : graph.rooms) {
    const double gate = std::min(room.widths.minCoeff(), candidate.widths.minCoeff()) / 2.0;
    if ((room.center - candidate.center).norm() < gate) {
      out.id = id;
      out.outcome = collect_merges<4>(graph, room.planes, candidate.planes, {0, 0, 1, 1}, cfg, out.merges)
                        ? AssociationOutcome::Matched
                        : AssociationOutcome::Rejected;
      if (out.outcome == AssociationOutcome::Rejected) out.merges.clear();
      return out;
    }
  }
  for (const auto& [id, room] : graph.rooms) {
    const Eigen::Vector2d offset = (room.center - candidate.center).cwiseAbs();
    if (offset.x() < room.widths.x() / 2.0 && offset.y() < room.widths.y() / 2.0) {
      out.outcome = AssociationOutcome::Rejected;
      return out;
    }
  }
  for (int p : candidate.planes) {
    const auto owner = graph.plane_owner(p);
    if (owner && owner->kind == VariableKind::Room) {
      out.outcome = AssociationOutcome::Rejected;
      return out;
    }
  }
  return out;
}

RoomAssociation associate_corridor(const SGraph& graph, const CorridorNode& candidate, const RoomCriterionConfig& cfg) {
  RoomAssociation out;
  const int axis = candidate.constrained_index();
  for (const auto& [id, c] : graph.corridors) {
    if (c.axis != candidate.axis) continue;
    const double gate = std::min(c.width, candidate.width) / 2.0;
    if (std::abs(c.center[axis] - candidate.center[axis]) < gate) {
      out.id = id;
      out.outcome = collect_merges<2>(graph, c.planes, candidate.planes, {axis, axis}, cfg, out.merges)
                        ? AssociationOutcome::Matched
                        : AssociationOutcome::Rejected;
      if (out.outcome == AssociationOutcome::Rejected) out.merges.clear();
      return out;
    }
  }
  for (int p : candidate.planes) {
    if (graph.plane_owner(p)) {
      out.outcome = AssociationOutcome::Rejected;
      return out;
    }
  }
  return out;
}

TopologyUpdate update_topology(SGraph& graph, int keyframe, const std::vector<int>& visible_planes,
                               const RoomCriterionConfig& cfg) {
  TopologyUpdate update;
  const Eigen::Vector3d viewpoint = graph.keyframes.at(keyframe).pose.translation;

  // nearest visible wall on each side of the viewpoint, per axis
  std::array<std::optional<WallCandidate>, 4> sides;
  std::array<double, 4> best{};
  for (int id : visible_planes) {
    if (!graph.planes.count(id)) continue;
    const PlaneClass cls = graph.planes.at(id).cls;
    if (cls == PlaneClass::Horizontal) continue;
    const int axis = axis_of(cls);
    const WallCandidate w = wall_candidate(graph, id);
    const double offset = axis_coordinate(w.plane, axis) - viewpoint[axis];
    const int slot = 2 * axis + (offset > 0.0 ? 1 : 0);
    if (!sides[slot] || std::abs(offset) < best[slot]) {
      sides[slot] = w;
      best[slot] = std::abs(offset);
    }
  }

  auto apply_merges = [&](const RoomAssociation& a) {
    for (const auto& [survivor, dup] : a.merges) {
      graph.merge_planes(survivor, dup);
      ++update.planes_merged;
    }
  };

  if (sides[0] && sides[1] && sides[2] && sides[3]) {
    const auto room = detect_room({*sides[0], *sides[1], *sides[2], *sides[3]}, viewpoint, cfg);
    if (room && room->widths.minCoeff() > cfg.corridor_max_width) {
      const RoomAssociation a = associate_room(graph, *room, cfg);
      if (a.outcome == AssociationOutcome::Matched) {
        apply_merges(a);
      } else if (a.outcome == AssociationOutcome::New) {
        std::vector<int> upgraded;
        bool blocked = false;
        for (const auto& [cid, c] : graph.corridors) {
          const auto in_room = [&](int p) { return std::find(room->planes.begin(), room->planes.end(), p) != room->planes.end(); };
          const bool a_in = in_room(c.planes[0]), b_in = in_room(c.planes[1]);
          if (a_in && b_in) {
            upgraded.push_back(cid);
          } else if (a_in || b_in) {
            blocked = true;
          }
        }
        if (!blocked) {
          for (int cid : upgraded) {
            graph.remove_corridor(cid);
            ++update.corridors_upgraded;
          }
          const int rid = graph.add_room(*room);
          for (int s = 0; s < 4; ++s) graph.add_room_plane(rid, s, cfg.room_information);
          ++update.rooms_created;
        }
      }
      return update;
    }
  }

  for (int axis = 0; axis < 2; ++axis) {
    if (!sides[2 * axis] || !sides[2 * axis + 1]) continue;
    const auto corridor = detect_corridor(*sides[2 * axis], *sides[2 * axis + 1], viewpoint, cfg);
    if (!corridor || corridor->width > cfg.corridor_max_width) continue;
    const RoomAssociation a = associate_corridor(graph, *corridor, cfg);
    if (a.outcome == AssociationOutcome::Matched) {
      apply_merges(a);
    } else if (a.outcome == AssociationOutcome::New) {
      const int cid = graph.add_corridor(*corridor);
      graph.add_corridor_plane(cid, 0, cfg.corridor_information);
      graph.add_corridor_plane(cid, 1, cfg.corridor_information);
      ++update.corridors_created;
    }
  }
  return update;
}

}  // namespace sgraphs
