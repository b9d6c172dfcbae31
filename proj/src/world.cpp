#include "sgraphs/world.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "sgraphs/errors.hpp"

namespace sgraphs {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

class WorldBuilder {
public:
  explicit WorldBuilder(WorldModel& w) : world_(w) {}

  int plane(int axis, double coord) {
    const auto key = std::make_pair(axis, coord);
    const auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    WorldPlane p;
    p.id = static_cast<int>(world_.planes.size());
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    n[axis] = coord < 0.0 ? -1.0 : 1.0;
    p.plane = {n, std::abs(coord)};
    world_.planes.push_back(p);
    ids_[key] = p.id;
    return p.id;
  }

  /// Face on x[axis] == coord; `a` and `b` are ranges on the cyclic axes (axis+1, axis+2).
  void face(int axis, double coord, Eigen::Vector2d a, Eigen::Vector2d b) {
    if (a[1] - a[0] <= 1e-12 || b[1] - b[0] <= 1e-12) return;
    WorldFace f;
    f.plane = plane(axis, coord);
    f.axis = axis;
    f.coord = coord;
    f.lo = {a[0], b[0]};
    f.hi = {a[1], b[1]};
    world_.faces.push_back(f);
  }

  /// Vertical wall on x[axis] == coord spanning [from, to] along the other
  /// horizontal axis and [0, height] in z, with door holes cut out.
  void wall(int axis, double coord, double from, double to, double height,
            std::vector<std::tuple<double, double, double>> holes) {
    std::sort(holes.begin(), holes.end());
    auto emit = [&](double u0, double u1, double z0, double z1) {
      // cyclic axes for x-walls are (y, z), for y-walls (z, x)
      if (axis == 0) {
        face(0, coord, {u0, u1}, {z0, z1});
      } else {
        face(1, coord, {z0, z1}, {u0, u1});
      }
    };
    double cursor = from;
    for (const auto& [a, b, door_h] : holes) {
      emit(cursor, a, 0.0, height);
      emit(a, b, door_h, height);
      cursor = b;
    }
    emit(cursor, to, 0.0, height);
  }

private:
  WorldModel& world_;
  std::map<std::pair<int, double>, int> ids_;
};

struct DoorGeometry {
  int gap_axis = 0;  // axis normal to the walls the door passes through
  double low = 0.0;  // coordinate of the lower space's wall
  double high = 0.0;
  std::size_t low_space = 0;
  std::size_t high_space = 0;
};

}  // namespace

bool WorldFace::contains(const Eigen::Vector3d& p, double margin) const {
  const double u = p[(axis + 1) % 3], v = p[(axis + 2) % 3];
  return u >= lo[0] - margin && u <= hi[0] + margin && v >= lo[1] - margin && v <= hi[1] + margin;
}

double WorldFace::distance(const Eigen::Vector3d& p) const { return std::abs(p[axis] - coord); }

WorldModel generate_world(const LayoutSpec& layout, std::uint64_t seed) {
  if (layout.spaces.empty()) throw InvalidLayout("layout has no spaces");
  if (!(layout.height > 0.0)) throw InvalidLayout("layout height must be positive");
  std::map<std::string, std::size_t> by_name;
  for (std::size_t i = 0; i < layout.spaces.size(); ++i) {
    const SpaceSpec& s = layout.spaces[i];
    if (!(s.max.x() > s.min.x()) || !(s.max.y() > s.min.y())) throw InvalidLayout("space '" + s.name + "' is empty");
    if (!by_name.emplace(s.name, i).second) throw InvalidLayout("duplicate space name '" + s.name + "'");
    for (std::size_t j = 0; j < i; ++j) {
      const SpaceSpec& o = layout.spaces[j];
      const bool overlap = s.min.x() < o.max.x() && o.min.x() < s.max.x() && s.min.y() < o.max.y() && o.min.y() < s.max.y();
      if (overlap) throw InvalidLayout("spaces '" + s.name + "' and '" + o.name + "' overlap");
    }
  }

  // door holes per (space, wall axis, side)
  std::map<std::tuple<std::size_t, int, int>, std::vector<std::tuple<double, double, double>>> holes;
  std::vector<std::pair<DoorSpec, DoorGeometry>> doors;
  for (const DoorSpec& d : layout.doors) {
    const auto ia = by_name.find(d.a), ib = by_name.find(d.b);
    if (ia == by_name.end() || ib == by_name.end()) throw InvalidLayout("door references unknown space");
    if (!(d.to > d.from) || !(d.height > 0.0) || d.height > layout.height) throw InvalidLayout("invalid door extent");
    const SpaceSpec& a = layout.spaces[ia->second];
    const SpaceSpec& b = layout.spaces[ib->second];
    std::optional<DoorGeometry> geo;
    for (int k = 0; k < 2 && !geo; ++k) {
      for (int flip = 0; flip < 2 && !geo; ++flip) {
        const SpaceSpec& lo = flip ? b : a;
        const SpaceSpec& hi = flip ? a : b;
        const double gap = hi.min[k] - lo.max[k];
        if (gap < 0.0 || gap > 1.0) continue;
        const int j = 1 - k;
        if (d.from < std::max(lo.min[j], hi.min[j]) || d.to > std::min(lo.max[j], hi.max[j])) continue;
        DoorGeometry g;
        g.gap_axis = k;
        g.low = lo.max[k];
        g.high = hi.min[k];
        g.low_space = flip ? ib->second : ia->second;
        g.high_space = flip ? ia->second : ib->second;
        geo = g;
      }
    }
    if (!geo) throw InvalidLayout("door between '" + d.a + "' and '" + d.b + "' does not join two facing walls");
    holes[{geo->low_space, geo->gap_axis, 1}].emplace_back(d.from, d.to, d.height);
    holes[{geo->high_space, geo->gap_axis, 0}].emplace_back(d.from, d.to, d.height);
    doors.emplace_back(d, *geo);
  }

  WorldModel world;
  world.height = layout.height;
  world.seed = seed;
  WorldBuilder build(world);
  const double H = layout.height;

  for (std::size_t i = 0; i < layout.spaces.size(); ++i) {
    const SpaceSpec& s = layout.spaces[i];
    for (int axis = 0; axis < 2; ++axis) {
      const int other = 1 - axis;
      for (int side = 0; side < 2; ++side) {
        const double coord = side == 0 ? s.min[axis] : s.max[axis];
        build.wall(axis, coord, s.min[other], s.max[other], H, holes[{i, axis, side}]);
      }
    }
    build.face(2, 0.0, {s.min.x(), s.max.x()}, {s.min.y(), s.max.y()});
    build.face(2, H, {s.min.x(), s.max.x()}, {s.min.y(), s.max.y()});
  }

  for (const auto& [d, g] : doors) {
    if (g.high - g.low <= 1e-12) continue;
    const int k = g.gap_axis;
    const int j = 1 - k;
    const Eigen::Vector2d across(g.low, g.high), along(d.from, d.to), up(0.0, d.height);
    // jambs on x[j] == from / to; their cyclic axes are (k, z) for j == 0 and (z, k) for j == 1
    for (double c : {d.from, d.to}) {
      if (j == 0) {
        build.face(0, c, across, up);
      } else {
        build.face(1, c, up, across);
      }
    }
    const Eigen::Vector2d xr = k == 0 ? across : along;
    const Eigen::Vector2d yr = k == 0 ? along : across;
    build.face(2, 0.0, xr, yr);
    build.face(2, d.height, xr, yr);
  }

  world.floor = build.plane(2, 0.0);
  world.ceiling = build.plane(2, H);

  for (const SpaceSpec& s : layout.spaces) {
    const Eigen::Vector2d widths = s.max - s.min;
    const Eigen::Vector2d center = 0.5 * (s.min + s.max);
    if (s.kind == SpaceKind::Room) {
      WorldRoom r;
      r.name = s.name;
      r.node.center = center;
      r.node.widths = widths;
      r.node.planes = {build.plane(0, s.min.x()), build.plane(0, s.max.x()), build.plane(1, s.min.y()),
                       build.plane(1, s.max.y())};
      r.node.id = static_cast<int>(world.rooms.size());
      world.rooms.push_back(r);
    } else {
      WorldCorridor c;
      c.name = s.name;
      const int axis = widths.x() <= widths.y() ? 0 : 1;
      c.node.axis = axis == 0 ? CorridorAxis::X : CorridorAxis::Y;
      c.node.center = center;
      c.node.width = widths[axis];
      c.node.planes = {build.plane(axis, s.min[axis]), build.plane(axis, s.max[axis])};
      c.node.id = static_cast<int>(world.corridors.size());
      world.corridors.push_back(c);
    }
  }
  return world;
}

std::optional<std::pair<double, int>> ray_cast(const WorldModel& world, const Eigen::Vector3d& origin,
                                               const Eigen::Vector3d& direction, double max_range) {
  double best = max_range;
  int best_face = -1;
  for (std::size_t i = 0; i < world.faces.size(); ++i) {
    const WorldFace& f = world.faces[i];
    const double dir = direction[f.axis];
    if (std::abs(dir) < 1e-15) continue;
    const double t = (f.coord - origin[f.axis]) / dir;
    if (t <= 1e-9 || t >= best) continue;
    Eigen::Vector3d p = origin + t * direction;
    p[f.axis] = f.coord;
    if (!f.contains(p, 1e-9)) continue;
    best = t;
    best_face = static_cast<int>(i);
  }
  if (best_face < 0) return std::nullopt;
  return std::make_pair(best, best_face);
}

std::vector<Eigen::Vector3d> scan_directions(const SensorSpec& sensor) {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(static_cast<std::size_t>(sensor.rings * sensor.azimuth_steps));
  const double deg = std::numbers::pi / 180.0;
  for (int r = 0; r < sensor.rings; ++r) {
    const double el = sensor.rings == 1 ? sensor.min_elevation * deg
                                        : (sensor.min_elevation + (sensor.max_elevation - sensor.min_elevation) * r /
                                                                      (sensor.rings - 1)) *
                                              deg;
    for (int a = 0; a < sensor.azimuth_steps; ++a) {
      const double az = 2.0 * std::numbers::pi * a / sensor.azimuth_steps;
      dirs.push_back(minimal_direction(az, el));
    }
  }
  return dirs;
}

std::vector<std::pair<double, Pose3d>> sample_trajectory(const TrajectorySpec& traj) {
  if (traj.waypoints.empty()) throw InvalidLayout("trajectory has no waypoints");
  if (!(traj.speed > 0.0) || !(traj.yaw_rate > 0.0) || !(traj.scan_rate > 0.0) || traj.loops < 1) {
    throw InvalidLayout("trajectory speed, yaw rate, scan rate and loops must be positive");
  }
  struct Piece {
    Eigen::Vector2d start;
    double yaw0 = 0.0;
    Eigen::Vector2d end;
    double yaw1 = 0.0;
    double duration = 0.0;
  };
  std::vector<Piece> pieces;
  Eigen::Vector2d pos = traj.waypoints[0].head<2>();
  double yaw = traj.waypoints[0].z();
  auto turn_to = [&](double target) {
    const double delta = wrap_angle(target - yaw);
    if (std::abs(delta) < 1e-12) return;
    pieces.push_back({pos, yaw, pos, yaw + delta, std::abs(delta) / traj.yaw_rate});
    yaw = yaw + delta;
  };
  std::vector<Eigen::Vector3d> route{traj.waypoints[0]};
  for (int l = 0; l < traj.loops; ++l) {
    route.insert(route.end(), traj.waypoints.begin() + 1, traj.waypoints.end());
  }
  for (std::size_t i = 1; i < route.size(); ++i) {
    const Eigen::Vector2d target = route[i].head<2>();
    const Eigen::Vector2d d = target - pos;
    if (d.norm() < 1e-12) continue;
    turn_to(std::atan2(d.y(), d.x()));
    pieces.push_back({pos, yaw, target, yaw, d.norm() / traj.speed});
    pos = target;
  }
  turn_to(route.back().z());

  double total = 0.0;
  for (const auto& p : pieces) total += p.duration;

  auto pose_at = [&](double t) {
    double acc = 0.0;
    for (const auto& p : pieces) {
      if (t <= acc + p.duration || &p == &pieces.back()) {
        const double s = p.duration > 0.0 ? std::clamp((t - acc) / p.duration, 0.0, 1.0) : 1.0;
        const Eigen::Vector2d xy = p.start + s * (p.end - p.start);
        return Pose3d::from_xyz_yaw(xy.x(), xy.y(), traj.sensor_height, p.yaw0 + s * (p.yaw1 - p.yaw0));
      }
      acc += p.duration;
    }
    return Pose3d::from_xyz_yaw(pos.x(), pos.y(), traj.sensor_height, yaw);
  };

  std::vector<std::pair<double, Pose3d>> out;
  const double dt = 1.0 / traj.scan_rate;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t > total + 1e-9) break;
    out.emplace_back(t, pose_at(t));
  }
  if (total - out.back().first > 1e-9) out.emplace_back(total, pose_at(total));
  return out;
}

std::vector<Pose3d> simulate_odometry(const std::vector<Pose3d>& gt, const NoiseSpec& noise) {
  if (noise.sigma_t == 0.0 && noise.sigma_r == 0.0) return gt;
  std::vector<Pose3d> odom;
  odom.reserve(gt.size());
  if (gt.empty()) return odom;
  odom.push_back(gt.front());
  std::mt19937_64 rng(mix_seed(noise.seed, 0x6f646f6dULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 1; k < gt.size(); ++k) {
    const Pose3d delta = inverse_compose(gt[k - 1], gt[k]);
    const double st = noise.sigma_t * std::sqrt(delta.translation.norm());
    const double sr = noise.sigma_r * std::sqrt(rotation_angle<double>(delta.rotation));
    Vector6d e;
    for (int i = 0; i < 6; ++i) e[i] = normal(rng);
    e.head<3>() *= st;
    e.tail<3>() *= sr;
    if (noise.planar) {
      e[2] = 0.0;
      e[3] = 0.0;
      e[4] = 0.0;
    }
    odom.push_back(compose(odom.back(), retract<double>(delta, e)));
  }
  return odom;
}

PointCloud simulate_scan(const WorldModel& world, const Pose3d& pose, const SensorSpec& sensor, double range_sigma,
                         std::uint64_t seed) {
  PointCloud cloud;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, range_sigma > 0.0 ? range_sigma : 1.0);
  for (const Eigen::Vector3d& dir : scan_directions(sensor)) {
    const auto hit = ray_cast(world, pose.translation, pose.rotation * dir, sensor.max_range);
    if (!hit) continue;
    double range = hit->first;
    if (range_sigma > 0.0) range += normal(rng);
    if (range <= 0.0) continue;
    cloud.points.push_back(dir * range);
  }
  return cloud;
}

std::vector<SimFrame> simulate_run(const WorldModel& world, const LayoutSpec& layout, const NoiseSpec& noise) {
  const auto samples = sample_trajectory(layout.trajectory);
  std::vector<Pose3d> gt;
  gt.reserve(samples.size());
  for (const auto& s : samples) gt.push_back(s.second);
  const std::vector<Pose3d> odom = simulate_odometry(gt, noise);
  std::vector<SimFrame> frames(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    SimFrame& f = frames[k];
    f.stamp = samples[k].first;
    f.ground_truth = gt[k];
    f.odometry = odom[k];
    f.scan = simulate_scan(world, gt[k], layout.sensor, noise.range_sigma, mix_seed(noise.seed, 0x5ca40000ULL + k));
    f.scan.timestamp = f.stamp;
  }
  return frames;
}

std::uint64_t stream_digest(const std::vector<SimFrame>& frames) {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const SimFrame& f : frames) {
    h = fnv1a(&f.stamp, sizeof f.stamp, h);
    for (const Pose3d* p : {&f.ground_truth, &f.odometry}) {
      h = fnv1a(p->rotation.data(), sizeof(double) * 9, h);
      h = fnv1a(p->translation.data(), sizeof(double) * 3, h);
    }
    for (const auto& q : f.scan.points) h = fnv1a(q.data(), sizeof(double) * 3, h);
  }
  return h;
}

}  // namespace sgraphs
