#include "sgraphs/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sgraphs/errors.hpp"

namespace sgraphs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

json pose_json(const Pose3d& p) {
  const auto v = p.to_tum();
  return json::array({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
}

Pose3d pose_from(const json& j) {
  if (!j.is_array() || j.size() != 7) throw FormatError("pose must be [tx, ty, tz, qx, qy, qz, qw]");
  Eigen::Matrix<double, 7, 1> v;
  for (int i = 0; i < 7; ++i) v[i] = j.at(i).get<double>();
  return Pose3d::from_tum(v);
}

template <typename Derived>
json vec_json(const Eigen::MatrixBase<Derived>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vec_from(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw FormatError("expected an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(e.what());
  }
}

const char* kind_name(SpaceKind k) { return k == SpaceKind::Room ? "room" : "corridor"; }

}  // namespace

void write_tum(const fs::path& path, const Trajectory& traj) {
  std::ofstream out = open_out(path);
  for (const auto& [t, pose] : traj) {
    const auto v = pose.to_tum();
    out << fmt_double(t);
    for (int i = 0; i < 7; ++i) out << ' ' << fmt_double(v[i]);
    out << '\n';
  }
}

Trajectory read_tum(const fs::path& path) {
  std::ifstream in = open_in(path);
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t;
    Eigen::Matrix<double, 7, 1> v;
    ss >> t;
    for (int i = 0; i < 7; ++i) ss >> v[i];
    if (!ss) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed TUM line");
    traj.emplace_back(t, Pose3d::from_tum(v));
  }
  return traj;
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  out << "comment timestamp " << fmt_double(cloud.timestamp) << '\n';
  out << "element vertex " << cloud.size() << '\n';
  out << "property double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points) {
    out << fmt_double(p.x()) << ' ' << fmt_double(p.y()) << ' ' << fmt_double(p.z()) << '\n';
  }
}

PointCloud read_ply(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw FormatError(path.string() + ": not a PLY file");
  PointCloud cloud;
  std::size_t count = 0;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "format") {
      std::string f;
      ss >> f;
      ascii = f == "ascii";
    } else if (key == "comment") {
      std::string what;
      ss >> what;
      if (what == "timestamp") ss >> cloud.timestamp;
    } else if (key == "element") {
      std::string name;
      ss >> name;
      if (name == "vertex") ss >> count;
    } else if (key == "end_header") {
      break;
    }
  }
  if (!ascii) throw FormatError(path.string() + ": only ASCII PLY is supported");
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": truncated vertex list");
    std::istringstream ss(line);
    Eigen::Vector3d p;
    ss >> p.x() >> p.y() >> p.z();
    if (!ss) throw FormatError(path.string() + ": malformed vertex");
    cloud.points.push_back(p);
  }
  return cloud;
}

json load_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  return guarded([&] { return json::parse(in); });
}

void save_json(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

LayoutSpec layout_from_json(const json& j) {
  return guarded([&] {
    LayoutSpec l;
    l.height = j.value("height", l.height);
    for (const auto& s : j.at("spaces")) {
      SpaceSpec sp;
      sp.name = s.at("name").get<std::string>();
      const std::string kind = s.value("kind", std::string("room"));
      if (kind == "room") {
        sp.kind = SpaceKind::Room;
      } else if (kind == "corridor") {
        sp.kind = SpaceKind::Corridor;
      } else {
        throw FormatError("unknown space kind '" + kind + "'");
      }
      sp.min = vec_from(s.at("min"), 2);
      sp.max = vec_from(s.at("max"), 2);
      l.spaces.push_back(sp);
    }
    if (j.contains("doors")) {
      for (const auto& d : j.at("doors")) {
        DoorSpec door;
        door.a = d.at("between").at(0).get<std::string>();
        door.b = d.at("between").at(1).get<std::string>();
        door.from = d.at("span").at(0).get<double>();
        door.to = d.at("span").at(1).get<double>();
        door.height = d.value("height", door.height);
        l.doors.push_back(door);
      }
    }
    if (j.contains("trajectory")) {
      const json& t = j.at("trajectory");
      for (const auto& w : t.at("waypoints")) l.trajectory.waypoints.push_back(vec_from(w, 3));
      l.trajectory.speed = t.value("speed", l.trajectory.speed);
      l.trajectory.yaw_rate = t.value("yaw_rate", l.trajectory.yaw_rate);
      l.trajectory.scan_rate = t.value("scan_rate", l.trajectory.scan_rate);
      l.trajectory.loops = t.value("loops", l.trajectory.loops);
      l.trajectory.sensor_height = t.value("sensor_height", l.trajectory.sensor_height);
    }
    if (j.contains("sensor")) {
      const json& s = j.at("sensor");
      l.sensor.rings = s.value("rings", l.sensor.rings);
      l.sensor.min_elevation = s.value("min_elevation_deg", l.sensor.min_elevation);
      l.sensor.max_elevation = s.value("max_elevation_deg", l.sensor.max_elevation);
      l.sensor.azimuth_steps = s.value("azimuth_steps", l.sensor.azimuth_steps);
      l.sensor.max_range = s.value("max_range", l.sensor.max_range);
    }
    return l;
  });
}

json layout_to_json(const LayoutSpec& l) {
  json j;
  j["height"] = l.height;
  j["spaces"] = json::array();
  for (const auto& s : l.spaces) {
    j["spaces"].push_back({{"name", s.name}, {"kind", kind_name(s.kind)}, {"min", vec_json(s.min)}, {"max", vec_json(s.max)}});
  }
  j["doors"] = json::array();
  for (const auto& d : l.doors) {
    j["doors"].push_back({{"between", {d.a, d.b}}, {"span", {d.from, d.to}}, {"height", d.height}});
  }
  json wp = json::array();
  for (const auto& w : l.trajectory.waypoints) wp.push_back(vec_json(w));
  j["trajectory"] = {{"waypoints", wp},
                     {"speed", l.trajectory.speed},
                     {"yaw_rate", l.trajectory.yaw_rate},
                     {"scan_rate", l.trajectory.scan_rate},
                     {"loops", l.trajectory.loops},
                     {"sensor_height", l.trajectory.sensor_height}};
  j["sensor"] = {{"rings", l.sensor.rings},
                 {"min_elevation_deg", l.sensor.min_elevation},
                 {"max_elevation_deg", l.sensor.max_elevation},
                 {"azimuth_steps", l.sensor.azimuth_steps},
                 {"max_range", l.sensor.max_range}};
  return j;
}

NoiseSpec noise_from_json(const json& j) {
  return guarded([&] {
    NoiseSpec n;
    n.sigma_t = j.value("sigma_t", n.sigma_t);
    n.sigma_r = j.value("sigma_r", n.sigma_r);
    n.range_sigma = j.value("range_sigma", n.range_sigma);
    n.planar = j.value("planar", n.planar);
    n.seed = j.value("seed", n.seed);
    if (n.sigma_t < 0 || n.sigma_r < 0 || n.range_sigma < 0) throw FormatError("noise sigmas must be non-negative");
    return n;
  });
}

json noise_to_json(const NoiseSpec& n) {
  return {{"sigma_t", n.sigma_t}, {"sigma_r", n.sigma_r}, {"range_sigma", n.range_sigma}, {"planar", n.planar},
          {"seed", n.seed}};
}

json world_to_json(const WorldModel& w) {
  json j;
  j["height"] = w.height;
  j["seed"] = w.seed;
  j["floor"] = w.floor;
  j["ceiling"] = w.ceiling;
  j["planes"] = json::array();
  for (const auto& p : w.planes) {
    j["planes"].push_back({{"id", p.id}, {"normal", vec_json(p.plane.normal)}, {"d", p.plane.distance}});
  }
  j["faces"] = json::array();
  for (const auto& f : w.faces) {
    j["faces"].push_back(
        {{"plane", f.plane}, {"axis", f.axis}, {"coord", f.coord}, {"lo", vec_json(f.lo)}, {"hi", vec_json(f.hi)}});
  }
  j["rooms"] = json::array();
  for (const auto& r : w.rooms) {
    j["rooms"].push_back({{"name", r.name},
                          {"center", vec_json(r.node.center)},
                          {"widths", vec_json(r.node.widths)},
                          {"planes", r.node.planes}});
  }
  j["corridors"] = json::array();
  for (const auto& c : w.corridors) {
    j["corridors"].push_back({{"name", c.name},
                              {"axis", c.node.axis == CorridorAxis::X ? "x" : "y"},
                              {"center", vec_json(c.node.center)},
                              {"width", c.node.width},
                              {"planes", c.node.planes}});
  }
  return j;
}

WorldModel world_from_json(const json& j) {
  return guarded([&] {
    WorldModel w;
    w.height = j.at("height").get<double>();
    w.seed = j.value("seed", std::uint64_t{0});
    w.floor = j.at("floor").get<int>();
    w.ceiling = j.at("ceiling").get<int>();
    for (const auto& p : j.at("planes")) {
      WorldPlane wp;
      wp.id = p.at("id").get<int>();
      if (wp.id != static_cast<int>(w.planes.size())) throw FormatError("world plane ids must be dense and ordered");
      wp.plane.normal = vec_from(p.at("normal"), 3);
      wp.plane.distance = p.at("d").get<double>();
      w.planes.push_back(wp);
    }
    for (const auto& f : j.at("faces")) {
      WorldFace wf;
      wf.plane = f.at("plane").get<int>();
      wf.axis = f.at("axis").get<int>();
      wf.coord = f.at("coord").get<double>();
      wf.lo = vec_from(f.at("lo"), 2);
      wf.hi = vec_from(f.at("hi"), 2);
      w.faces.push_back(wf);
    }
    for (const auto& r : j.at("rooms")) {
      WorldRoom wr;
      wr.name = r.at("name").get<std::string>();
      wr.node.id = static_cast<int>(w.rooms.size());
      wr.node.center = vec_from(r.at("center"), 2);
      wr.node.widths = vec_from(r.at("widths"), 2);
      wr.node.planes = r.at("planes").get<std::array<int, 4>>();
      w.rooms.push_back(wr);
    }
    for (const auto& c : j.at("corridors")) {
      WorldCorridor wc;
      wc.name = c.at("name").get<std::string>();
      wc.node.id = static_cast<int>(w.corridors.size());
      wc.node.axis = c.at("axis").get<std::string>() == "x" ? CorridorAxis::X : CorridorAxis::Y;
      wc.node.center = vec_from(c.at("center"), 2);
      wc.node.width = c.at("width").get<double>();
      wc.node.planes = c.at("planes").get<std::array<int, 2>>();
      w.corridors.push_back(wc);
    }
    return w;
  });
}

json graph_to_json(const SGraph& g) {
  json j;
  j["schema_version"] = kGraphSchemaVersion;
  j["map_to_odom"] = pose_json(g.map_to_odom);
  j["next_ids"] = {g.next_keyframe_id(), g.next_plane_id(), g.next_room_id(), g.next_corridor_id()};
  j["keyframes"] = json::array();
  for (const auto& [id, kf] : g.keyframes) {
    j["keyframes"].push_back({{"id", id}, {"t", kf.stamp}, {"pose", pose_json(kf.pose)}, {"odom", pose_json(kf.odom)}});
  }
  j["planes"] = json::array();
  for (const auto& [id, p] : g.planes) {
    j["planes"].push_back({{"id", id},
                           {"class", to_string(p.cls)},
                           {"phi", p.params.azimuth},
                           {"theta", p.params.elevation},
                           {"d", p.params.distance},
                           {"extent", vec_json(p.extent)},
                           {"centroid_sum", vec_json(p.centroid_sum)},
                           {"centroid_count", p.centroid_count},
                           {"facing", vec_json(p.facing)}});
    if (!p.support.isEmpty()) {
      j["planes"].back()["support_min"] = vec_json(p.support.min());
      j["planes"].back()["support_max"] = vec_json(p.support.max());
    }
  }
  j["rooms"] = json::array();
  for (const auto& [id, r] : g.rooms) {
    j["rooms"].push_back({{"id", id}, {"center", vec_json(r.center)}, {"widths", vec_json(r.widths)}, {"planes", r.planes}});
  }
  j["corridors"] = json::array();
  for (const auto& [id, c] : g.corridors) {
    j["corridors"].push_back({{"id", id},
                              {"axis", c.axis == CorridorAxis::X ? "x" : "y"},
                              {"center", vec_json(c.center)},
                              {"width", c.width},
                              {"planes", c.planes}});
  }
  j["factors"] = json::array();
  for (const auto& f : g.factors) {
    json jf{{"kind", to_string(f.kind)}, {"ids", f.ids}};
    switch (f.kind) {
      case FactorKind::Odometry:
      case FactorKind::LoopClosure:
        jf["measurement"] = pose_json(f.pose_measurement);
        break;
      case FactorKind::PosePlane:
        jf["measurement"] = vec_json(f.plane_measurement.vector());
        break;
      case FactorKind::RoomPlane:
      case FactorKind::CorridorPlane:
        jf["slot"] = f.slot;
        break;
    }
    json info = json::array();
    for (Eigen::Index r = 0; r < f.information.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.information.cols(); ++c) info.push_back(f.information(r, c));
    }
    jf["information"] = info;
    j["factors"].push_back(jf);
  }
  return j;
}

SGraph graph_from_json(const json& j) {
  return guarded([&] {
    const int version = j.at("schema_version").get<int>();
    if (version != kGraphSchemaVersion) throw FormatError("unsupported graph schema version " + std::to_string(version));
    SGraph g;
    g.map_to_odom = pose_from(j.at("map_to_odom"));
    for (const auto& k : j.at("keyframes")) {
      const int id = k.at("id").get<int>();
      g.keyframes[id] = Keyframe{id, k.at("t").get<double>(), pose_from(k.at("pose")), pose_from(k.at("odom")), nullptr};
    }
    for (const auto& p : j.at("planes")) {
      PlaneLandmark lm;
      lm.id = p.at("id").get<int>();
      lm.cls = plane_class_from_string(p.at("class").get<std::string>());
      lm.params = {p.at("phi").get<double>(), p.at("theta").get<double>(), p.at("d").get<double>()};
      lm.extent = vec_from(p.at("extent"), 2);
      lm.centroid_sum = vec_from(p.at("centroid_sum"), 3);
      lm.centroid_count = p.at("centroid_count").get<int>();
      if (p.contains("facing")) lm.facing = vec_from(p.at("facing"), 3);
      if (p.contains("support_min") && p.contains("support_max")) {
        lm.support = Eigen::AlignedBox3d(Eigen::Vector3d(vec_from(p.at("support_min"), 3)),
                                         Eigen::Vector3d(vec_from(p.at("support_max"), 3)));
      }
      g.planes[lm.id] = lm;
    }
    for (const auto& r : j.at("rooms")) {
      RoomNode room;
      room.id = r.at("id").get<int>();
      room.center = vec_from(r.at("center"), 2);
      room.widths = vec_from(r.at("widths"), 2);
      room.planes = r.at("planes").get<std::array<int, 4>>();
      g.rooms[room.id] = room;
    }
    for (const auto& c : j.at("corridors")) {
      CorridorNode cn;
      cn.id = c.at("id").get<int>();
      cn.axis = c.at("axis").get<std::string>() == "x" ? CorridorAxis::X : CorridorAxis::Y;
      cn.center = vec_from(c.at("center"), 2);
      cn.width = c.at("width").get<double>();
      cn.planes = c.at("planes").get<std::array<int, 2>>();
      g.corridors[cn.id] = cn;
    }
    for (const auto& jf : j.at("factors")) {
      Factor f;
      f.kind = factor_kind_from_string(jf.at("kind").get<std::string>());
      f.ids = jf.at("ids").get<std::array<int, 2>>();
      switch (f.kind) {
        case FactorKind::Odometry:
        case FactorKind::LoopClosure:
          f.pose_measurement = pose_from(jf.at("measurement"));
          break;
        case FactorKind::PosePlane:
          f.plane_measurement = PlaneMinimald::from_vector(vec_from(jf.at("measurement"), 3));
          break;
        case FactorKind::RoomPlane:
        case FactorKind::CorridorPlane:
          f.slot = jf.at("slot").get<int>();
          break;
      }
      const int n = f.residual_dim();
      const Eigen::VectorXd info = vec_from(jf.at("information"), n * n);
      f.information = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(info.data(), n, n);
      g.factors.push_back(std::move(f));
    }
    const auto ids = j.at("next_ids").get<std::array<int, 4>>();
    g.set_next_ids(ids[0], ids[1], ids[2], ids[3]);
    const std::string problem = g.validate();
    if (!problem.empty()) throw FormatError("graph snapshot is inconsistent: " + problem);
    return g;
  });
}

void write_dataset(const fs::path& dir, const WorldModel& world, const std::vector<SimFrame>& frames) {
  fs::create_directories(dir / "scans");
  Trajectory gt, odom;
  for (const auto& f : frames) {
    gt.emplace_back(f.stamp, f.ground_truth);
    odom.emplace_back(f.stamp, f.odometry);
  }
  write_tum(dir / "ground_truth.tum", gt);
  write_tum(dir / "odometry.tum", odom);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.ply", i);
    write_ply(dir / "scans" / name, frames[i].scan);
  }
  save_json(dir / "world.json", world_to_json(world));
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  const Trajectory odom = read_tum(dir / "odometry.tum");
  Trajectory gt;
  if (fs::exists(dir / "ground_truth.tum")) gt = read_tum(dir / "ground_truth.tum");
  if (!gt.empty() && gt.size() != odom.size()) throw FormatError("ground truth and odometry lengths differ");
  for (std::size_t i = 0; i < odom.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.ply", i);
    SimFrame f;
    f.stamp = odom[i].first;
    f.odometry = odom[i].second;
    f.ground_truth = gt.empty() ? Pose3d::identity() : gt[i].second;
    f.scan = read_ply(dir / "scans" / name);
    f.scan.timestamp = f.stamp;
    ds.frames.push_back(std::move(f));
  }
  if (fs::exists(dir / "world.json")) {
    ds.world = world_from_json(load_json(dir / "world.json"));
    ds.has_world = true;
  }
  return ds;
}

}  // namespace sgraphs
