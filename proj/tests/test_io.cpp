#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "sgraphs/errors.hpp"
#include "sgraphs/io.hpp"
#include "test_util.hpp"

using namespace sgraphs;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sgraphs_io_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Graph with every variable and factor kind and irrational values.
SGraph populated_graph() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SGraph g;
  for (int k = 0; k < 5; ++k) {
    g.add_keyframe(0.1 * k + 1e-7 * u(rng), test::random_pose(rng), test::random_pose(rng));
    if (k > 0) {
      Matrix6d info = Matrix6d::Identity() * (100.0 + u(rng));
      info(0, 1) = info(1, 0) = 0.5 * u(rng);
      g.add_odometry(k - 1, k, test::random_pose(rng, 1.0, 0.3), info);
    }
  }
  g.add_loop_closure(0, 4, test::random_pose(rng, 0.5, 0.1), Matrix6d::Identity() * std::sqrt(2.0));
  std::vector<int> planes;
  for (int p = 0; p < 6; ++p) {
    const PlaneClass cls = p < 2 ? PlaneClass::XVertical : p < 4 ? PlaneClass::YVertical : PlaneClass::Horizontal;
    const int id = g.add_plane(cls, {0.1 * u(rng) + (p % 2) * 3.0, 0.01 * u(rng), 2.0 + u(rng) / 3.0});
    PlaneLandmark& lm = g.planes.at(id);
    lm.extent = {M_PI, M_E};
    lm.centroid_sum = {u(rng), u(rng), u(rng)};
    lm.centroid_count = 3 + p;
    lm.facing = Eigen::Vector3d(u(rng), u(rng), 0.0).normalized();
    if (p != 5) lm.support = Eigen::AlignedBox3d(Eigen::Vector3d(-1.0 / 3.0, 0.0, 0.0), Eigen::Vector3d(1.0 / 7.0, 2.0, 2.6));
    planes.push_back(id);
    for (int k = 0; k < 5; k += 2) {
      Eigen::Matrix3d info = Eigen::Matrix3d::Identity() * 2500.0;
      info(0, 2) = info(2, 0) = u(rng);
      g.add_pose_plane(k, id, {u(rng), 0.1 * u(rng), 1.0 + u(rng)}, info);
    }
  }
  RoomNode room;
  room.center = {1.0 / 3.0, -2.0 / 7.0};
  room.widths = {4.0 + 1.0 / 9.0, 5.0 + 1.0 / 11.0};
  room.planes = {planes[0], planes[1], planes[2], planes[3]};
  const int rid = g.add_room(room);
  for (int s = 0; s < 4; ++s) g.add_room_plane(rid, s, 100.0 / 3.0);

  const int extra_a = g.add_plane(PlaneClass::XVertical, {0.0, 0.0, 7.0 + 1.0 / 13.0});
  const int extra_b = g.add_plane(PlaneClass::XVertical, {M_PI, 0.0, 5.0 - 1.0 / 17.0});
  g.add_pose_plane(1, extra_a, {0.0, 0.0, 6.0}, Eigen::Matrix3d::Identity());
  g.add_pose_plane(3, extra_b, {M_PI, 0.0, 4.0}, Eigen::Matrix3d::Identity());
  CorridorNode c;
  c.axis = CorridorAxis::X;
  c.center = {1.0 / 7.0, 12.0 + 1.0 / 3.0};
  c.width = 2.0 + 1.0 / 19.0;
  c.planes = {extra_b, extra_a};
  const int cid = g.add_corridor(c);
  g.add_corridor_plane(cid, 0, 100.0);
  g.add_corridor_plane(cid, 1, 100.0);
  g.map_to_odom = test::random_pose(rng);
  return g;
}

void expect_pose_near(const Pose3d& a, const Pose3d& b, double tol) {
  EXPECT_LT((a.translation - b.translation).cwiseAbs().maxCoeff(), tol);
  EXPECT_LT((a.rotation - b.rotation).cwiseAbs().maxCoeff(), tol);
}

}  // namespace

TEST(GraphJson, RoundTripReproducesValuesAndTopology) {
  const SGraph g = populated_graph();
  ASSERT_EQ(g.validate(), "");
  const SGraph r = graph_from_json(nlohmann::json::parse(graph_to_json(g).dump()));

  ASSERT_EQ(r.keyframes.size(), g.keyframes.size());
  for (const auto& [id, kf] : g.keyframes) {
    const Keyframe& o = r.keyframes.at(id);
    EXPECT_EQ(o.stamp, kf.stamp);
    expect_pose_near(o.pose, kf.pose, 1e-12);
    expect_pose_near(o.odom, kf.odom, 1e-12);
  }
  expect_pose_near(r.map_to_odom, g.map_to_odom, 1e-12);

  ASSERT_EQ(r.planes.size(), g.planes.size());
  for (const auto& [id, lm] : g.planes) {
    const PlaneLandmark& o = r.planes.at(id);
    EXPECT_EQ(o.cls, lm.cls);
    EXPECT_LT((o.params.vector() - lm.params.vector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((o.extent - lm.extent).norm(), 1e-12);
    EXPECT_LT((o.centroid_sum - lm.centroid_sum).norm(), 1e-12);
    EXPECT_EQ(o.centroid_count, lm.centroid_count);
    EXPECT_LT((o.facing - lm.facing).norm(), 1e-12);
    EXPECT_EQ(o.support.isEmpty(), lm.support.isEmpty());
    if (!lm.support.isEmpty()) {
      EXPECT_LT((o.support.min() - lm.support.min()).norm(), 1e-12);
      EXPECT_LT((o.support.max() - lm.support.max()).norm(), 1e-12);
    }
  }

  ASSERT_EQ(r.rooms.size(), g.rooms.size());
  for (const auto& [id, room] : g.rooms) {
    const RoomNode& o = r.rooms.at(id);
    EXPECT_LT((o.vector() - room.vector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(o.planes, room.planes);
  }
  ASSERT_EQ(r.corridors.size(), g.corridors.size());
  for (const auto& [id, c] : g.corridors) {
    const CorridorNode& o = r.corridors.at(id);
    EXPECT_EQ(o.axis, c.axis);
    EXPECT_LT((o.vector() - c.vector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(o.planes, c.planes);
  }

  ASSERT_EQ(r.factors.size(), g.factors.size());
  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    const Factor& a = g.factors[i];
    const Factor& b = r.factors[i];
    EXPECT_EQ(a.kind, b.kind);
    EXPECT_EQ(a.ids, b.ids);
    EXPECT_EQ(a.slot, b.slot);
    ASSERT_EQ(a.information.rows(), b.information.rows());
    EXPECT_LT((a.information - b.information).cwiseAbs().maxCoeff(), 1e-12 * a.information.cwiseAbs().maxCoeff());
    expect_pose_near(a.pose_measurement, b.pose_measurement, 1e-12);
    EXPECT_LT((a.plane_measurement.vector() - b.plane_measurement.vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(r.next_keyframe_id(), g.next_keyframe_id());
  EXPECT_EQ(r.next_plane_id(), g.next_plane_id());
  EXPECT_EQ(r.validate(), "");
}

TEST(GraphJson, RepeatedRoundTripsDoNotDrift) {
  const SGraph g = populated_graph();
  SGraph r = g;
  for (int i = 0; i < 20; ++i) r = graph_from_json(nlohmann::json::parse(graph_to_json(r).dump()));
  for (const auto& [id, kf] : g.keyframes) expect_pose_near(r.keyframes.at(id).pose, kf.pose, 1e-12);
  for (const auto& [id, lm] : g.planes) {
    EXPECT_LT((r.planes.at(id).params.vector() - lm.params.vector()).cwiseAbs().maxCoeff(), 1e-12);
  }
  for (std::size_t i = 0; i < g.factors.size(); ++i) {
    expect_pose_near(r.factors[i].pose_measurement, g.factors[i].pose_measurement, 1e-12);
  }
}

TEST(GraphJson, RejectsOtherSchemaVersions) {
  nlohmann::json j = graph_to_json(populated_graph());
  j["schema_version"] = kGraphSchemaVersion + 1;
  EXPECT_THROW(graph_from_json(j), FormatError);
}

TEST(GraphJson, RejectsDanglingFactor) {
  nlohmann::json j = graph_to_json(populated_graph());
  j["factors"][0]["ids"][1] = 999;
  EXPECT_THROW(graph_from_json(j), FormatError);
}

TEST(Tum, RoundTripIsLossless) {
  std::mt19937_64 rng(5);
  Trajectory traj;
  for (int k = 0; k < 50; ++k) traj.emplace_back(1.7e9 + k / 3.0, test::random_pose(rng, 100.0));
  const fs::path dir = temp_dir("tum");
  write_tum(dir / "a.tum", traj);
  const Trajectory back = read_tum(dir / "a.tum");
  ASSERT_EQ(back.size(), traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(back[i].first, traj[i].first);
    EXPECT_EQ(back[i].second.translation, traj[i].second.translation);
    EXPECT_LT((back[i].second.rotation - traj[i].second.rotation).cwiseAbs().maxCoeff(), 1e-14);
  }

  // every number in the file parses to the same double that was printed
  write_tum(dir / "b.tum", back);
  std::ifstream a(dir / "a.tum"), b(dir / "b.tum");
  std::string la, lb;
  int lines = 0;
  while (std::getline(a, la) && std::getline(b, lb)) {
    std::istringstream sa(la), sb(lb);
    std::vector<double> va(8), vb(8);
    for (int i = 0; i < 8; ++i) sa >> va[i], sb >> vb[i];
    for (int i = 0; i < 4; ++i) EXPECT_EQ(va[i], vb[i]);
    for (int i = 4; i < 8; ++i) EXPECT_NEAR(va[i], vb[i], 1e-15);
    EXPECT_GE(va[7], 0.0);
    ++lines;
  }
  EXPECT_EQ(lines, 50);
  fs::remove_all(dir);
}

TEST(Tum, ParsedQuaternionMatchesText) {
  const fs::path dir = temp_dir("tum_text");
  const Eigen::Quaterniond q = Eigen::Quaterniond(0.3, -0.1, 0.7, 0.2).normalized();
  {
    std::ofstream os(dir / "q.tum");
    os.precision(17);
    os << "12.5 1.25 -3.5 0.125 " << q.x() << " " << q.y() << " " << q.z() << " " << q.w() << "\n";
  }
  const Trajectory t = read_tum(dir / "q.tum");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].first, 12.5);
  EXPECT_EQ(t[0].second.translation, Eigen::Vector3d(1.25, -3.5, 0.125));
  EXPECT_LT((t[0].second.rotation - q.toRotationMatrix()).cwiseAbs().maxCoeff(), 1e-15);
  fs::remove_all(dir);
}

TEST(Tum, SkipsCommentsAndRejectsGarbage) {
  const fs::path dir = temp_dir("tum_bad");
  {
    std::ofstream os(dir / "ok.tum");
    os << "# timestamp tx ty tz qx qy qz qw\n\n1.0 1 2 3 0 0 0 1\n";
  }
  const Trajectory t = read_tum(dir / "ok.tum");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].second.translation, Eigen::Vector3d(1, 2, 3));
  {
    std::ofstream os(dir / "bad.tum");
    os << "1.0 1 2 three 0 0 0 1\n";
  }
  EXPECT_THROW(read_tum(dir / "bad.tum"), FormatError);
  EXPECT_THROW(read_tum(dir / "missing.tum"), FormatError);
  fs::remove_all(dir);
}

TEST(Ply, RoundTripIsExact) {
  std::mt19937_64 rng(8);
  PointCloud cloud;
  for (int i = 0; i < 500; ++i) cloud.points.push_back(test::random_vector(rng, 30.0));
  const fs::path dir = temp_dir("ply");
  write_ply(dir / "c.ply", cloud);
  const PointCloud back = read_ply(dir / "c.ply");
  EXPECT_EQ(back.points, cloud.points);
  {
    std::ofstream os(dir / "bad.ply");
    os << "not a ply\n";
  }
  EXPECT_THROW(read_ply(dir / "bad.ply"), FormatError);
  fs::remove_all(dir);
}

TEST(SpecJson, LayoutAndNoiseRoundTrip) {
  const LayoutSpec l = layout_from_json(load_json(fs::path(SGRAPHS_SOURCE_DIR) / "config/se1_layout.json"));
  EXPECT_EQ(layout_to_json(layout_from_json(layout_to_json(l))).dump(), layout_to_json(l).dump());
  EXPECT_EQ(l.spaces.size(), 8u);
  const NoiseSpec n{0.02, 0.01, 0.005, true, 17};
  const NoiseSpec m = noise_from_json(noise_to_json(n));
  EXPECT_EQ(m.sigma_t, n.sigma_t);
  EXPECT_EQ(m.sigma_r, n.sigma_r);
  EXPECT_EQ(m.range_sigma, n.range_sigma);
  EXPECT_EQ(m.planar, n.planar);
  EXPECT_EQ(m.seed, n.seed);
  nlohmann::json bad = noise_to_json(n);
  bad["sigma_t"] = -1.0;
  EXPECT_THROW(noise_from_json(bad), FormatError);
}

TEST(Dataset, WriteAndReadBack) {
  LayoutSpec l;
  l.spaces.push_back({"room", SpaceKind::Room, {0.0, 0.0}, {4.0, 6.0}});
  l.trajectory.waypoints = {{2.0, 2.0, 0.0}, {2.0, 4.0, 0.0}};
  l.sensor.azimuth_steps = 90;
  const WorldModel w = generate_world(l);
  const auto frames = simulate_run(w, l, NoiseSpec{0.02, 0.01, 0.01, false, 3});
  const fs::path dir = temp_dir("dataset");
  write_dataset(dir, w, frames);
  EXPECT_TRUE(fs::exists(dir / "ground_truth.tum"));
  EXPECT_TRUE(fs::exists(dir / "odometry.tum"));
  EXPECT_TRUE(fs::exists(dir / "world.json"));
  EXPECT_TRUE(fs::exists(dir / "scans" / "000000.ply"));
  const Dataset d = read_dataset(dir);
  EXPECT_TRUE(d.has_world);
  EXPECT_EQ(d.world.planes.size(), w.planes.size());
  EXPECT_EQ(world_to_json(d.world).dump(), world_to_json(w).dump());
  ASSERT_EQ(d.frames.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(d.frames[i].stamp, frames[i].stamp);
    EXPECT_EQ(d.frames[i].scan.points, frames[i].scan.points);
    EXPECT_EQ(d.frames[i].odometry.translation, frames[i].odometry.translation);
  }
  fs::remove_all(dir);
}
