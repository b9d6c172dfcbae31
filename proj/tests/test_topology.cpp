#include <gtest/gtest.h>

#include <random>

#include "sgraphs/factors.hpp"
#include "sgraphs/solver.hpp"
#include "sgraphs/topology.hpp"
#include "fixtures.hpp"

using namespace sgraphs;
using namespace sgraphs::test;

namespace {

WallCandidate wall(int id, const Eigen::Vector3d& normal, double d, double extent = 3.0,
                   const Eigen::Vector3d& centroid = Eigen::Vector3d::Zero()) {
  return {id, closest_point_form(PlaneHessiand{normal, d}), Eigen::Vector2d(2.6, extent), centroid};
}

PlaneMinimald x_wall(double x) { return to_minimal(closest_point_form(PlaneHessiand{Eigen::Vector3d::UnitX(), x})); }

}  // namespace

TEST(DetectRoom, WorkedExample) {
  const Eigen::Vector3d view(3.0, 3.0, 1.0);
  const auto room = detect_room({wall(0, Eigen::Vector3d::UnitX(), 1.0), wall(1, Eigen::Vector3d::UnitX(), 5.0),
                                 wall(2, Eigen::Vector3d::UnitY(), 2.0), wall(3, Eigen::Vector3d::UnitY(), 4.0)},
                                view, RoomCriterionConfig{});
  ASSERT_TRUE(room);
  EXPECT_DOUBLE_EQ(room->center.x(), 3.0);
  EXPECT_DOUBLE_EQ(room->center.y(), 3.0);
  EXPECT_DOUBLE_EQ(room->widths.x(), 4.0);
  EXPECT_DOUBLE_EQ(room->widths.y(), 2.0);
  EXPECT_EQ(room->planes, (std::array<int, 4>{0, 1, 2, 3}));
}

TEST(DetectRoom, PairOrderDoesNotMatter) {
  const Eigen::Vector3d view(3.0, 3.0, 1.0);
  const auto room = detect_room({wall(1, Eigen::Vector3d::UnitX(), 5.0), wall(0, Eigen::Vector3d::UnitX(), 1.0),
                                 wall(3, Eigen::Vector3d::UnitY(), 4.0), wall(2, Eigen::Vector3d::UnitY(), 2.0)},
                                view, RoomCriterionConfig{});
  ASSERT_TRUE(room);
  EXPECT_EQ(room->planes, (std::array<int, 4>{0, 1, 2, 3}));
}

TEST(DetectRoom, StraddlingTheOrigin) {
  const Eigen::Vector3d view(0.5, -0.5, 1.0);
  const auto room = detect_room({wall(0, -Eigen::Vector3d::UnitX(), 2.0), wall(1, Eigen::Vector3d::UnitX(), 3.0),
                                 wall(2, -Eigen::Vector3d::UnitY(), 4.0), wall(3, Eigen::Vector3d::UnitY(), 1.5)},
                                view, RoomCriterionConfig{});
  ASSERT_TRUE(room);
  EXPECT_NEAR(room->widths.x(), 5.0, 1e-12);
  EXPECT_NEAR(room->widths.y(), 5.5, 1e-12);
  EXPECT_NEAR(room->center.x(), 0.5, 1e-12);
  EXPECT_NEAR(room->center.y(), -1.25, 1e-12);
}

TEST(DetectRoom, SameFacingWallsRejected) {
  // both x-walls lie on the same side of the viewpoint, so they face the same way
  const Eigen::Vector3d view(6.0, 3.0, 1.0);
  EXPECT_FALSE(detect_room({wall(0, Eigen::Vector3d::UnitX(), 1.0), wall(1, Eigen::Vector3d::UnitX(), 5.0),
                            wall(2, Eigen::Vector3d::UnitY(), 2.0), wall(3, Eigen::Vector3d::UnitY(), 4.0)},
                           view, RoomCriterionConfig{}));
}

TEST(DetectRoom, NarrowWidthRejected) {
  const Eigen::Vector3d view(1.15, 3.0, 1.0);
  EXPECT_FALSE(detect_room({wall(0, Eigen::Vector3d::UnitX(), 1.0), wall(1, Eigen::Vector3d::UnitX(), 1.3),
                            wall(2, Eigen::Vector3d::UnitY(), 2.0), wall(3, Eigen::Vector3d::UnitY(), 4.0)},
                           view, RoomCriterionConfig{}));
}

TEST(DetectRoom, DissimilarExtentRejected) {
  const Eigen::Vector3d view(3.0, 3.0, 1.0);
  EXPECT_FALSE(detect_room({wall(0, Eigen::Vector3d::UnitX(), 1.0, 2.0), wall(1, Eigen::Vector3d::UnitX(), 5.0, 9.0),
                            wall(2, Eigen::Vector3d::UnitY(), 2.0), wall(3, Eigen::Vector3d::UnitY(), 4.0)},
                           view, RoomCriterionConfig{}));
}

TEST(DetectRoom, CenterIdentitiesHoldExactly) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int i = 0; i < 200; ++i) {
    const double x1 = u(rng), x2 = x1 + u(rng), y1 = u(rng), y2 = y1 + u(rng);
    const Eigen::Vector3d view(0.5 * (x1 + x2), 0.5 * (y1 + y2), 1.0);
    const auto room = detect_room({wall(0, Eigen::Vector3d::UnitX(), x1), wall(1, Eigen::Vector3d::UnitX(), x2),
                                   wall(2, Eigen::Vector3d::UnitY(), y1), wall(3, Eigen::Vector3d::UnitY(), y2)},
                                  view, RoomCriterionConfig{0.5, 1e9});
    ASSERT_TRUE(room);
    EXPECT_NEAR(room->center.x() - room->widths.x() / 2.0, x1, 1e-12);
    EXPECT_NEAR(room->center.y() - room->widths.y() / 2.0, y1, 1e-12);
    for (int which = 1; which <= 4; ++which) {
      const double d = std::array<double, 4>{x1, x2, y1, y2}[which - 1];
      const Eigen::Vector3d n = which <= 2 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
      EXPECT_NEAR(room_plane_residual(*room, to_minimal(PlaneHessiand{n, d}), which), 0.0, 1e-12);
    }
  }
}

TEST(DetectCorridor, WorkedExample) {
  const Eigen::Vector3d view(1.0, 5.0, 1.0);
  const auto c = detect_corridor(wall(0, Eigen::Vector3d::UnitX(), 0.0, 8.0, {0.0, 4.0, 1.0}),
                                 wall(1, Eigen::Vector3d::UnitX(), 2.0, 8.0, {2.0, 6.0, 1.0}), view,
                                 RoomCriterionConfig{});
  ASSERT_TRUE(c);
  EXPECT_EQ(c->axis, CorridorAxis::X);
  EXPECT_DOUBLE_EQ(c->center.x(), 1.0);
  EXPECT_DOUBLE_EQ(c->width, 2.0);
  EXPECT_DOUBLE_EQ(c->center.y(), 5.0);
  EXPECT_NEAR(corridor_plane_residual(*c, x_wall(0.0), 1), 0.0, 1e-12);
  EXPECT_NEAR(corridor_plane_residual(*c, x_wall(2.0), 2), 0.0, 1e-12);
  EXPECT_NEAR(corridor_plane_residual(*c, x_wall(2.3), 2), -0.3, 1e-8);
}

TEST(DetectCorridor, SameFacingRejected) {
  const Eigen::Vector3d view(3.0, 5.0, 1.0);
  EXPECT_FALSE(detect_corridor(wall(0, Eigen::Vector3d::UnitX(), 0.5), wall(1, Eigen::Vector3d::UnitX(), 2.0), view,
                               RoomCriterionConfig{}));
}

TEST(DetectCorridor, MixedClassesRejected) {
  const Eigen::Vector3d view(1.0, 1.0, 1.0);
  EXPECT_FALSE(detect_corridor(wall(0, Eigen::Vector3d::UnitX(), 2.0), wall(1, Eigen::Vector3d::UnitY(), 2.0), view,
                               RoomCriterionConfig{}));
}

TEST(RoomResidual, CreationAndPerturbation) {
  RoomNode room;
  room.center = {3.0, 3.0};
  room.widths = {4.0, 2.0};
  EXPECT_DOUBLE_EQ(room_plane_residual(room, x_wall(1.0), 1), 0.0);
  EXPECT_NEAR(room_plane_residual(room, x_wall(5.2), 2), -0.2, 1e-12);
}

TEST(AssociateRoom, IdenticalRoomMatchesWithoutMerges) {
  BoxRoom b = box_room();
  const RoomNode candidate = b.graph.rooms.at(b.room);
  const RoomAssociation a = associate_room(b.graph, candidate, RoomCriterionConfig{});
  EXPECT_EQ(a.outcome, AssociationOutcome::Matched);
  EXPECT_EQ(a.id, b.room);
  EXPECT_TRUE(a.merges.empty());
}

TEST(AssociateRoom, DuplicateWallIsMerged) {
  BoxRoom b = box_room();
  const int dup = b.graph.add_plane(PlaneClass::XVertical, x_wall(6.05));
  b.graph.add_pose_plane(3, dup, to_minimal(PlaneHessiand{Eigen::Vector3d::UnitX(), 4.0}), kPlaneInfo);
  RoomNode candidate = b.graph.rooms.at(b.room);
  candidate.planes[1] = dup;
  const RoomAssociation a = associate_room(b.graph, candidate, RoomCriterionConfig{});
  ASSERT_EQ(a.outcome, AssociationOutcome::Matched);
  ASSERT_EQ(a.merges.size(), 1u);
  EXPECT_EQ(a.merges[0], std::make_pair(0, dup));

  const std::size_t planes_before = b.graph.planes.size();
  const std::size_t factors_before = b.graph.factors.size();
  const auto observers_of_survivor = [&] {
    int n = 0;
    for (const Factor& f : b.graph.factors) n += f.kind == FactorKind::PosePlane && f.ids[1] == 0;
    return n;
  };
  const int survivor_obs = observers_of_survivor();
  b.graph.merge_planes(0, dup);
  EXPECT_EQ(b.graph.planes.size(), planes_before - 1);
  EXPECT_EQ(b.graph.factors.size(), factors_before);
  EXPECT_EQ(observers_of_survivor(), survivor_obs + 1);
  for (const Factor& f : b.graph.factors) {
    if (f.kind == FactorKind::PosePlane) EXPECT_NE(f.ids[1], dup);
  }
  EXPECT_EQ(b.graph.validate(), "");
}

TEST(AssociateRoom, DistantRoomIsNew) {
  SGraph g;
  RoomNode existing;
  existing.center = {0.0, 0.0};
  existing.widths = {4.0, 4.0};
  for (int s = 0; s < 4; ++s) existing.planes[s] = g.add_plane(s < 2 ? PlaneClass::XVertical : PlaneClass::YVertical, {});
  g.add_room(existing);
  RoomNode candidate = existing;
  candidate.center = {6.0, 0.0};
  for (int s = 0; s < 4; ++s) candidate.planes[s] = g.add_plane(s < 2 ? PlaneClass::XVertical : PlaneClass::YVertical, {});
  EXPECT_EQ(associate_room(g, candidate, RoomCriterionConfig{}).outcome, AssociationOutcome::New);
}

TEST(AssociateCorridor, RoomWallsAreExclusive) {
  BoxRoom b = box_room();
  CorridorNode c;
  c.axis = CorridorAxis::X;
  c.center = {2.0, 0.5};
  c.width = 8.0;
  c.planes = {1, 0};
  EXPECT_EQ(associate_corridor(b.graph, c, RoomCriterionConfig{}).outcome, AssociationOutcome::Rejected);
}

TEST(UpdateTopology, CreatesOneRoomAndKeepsLinksExclusive) {
  BoxRoom b = box_room();
  b.graph.rooms.clear();
  std::erase_if(b.graph.factors, [](const Factor& f) { return f.kind == FactorKind::RoomPlane; });
  const std::vector<int> visible = {0, 1, 2, 3, 4, 5};
  const TopologyUpdate first = update_topology(b.graph, 2, visible, RoomCriterionConfig{});
  EXPECT_EQ(first.rooms_created, 1);
  const TopologyUpdate again = update_topology(b.graph, 4, visible, RoomCriterionConfig{});
  EXPECT_EQ(again.rooms_created, 0);
  EXPECT_EQ(again.corridors_created, 0);
  ASSERT_EQ(b.graph.rooms.size(), 1u);
  const RoomNode& r = b.graph.rooms.begin()->second;
  EXPECT_NEAR(r.center.x(), 2.0, 1e-9);
  EXPECT_NEAR(r.center.y(), 0.5, 1e-9);
  EXPECT_NEAR(r.widths.x(), 8.0, 1e-9);
  EXPECT_NEAR(r.widths.y(), 7.0, 1e-9);
  for (const Factor& f : b.graph.factors) {
    if (f.kind == FactorKind::RoomPlane) EXPECT_NEAR(factor_residual(b.graph, f)[0], 0.0, 1e-12);
  }
  EXPECT_EQ(b.graph.validate(), "");
}

TEST(UpdateTopology, NarrowPairBecomesCorridor) {
  SGraph g;
  g.add_keyframe(0, Pose3d::from_translation(1.0, 5.0, 1.0), Pose3d::identity());
  const int a = g.add_plane(PlaneClass::XVertical, x_wall(0.5));
  const int c = g.add_plane(PlaneClass::XVertical, x_wall(2.5));
  for (int id : {a, c}) {
    g.planes.at(id).extent = {2.6, 10.0};
    g.planes.at(id).centroid_sum = {0.0, 5.0, 1.0};
    g.planes.at(id).centroid_count = 1;
  }
  const TopologyUpdate up = update_topology(g, 0, {a, c}, RoomCriterionConfig{});
  EXPECT_EQ(up.corridors_created, 1);
  ASSERT_EQ(g.corridors.size(), 1u);
  const CorridorNode& node = g.corridors.begin()->second;
  EXPECT_NEAR(node.center.x(), 1.5, 1e-12);
  EXPECT_NEAR(node.width, 2.0, 1e-12);
  for (const Factor& f : g.factors) {
    if (f.kind == FactorKind::CorridorPlane) EXPECT_NEAR(factor_residual(g, f)[0], 0.0, 1e-12);
  }
}

TEST(SoftLoop, PerturbedWallReturnsToRoomConsistentValue) {
  BoxRoom b = box_room();
  SolverConfig cfg;
  cfg.max_iters = 100;
  ASSERT_LT(optimize(b.graph, cfg).final_cost, 1e-10);
  PlaneLandmark& lm = b.graph.planes.at(0);
  const double converged = lm.params.distance;
  lm.params.distance += 0.3;
  const SolverReport report = optimize(b.graph, cfg);
  EXPECT_LT(report.final_cost, 1e-10);
  const RoomNode& r = b.graph.rooms.at(b.room);
  const double consistent = r.center.x() + r.widths.x() / 2.0;
  EXPECT_NEAR(b.graph.planes.at(0).params.distance, consistent, 1e-8);
  EXPECT_NEAR(b.graph.planes.at(0).params.distance, converged, 1e-8);
  EXPECT_NEAR(consistent, 6.0, 1e-8);
}
