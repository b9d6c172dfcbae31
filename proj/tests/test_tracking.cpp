#include <gtest/gtest.h>

#include "sgraphs/tracking.hpp"

using namespace sgraphs;

namespace {

PlaneDetection detection(const Eigen::Vector3d& normal, double d) {
  PlaneDetection det;
  det.plane = {normal, d};
  det.extent = {2.0, 4.0};
  return det;
}

int add_x_wall(SGraph& g, double x, const Eigen::Vector3d& facing) {
  const int id = g.add_plane(PlaneClass::XVertical, to_minimal(PlaneHessiand{Eigen::Vector3d::UnitX(), x}));
  g.planes.at(id).facing = facing;
  return id;
}

}  // namespace

TEST(Keyframes, FirstCallIsAtMapOrigin) {
  SGraph g;
  const auto id = maybe_add_keyframe(g, 0.0, Pose3d::identity(), KeyframePolicy{});
  ASSERT_TRUE(id);
  EXPECT_EQ(*id, 0);
  EXPECT_TRUE(g.keyframes.at(0).pose.translation.isZero());
  EXPECT_TRUE(g.keyframes.at(0).pose.rotation.isIdentity());
  EXPECT_TRUE(g.factors.empty());
}

TEST(Keyframes, SmallMotionIsSkipped) {
  SGraph g;
  maybe_add_keyframe(g, 0.0, Pose3d::identity(), KeyframePolicy{});
  EXPECT_FALSE(maybe_add_keyframe(g, 1.0, Pose3d::from_translation(0.1, 0.0, 0.0), KeyframePolicy{}));
  EXPECT_EQ(g.keyframes.size(), 1u);
}

TEST(Keyframes, LargeMotionAddsOdometryFactor) {
  SGraph g;
  const Pose3d start = Pose3d::from_xyz_yaw(1.0, 2.0, 0.0, 0.3);
  const Pose3d end = Pose3d::from_xyz_yaw(2.2, 2.9, 0.0, 0.4);
  maybe_add_keyframe(g, 0.0, start, KeyframePolicy{});
  const auto id = maybe_add_keyframe(g, 1.0, end, KeyframePolicy{});
  ASSERT_TRUE(id);
  ASSERT_EQ(g.factors.size(), 1u);
  const Factor& f = g.factors[0];
  EXPECT_EQ(f.kind, FactorKind::Odometry);
  EXPECT_EQ(f.ids, (std::array<int, 2>{0, *id}));
  const Pose3d expected = inverse_compose(start, end);
  EXPECT_LT((f.pose_measurement.translation - expected.translation).norm(), 1e-9);
  EXPECT_LT((f.pose_measurement.rotation - expected.rotation).norm(), 1e-9);
}

TEST(Keyframes, RotationAloneTriggers) {
  SGraph g;
  maybe_add_keyframe(g, 0.0, Pose3d::identity(), KeyframePolicy{});
  EXPECT_TRUE(maybe_add_keyframe(g, 1.0, Pose3d::from_xyz_yaw(0.0, 0.0, 0.0, 0.6), KeyframePolicy{}));
}

TEST(Keyframes, PoseFollowsMapToOdom) {
  SGraph g;
  g.map_to_odom = Pose3d::from_xyz_yaw(0.5, -1.0, 0.0, 0.2);
  const Pose3d odom = Pose3d::from_xyz_yaw(3.0, 1.0, 0.0, -0.4);
  maybe_add_keyframe(g, 0.0, odom, KeyframePolicy{});
  const Pose3d expected = compose(g.map_to_odom, odom);
  EXPECT_LT((g.keyframes.at(0).pose.translation - expected.translation).norm(), 1e-12);
}

TEST(OdometryNoise, InformationScalesWithDistance) {
  const OdometryNoiseModel m{0.02, 0.01};
  const Matrix6d info = m.information(Pose3d::from_translation(4.0, 0.0, 0.0));
  EXPECT_NEAR(info(0, 0), 1.0 / (0.02 * 0.02 * 4.0), 1e-9);
  EXPECT_NEAR(info(3, 3), 1.0 / (1e-3 * 1e-3), 1e-6);
}

TEST(AssociatePlane, ExactReobservationReturnsOwnId) {
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  const int id = add_x_wall(g, 5.0, -Eigen::Vector3d::UnitX());
  EXPECT_EQ(associate_plane(g, detection(Eigen::Vector3d::UnitX(), 5.0), 0), id);
}

TEST(AssociatePlane, FarPlaneIsNew) {
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  add_x_wall(g, 15.0, -Eigen::Vector3d::UnitX());
  EXPECT_FALSE(associate_plane(g, detection(Eigen::Vector3d::UnitX(), 5.0), 0, 3.0));
}

TEST(AssociatePlane, OtherClassIsIgnored) {
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  g.add_plane(PlaneClass::YVertical, to_minimal(PlaneHessiand{Eigen::Vector3d::UnitY(), 5.0}));
  EXPECT_FALSE(associate_plane(g, detection(Eigen::Vector3d::UnitX(), 5.0), 0));
}

TEST(AssociatePlane, NearerOfTwoGatedCandidates) {
  // Anchor keyframe: zero pose covariance, so the covariance is the
  // measurement covariance 0.02^2 and the distance is |delta d| / 0.02.
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  const int near = add_x_wall(g, 5.0 + 0.024, -Eigen::Vector3d::UnitX());
  const int far = add_x_wall(g, 5.0 - 0.05, -Eigen::Vector3d::UnitX());
  const PlaneDetection det = detection(Eigen::Vector3d::UnitX(), 5.0);
  EXPECT_NEAR(plane_mahalanobis(g, 0, det.plane, near), 1.2, 1e-9);
  EXPECT_NEAR(plane_mahalanobis(g, 0, det.plane, far), 2.5, 1e-9);
  EXPECT_EQ(associate_plane(g, det, 0, 3.0), near);
  EXPECT_FALSE(associate_plane(g, det, 0, 1.0));
}

TEST(AssociatePlane, PoseCovarianceWidensTheGate) {
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  g.add_keyframe(1.0, Pose3d::identity(), Pose3d::identity());
  Vector6d diag;
  diag << 1.0 / (0.03 * 0.03), 1e4, 1e4, 1e4, 1e4, 1e4;
  g.add_odometry(0, 1, Pose3d::identity(), diag.asDiagonal());
  const int id = add_x_wall(g, 5.1, -Eigen::Vector3d::UnitX());
  const PlaneDetection det = detection(Eigen::Vector3d::UnitX(), 5.0);
  // sigma_d^2 = 0.02^2 + 0.03^2 along the wall normal
  EXPECT_NEAR(plane_mahalanobis(g, 1, det.plane, id), 0.1 / std::sqrt(0.02 * 0.02 + 0.03 * 0.03), 1e-6);
  EXPECT_FALSE(associate_plane(g, det, 0, 3.0));
  EXPECT_EQ(associate_plane(g, det, 1, 3.0), id);
}

TEST(AssociatePlane, OppositeFaceIsNotAssociated) {
  // the same wall x = 5 seen from x = 7 faces +x; the landmark was seen from the origin
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  g.add_keyframe(1.0, Pose3d::from_translation(7.0, 0.0, 0.0), Pose3d::from_translation(7.0, 0.0, 0.0));
  g.add_odometry(0, 1, Pose3d::from_translation(7.0, 0.0, 0.0), Matrix6d::Identity() * 1e6);
  const int id = add_x_wall(g, 5.0, -Eigen::Vector3d::UnitX());
  const PlaneDetection behind = detection(-Eigen::Vector3d::UnitX(), 2.0);
  EXPECT_LT(plane_mahalanobis(g, 1, behind.plane, id), 1e-6);
  EXPECT_FALSE(associate_plane(g, behind, 1));
  g.planes.at(id).facing = Eigen::Vector3d::Zero();
  EXPECT_EQ(associate_plane(g, behind, 1), id);
}

TEST(AssociatePlane, DistantSupportIsNotAssociated) {
  SGraph g;
  g.add_keyframe(0.0, Pose3d::identity(), Pose3d::identity());
  const int id = add_x_wall(g, 5.0, -Eigen::Vector3d::UnitX());
  g.planes.at(id).support = Eigen::AlignedBox3d(Eigen::Vector3d(5.0, 10.0, 0.0), Eigen::Vector3d(5.0, 14.0, 2.5));
  PlaneDetection det = detection(Eigen::Vector3d::UnitX(), 5.0);
  det.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(5.0, -2.0, 0.0), Eigen::Vector3d(5.0, 2.0, 2.5));
  EXPECT_EQ(associate_plane(g, det, 0, 3.0, default_plane_information()), id);
  EXPECT_FALSE(associate_plane(g, det, 0, 3.0, default_plane_information(), 1.0));
  det.bounds.max().y() = 9.5;
  EXPECT_EQ(associate_plane(g, det, 0, 3.0, default_plane_information(), 1.0), id);
}

TEST(TransformBox, RotatedBoxIsBounded) {
  const Eigen::AlignedBox3d box(Eigen::Vector3d(1.0, -1.0, 0.0), Eigen::Vector3d(3.0, 1.0, 2.0));
  const Eigen::AlignedBox3d out = transform_box(Pose3d::from_xyz_yaw(10.0, 0.0, 0.0, M_PI / 2), box);
  EXPECT_TRUE(out.min().isApprox(Eigen::Vector3d(9.0, 1.0, 0.0), 1e-12));
  EXPECT_TRUE(out.max().isApprox(Eigen::Vector3d(11.0, 3.0, 2.0), 1e-12));
  EXPECT_TRUE(transform_box(Pose3d::identity(), Eigen::AlignedBox3d()).isEmpty());
}
