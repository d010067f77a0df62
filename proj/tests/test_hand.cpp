#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dexaff/hand.hpp"

using namespace dexaff;
using namespace dexaff::hand;

namespace {

GraspPose random_pose(const HandModel& model, Rng& rng) {
  GraspPose pose;
  do {
    for (int i = 0; i < 6; ++i) pose.rot6d[i] = rng.normal();
  } while (pose.rot6d.head<3>().norm() < 0.3 ||
           pose.rot6d.head<3>().normalized().cross(pose.rot6d.tail<3>()).norm() < 0.3);
  pose.translation = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
  pose.joints.resize(model.dof());
  const VecX lo = model.joint_lower(), hi = model.joint_upper();
  for (int j = 0; j < model.dof(); ++j) pose.joints[j] = rng.uniform(lo[j], hi[j]);
  return pose;
}

// independent naive FK: walk the chain per link, composing 4x4 matrices
Eigen::Matrix4d naive_link_transform(const HandModel& model, const GraspPose& pose, int link) {
  std::vector<int> chain;
  for (int l = link; l >= 0; l = model.links[static_cast<std::size_t>(l)].parent)
    chain.push_back(l);

  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = rot6d_to_matrix(pose.rot6d);
  T.topRightCorner<3, 1>() = pose.translation;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const Link& l = model.links[static_cast<std::size_t>(*it)];
    Eigen::Matrix4d O = Eigen::Matrix4d::Identity();
    O.topLeftCorner<3, 3>() = l.origin.linear();
    O.topRightCorner<3, 1>() = l.origin.translation();
    T = T * O;
    if (l.has_joint) {
      Eigen::Matrix4d R = Eigen::Matrix4d::Identity();
      R.topLeftCorner<3, 3>() =
          Eigen::AngleAxisd(pose.joints[model.joint_index_of_link(*it)], l.joint_axis)
              .toRotationMatrix();
      T = T * R;
    }
  }
  return T;
}

// minimal one-joint rig for lever-arm checks
HandModel two_link_rig() {
  HandModel model;
  Link root;
  root.name = "base";
  root.parent = -1;
  root.capsule = {Vec3::Zero(), Vec3(0.01, 0, 0), 0.005};
  model.links.push_back(root);
  Link arm;
  arm.name = "arm";
  arm.parent = 0;
  arm.has_joint = true;
  arm.joint_axis = Vec3::UnitZ();
  arm.q_min = -3.0;
  arm.q_max = 3.0;
  arm.capsule = {Vec3::Zero(), Vec3(1.0, 0, 0), 0.01};
  model.links.push_back(arm);
  model.joint_links.push_back(1);
  model.clearance_delta = 0.01;
  return model;
}

}  // namespace

TEST_CASE("rot6d decode basics") {
  Vec6 id;
  id << 1, 0, 0, 0, 1, 0;
  CHECK((rot6d_to_matrix(id) - Mat3::Identity()).norm() == doctest::Approx(0.0));

  // Gram-Schmidt keeps the first axis: (y, x) -> columns (y, x, y cross x = -z)
  Vec6 swapped;
  swapped << 0, 1, 0, 1, 0, 0;
  Mat3 expected;
  expected << 0, 1, 0, 1, 0, 0, 0, 0, -1;
  CHECK((rot6d_to_matrix(swapped) - expected).norm() == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec6 r;
    for (int i = 0; i < 6; ++i) r[i] = rng.normal();
    if (r.head<3>().norm() < 0.3) continue;
    const Mat3 R = rot6d_to_matrix(r);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("rot6d rejects degenerate input") {
  Vec6 zero = Vec6::Zero();
  CHECK_THROWS_AS(rot6d_to_matrix(zero), Error);
  Vec6 collinear;
  collinear << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(rot6d_to_matrix(collinear), Error);
}

TEST_CASE("default hand construction contract") {
  const HandModel model = default_hand();
  CHECK(model.dof() == 9);
  CHECK(model.surface_points.size() >= 200);
  CHECK(model.fingertip_links.size() == 3);
  CHECK(model.contact_candidates.size() >= 30);
  for (int j : model.joint_links) {
    const Link& l = model.links[static_cast<std::size_t>(j)];
    CHECK(l.q_min < l.q_max);
  }

  // rest-pose anchors keep the clearance margin pairwise across links
  const PosedHand rest = forward_kinematics(model, GraspPose::identity(model.dof()));
  for (std::size_t i = 0; i < rest.anchors.size(); ++i)
    for (std::size_t j = i + 1; j < rest.anchors.size(); ++j)
      CHECK((rest.anchors[i] - rest.anchors[j]).norm() >= model.clearance_delta - 1e-12);
}

TEST_CASE("surface samples sit on their capsule boundary") {
  const HandModel model = default_hand();
  const PosedHand rest = forward_kinematics(model, GraspPose::identity(model.dof()));
  for (const Vec3& p : rest.surface.points) CHECK(std::abs(hand_sdf(rest, model, p)) < 1e-6);
}

TEST_CASE("forward kinematics rest pose and rigid shifts") {
  const HandModel model = default_hand();
  const GraspPose rest = GraspPose::identity(model.dof());
  const PosedHand posed = forward_kinematics(model, rest);

  // rest pose reproduces authored local geometry in the world frame
  for (std::size_t i = 0; i < model.surface_points.size(); ++i) {
    const auto& lp = model.surface_points[i];
    const Vec3 expected =
        naive_link_transform(model, rest, lp.link).topLeftCorner<3, 3>() * lp.p +
        naive_link_transform(model, rest, lp.link).topRightCorner<3, 1>();
    CHECK((posed.surface.points[i] - expected).norm() < 1e-12);
  }

  GraspPose shifted = rest;
  shifted.translation = Vec3(0, 0, 0.1);
  const PosedHand moved = forward_kinematics(model, shifted);
  for (std::size_t i = 0; i < posed.surface.points.size(); ++i)
    CHECK((moved.surface.points[i] - posed.surface.points[i] - Vec3(0, 0, 0.1)).norm() == 0.0);
}

TEST_CASE("forward kinematics matches naive chain composition") {
  const HandModel model = default_hand();
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const GraspPose pose = random_pose(model, rng);
    const PosedHand posed = forward_kinematics(model, pose);
    for (const auto& lp : model.contact_candidates) {
      const Eigen::Matrix4d T = naive_link_transform(model, pose, lp.link);
      const Vec3 expected = T.topLeftCorner<3, 3>() * lp.p + T.topRightCorner<3, 1>();
      const Vec3 got = posed.link_world[static_cast<std::size_t>(lp.link)] * lp.p;
      CHECK((got - expected).norm() < 1e-12);
    }
    CHECK_EQ(posed.fingertips.size(), 3);
  }
}

TEST_CASE("forward kinematics DOF mismatch") {
  const HandModel model = default_hand();
  GraspPose pose = GraspPose::identity(3);
  CHECK_THROWS_AS(forward_kinematics(model, pose), Error);
}

TEST_CASE("FK is rigid-motion equivariant") {
  const HandModel model = default_hand();
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const GraspPose pose = random_pose(model, rng);

    Vec6 g;
    for (int i = 0; i < 6; ++i) g[i] = rng.normal();
    if (g.head<3>().norm() < 0.3) continue;
    const Mat3 Rg = rot6d_to_matrix(g);
    const Vec3 tg(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));

    GraspPose moved = pose;
    moved.rot6d = rot6d_from_matrix(Rg * rot6d_to_matrix(pose.rot6d));
    moved.translation = Rg * pose.translation + tg;

    const PosedHand a = forward_kinematics(model, pose);
    const PosedHand b = forward_kinematics(model, moved);
    for (std::size_t i = 0; i < a.surface.points.size(); ++i)
      CHECK((b.surface.points[i] - (Rg * a.surface.points[i] + tg)).norm() < 1e-9);
  }
}

TEST_CASE("point jacobian translation block is identity, lever arm is unit") {
  const HandModel model = two_link_rig();
  GraspPose pose = GraspPose::identity(1);
  const auto pj = fk_point_jacobian(model, pose, {{1, Vec3(1.0, 0, 0)}});
  REQUIRE(pj.jacobians.size() == 1);
  CHECK((pj.jacobians[0].middleCols<3>(6) - Mat3::Identity()).norm() == 0.0);
  // revolute joint about z with the point 1 m out along x
  CHECK(pj.jacobians[0].col(9).norm() == doctest::Approx(1.0));

  const HandModel full = default_hand();
  const auto pj2 = fk_point_jacobian(full, GraspPose::identity(full.dof()), PointSet::Surface);
  for (const auto& jac : pj2.jacobians)
    CHECK((jac.middleCols<3>(6) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("point jacobians match central finite differences") {
  const HandModel model = default_hand();
  Rng rng(77);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const GraspPose pose = random_pose(model, rng);
    const auto pj = fk_point_jacobian(model, pose, PointSet::ContactCandidates);
    const VecX base = pose.to_vector();

    for (std::size_t pi = 0; pi < pj.points.size(); pi += 7) {
      Jac3 fd = Jac3::Zero(3, base.size());
      for (int c = 0; c < base.size(); ++c) {
        VecX plus = base, minus = base;
        plus[c] += h;
        minus[c] -= h;
        const auto pp = forward_kinematics(model, GraspPose::from_vector(plus));
        const auto pm = forward_kinematics(model, GraspPose::from_vector(minus));
        fd.col(c) = (pp.contact_candidates[pi] - pm.contact_candidates[pi]) / (2 * h);
      }
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      const double err = (pj.jacobians[pi] - fd).cwiseAbs().maxCoeff() / scale;
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("hand sdf closed forms") {
  const HandModel model = default_hand();
  const PosedHand rest = forward_kinematics(model, GraspPose::identity(model.dof()));

  // far point: dominated by the largest capsule radius
  const Vec3 far(0, 0, 1.0);
  const double sdf_far = hand_sdf(rest, model, far);
  CHECK(sdf_far < -0.9);
  CHECK(sdf_far > -1.0);

  // palm axis point reports +radius
  CHECK(hand_sdf(rest, model, Vec3(0, 0.01, 0)) == doctest::Approx(0.020));
}

TEST_CASE("hand sdf matches the closed-form capsule field on a raster") {
  HandModel model = two_link_rig();
  const GraspPose rest = GraspPose::identity(1);
  const PosedHand posed = forward_kinematics(model, rest);

  auto analytic = [&](const Vec3& p) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.links.size(); ++i) {
      const Capsule& c = model.links[i].capsule;
      const Vec3 a = posed.link_world[i] * c.a;
      const Vec3 b = posed.link_world[i] * c.b;
      const Vec3 ab = b - a;
      double s = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0;
      s = std::clamp(s, 0.0, 1.0);
      best = std::max(best, c.radius - (p - (a + s * ab)).norm());
    }
    return best;
  };

  for (double x = -0.2; x <= 1.2; x += 0.1)
    for (double y = -0.1; y <= 0.1; y += 0.02)
      for (double z = -0.1; z <= 0.1; z += 0.05) {
        const Vec3 p(x, y, z);
        CHECK(hand_sdf(posed, model, p) == doctest::Approx(analytic(p)).epsilon(1e-12));
      }
}

TEST_CASE("grasp pose vector round trip") {
  Rng rng(1);
  const HandModel model = default_hand();
  const GraspPose pose = random_pose(model, rng);
  const GraspPose back = GraspPose::from_vector(pose.to_vector());
  CHECK(back.rot6d == pose.rot6d);
  CHECK(back.translation == pose.translation);
  CHECK(back.joints == pose.joints);
}

TEST_CASE("hand spec JSON round trip preserves kinematics") {
  const HandModel model = default_hand();
  const auto path = std::filesystem::temp_directory_path() / "dexaff_hand_spec.json";
  save_hand_json(model, path.string());
  const HandModel loaded = load_hand_json(path.string());

  CHECK(loaded.dof() == model.dof());
  CHECK(loaded.surface_points.size() == model.surface_points.size());
  CHECK(loaded.contact_candidates.size() == model.contact_candidates.size());
  CHECK(loaded.clearance_delta == model.clearance_delta);

  Rng rng(13);
  const GraspPose pose = random_pose(model, rng);
  const PosedHand a = forward_kinematics(model, pose);
  const PosedHand b = forward_kinematics(loaded, pose);
  for (std::size_t i = 0; i < a.surface.points.size(); ++i)
    CHECK((a.surface.points[i] - b.surface.points[i]).norm() == 0.0);
  std::filesystem::remove(path);
}
