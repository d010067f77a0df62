#pragma once

#include <array>
#include <string>
#include <vector>

#include "dexaff/common.hpp"
#include "dexaff/geometry.hpp"

namespace dexaff::hand {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Jac3 = Eigen::Matrix<double, 3, Eigen::Dynamic>;

// Capsule in link-local coordinates: segment [a, b] swept by `radius`.
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

struct Link {
  std::string name;
  int parent = -1;                  // -1 for the root (wrist/palm)
  Isometry origin = Isometry::Identity();  // parent frame -> link frame at q = 0
  bool has_joint = false;           // revolute joint about `joint_axis` at the link origin
  Vec3 joint_axis = Vec3::UnitY();
  double q_min = 0.0;
  double q_max = 0.0;
  Capsule capsule;
  int surface_samples = 0;
  Vec3 anchor_center = Vec3::Zero();
  double anchor_radius = 0.0;
};

// A point authored in a link frame.
struct LocalPoint {
  int link = 0;
  Vec3 p = Vec3::Zero();
};

// Kinematic tree plus authored point sets. Immutable after construction;
// all queries on it are pure.
struct HandModel {
  std::vector<Link> links;              // topologically ordered, parent < child
  std::vector<int> joint_links;         // links carrying a joint, in joint order
  std::vector<int> fingertip_links;
  std::vector<Vec3> fingertip_local;    // aligned with fingertip_links
  std::vector<LocalPoint> surface_points;
  std::vector<LocalPoint> contact_candidates;
  double clearance_delta = 0.0;         // self-penetration margin, meters

  int dof() const { return static_cast<int>(joint_links.size()); }
  int joint_index_of_link(int link) const;
  VecX joint_lower() const;
  VecX joint_upper() const;
};

void validate_hand(const HandModel& hand);

// Wrist pose as a continuous 6D rotation + translation, plus joint angles.
struct GraspPose {
  Vec6 rot6d = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
  Vec3 translation = Vec3::Zero();
  VecX joints;

  static GraspPose identity(int dof) {
    GraspPose pose;
    pose.joints = VecX::Zero(dof);
    return pose;
  }

  int params() const { return 9 + static_cast<int>(joints.size()); }

  // Layout [rot6d(6), translation(3), joints(J)]; lossless round trip.
  VecX to_vector() const;
  static GraspPose from_vector(const VecX& v);
};

struct PosedHand {
  std::vector<Isometry> link_world;
  geometry::PointCloud surface;          // world surface samples, |points| = N
  std::vector<Vec3> fingertips;
  std::vector<Vec3> contact_candidates;
  std::vector<Vec3> anchors;             // one per link
};

// Gram-Schmidt decode of the 6D rotation representation.
Mat3 rot6d_to_matrix(const Vec6& r);
Vec6 rot6d_from_matrix(const Mat3& R);

// Decode plus d(column c)/d(r) for each of the three columns.
Mat3 rot6d_to_matrix_with_jacobian(const Vec6& r,
                                   std::array<Eigen::Matrix<double, 3, 6>, 3>& dcols);

PosedHand forward_kinematics(const HandModel& hand, const GraspPose& pose);

enum class PointSet { Surface, Fingertips, ContactCandidates, Anchors, CapsuleEnds };

// World positions and analytic Jacobians d(point)/d([rot6d, t, q]) of an
// authored point set. CapsuleEnds yields the two segment endpoints per link,
// ordered (link0.a, link0.b, link1.a, ...).
struct PointJacobians {
  std::vector<Vec3> points;
  std::vector<Jac3> jacobians;  // each 3 x (9 + J)
};

PointJacobians fk_point_jacobian(const HandModel& hand, const GraspPose& pose,
                                 PointSet set);
PointJacobians fk_point_jacobian(const HandModel& hand, const GraspPose& pose,
                                 const std::vector<LocalPoint>& pts);

// Distance from p to the capsule surface, signed positive inside.
double capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double radius);

// max over link capsules of capsule_sdf; positive inside the hand.
double hand_sdf(const PosedHand& posed, const HandModel& hand, const Vec3& p);

// Three-finger nine-joint parametric hand used across the toolkit.
HandModel default_hand();

// Versioned JSON hand description.
HandModel load_hand_json(const std::string& path);
void save_hand_json(const HandModel& hand, const std::string& path);

}  // namespace dexaff::hand
