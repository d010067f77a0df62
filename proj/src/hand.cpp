#include "dexaff/hand.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace dexaff::hand {

namespace {

constexpr double kDegenerateEps = 1e-8;
constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// deterministic orthonormal basis perpendicular to d (unit)
void perp_basis(const Vec3& d, Vec3& u, Vec3& v) {
  const Vec3 ref = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = d.cross(ref).normalized();
  v = d.cross(u);
}

std::vector<Vec3> sample_capsule_surface(const Capsule& c, int n) {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  const Vec3 ab = c.b - c.a;
  const double len = ab.norm();
  const double r = c.radius;

  Vec3 d = len > 0 ? Vec3(ab / len) : Vec3::UnitX();
  Vec3 u, v;
  perp_basis(d, u, v);

  const double area_cyl = 2.0 * M_PI * r * len;
  const double area_caps = 4.0 * M_PI * r * r;
  int n_cyl = static_cast<int>(std::lround(n * area_cyl / (area_cyl + area_caps)));
  n_cyl = std::min(std::max(n_cyl, 0), n);
  const int n_caps = n - n_cyl;
  const int n_cap_a = n_caps / 2;
  const int n_cap_b = n_caps - n_cap_a;

  for (int i = 0; i < n_cyl; ++i) {
    const double t = (i + 0.5) / n_cyl;
    const double th = i * kGoldenAngle;
    out.push_back(c.a + t * ab + r * (std::cos(th) * u + std::sin(th) * v));
  }
  for (int i = 0; i < n_cap_b; ++i) {
    const double z = (i + 0.5) / n_cap_b;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = i * kGoldenAngle;
    out.push_back(c.b + r * (rho * std::cos(th) * u + rho * std::sin(th) * v + z * d));
  }
  for (int i = 0; i < n_cap_a; ++i) {
    const double z = (i + 0.5) / n_cap_a;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = (i + 0.25) * kGoldenAngle;
    out.push_back(c.a + r * (rho * std::cos(th) * u + rho * std::sin(th) * v - z * d));
  }
  return out;
}

// distance from p to segment [a,b]; also the parameter s and the closest point
double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b, double* s_out,
                        Vec3* closest_out) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  const Vec3 c = a + s * ab;
  if (s_out) *s_out = s;
  if (closest_out) *closest_out = c;
  return (p - c).norm();
}

struct FkCache {
  std::vector<Isometry> root_frame;             // link -> hand root
  Mat3 wrist_rot;
  Vec3 wrist_trans;
  std::array<Eigen::Matrix<double, 3, 6>, 3> rot_dcols;
  std::vector<Vec3> joint_axis_root;            // per joint
  std::vector<Vec3> joint_origin_root;
};

FkCache fk_cache(const HandModel& hand, const GraspPose& pose, bool with_jacobian) {
  require(pose.joints.size() == hand.dof(), ErrorKind::InvalidInput,
          "forward_kinematics: joint count does not match hand DOF");
  FkCache cache;
  if (with_jacobian) {
    cache.wrist_rot = rot6d_to_matrix_with_jacobian(pose.rot6d, cache.rot_dcols);
  } else {
    cache.wrist_rot = rot6d_to_matrix(pose.rot6d);
  }
  cache.wrist_trans = pose.translation;

  cache.root_frame.resize(hand.links.size());
  cache.joint_axis_root.resize(static_cast<std::size_t>(hand.dof()));
  cache.joint_origin_root.resize(static_cast<std::size_t>(hand.dof()));
  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    const Link& link = hand.links[i];
    Isometry frame = link.parent < 0
                         ? link.origin
                         : cache.root_frame[static_cast<std::size_t>(link.parent)] * link.origin;
    if (link.has_joint) {
      const int j = hand.joint_index_of_link(static_cast<int>(i));
      cache.joint_axis_root[static_cast<std::size_t>(j)] = frame.linear() * link.joint_axis;
      cache.joint_origin_root[static_cast<std::size_t>(j)] = frame.translation();
      frame = frame * Eigen::AngleAxisd(pose.joints[j], link.joint_axis);
    }
    cache.root_frame[i] = frame;
  }
  return cache;
}

std::vector<std::vector<int>> ancestor_joints(const HandModel& hand) {
  std::vector<std::vector<int>> out(hand.links.size());
  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    const Link& link = hand.links[i];
    if (link.parent >= 0) out[i] = out[static_cast<std::size_t>(link.parent)];
    if (link.has_joint) out[i].push_back(hand.joint_index_of_link(static_cast<int>(i)));
  }
  return out;
}

}  // namespace

int HandModel::joint_index_of_link(int link) const {
  for (std::size_t j = 0; j < joint_links.size(); ++j)
    if (joint_links[j] == link) return static_cast<int>(j);
  return -1;
}

VecX HandModel::joint_lower() const {
  VecX lo(dof());
  for (int j = 0; j < dof(); ++j)
    lo[j] = links[static_cast<std::size_t>(joint_links[static_cast<std::size_t>(j)])].q_min;
  return lo;
}

VecX HandModel::joint_upper() const {
  VecX hi(dof());
  for (int j = 0; j < dof(); ++j)
    hi[j] = links[static_cast<std::size_t>(joint_links[static_cast<std::size_t>(j)])].q_max;
  return hi;
}

void validate_hand(const HandModel& hand) {
  require(!hand.links.empty(), ErrorKind::InvalidInput, "hand: no links");
  require(hand.links[0].parent == -1 && !hand.links[0].has_joint, ErrorKind::InvalidInput,
          "hand: first link must be the fixed root");
  for (std::size_t i = 1; i < hand.links.size(); ++i) {
    const Link& link = hand.links[i];
    require(link.parent >= 0 && link.parent < static_cast<int>(i), ErrorKind::InvalidInput,
            "hand: links must be topologically ordered with a single root");
    if (link.has_joint)
      require(link.q_min < link.q_max, ErrorKind::InvalidInput,
              "hand: joint limits must satisfy q_min < q_max");
  }
  for (const Link& link : hand.links) {
    if (link.anchor_radius > 0.0) {
      const double d =
          segment_distance(link.anchor_center, link.capsule.a, link.capsule.b, nullptr, nullptr);
      require(d + link.anchor_radius <= link.capsule.radius + 1e-9, ErrorKind::InvalidInput,
              "hand: anchor sphere must fit inside its link capsule");
    }
  }
  require(hand.fingertip_links.size() == hand.fingertip_local.size(), ErrorKind::InvalidInput,
          "hand: fingertip arrays misaligned");
  require(hand.clearance_delta > 0.0, ErrorKind::InvalidInput,
          "hand: clearance margin must be positive");
}

VecX GraspPose::to_vector() const {
  VecX v(params());
  v.segment<6>(0) = rot6d;
  v.segment<3>(6) = translation;
  v.tail(joints.size()) = joints;
  return v;
}

GraspPose GraspPose::from_vector(const VecX& v) {
  require(v.size() >= 9, ErrorKind::InvalidInput, "GraspPose: vector too short");
  GraspPose pose;
  pose.rot6d = v.segment<6>(0);
  pose.translation = v.segment<3>(6);
  pose.joints = v.tail(v.size() - 9);
  return pose;
}

Mat3 rot6d_to_matrix(const Vec6& r) {
  const Vec3 a = r.head<3>();
  const Vec3 b = r.tail<3>();
  const double na = a.norm();
  require(na > kDegenerateEps, ErrorKind::DegenerateRotation,
          "rot6d: first vector is near zero");
  const Vec3 b1 = a / na;
  const Vec3 w = b - b1.dot(b) * b1;
  const double nw = w.norm();
  require(nw > kDegenerateEps, ErrorKind::DegenerateRotation,
          "rot6d: input vectors are near collinear");
  const Vec3 b2 = w / nw;
  const Vec3 b3 = b1.cross(b2);
  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b3;
  return R;
}

Vec6 rot6d_from_matrix(const Mat3& R) {
  Vec6 r;
  r.head<3>() = R.col(0);
  r.tail<3>() = R.col(1);
  return r;
}

Mat3 rot6d_to_matrix_with_jacobian(const Vec6& r,
                                   std::array<Eigen::Matrix<double, 3, 6>, 3>& dcols) {
  const Vec3 a = r.head<3>();
  const Vec3 b = r.tail<3>();
  const double na = a.norm();
  require(na > kDegenerateEps, ErrorKind::DegenerateRotation,
          "rot6d: first vector is near zero");
  const Vec3 b1 = a / na;
  const Mat3 db1_da = (Mat3::Identity() - b1 * b1.transpose()) / na;

  const Vec3 w = b - b1.dot(b) * b1;
  const double nw = w.norm();
  require(nw > kDegenerateEps, ErrorKind::DegenerateRotation,
          "rot6d: input vectors are near collinear");
  const Vec3 b2 = w / nw;

  const Mat3 dw_da = -(b1.dot(b)) * db1_da - b1 * (b.transpose() * db1_da);
  const Mat3 dw_db = Mat3::Identity() - b1 * b1.transpose();
  const Mat3 db2_dw = (Mat3::Identity() - b2 * b2.transpose()) / nw;
  const Mat3 db2_da = db2_dw * dw_da;
  const Mat3 db2_db = db2_dw * dw_db;

  const Vec3 b3 = b1.cross(b2);
  const Mat3 sk_b1 = skew(b1);
  const Mat3 sk_b2 = skew(b2);
  const Mat3 db3_da = -sk_b2 * db1_da + sk_b1 * db2_da;
  const Mat3 db3_db = sk_b1 * db2_db;

  dcols[0].setZero();
  dcols[0].leftCols<3>() = db1_da;
  dcols[1].leftCols<3>() = db2_da;
  dcols[1].rightCols<3>() = db2_db;
  dcols[2].leftCols<3>() = db3_da;
  dcols[2].rightCols<3>() = db3_db;

  Mat3 R;
  R.col(0) = b1;
  R.col(1) = b2;
  R.col(2) = b3;
  return R;
}

PosedHand forward_kinematics(const HandModel& hand, const GraspPose& pose) {
  const FkCache cache = fk_cache(hand, pose, false);
  Isometry wrist = Isometry::Identity();
  wrist.linear() = cache.wrist_rot;
  wrist.translation() = cache.wrist_trans;

  PosedHand posed;
  posed.link_world.resize(hand.links.size());
  for (std::size_t i = 0; i < hand.links.size(); ++i)
    posed.link_world[i] = wrist * cache.root_frame[i];

  posed.surface.points.reserve(hand.surface_points.size());
  for (const LocalPoint& lp : hand.surface_points)
    posed.surface.points.push_back(posed.link_world[static_cast<std::size_t>(lp.link)] * lp.p);
  posed.contact_candidates.reserve(hand.contact_candidates.size());
  for (const LocalPoint& lp : hand.contact_candidates)
    posed.contact_candidates.push_back(posed.link_world[static_cast<std::size_t>(lp.link)] * lp.p);
  posed.fingertips.reserve(hand.fingertip_links.size());
  for (std::size_t i = 0; i < hand.fingertip_links.size(); ++i)
    posed.fingertips.push_back(
        posed.link_world[static_cast<std::size_t>(hand.fingertip_links[i])] *
        hand.fingertip_local[i]);
  posed.anchors.reserve(hand.links.size());
  for (std::size_t i = 0; i < hand.links.size(); ++i)
    posed.anchors.push_back(posed.link_world[i] * hand.links[i].anchor_center);
  return posed;
}

PointJacobians fk_point_jacobian(const HandModel& hand, const GraspPose& pose,
                                 const std::vector<LocalPoint>& pts) {
  const FkCache cache = fk_cache(hand, pose, true);
  const auto ancestry = ancestor_joints(hand);
  const int nparam = pose.params();

  PointJacobians out;
  out.points.reserve(pts.size());
  out.jacobians.reserve(pts.size());
  for (const LocalPoint& lp : pts) {
    const Vec3 p_root = cache.root_frame[static_cast<std::size_t>(lp.link)] * lp.p;
    out.points.push_back(cache.wrist_rot * p_root + cache.wrist_trans);

    Jac3 jac = Jac3::Zero(3, nparam);
    for (int c = 0; c < 3; ++c) jac.leftCols<6>() += p_root[c] * cache.rot_dcols[static_cast<std::size_t>(c)];
    jac.middleCols<3>(6) = Mat3::Identity();
    for (int j : ancestry[static_cast<std::size_t>(lp.link)]) {
      const Vec3 arm = p_root - cache.joint_origin_root[static_cast<std::size_t>(j)];
      jac.col(9 + j) = cache.wrist_rot *
                       cache.joint_axis_root[static_cast<std::size_t>(j)].cross(arm);
    }
    out.jacobians.push_back(std::move(jac));
  }
  return out;
}

PointJacobians fk_point_jacobian(const HandModel& hand, const GraspPose& pose,
                                 PointSet set) {
  std::vector<LocalPoint> pts;
  switch (set) {
    case PointSet::Surface:
      pts = hand.surface_points;
      break;
    case PointSet::ContactCandidates:
      pts = hand.contact_candidates;
      break;
    case PointSet::Fingertips:
      for (std::size_t i = 0; i < hand.fingertip_links.size(); ++i)
        pts.push_back({hand.fingertip_links[i], hand.fingertip_local[i]});
      break;
    case PointSet::Anchors:
      for (std::size_t i = 0; i < hand.links.size(); ++i)
        pts.push_back({static_cast<int>(i), hand.links[i].anchor_center});
      break;
    case PointSet::CapsuleEnds:
      for (std::size_t i = 0; i < hand.links.size(); ++i) {
        pts.push_back({static_cast<int>(i), hand.links[i].capsule.a});
        pts.push_back({static_cast<int>(i), hand.links[i].capsule.b});
      }
      break;
  }
  return fk_point_jacobian(hand, pose, pts);
}

double capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, double radius) {
  return radius - segment_distance(p, a, b, nullptr, nullptr);
}

double hand_sdf(const PosedHand& posed, const HandModel& hand, const Vec3& p) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    const Capsule& c = hand.links[i].capsule;
    const Isometry& T = posed.link_world[i];
    best = std::max(best, capsule_sdf(p, T * c.a, T * c.b, c.radius));
  }
  return best;
}

HandModel default_hand() {
  HandModel hand;
  hand.clearance_delta = 0.024;  // 2 x largest anchor radius

  Link palm;
  palm.name = "palm";
  palm.parent = -1;
  palm.capsule = {Vec3(0, -0.040, 0), Vec3(0, 0.040, 0), 0.020};
  palm.surface_samples = 76;
  palm.anchor_center = Vec3::Zero();
  palm.anchor_radius = 0.012;
  hand.links.push_back(palm);

  const double finger_y[3] = {-0.035, 0.0, 0.035};
  const char* finger_name[3] = {"index", "middle", "ring"};
  struct Seg {
    double mount;    // origin x offset in the parent frame
    double start;    // capsule start along local x
    double end;      // capsule end along local x
    double radius;
    double anchor_r;
  };
  // capsule starts leave a small joint gap so no two rest-pose capsules overlap
  const Seg segs[3] = {
      {0.025, 0.0050, 0.030, 0.0080, 0.0060},
      {0.034, 0.0120, 0.026, 0.0070, 0.0055},
      {0.030, 0.0105, 0.022, 0.0065, 0.0050},
  };
  const char* seg_name[3] = {"proximal", "middle", "distal"};

  for (int f = 0; f < 3; ++f) {
    int parent = 0;
    for (int s = 0; s < 3; ++s) {
      Link link;
      link.name = std::string(finger_name[f]) + "_" + seg_name[s];
      link.parent = parent;
      link.origin = Isometry::Identity();
      link.origin.translation() =
          s == 0 ? Vec3(segs[s].mount, finger_y[f], 0.0) : Vec3(segs[s].mount, 0.0, 0.0);
      link.has_joint = true;
      link.joint_axis = Vec3::UnitY();  // positive angles curl toward -z
      link.q_min = -0.15;
      link.q_max = 1.80;
      link.capsule = {Vec3(segs[s].start, 0, 0), Vec3(segs[s].end, 0, 0), segs[s].radius};
      link.surface_samples = 20;
      link.anchor_center = Vec3(0.5 * (segs[s].start + segs[s].end), 0, 0);
      link.anchor_radius = segs[s].anchor_r;
      parent = static_cast<int>(hand.links.size());
      hand.links.push_back(link);
      hand.joint_links.push_back(parent);
      if (s == 2) {
        hand.fingertip_links.push_back(parent);
        hand.fingertip_local.push_back(Vec3(segs[s].end + segs[s].radius, 0, 0));
      }
    }
  }

  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    for (const Vec3& p : sample_capsule_surface(hand.links[i].capsule,
                                                hand.links[i].surface_samples))
      hand.surface_points.push_back({static_cast<int>(i), p});
  }

  // palm contact pads face -z, like the finger inner surfaces
  for (double y : {-0.030, -0.018, -0.006, 0.006, 0.018, 0.030})
    hand.contact_candidates.push_back({0, Vec3(0, y, -0.020)});
  for (std::size_t i = 1; i < hand.links.size(); ++i) {
    const Capsule& c = hand.links[i].capsule;
    for (double t : {0.15, 0.5, 0.85}) {
      const double x = c.a.x() + t * (c.b.x() - c.a.x());
      hand.contact_candidates.push_back({static_cast<int>(i), Vec3(x, 0, -c.radius)});
    }
  }

  validate_hand(hand);
  return hand;
}

namespace {

using nlohmann::json;

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j) {
  require(j.is_array() && j.size() == 3, ErrorKind::Io, "hand json: expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void save_hand_json(const HandModel& hand, const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["clearance_delta"] = hand.clearance_delta;
  json links = json::array();
  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    const Link& link = hand.links[i];
    json jl;
    jl["name"] = link.name;
    jl["parent"] = link.parent;
    const Eigen::Quaterniond q(link.origin.linear());
    jl["origin"] = {{"xyz", vec3_json(link.origin.translation())},
                    {"quat", json::array({q.w(), q.x(), q.y(), q.z()})}};
    jl["capsule"] = {{"a", vec3_json(link.capsule.a)},
                     {"b", vec3_json(link.capsule.b)},
                     {"radius", link.capsule.radius}};
    if (link.has_joint)
      jl["joint"] = {{"axis", vec3_json(link.joint_axis)},
                     {"lower", link.q_min},
                     {"upper", link.q_max}};
    jl["surface_samples"] = link.surface_samples;
    jl["anchor"] = {{"center", vec3_json(link.anchor_center)}, {"radius", link.anchor_radius}};
    const int tip = [&] {
      for (std::size_t t = 0; t < hand.fingertip_links.size(); ++t)
        if (hand.fingertip_links[t] == static_cast<int>(i)) return static_cast<int>(t);
      return -1;
    }();
    if (tip >= 0) jl["fingertip"] = vec3_json(hand.fingertip_local[static_cast<std::size_t>(tip)]);
    json cands = json::array();
    for (const LocalPoint& lp : hand.contact_candidates)
      if (lp.link == static_cast<int>(i)) cands.push_back(vec3_json(lp.p));
    jl["contact_candidates"] = cands;
    links.push_back(jl);
  }
  doc["links"] = links;

  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write hand spec: " + path);
  out << doc.dump(2) << "\n";
}

HandModel load_hand_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot read hand spec: " + path);
  json doc = json::parse(in, nullptr, false);
  require(!doc.is_discarded(), ErrorKind::Io, "hand spec is not valid JSON: " + path);
  require(doc.value("version", 0) == 1, ErrorKind::Io, "unsupported hand spec version");

  HandModel hand;
  hand.clearance_delta = doc.at("clearance_delta").get<double>();
  int index = 0;
  for (const json& jl : doc.at("links")) {
    Link link;
    link.name = jl.at("name").get<std::string>();
    link.parent = jl.at("parent").get<int>();
    link.origin = Isometry::Identity();
    link.origin.translation() = vec3_from(jl.at("origin").at("xyz"));
    const json& jq = jl.at("origin").at("quat");
    link.origin.linear() = Eigen::Quaterniond(jq[0].get<double>(), jq[1].get<double>(),
                                              jq[2].get<double>(), jq[3].get<double>())
                               .toRotationMatrix();
    link.capsule.a = vec3_from(jl.at("capsule").at("a"));
    link.capsule.b = vec3_from(jl.at("capsule").at("b"));
    link.capsule.radius = jl.at("capsule").at("radius").get<double>();
    if (jl.contains("joint")) {
      link.has_joint = true;
      link.joint_axis = vec3_from(jl.at("joint").at("axis"));
      link.q_min = jl.at("joint").at("lower").get<double>();
      link.q_max = jl.at("joint").at("upper").get<double>();
    }
    link.surface_samples = jl.at("surface_samples").get<int>();
    link.anchor_center = vec3_from(jl.at("anchor").at("center"));
    link.anchor_radius = jl.at("anchor").at("radius").get<double>();
    hand.links.push_back(link);
    if (link.has_joint) hand.joint_links.push_back(index);
    if (jl.contains("fingertip")) {
      hand.fingertip_links.push_back(index);
      hand.fingertip_local.push_back(vec3_from(jl.at("fingertip")));
    }
    for (const json& jc : jl.value("contact_candidates", json::array()))
      hand.contact_candidates.push_back({index, vec3_from(jc)});
    ++index;
  }
  for (std::size_t i = 0; i < hand.links.size(); ++i) {
    for (const Vec3& p : sample_capsule_surface(hand.links[i].capsule,
                                                hand.links[i].surface_samples))
      hand.surface_points.push_back({static_cast<int>(i), p});
  }
  validate_hand(hand);
  return hand;
}

}  // namespace dexaff::hand
