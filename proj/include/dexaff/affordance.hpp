#pragma once

#include <string>
#include <vector>

#include "dexaff/geometry.hpp"
#include "dexaff/hand.hpp"

namespace dexaff::affordance {

// Guidance labels shared by every grasp in a group.
struct Guidance {
  std::string category;
  std::string intention;
  std::string part;
  std::string direction;  // one of front/back/left/right/up/down

  bool operator==(const Guidance&) const = default;
};

struct GraspGroup {
  Guidance guidance;
  std::vector<hand::GraspPose> grasps;  // k >= 1
};

// Per-scene-point minimum distance to the posed hand surface, meters.
struct ContactMap {
  std::vector<double> distances;
};

enum class Provenance { GroundTruth, Generated };

// Per-scene-point graspability in [0, 1], aligned with the scene cloud.
struct AffordanceMap {
  std::vector<double> values;
  Provenance provenance = Provenance::GroundTruth;
};

ContactMap contact_map(const geometry::PointCloud& scene, const hand::PosedHand& posed);

// Pointwise minimum across the group's contact maps.
ContactMap union_min(const std::vector<ContactMap>& maps);

struct AffordanceBuildOptions {
  double d_max = 0.02;  // distance mapped to zero graspability
  int smooth_k = 16;
  bool smooth = true;
};

// contact maps -> min-union -> Gaussian smoothing with sigma from the scene's
// average nearest-neighbor spacing -> a = max(0, 1 - d/d_max). The smoothing
// operates on distances; the inversion makes larger values more graspable.
AffordanceMap build_affordance_gt(const geometry::PointCloud& scene, const GraspGroup& group,
                                  const hand::HandModel& hand,
                                  const AffordanceBuildOptions& opts = {});

// f32 blob + JSON sidecar header (scene id, d_max, sigma, provenance).
void save_affordance(const AffordanceMap& map, const std::string& scene_id, double d_max,
                     double sigma, const std::string& path);
AffordanceMap load_affordance(const std::string& path, std::string* scene_id = nullptr);

}  // namespace dexaff::affordance
