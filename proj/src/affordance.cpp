#include "dexaff/affordance.hpp"

#include <algorithm>

#include "dexaff/serialize.hpp"

namespace dexaff::affordance {

ContactMap contact_map(const geometry::PointCloud& scene, const hand::PosedHand& posed) {
  return {geometry::nearest_distances(scene, posed.surface)};
}

ContactMap union_min(const std::vector<ContactMap>& maps) {
  require(!maps.empty(), ErrorKind::InvalidInput, "union_min: no contact maps");
  ContactMap out = maps.front();
  for (std::size_t k = 1; k < maps.size(); ++k) {
    require(maps[k].distances.size() == out.distances.size(), ErrorKind::InvalidInput,
            "union_min: contact map length mismatch");
    for (std::size_t i = 0; i < out.distances.size(); ++i)
      out.distances[i] = std::min(out.distances[i], maps[k].distances[i]);
  }
  return out;
}

AffordanceMap build_affordance_gt(const geometry::PointCloud& scene, const GraspGroup& group,
                                  const hand::HandModel& hand,
                                  const AffordanceBuildOptions& opts) {
  require(!group.grasps.empty(), ErrorKind::InvalidInput, "affordance: empty grasp group");
  require(opts.d_max > 0.0, ErrorKind::InvalidInput, "affordance: d_max must be positive");

  std::vector<ContactMap> maps;
  maps.reserve(group.grasps.size());
  for (const hand::GraspPose& pose : group.grasps)
    maps.push_back(contact_map(scene, hand::forward_kinematics(hand, pose)));
  ContactMap fused = union_min(maps);

  std::vector<double> smoothed;
  if (opts.smooth && scene.size() >= 2) {
    const double sigma = geometry::avg_nn_distance(scene);
    smoothed = geometry::gaussian_smooth(scene, fused.distances, sigma,
                                         geometry::SmoothNeighborhood::knearest(opts.smooth_k));
  } else {
    smoothed = fused.distances;
  }

  AffordanceMap out;
  out.provenance = Provenance::GroundTruth;
  out.values.resize(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i)
    out.values[i] = std::clamp(1.0 - smoothed[i] / opts.d_max, 0.0, 1.0);
  return out;
}

void save_affordance(const AffordanceMap& map, const std::string& scene_id, double d_max,
                     double sigma, const std::string& path) {
  std::vector<float> data(map.values.begin(), map.values.end());
  io::write_blob_f32(path, data, static_cast<std::uint32_t>(data.size()));

  nlohmann::json header;
  header["scene_id"] = scene_id;
  header["d_max"] = d_max;
  header["sigma"] = sigma;
  header["provenance"] = map.provenance == Provenance::GroundTruth ? "ground_truth" : "generated";
  header["crc32"] = io::crc32_file(path);
  io::write_text_file(path + ".json", header.dump(2) + "\n");
}

AffordanceMap load_affordance(const std::string& path, std::string* scene_id) {
  nlohmann::json header = nlohmann::json::parse(io::read_text_file(path + ".json"));
  require(io::crc32_file(path) == header.at("crc32").get<std::uint32_t>(),
          ErrorKind::Corruption, "affordance blob checksum mismatch: " + path);
  const std::vector<float> data = io::read_blob_f32(path);
  AffordanceMap out;
  out.values.assign(data.begin(), data.end());
  out.provenance = header.value("provenance", "ground_truth") == std::string("generated")
                       ? Provenance::Generated
                       : Provenance::GroundTruth;
  if (scene_id) *scene_id = header.value("scene_id", "");
  return out;
}

}  // namespace dexaff::affordance
