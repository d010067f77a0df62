#pragma once

#include <utility>
#include <vector>

#include "dexaff/common.hpp"

namespace dexaff::geometry {

// Scene / hand point sets. Coordinates in meters. `channel` is an optional
// per-point scalar (affordance, labels); empty or aligned with `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> channel;

  std::size_t size() const { return points.size(); }
  bool has_channel() const { return !channel.empty(); }
};

void validate_cloud(const PointCloud& cloud, const char* what = "cloud");

// Exact nearest-neighbor index (kd-tree). Queries match an exhaustive scan
// bitwise; distance ties resolve to the lowest point index.
class NeighborIndex {
 public:
  explicit NeighborIndex(const PointCloud& cloud);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

  // (distance, index); `skip` excludes one index (-1 for none)
  std::pair<double, int> nearest(const Vec3& query, int skip = -1) const;

  // k results sorted ascending by (distance, index)
  std::vector<std::pair<double, int>> knn(const Vec3& query, int k) const;

  // all points with distance <= radius, sorted ascending by (distance, index)
  std::vector<std::pair<double, int>> radius(const Vec3& query, double radius) const;

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// d[i] = min_j ||queries[i] - targets[j]||
std::vector<double> nearest_distances(const PointCloud& queries, const PointCloud& targets);

// Bidirectional sum of squared nearest distances, unnormalized.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

// Each directional sum divided by its cloud size; used for reported CD.
double chamfer_distance_normalized(const PointCloud& a, const PointCloud& b);

// Mean distance from each point to its nearest other point; needs >= 2 points.
double avg_nn_distance(const PointCloud& cloud);

struct SmoothNeighborhood {
  enum class Kind { KNearest, Radius };
  Kind kind = Kind::KNearest;
  int k = 16;
  double radius = 0.0;

  static SmoothNeighborhood knearest(int k) { return {Kind::KNearest, k, 0.0}; }
  static SmoothNeighborhood within(double r) { return {Kind::Radius, 0, r}; }
};

// Row i holds (j, w_ij) over the neighborhood of point i; weights are the
// normalized Gaussian kernel exp(-||o_i-o_j||^2 / (2 sigma^2)) and sum to 1.
// The neighborhood of a point always contains the point itself.
std::vector<std::vector<std::pair<int, double>>> gaussian_weights(
    const PointCloud& cloud, double sigma, const SmoothNeighborhood& nbhd);

// out[i] = sum_j w_ij * values[j]; a convex combination of neighborhood values.
std::vector<double> gaussian_smooth(const PointCloud& cloud,
                                    const std::vector<double>& values,
                                    double sigma,
                                    const SmoothNeighborhood& nbhd);

}  // namespace dexaff::geometry
