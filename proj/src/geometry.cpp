#include "dexaff/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dexaff::geometry {

namespace {

constexpr int kLeafSize = 16;

inline bool better(double d2, int idx, double best_d2, int best_idx) {
  return d2 < best_d2 || (d2 == best_d2 && idx < best_idx);
}

}  // namespace

void validate_cloud(const PointCloud& cloud, const char* what) {
  require(!cloud.points.empty(), ErrorKind::InvalidInput,
          std::string(what) + ": empty point cloud");
  for (const Vec3& p : cloud.points) {
    require(p.allFinite(), ErrorKind::InvalidInput,
            std::string(what) + ": non-finite coordinate");
  }
  require(cloud.channel.empty() || cloud.channel.size() == cloud.points.size(),
          ErrorKind::InvalidInput, std::string(what) + ": channel size mismatch");
}

NeighborIndex::NeighborIndex(const PointCloud& cloud) : points_(cloud.points) {
  validate_cloud(cloud, "NeighborIndex");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 4);
  root_ = build(0, static_cast<int>(order_.size()));
}

int NeighborIndex::build(int begin, int end) {
  Node node;
  if (end - begin <= kLeafSize) {
    node.begin = begin;
    node.end = end;
    // sorted leaves keep tie handling independent of build order
    std::sort(order_.begin() + begin, order_.begin() + end);
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }
  Vec3 lo = points_[static_cast<std::size_t>(order_[begin])];
  Vec3 hi = lo;
  for (int i = begin; i < end; ++i) {
    const Vec3& p = points_[static_cast<std::size_t>(order_[i])];
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double pa = points_[static_cast<std::size_t>(a)][axis];
                     const double pb = points_[static_cast<std::size_t>(b)][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  node.axis = axis;
  node.split = points_[static_cast<std::size_t>(order_[mid])][axis];
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

std::pair<double, int> NeighborIndex::nearest(const Vec3& query, int skip) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = std::numeric_limits<int>::max();

  // explicit stack; visits the near side first
  std::vector<int> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[static_cast<std::size_t>(i)];
        if (idx == skip) continue;
        const double d2 = (points_[static_cast<std::size_t>(idx)] - query).squaredNorm();
        if (better(d2, idx, best_d2, best_idx)) {
          best_d2 = d2;
          best_idx = idx;
        }
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (delta * delta <= best_d2) stack.push_back(far);
    stack.push_back(near);
  }
  return {std::sqrt(best_d2), best_idx};
}

std::vector<std::pair<double, int>> NeighborIndex::knn(const Vec3& query, int k) const {
  require(k >= 1, ErrorKind::InvalidInput, "knn: k must be >= 1");
  k = std::min<int>(k, static_cast<int>(points_.size()));

  // worst candidate kept at the back of a sorted vector (k is small here)
  std::vector<std::pair<double, int>> best;  // (d2, idx), ascending
  best.reserve(static_cast<std::size_t>(k) + 1);

  std::vector<int> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[static_cast<std::size_t>(i)];
        const double d2 = (points_[static_cast<std::size_t>(idx)] - query).squaredNorm();
        if (static_cast<int>(best.size()) == k &&
            !better(d2, idx, best.back().first, best.back().second))
          continue;
        auto pos = std::lower_bound(best.begin(), best.end(), std::make_pair(d2, idx));
        best.insert(pos, {d2, idx});
        if (static_cast<int>(best.size()) > k) best.pop_back();
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (static_cast<int>(best.size()) < k || delta * delta <= best.back().first)
      stack.push_back(far);
    stack.push_back(near);
  }
  for (auto& [d2, idx] : best) d2 = std::sqrt(d2);
  return best;
}

std::vector<std::pair<double, int>> NeighborIndex::radius(const Vec3& query,
                                                          double radius) const {
  require(radius >= 0.0, ErrorKind::InvalidInput, "radius query: negative radius");
  const double r2 = radius * radius;
  std::vector<std::pair<double, int>> hits;
  std::vector<int> stack;
  stack.push_back(root_);
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[static_cast<std::size_t>(i)];
        const double d2 = (points_[static_cast<std::size_t>(idx)] - query).squaredNorm();
        if (d2 <= r2) hits.emplace_back(d2, idx);
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (delta * delta <= r2) stack.push_back(far);
    stack.push_back(near);
  }
  std::sort(hits.begin(), hits.end(),
            [](const auto& a, const auto& b) {
              return a.first < b.first || (a.first == b.first && a.second < b.second);
            });
  for (auto& [d2, idx] : hits) d2 = std::sqrt(d2);
  return hits;
}

std::vector<double> nearest_distances(const PointCloud& queries, const PointCloud& targets) {
  validate_cloud(queries, "nearest_distances queries");
  validate_cloud(targets, "nearest_distances targets");
  NeighborIndex index(targets);
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out[i] = index.nearest(queries.points[i]).first;
  return out;
}

namespace {

double directional_sq_sum(const PointCloud& from, const NeighborIndex& to) {
  double sum = 0.0;
  for (const Vec3& p : from.points) {
    const double d = to.nearest(p).first;
    sum += d * d;
  }
  return sum;
}

}  // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  validate_cloud(a, "chamfer a");
  validate_cloud(b, "chamfer b");
  NeighborIndex ia(a), ib(b);
  return directional_sq_sum(a, ib) + directional_sq_sum(b, ia);
}

double chamfer_distance_normalized(const PointCloud& a, const PointCloud& b) {
  validate_cloud(a, "chamfer a");
  validate_cloud(b, "chamfer b");
  NeighborIndex ia(a), ib(b);
  return directional_sq_sum(a, ib) / static_cast<double>(a.size()) +
         directional_sq_sum(b, ia) / static_cast<double>(b.size());
}

double avg_nn_distance(const PointCloud& cloud) {
  validate_cloud(cloud, "avg_nn_distance");
  require(cloud.size() >= 2, ErrorKind::InvalidInput,
          "avg_nn_distance: need at least 2 points");
  NeighborIndex index(cloud);
  double sum = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    sum += index.nearest(cloud.points[i], static_cast<int>(i)).first;
  return sum / static_cast<double>(cloud.size());
}

std::vector<std::vector<std::pair<int, double>>> gaussian_weights(
    const PointCloud& cloud, double sigma, const SmoothNeighborhood& nbhd) {
  validate_cloud(cloud, "gaussian_weights");
  require(sigma > 0.0, ErrorKind::InvalidInput, "gaussian_weights: sigma must be > 0");

  NeighborIndex index(cloud);
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<std::vector<std::pair<int, double>>> rows(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::vector<std::pair<double, int>> nbrs;
    if (nbhd.kind == SmoothNeighborhood::Kind::KNearest) {
      require(nbhd.k >= 1, ErrorKind::InvalidInput, "gaussian_weights: k must be >= 1");
      nbrs = index.knn(cloud.points[i], nbhd.k);
    } else {
      nbrs = index.radius(cloud.points[i], nbhd.radius);
    }
    // the query point is a member of the cloud, so nbrs is never empty and
    // always contains i (or an identical point with a lower index)
    auto& row = rows[i];
    row.reserve(nbrs.size());
    double total = 0.0;
    for (const auto& [d, j] : nbrs) {
      const double w = std::exp(-(d * d) * inv_two_sigma2);
      row.emplace_back(j, w);
      total += w;
    }
    for (auto& [j, w] : row) w /= total;
  }
  return rows;
}

std::vector<double> gaussian_smooth(const PointCloud& cloud,
                                    const std::vector<double>& values,
                                    double sigma,
                                    const SmoothNeighborhood& nbhd) {
  require(values.size() == cloud.size(), ErrorKind::InvalidInput,
          "gaussian_smooth: values size mismatch");
  const auto rows = gaussian_weights(cloud, sigma, nbhd);
  std::vector<double> out(cloud.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double acc = 0.0;
    for (const auto& [j, w] : rows[i]) acc += w * values[static_cast<std::size_t>(j)];
    out[i] = acc;
  }
  return out;
}

}  // namespace dexaff::geometry
