#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tactile/geometry.hpp"

namespace tactile {

struct Neighbor {
  std::size_t index = 0;
  double sq_dist = std::numeric_limits<double>::infinity();
};

/// Static 3-d tree over a copy of the input points. Leaves hold up to
/// kLeafSize points; splits are at the median of the widest axis.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build(0, static_cast<std::uint32_t>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Nearest point with squared distance <= max_sq_dist; index == size() when none.
  Neighbor nearest(const Vec3& q, double max_sq_dist = std::numeric_limits<double>::infinity()) const {
    Neighbor best{points_.size(), max_sq_dist};
    if (!nodes_.empty()) nearest_rec(0, q, best);
    if (best.index == points_.size()) best.sq_dist = std::numeric_limits<double>::infinity();
    return best;
  }

  /// Indices of all points within `radius` (inclusive), ascending.
  std::vector<std::size_t> radius_search(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) radius_rec(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Up to k nearest neighbors, closest first.
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (k == 0 || nodes_.empty()) return heap;
    heap.reserve(k + 1);
    knn_rec(0, q, k, heap);
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
  }

 private:
  static constexpr std::uint32_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin, end;   // range in order_
    std::uint32_t left, right;  // children; 0 for leaves (root is never a child)
    int axis;
    double split;
  };

  static bool closer(const Neighbor& a, const Neighbor& b) {
    return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
  }

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end, 0, 0, -1, 0.0});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double pa = points_[a][axis], pb = points_[b][axis];
                       return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    return id;
  }

  void nearest_rec(std::uint32_t id, const Vec3& q, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const double d = (points_[idx] - q).squaredNorm();
        if (d < best.sq_dist || (d == best.sq_dist && idx < best.index)) best = {idx, d};
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t first = diff < 0 ? node.left : node.right;
    const std::uint32_t second = diff < 0 ? node.right : node.left;
    nearest_rec(first, q, best);
    if (diff * diff <= best.sq_dist) nearest_rec(second, q, best);
  }

  void radius_rec(std::uint32_t id, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i)
        if ((points_[order_[i]] - q).squaredNorm() <= r2) out.push_back(order_[i]);
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t first = diff < 0 ? node.left : node.right;
    const std::uint32_t second = diff < 0 ? node.right : node.left;
    radius_rec(first, q, r2, out);
    if (diff * diff <= r2) radius_rec(second, q, r2, out);
  }

  void knn_rec(std::uint32_t id, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Neighbor cand{order_[i], (points_[order_[i]] - q).squaredNorm()};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), closer);
        } else if (closer(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), closer);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), closer);
        }
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t first = diff < 0 ? node.left : node.right;
    const std::uint32_t second = diff < 0 ? node.right : node.left;
    knn_rec(first, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().sq_dist) knn_rec(second, q, k, heap);
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace tactile
