#include "ido/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace ido {

SpatialIndex::SpatialIndex(Eigen::Matrix3Xd points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.cols() > std::numeric_limits<std::int32_t>::max())
    throw std::length_error("spatial index supports at most 2^31 points");
  order_.resize(static_cast<std::size_t>(points_.cols()));
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(order_.size()));
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (auto i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(order_[i]));
    hi = hi.cwiseMax(points_.col(order_[i]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide; keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_(axis, a), vb = points_(axis, b);
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_(axis, order_[mid]);
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = split;
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

namespace {

struct Candidate {
  double d2;
  std::size_t index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

}  // namespace

std::vector<Neighbor> SpatialIndex::knn(const Eigen::Vector3d& q, std::size_t k) const {
  std::vector<Neighbor> out;
  if (k == 0 || nodes_.empty()) return out;
  k = std::min(k, size());

  std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
  std::vector<std::int32_t> stack{0};
  // Each stack entry is explored lazily; the plane distance is rechecked on pop.
  std::vector<double> bound{0.0};
  while (!stack.empty()) {
    const auto id = stack.back();
    const double b = bound.back();
    stack.pop_back();
    bound.pop_back();
    if (heap.size() == k && b > heap.top().d2) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Candidate c{squared_distance(points_.col(static_cast<Eigen::Index>(idx)), q), idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      continue;
    }
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    // Far side first on the stack so the near side is explored first.
    stack.push_back(far);
    bound.push_back(std::max(b, diff * diff));
    stack.push_back(near);
    bound.push_back(b);
  }

  out.resize(heap.size());
  for (auto i = out.size(); i-- > 0;) {
    out[i] = Neighbor{heap.top().index, std::sqrt(heap.top().d2)};
    heap.pop();
  }
  return out;
}

Neighbor SpatialIndex::nearest(const Eigen::Vector3d& q) const {
  auto r = knn(q, 1);
  if (r.empty()) throw std::logic_error("nearest() on an empty index");
  return r.front();
}

void SpatialIndex::radius_search(const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const {
  out.clear();
  if (nodes_.empty()) return;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (node.left < 0) {
      for (auto i = node.begin; i < node.end; ++i) {
        if (squared_distance(points_.col(order_[i]), q) <= r2) out.push_back(order_[i]);
      }
      continue;
    }
    const double diff = q[node.axis] - node.split;
    if (diff < 0) {
      stack.push_back(node.left);
      if (diff * diff <= r2) stack.push_back(node.right);
    } else {
      stack.push_back(node.right);
      if (diff * diff <= r2) stack.push_back(node.left);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace ido
