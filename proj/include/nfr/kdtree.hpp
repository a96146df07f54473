#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace nfr {

// Static kd-tree over 3D points. Nearest-neighbor ties are broken toward
// the lowest point index so queries are reproducible.
class KdTree3 {
 public:
  explicit KdTree3(const Eigen::MatrixX3d& points) : points_(points) {
    const int n = static_cast<int>(points.rows());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(n);
    root_ = build(0, n, 0);
  }

  int size() const { return static_cast<int>(points_.rows()); }

  int nearest(const Eigen::Vector3d& query, double* dist2_out = nullptr) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_d2);
    if (dist2_out) *dist2_out = best_d2;
    return best;
  }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       const double pa = points_(a, axis), pb = points_(b, axis);
                       return pa < pb || (pa == pb && a < b);
                     });
    Node node;
    node.point = order_[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(lo, mid, depth + 1);
    nodes_[self].right = build(mid + 1, hi, depth + 1);
    return self;
  }

  void search(int idx, const Eigen::Vector3d& q, int& best, double& best_d2) const {
    if (idx < 0) return;
    const Node& node = nodes_[idx];
    const double d2 = (points_.row(node.point).transpose() - q).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && node.point < best)) {
      best_d2 = d2;
      best = node.point;
    }
    const double delta = q[node.axis] - points_(node.point, node.axis);
    const int near_child = delta < 0 ? node.left : node.right;
    const int far_child = delta < 0 ? node.right : node.left;
    search(near_child, q, best, best_d2);
    if (delta * delta <= best_d2) search(far_child, q, best, best_d2);
  }

  Eigen::MatrixX3d points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace nfr
