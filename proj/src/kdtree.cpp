// Copyright 2026 The metricnav Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "metricnav/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "metricnav/errors.hpp"

namespace metricnav {

SpatialIndex::SpatialIndex(Points3d points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  if (points_.cols() == 0) throw EmptyCloudError("spatial index requires a nonempty cloud");
  if (!points_.allFinite()) throw DomainError("spatial index points must be finite");
  order_.resize(static_cast<std::size_t>(points_.cols()));
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * order_.size() / static_cast<std::size_t>(leaf_size_) + 1);
  build(0, static_cast<int>(order_.size()), 0);
}

int SpatialIndex::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, -1, -1, begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(order_[i]));
    hi = hi.cwiseMax(points_.col(order_[i]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi(axis) - lo(axis) <= 0.0) return id;  // all points coincide

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_(axis, a) < points_(axis, b); });
  const double split = points_(axis, order_[mid]);

  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SpatialIndex::search(int node_id, const Eigen::Vector3d& q, double& best_d2,
                          Eigen::Index& best) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      const double d2 = (points_.col(idx) - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  search(near, q, best_d2, best);
  // Non-strict so that equidistant points across the split are still visited.
  if (diff * diff <= best_d2) search(far, q, best_d2, best);
}

SpatialIndex::Neighbor SpatialIndex::nearest(const Eigen::Vector3d& query) const {
  if (!query.allFinite()) throw DomainError("nearest-neighbour query must be finite");
  double best_d2 = std::numeric_limits<double>::infinity();
  Eigen::Index best = std::numeric_limits<Eigen::Index>::max();
  search(0, query, best_d2, best);
  return {best, std::sqrt(best_d2)};
}

Eigen::VectorXd SpatialIndex::nearest_distances(const Points3d& queries) const {
  Eigen::VectorXd out(queries.cols());
  for (Eigen::Index j = 0; j < queries.cols(); ++j) out(j) = nearest(queries.col(j)).distance;
  return out;
}

double nearest_distance(const SpatialIndex& index, const Eigen::Vector3d& query) {
  return index.nearest(query).distance;
}

}  // namespace metricnav
