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

#pragma once

#include <Eigen/Core>
#include <vector>

#include "metricnav/point_cloud.hpp"

namespace metricnav {

/// Exact nearest-neighbour search over a fixed point set (balanced KD-tree).
/// Immutable after construction and safe to share between threads.
/// Equidistant candidates resolve to the lowest point index.
class SpatialIndex {
 public:
  struct Neighbor {
    Eigen::Index index = -1;
    double distance = 0.0;
  };

  explicit SpatialIndex(Points3d points, int leaf_size = 8);
  explicit SpatialIndex(const PointCloud& cloud, int leaf_size = 8)
      : SpatialIndex(cloud.points, leaf_size) {}

  Neighbor nearest(const Eigen::Vector3d& query) const;
  Eigen::VectorXd nearest_distances(const Points3d& queries) const;

  const Points3d& points() const { return points_; }
  Eigen::Index size() const { return points_.cols(); }

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build(int begin, int end, int depth);
  void search(int node, const Eigen::Vector3d& q, double& best_d2, Eigen::Index& best) const;

  Points3d points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

/// Euclidean distance from `query` to the closest indexed point.
double nearest_distance(const SpatialIndex& index, const Eigen::Vector3d& query);

}  // namespace metricnav
