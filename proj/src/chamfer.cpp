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

#include "metricnav/chamfer.hpp"

#include "metricnav/errors.hpp"
#include "metricnav/kdtree.hpp"

namespace metricnav {

double directed_chamfer(const Points3d& from, const SpatialIndex& to) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) sum += to.nearest(from.col(i)).distance;
  return sum / static_cast<double>(from.cols());
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw EmptyCloudError("chamfer distance requires nonempty clouds");
  const double ab = directed_chamfer(a.points, SpatialIndex(b.points));
  const double ba = directed_chamfer(b.points, SpatialIndex(a.points));
  return ab + ba;
}

}  // namespace metricnav
