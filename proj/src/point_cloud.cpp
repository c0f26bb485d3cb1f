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

#include "metricnav/point_cloud.hpp"

#include "metricnav/errors.hpp"

namespace metricnav {

void PointCloud::validate() const {
  if (!points.allFinite()) throw DomainError("point cloud contains non-finite coordinates");
  if (colors && colors->cols() != points.cols())
    throw DomainError("color channel length does not match point count");
  if (confidence && confidence->size() != points.cols())
    throw DomainError("confidence channel length does not match point count");
}

Normalization fit_normalization(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyCloudError("cannot normalize an empty cloud");
  const Eigen::Vector3d lo = cloud.points.rowwise().minCoeff();
  const Eigen::Vector3d hi = cloud.points.rowwise().maxCoeff();
  const double half_extent = 0.5 * (hi - lo).maxCoeff();
  if (!(half_extent > 0.0)) throw DomainError("cannot normalize a cloud with zero extent");
  return {half_extent, 0.5 * (lo + hi)};
}

PointCloud apply_normalization(const PointCloud& cloud, const Normalization& n) {
  PointCloud out = cloud;
  out.points = (cloud.points.colwise() - n.center) / n.scale;
  return out;
}

NormalizedCloud normalize(const PointCloud& cloud) {
  const Normalization n = fit_normalization(cloud);
  NormalizedCloud out{apply_normalization(cloud, n), n};
  // Rounding can push the extreme coordinates a few ulps outside [-1,1].
  out.cloud.points = out.cloud.points.cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

PointCloud denormalize(const PointCloud& cloud, const Normalization& n) {
  PointCloud out = cloud;
  out.points = (cloud.points * n.scale).colwise() + n.center;
  return out;
}

PointCloud select(const PointCloud& cloud, std::span<const Eigen::Index> indices) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  PointCloud out;
  out.points.resize(3, m);
  if (cloud.colors) out.colors = Points3d(3, m);
  if (cloud.confidence) out.confidence = Eigen::VectorXd(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = indices[static_cast<std::size_t>(j)];
    out.points.col(j) = cloud.points.col(i);
    if (cloud.colors) out.colors->col(j) = cloud.colors->col(i);
    if (cloud.confidence) (*out.confidence)(j) = (*cloud.confidence)(i);
  }
  return out;
}

PointCloud concatenate(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.points.resize(3, a.size() + b.size());
  out.points << a.points, b.points;
  if (a.colors && b.colors) {
    out.colors = Points3d(3, a.size() + b.size());
    *out.colors << *a.colors, *b.colors;
  }
  if (a.confidence && b.confidence) {
    out.confidence = Eigen::VectorXd(a.size() + b.size());
    *out.confidence << *a.confidence, *b.confidence;
  }
  return out;
}

}  // namespace metricnav
