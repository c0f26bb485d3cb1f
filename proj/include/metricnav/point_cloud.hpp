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
#include <optional>
#include <span>
#include <vector>

namespace metricnav {

template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
using Points3d = Points3<double>;

/// Surface samples with optional per-point color in [0,1]^3 and confidence.
/// Points are stored column-wise.
struct PointCloud {
  Points3d points;
  std::optional<Points3d> colors;
  std::optional<Eigen::VectorXd> confidence;

  PointCloud() = default;
  explicit PointCloud(Points3d pts) : points(std::move(pts)) {}

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }

  /// Throws DomainError on non-finite coordinates or mismatched channel
  /// lengths.
  void validate() const;
};

/// Isotropic map x -> (x - center) / scale.
struct Normalization {
  double scale = 1.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return (x - center) / scale; }
  Eigen::Vector3d invert(const Eigen::Vector3d& y) const { return y * scale + center; }
};

struct NormalizedCloud {
  PointCloud cloud;
  Normalization normalization;
};

/// Bounding-box midpoint and half the largest extent; output lies in [-1,1]^3.
/// Throws DomainError for an empty or zero-extent cloud.
Normalization fit_normalization(const PointCloud& cloud);
NormalizedCloud normalize(const PointCloud& cloud);
PointCloud apply_normalization(const PointCloud& cloud, const Normalization& n);
PointCloud denormalize(const PointCloud& cloud, const Normalization& n);

/// Subset in the given index order, carrying every channel along.
PointCloud select(const PointCloud& cloud, std::span<const Eigen::Index> indices);

/// Concatenation; a channel survives only when both inputs carry it.
PointCloud concatenate(const PointCloud& a, const PointCloud& b);

}  // namespace metricnav
