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

#include <vector>

#include "metricnav/errors.hpp"
#include "metricnav/point_cloud.hpp"
#include "metricnav/rigid_transform.hpp"

namespace metricnav {

struct IcpOptions {
  int max_iters = 50;
  /// Stop once the residual improves by less than this.
  double tol = 1e-12;
  /// Similarity (Umeyama) fit instead of a rigid one.
  bool estimate_scale = false;
};

struct IcpResult {
  RigidTransformd transform;
  double scale = 1.0;
  /// Root-mean-square nearest-neighbour distance after the final update.
  double residual = 0.0;
  /// residual_trace[0] is the residual at the identity initialization.
  std::vector<double> residual_trace;
  std::vector<RigidTransformd> transform_trace;
  int iterations = 0;
  bool converged = false;
};

/// Thrown when the correspondence cross-covariance is rank-deficient.
class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& what, RigidTransformd last_valid)
      : Error(what), last_valid_(std::move(last_valid)) {}
  const RigidTransformd& last_valid() const { return last_valid_; }

 private:
  RigidTransformd last_valid_;
};

/// Point-to-point ICP from the identity: nearest-neighbour correspondences
/// in `target`, closed-form fit of source onto its matches. The returned
/// transform maps source coordinates into the target frame.
IcpResult icp_align(const PointCloud& source, const PointCloud& target, const IcpOptions& options = {});

}  // namespace metricnav
