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

#include "metricnav/icp.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <cmath>

#include "metricnav/kdtree.hpp"

namespace metricnav {
namespace {

// RMS distance to the nearest target point, filling `matches`.
double match(const SpatialIndex& index, const Points3d& moved, Points3d& matches) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < moved.cols(); ++i) {
    const auto nn = index.nearest(moved.col(i));
    matches.col(i) = index.points().col(nn.index);
    sum += nn.distance * nn.distance;
  }
  return std::sqrt(sum / static_cast<double>(moved.cols()));
}

}  // namespace

IcpResult icp_align(const PointCloud& source, const PointCloud& target, const IcpOptions& options) {
  if (source.empty() || target.empty()) throw EmptyCloudError("ICP requires two nonempty clouds");
  if (options.max_iters < 1) throw DomainError("ICP max_iters must be at least 1");

  const SpatialIndex index(target.points);
  const Points3d& src = source.points;
  Points3d moved = src;
  Points3d matches(3, src.cols());

  IcpResult result;
  result.residual = match(index, moved, matches);
  result.residual_trace.push_back(result.residual);
  result.transform_trace.push_back(result.transform);

  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::Vector3d src_mean = src.rowwise().mean();
    const Eigen::Vector3d dst_mean = matches.rowwise().mean();
    const Eigen::Matrix3d cross =
        (matches.colwise() - dst_mean) * (src.colwise() - src_mean).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross);
    const auto& sv = svd.singularValues();
    if (!(sv(1) > 1e-12 * std::max(sv(0), 1e-300)))
      throw AlignmentError("degenerate correspondence covariance in ICP", result.transform);

    const Eigen::Matrix4d h = Eigen::umeyama(src, matches, options.estimate_scale);
    const Eigen::Matrix3d sr = h.topLeftCorner<3, 3>();
    const double scale = options.estimate_scale ? std::cbrt(sr.determinant()) : 1.0;
    RigidTransformd next{sr / scale, h.topRightCorner<3, 1>()};

    moved = ((scale * next.rotation * src).colwise() + next.translation);
    const double residual = match(index, moved, matches);
    const double improvement = result.residual - residual;

    result.transform = next;
    result.scale = scale;
    result.residual = residual;
    result.residual_trace.push_back(residual);
    result.transform_trace.push_back(next);
    result.iterations = it + 1;
    if (improvement < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace metricnav
