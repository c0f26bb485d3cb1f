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
#include <Eigen/Geometry>
#include <cmath>

namespace metricnav {

/// Proper rigid motion x -> R x + t.
template <typename Scalar>
struct RigidTransform {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  template <typename Derived>
  auto apply(const Eigen::MatrixBase<Derived>& points) const {
    return ((rotation * points).colwise() + translation).eval();
  }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  /// (*this) o other
  RigidTransform compose(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  bool is_proper(Scalar tol) const {
    return (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol;
  }
};

/// Angle of the relative rotation a^T b, in radians.
template <typename Scalar>
Scalar rotation_angle_between(const Eigen::Matrix<Scalar, 3, 3>& a,
                              const Eigen::Matrix<Scalar, 3, 3>& b) {
  const Eigen::Matrix<Scalar, 3, 3> rel = a.transpose() * b;
  return Eigen::AngleAxis<Scalar>(rel).angle();
}

using RigidTransformd = RigidTransform<double>;

}  // namespace metricnav
