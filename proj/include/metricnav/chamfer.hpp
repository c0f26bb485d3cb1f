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

#include "metricnav/point_cloud.hpp"

namespace metricnav {

class SpatialIndex;

/// Mean nearest-neighbour distance from every point of `from` to `to`.
double directed_chamfer(const Points3d& from, const SpatialIndex& to);

/// Sum of both directed mean nearest-neighbour distances.
double chamfer(const PointCloud& a, const PointCloud& b);

}  // namespace metricnav
