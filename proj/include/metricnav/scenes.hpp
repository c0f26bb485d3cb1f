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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "metricnav/point_cloud.hpp"

namespace metricnav {

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

/// Axis-aligned box.
struct Box {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d half_extents = Eigen::Vector3d::Ones();
};

/// Infinite plane {x : normal . x = offset}. Surface sampling covers the
/// 2x2 square patch centred on offset * normal.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

/// Segment [a, b] swept by a ball of `radius`.
struct Capsule {
  Eigen::Vector3d a = Eigen::Vector3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::UnitX();
  double radius = 0.1;
};

using Primitive = std::variant<Sphere, Box, Plane, Capsule>;

/// Throws DomainError if the primitive violates its invariants.
void validate(const Primitive& p);

/// Closest point on the primitive's boundary surface (interior points
/// project outwards onto the boundary).
Eigen::Vector3d closest_point(const Primitive& p, const Eigen::Vector3d& x);
double unsigned_distance(const Primitive& p, const Eigen::Vector3d& x);
/// Strict solid interior; planes have none.
bool contains(const Primitive& p, const Eigen::Vector3d& x);
double surface_area(const Primitive& p);

/// Union of primitives with unsigned-distance semantics.
struct Scene {
  std::string id = "scene";
  std::vector<Primitive> primitives;

  void validate() const;
};

/// min over primitives of the unsigned distance to each boundary.
double exact_distance(const Scene& scene, const Eigen::Vector3d& x);

/// Closest surface point (lowest primitive index on ties).
Eigen::Vector3d closest_surface_point(const Scene& scene, const Eigen::Vector3d& x);

/// Unit gradient (x - closest) / distance; zero on the surface.
Eigen::Vector3d distance_gradient(const Scene& scene, const Eigen::Vector3d& x);

/// Clearance for collision checks: 0 inside any solid primitive, otherwise
/// the exact distance.
double clearance(const Scene& scene, const Eigen::Vector3d& x);

/// The scene expressed in the frame y = (x - center) / scale. Distances
/// scale by 1 / scale.
Scene normalize_scene(const Scene& scene, const Normalization& n);

/// `count` points drawn on the union surface, primitive chosen with
/// probability proportional to its area. Deterministic in `seed`.
PointCloud sample_surface(const Scene& scene, Eigen::Index count, std::uint64_t seed);

struct CameraView {
  Eigen::Vector3d position = Eigen::Vector3d(0.0, 0.0, 3.0);
  Eigen::Vector3d look_at = Eigen::Vector3d::Zero();
  /// Vertical field of view in radians.
  double fov = 1.0471975511965976;
  int width = 128;
  int height = 128;

  void validate() const;
  /// Unit direction of the ray through the centre of pixel (col, row).
  Eigen::Vector3d ray_direction(int col, int row) const;
};

/// A visible-surface cloud together with the per-pixel depth image it came
/// from. `pixel[i]` is the row-major pixel index of cloud point i.
struct RenderedView {
  PointCloud cloud;
  CameraView view;
  /// height x width ray depths, NaN where the ray hits nothing.
  Eigen::MatrixXd depth;
  std::vector<int> pixel;
  bool view_inside_geometry = false;
};

/// Sphere-traces one ray per pixel and keeps the first hit. Hits are
/// projected onto the exact surface. When more than `count` pixels hit,
/// a seeded subset of `count` of them is returned, in pixel order.
RenderedView render_visible_cloud(const Scene& scene, const CameraView& view, Eigen::Index count,
                                  std::uint64_t seed);

struct TailSample {
  int pixel = 0;
  double depth = 0.0;
  double foreground_depth = 0.0;
  double background_depth = 0.0;
};

struct TailedCloud {
  PointCloud cloud;
  Eigen::Index source_count = 0;
  std::vector<TailSample> tails;
};

/// Appends depth-smear points behind silhouettes. A pixel whose depth
/// exceeds its nearest 4-neighbour depth by more than `edge_threshold` gets
/// candidate points on its own ray, spaced one pixel footprint apart
/// strictly between the two depths; each candidate survives with
/// probability `density`.
TailedCloud inject_frustum_tails(const RenderedView& view, double edge_threshold, double density,
                                 std::uint64_t seed);

/// Optional blocks of a scene description file.
struct NavigationSetup {
  Eigen::Vector3d goal = Eigen::Vector3d(1.2, 0.0, 0.0);
  double start_radius = 1.2;
  int start_count = 8;
  /// Starts lie on the cone of this half-angle around the direction
  /// opposite the goal.
  double start_cone = 0.6108652381980153;  // 35 degrees
};

struct SceneFile {
  Scene scene;
  std::optional<CameraView> camera;
  std::optional<NavigationSetup> navigation;
};

SceneFile parse_scene(const std::string& json_text);
SceneFile load_scene(const std::filesystem::path& path);
std::string scene_to_json(const SceneFile& file);

/// Start points on a sphere of `setup.start_radius` about `center`, evenly
/// spaced in azimuth around the axis pointing away from the goal, with a
/// seeded azimuth offset.
std::vector<Eigen::Vector3d> shell_starts(const NavigationSetup& setup, const Eigen::Vector3d& center,
                                          std::uint64_t seed);

}  // namespace metricnav
