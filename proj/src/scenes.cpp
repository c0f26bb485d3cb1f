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

#include "metricnav/scenes.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <type_traits>

#include "metricnav/errors.hpp"

namespace metricnav {
namespace {

constexpr double kHitThreshold = 1e-7;
constexpr int kMaxTraceSteps = 512;
constexpr double kMaxTraceDepth = 50.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Any unit vector orthogonal to `n`.
Eigen::Vector3d orthogonal(const Eigen::Vector3d& n) {
  const Eigen::Vector3d helper =
      std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  return n.cross(helper).normalized();
}

Eigen::Vector3d random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Eigen::Vector3d segment_closest(const Capsule& c, const Eigen::Vector3d& x) {
  const Eigen::Vector3d ab = c.b - c.a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((x - c.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return c.a + t * ab;
}

Eigen::Vector3d sample_on(const Primitive& prim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return std::visit(
      Overloaded{
          [&](const Sphere& s) -> Eigen::Vector3d { return s.center + s.radius * random_direction(rng); },
          [&](const Box& b) -> Eigen::Vector3d {
            const Eigen::Vector3d& h = b.half_extents;
            // Face pair normal to axis k has total area 8 h_i h_j.
            const double areas[3] = {h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
            std::discrete_distribution<int> pick({areas[0], areas[1], areas[2]});
            const int axis = pick(rng);
            Eigen::Vector3d p;
            for (int k = 0; k < 3; ++k) p(k) = (2.0 * unit(rng) - 1.0) * h(k);
            p(axis) = unit(rng) < 0.5 ? -h(axis) : h(axis);
            return b.center + p;
          },
          [&](const Plane& pl) -> Eigen::Vector3d {
            const Eigen::Vector3d e1 = orthogonal(pl.normal);
            const Eigen::Vector3d e2 = pl.normal.cross(e1);
            return pl.offset * pl.normal + (2.0 * unit(rng) - 1.0) * e1 + (2.0 * unit(rng) - 1.0) * e2;
          },
          [&](const Capsule& c) -> Eigen::Vector3d {
            const Eigen::Vector3d ab = c.b - c.a;
            const double len = ab.norm();
            const double side = 2.0 * std::numbers::pi * c.radius * len;
            const double caps = 4.0 * std::numbers::pi * c.radius * c.radius;
            if (len > 0.0 && unit(rng) * (side + caps) < side) {
              const Eigen::Vector3d axis = ab / len;
              const Eigen::Vector3d e1 = orthogonal(axis);
              const Eigen::Vector3d e2 = axis.cross(e1);
              const double phi = 2.0 * std::numbers::pi * unit(rng);
              return c.a + unit(rng) * ab + c.radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
            }
            const Eigen::Vector3d d = random_direction(rng);
            const bool at_b = len > 0.0 ? d.dot(ab) > 0.0 : true;
            return (at_b ? c.b : c.a) + c.radius * d;
          }},
      prim);
}

}  // namespace

void validate(const Primitive& prim) {
  std::visit(Overloaded{[](const Sphere& s) {
                          if (!(s.radius > 0.0) || !s.center.allFinite())
                            throw DomainError("sphere radius must be positive");
                        },
                        [](const Box& b) {
                          if (!(b.half_extents.minCoeff() > 0.0) || !b.center.allFinite())
                            throw DomainError("box half-extents must be positive");
                        },
                        [](const Plane& p) {
                          if (!(std::abs(p.normal.norm() - 1.0) <= 1e-12) || !std::isfinite(p.offset))
                            throw DomainError("plane normal must have unit length");
                        },
                        [](const Capsule& c) {
                          if (!(c.radius > 0.0) || !c.a.allFinite() || !c.b.allFinite())
                            throw DomainError("capsule radius must be positive");
                        }},
             prim);
}

Eigen::Vector3d closest_point(const Primitive& prim, const Eigen::Vector3d& x) {
  return std::visit(
      Overloaded{
          [&](const Sphere& s) -> Eigen::Vector3d {
            const Eigen::Vector3d v = x - s.center;
            const double n = v.norm();
            if (n == 0.0) return s.center + s.radius * Eigen::Vector3d::UnitX();
            return s.center + (s.radius / n) * v;
          },
          [&](const Box& b) -> Eigen::Vector3d {
            const Eigen::Vector3d q = x - b.center;
            const Eigen::Vector3d& h = b.half_extents;
            if ((q.cwiseAbs().array() <= h.array()).all()) {
              // Interior (or boundary): move to the nearest face.
              int axis = 0;
              (h - q.cwiseAbs()).minCoeff(&axis);
              Eigen::Vector3d p = q;
              p(axis) = q(axis) < 0.0 ? -h(axis) : h(axis);
              return b.center + p;
            }
            return b.center + q.cwiseMax(-h).cwiseMin(h);
          },
          [&](const Plane& p) -> Eigen::Vector3d { return x - (p.normal.dot(x) - p.offset) * p.normal; },
          [&](const Capsule& c) -> Eigen::Vector3d {
            const Eigen::Vector3d s = segment_closest(c, x);
            const Eigen::Vector3d v = x - s;
            const double n = v.norm();
            if (n == 0.0) {
              const Eigen::Vector3d ab = c.b - c.a;
              const Eigen::Vector3d dir = ab.squaredNorm() > 0.0 ? orthogonal(ab.normalized())
                                                                 : Eigen::Vector3d::UnitX();
              return s + c.radius * dir;
            }
            return s + (c.radius / n) * v;
          }},
      prim);
}

double unsigned_distance(const Primitive& prim, const Eigen::Vector3d& x) {
  return std::visit(
      Overloaded{[&](const Sphere& s) { return std::abs((x - s.center).norm() - s.radius); },
                 [&](const Box& b) {
                   const Eigen::Vector3d q = (x - b.center).cwiseAbs() - b.half_extents;
                   if ((q.array() <= 0.0).all()) return -q.maxCoeff();
                   return q.cwiseMax(0.0).norm();
                 },
                 [&](const Plane& p) { return std::abs(p.normal.dot(x) - p.offset); },
                 [&](const Capsule& c) { return std::abs((x - segment_closest(c, x)).norm() - c.radius); }},
      prim);
}

bool contains(const Primitive& prim, const Eigen::Vector3d& x) {
  return std::visit(
      Overloaded{[&](const Sphere& s) { return (x - s.center).norm() < s.radius; },
                 [&](const Box& b) { return ((x - b.center).cwiseAbs().array() < b.half_extents.array()).all(); },
                 [&](const Plane&) { return false; },
                 [&](const Capsule& c) { return (x - segment_closest(c, x)).norm() < c.radius; }},
      prim);
}

double surface_area(const Primitive& prim) {
  return std::visit(
      Overloaded{[](const Sphere& s) { return 4.0 * std::numbers::pi * s.radius * s.radius; },
                 [](const Box& b) {
                   const Eigen::Vector3d& h = b.half_extents;
                   return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
                 },
                 [](const Plane&) { return 4.0; },
                 [](const Capsule& c) {
                   return 2.0 * std::numbers::pi * c.radius * (c.b - c.a).norm() +
                          4.0 * std::numbers::pi * c.radius * c.radius;
                 }},
      prim);
}

void Scene::validate() const {
  if (primitives.empty()) throw DomainError("scene must contain at least one primitive");
  for (const auto& p : primitives) metricnav::validate(p);
}

double exact_distance(const Scene& scene, const Eigen::Vector3d& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : scene.primitives) best = std::min(best, unsigned_distance(p, x));
  return best;
}

Eigen::Vector3d closest_surface_point(const Scene& scene, const Eigen::Vector3d& x) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const double d = unsigned_distance(scene.primitives[i], x);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return closest_point(scene.primitives[arg], x);
}

Eigen::Vector3d distance_gradient(const Scene& scene, const Eigen::Vector3d& x) {
  const Eigen::Vector3d v = x - closest_surface_point(scene, x);
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector3d(v / n) : Eigen::Vector3d::Zero();
}

double clearance(const Scene& scene, const Eigen::Vector3d& x) {
  for (const auto& p : scene.primitives)
    if (contains(p, x)) return 0.0;
  return exact_distance(scene, x);
}

Scene normalize_scene(const Scene& scene, const Normalization& n) {
  Scene out{scene.id, {}};
  const double s = n.scale;
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Sphere>) {
            out.primitives.emplace_back(Sphere{n.apply(p.center), p.radius / s});
          } else if constexpr (std::is_same_v<T, Box>) {
            out.primitives.emplace_back(Box{n.apply(p.center), p.half_extents / s});
          } else if constexpr (std::is_same_v<T, Plane>) {
            out.primitives.emplace_back(Plane{p.normal, (p.offset - p.normal.dot(n.center)) / s});
          } else {
            out.primitives.emplace_back(Capsule{n.apply(p.a), n.apply(p.b), p.radius / s});
          }
        },
        prim);
  }
  return out;
}

PointCloud sample_surface(const Scene& scene, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw DomainError("sample count must be at least 1");
  scene.validate();
  std::vector<double> areas;
  for (const auto& p : scene.primitives) areas.push_back(surface_area(p));
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
  PointCloud cloud;
  cloud.points.resize(3, count);
  for (Eigen::Index i = 0; i < count; ++i) cloud.points.col(i) = sample_on(scene.primitives[pick(rng)], rng);
  return cloud;
}

void CameraView::validate() const {
  if (!position.allFinite() || !look_at.allFinite() || (position - look_at).norm() == 0.0)
    throw DomainError("camera position must differ from look-at point");
  if (!(fov > 0.0 && fov < std::numbers::pi)) throw DomainError("camera field of view must lie in (0, pi)");
  if (width < 1 || height < 1) throw DomainError("camera resolution must be positive");
}

Eigen::Vector3d CameraView::ray_direction(int col, int row) const {
  const Eigen::Vector3d forward = (look_at - position).normalized();
  const Eigen::Vector3d world_up =
      std::abs(forward.y()) < 0.99 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d right = forward.cross(world_up).normalized();
  const Eigen::Vector3d up = right.cross(forward);
  const double tan_half = std::tan(0.5 * fov);
  const double aspect = static_cast<double>(width) / height;
  const double u = (2.0 * (col + 0.5) / width - 1.0) * tan_half * aspect;
  const double v = (1.0 - 2.0 * (row + 0.5) / height) * tan_half;
  return (forward + u * right + v * up).normalized();
}

RenderedView render_visible_cloud(const Scene& scene, const CameraView& view, Eigen::Index count,
                                  std::uint64_t seed) {
  scene.validate();
  view.validate();
  if (count < 1) throw DomainError("sample count must be at least 1");

  RenderedView out;
  out.view = view;
  out.depth = Eigen::MatrixXd::Constant(view.height, view.width, std::numeric_limits<double>::quiet_NaN());
  for (const auto& p : scene.primitives)
    if (contains(p, view.position)) out.view_inside_geometry = true;

  std::vector<Eigen::Vector3d> hits;
  std::vector<int> hit_pixels;
  for (int row = 0; row < view.height; ++row) {
    for (int col = 0; col < view.width; ++col) {
      const Eigen::Vector3d dir = view.ray_direction(col, row);
      double t = 0.0;
      for (int step = 0; step < kMaxTraceSteps && t < kMaxTraceDepth; ++step) {
        const Eigen::Vector3d x = view.position + t * dir;
        const double d = exact_distance(scene, x);
        if (d < kHitThreshold) {
          out.depth(row, col) = t;
          hits.push_back(closest_surface_point(scene, x));
          hit_pixels.push_back(row * view.width + col);
          break;
        }
        t += d;
      }
    }
  }

  std::vector<Eigen::Index> keep(hits.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = static_cast<Eigen::Index>(i);
  if (static_cast<Eigen::Index>(hits.size()) > count) {
    std::mt19937_64 rng(seed);
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(static_cast<std::size_t>(count));
    std::sort(keep.begin(), keep.end());
  }
  out.cloud.points.resize(3, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.cloud.points.col(static_cast<Eigen::Index>(i)) = hits[static_cast<std::size_t>(keep[i])];
    out.pixel.push_back(hit_pixels[static_cast<std::size_t>(keep[i])]);
  }
  return out;
}

TailedCloud inject_frustum_tails(const RenderedView& rendered, double edge_threshold, double density,
                                 std::uint64_t seed) {
  const CameraView& view = rendered.view;
  if (rendered.depth.rows() != view.height || rendered.depth.cols() != view.width ||
      rendered.pixel.size() != static_cast<std::size_t>(rendered.cloud.size()))
    throw DomainError("frustum tail injection needs the per-pixel depth image of a rendered view");
  if (!(edge_threshold > 0.0)) throw DomainError("edge threshold must be positive");
  if (!(density >= 0.0 && density <= 1.0)) throw DomainError("tail density must lie in [0, 1]");

  TailedCloud out;
  out.source_count = rendered.cloud.size();
  std::vector<Eigen::Vector3d> added;
  if (density > 0.0) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(density);
    const double pixel_angle = 2.0 * std::tan(0.5 * view.fov) / view.height;
    const Eigen::MatrixXd& depth = rendered.depth;
    for (int row = 0; row < view.height; ++row) {
      for (int col = 0; col < view.width; ++col) {
        const double back = depth(row, col);
        if (!std::isfinite(back)) continue;
        double front = std::numeric_limits<double>::infinity();
        const int nbr[4][2] = {{row - 1, col}, {row + 1, col}, {row, col - 1}, {row, col + 1}};
        for (const auto& [r, c] : nbr) {
          if (r < 0 || c < 0 || r >= view.height || c >= view.width) continue;
          const double d = depth(r, c);
          if (std::isfinite(d)) front = std::min(front, d);
        }
        if (!(back - front > edge_threshold)) continue;
        const double footprint = front * pixel_angle;
        const int m = std::max(1, static_cast<int>(std::floor((back - front) / footprint)));
        const Eigen::Vector3d dir = view.ray_direction(col, row);
        for (int k = 1; k <= m; ++k) {
          if (!keep(rng)) continue;
          const double t = front + (back - front) * k / (m + 1);
          added.push_back(view.position + t * dir);
          out.tails.push_back({row * view.width + col, t, front, back});
        }
      }
    }
  }

  PointCloud tails;
  tails.points.resize(3, static_cast<Eigen::Index>(added.size()));
  for (std::size_t i = 0; i < added.size(); ++i) tails.points.col(static_cast<Eigen::Index>(i)) = added[i];
  PointCloud base = rendered.cloud;
  base.colors.reset();
  base.confidence.reset();
  out.cloud = concatenate(base, tails);
  return out;
}

std::vector<Eigen::Vector3d> shell_starts(const NavigationSetup& setup, const Eigen::Vector3d& center,
                                          std::uint64_t seed) {
  const Eigen::Vector3d to_goal = setup.goal - center;
  if (to_goal.norm() == 0.0) throw DomainError("navigation goal must differ from the scene centre");
  const Eigen::Vector3d axis = -to_goal.normalized();
  const Eigen::Vector3d e1 = orthogonal(axis);
  const Eigen::Vector3d e2 = axis.cross(e1);
  std::mt19937_64 rng(seed);
  const double offset = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  std::vector<Eigen::Vector3d> starts;
  for (int i = 0; i < setup.start_count; ++i) {
    const double phi = offset + 2.0 * std::numbers::pi * i / setup.start_count;
    const Eigen::Vector3d dir = std::cos(setup.start_cone) * axis +
                                std::sin(setup.start_cone) * (std::cos(phi) * e1 + std::sin(phi) * e2);
    starts.push_back(center + setup.start_radius * dir);
  }
  return starts;
}

}  // namespace metricnav
