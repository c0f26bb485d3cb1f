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

#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <limits>
#include <random>

#include "metricnav/errors.hpp"
#include "metricnav/kdtree.hpp"
#include "metricnav/scenes.hpp"

using namespace metricnav;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Analytic first-hit parameters for the two primitive kinds used below.
double ray_sphere(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Sphere& s) {
  const Eigen::Vector3d oc = o - s.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t > 0.0 ? t : kInf;
}

double ray_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& b) {
  double t0 = -kInf, t1 = kInf;
  for (int a = 0; a < 3; ++a) {
    const double lo = b.center(a) - b.half_extents(a), hi = b.center(a) + b.half_extents(a);
    if (d(a) == 0.0) {
      if (o(a) < lo || o(a) > hi) return kInf;
      continue;
    }
    double ta = (lo - o(a)) / d(a), tb = (hi - o(a)) / d(a);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1 || t0 <= 0.0) return kInf;
  return t0;
}

Scene sphere_scene(double r = 1.0) {
  Scene s;
  s.primitives.push_back(Sphere{Eigen::Vector3d::Zero(), r});
  return s;
}

}  // namespace

TEST(SceneDistance, Examples) {
  const Scene s = sphere_scene(0.5);
  EXPECT_DOUBLE_EQ(exact_distance(s, Eigen::Vector3d(0, 0, 0.75)), 0.25);
  EXPECT_NEAR(exact_distance(s, Eigen::Vector3d(0.3, 0.4, 0.0)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(exact_distance(s, Eigen::Vector3d(0, 0, 0.1)), 0.4);
  EXPECT_EQ(clearance(s, Eigen::Vector3d(0, 0, 0.1)), 0.0);
  EXPECT_DOUBLE_EQ(clearance(s, Eigen::Vector3d(0, 0, 0.75)), 0.25);
}

TEST(SceneDistance, InvalidPrimitivesRejected) {
  EXPECT_THROW(validate(Primitive(Sphere{Eigen::Vector3d::Zero(), -1.0})), DomainError);
  EXPECT_THROW(validate(Primitive(Box{Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 0, 1)})), DomainError);
  EXPECT_THROW(validate(Primitive(Plane{Eigen::Vector3d::Zero(), 0.0})), DomainError);
}

TEST(SceneDistance, OneLipschitzAndUnitGradient) {
  Scene s;
  s.primitives.push_back(Sphere{Eigen::Vector3d(0.2, 0, 0), 0.4});
  s.primitives.push_back(Box{Eigen::Vector3d(-0.5, 0.3, 0), Eigen::Vector3d(0.2, 0.3, 0.1)});
  s.primitives.push_back(Capsule{Eigen::Vector3d(0, -0.6, -0.3), Eigen::Vector3d(0.5, -0.6, 0.4), 0.1});
  s.primitives.push_back(Plane{Eigen::Vector3d::UnitZ(), -0.8});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector3d x(u(rng), u(rng), u(rng)), y(u(rng), u(rng), u(rng));
    EXPECT_LE(std::abs(exact_distance(s, x) - exact_distance(s, y)), (x - y).norm() + 1e-12);
    const double d = exact_distance(s, x);
    if (d > 1e-6) {
      EXPECT_NEAR(distance_gradient(s, x).norm(), 1.0, 1e-9);
    }
    EXPECT_NEAR((closest_surface_point(s, x) - x).norm(), d, 1e-9);
  }
}

// Dense surface sample as a nearest-surface oracle: its distance can only
// overestimate the exact one, by at most the sample spacing.
TEST(SceneDistance, MatchesDenseSampleOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ur(0.1, 0.4);
  for (int trial = 0; trial < 4; ++trial) {
    Scene s;
    s.primitives.push_back(Sphere{Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.5, ur(rng)});
    s.primitives.push_back(
        Box{Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.5, Eigen::Vector3d(ur(rng), ur(rng), ur(rng))});
    s.primitives.push_back(Capsule{Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.6,
                                   Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.6, 0.5 * ur(rng)});
    const SpatialIndex index(sample_surface(s, 300000, 100 + trial));
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d x(1.5 * u(rng), 1.5 * u(rng), 1.5 * u(rng));
      const double exact = exact_distance(s, x);
      const double sampled = nearest_distance(index, x);
      EXPECT_GE(sampled, exact - 1e-12);
      EXPECT_LE(sampled - exact, 0.02);
    }
  }
}

TEST(SceneSampling, SphereAndBoxPointsOnSurface) {
  const PointCloud c = sample_surface(sphere_scene(), 1000, 1);
  ASSERT_EQ(c.size(), 1000);
  for (Eigen::Index i = 0; i < c.size(); ++i) EXPECT_LE(std::abs(c.points.col(i).norm() - 1.0), 1e-9);

  Scene b;
  const Box box{Eigen::Vector3d(0.1, -0.2, 0.3), Eigen::Vector3d(0.5, 0.25, 0.1)};
  b.primitives.push_back(box);
  const PointCloud cb = sample_surface(b, 1000, 2);
  for (Eigen::Index i = 0; i < cb.size(); ++i) {
    const Eigen::Vector3d q = (cb.points.col(i) - box.center).cwiseAbs() - box.half_extents;
    EXPECT_LE(std::abs(q.maxCoeff()), 1e-9);
  }
}

TEST(SceneSampling, AreaProportionalCounts) {
  Scene s;
  s.primitives.push_back(Sphere{Eigen::Vector3d(-3, 0, 0), 0.5});
  s.primitives.push_back(Sphere{Eigen::Vector3d(3, 0, 0), 1.0});
  const PointCloud c = sample_surface(s, 200000, 3);
  const double small = static_cast<double>((c.points.row(0).array() < 0.0).count());
  const double large = static_cast<double>(c.size()) - small;
  EXPECT_NEAR(large / small, 4.0, 0.2);
}

TEST(SceneSampling, Deterministic) {
  const PointCloud a = sample_surface(sphere_scene(), 500, 9);
  const PointCloud b = sample_surface(sphere_scene(), 500, 9);
  EXPECT_EQ(a.points, b.points);
}

TEST(SceneRender, FrontHemisphereOnly) {
  const Scene s = sphere_scene();
  CameraView view;
  const RenderedView r = render_visible_cloud(s, view, 5000, 1);
  ASSERT_GT(r.cloud.size(), 0);
  EXPECT_FALSE(r.view_inside_geometry);
  for (Eigen::Index i = 0; i < r.cloud.size(); ++i) EXPECT_GE(r.cloud.points(2, i), -1e-6);
  for (std::size_t i = 0; i < r.pixel.size(); ++i) {
    const int p = r.pixel[i];
    EXPECT_TRUE(std::isfinite(r.depth(p / view.width, p % view.width)));
  }
  // Corner pixels see nothing.
  EXPECT_TRUE(std::isnan(r.depth(0, 0)));
}

TEST(SceneRender, OccludedCapHasNoPoints) {
  Scene s;
  const Sphere sphere{Eigen::Vector3d::Zero(), 0.5};
  const Box box{Eigen::Vector3d(0, 0, 1.2), Eigen::Vector3d(0.25, 0.25, 0.05)};
  s.primitives.push_back(sphere);
  s.primitives.push_back(box);
  CameraView view;
  const RenderedView r = render_visible_cloud(s, view, 100000, 2);
  ASSERT_GT(r.cloud.size(), 100);
  int on_sphere = 0;
  for (Eigen::Index i = 0; i < r.cloud.size(); ++i) {
    const Eigen::Vector3d p = r.cloud.points.col(i);
    const Eigen::Vector3d d = (p - view.position).normalized();
    const double t = (p - view.position).norm();
    const double first = std::min(ray_sphere(view.position, d, sphere), ray_box(view.position, d, box));
    EXPECT_NEAR(first, t, 1e-6);
    if (std::abs(p.norm() - 0.5) < 1e-9) {
      ++on_sphere;
      EXPECT_FALSE(std::isfinite(ray_box(view.position, d, box)));
    }
  }
  EXPECT_GT(on_sphere, 0);
}

TEST(SceneRender, SubsampleIsSeededAndOrdered) {
  const Scene s = sphere_scene();
  CameraView view;
  const RenderedView a = render_visible_cloud(s, view, 300, 5);
  const RenderedView b = render_visible_cloud(s, view, 300, 5);
  ASSERT_EQ(a.cloud.size(), 300);
  EXPECT_EQ(a.cloud.points, b.cloud.points);
  for (std::size_t i = 1; i < a.pixel.size(); ++i) EXPECT_LT(a.pixel[i - 1], a.pixel[i]);
}

TEST(SceneTails, FlatPlaneHasNoTails) {
  Scene s;
  s.primitives.push_back(Plane{Eigen::Vector3d::UnitZ(), 0.0});
  CameraView view;
  view.fov = 0.5;
  const RenderedView r = render_visible_cloud(s, view, 100000, 1);
  const TailedCloud t = inject_frustum_tails(r, 0.05, 1.0, 1);
  EXPECT_TRUE(t.tails.empty());
  EXPECT_EQ(t.cloud.points, r.cloud.points);
}

TEST(SceneTails, BoxOverFarPlane) {
  Scene s;
  const Box box{Eigen::Vector3d(0, 0, 0.5), Eigen::Vector3d(0.3, 0.3, 0.3)};
  s.primitives.push_back(box);
  s.primitives.push_back(Plane{Eigen::Vector3d::UnitZ(), -1.0});
  CameraView view;
  view.fov = 0.6;
  const RenderedView r = render_visible_cloud(s, view, 1000000, 1);

  const TailedCloud none = inject_frustum_tails(r, 0.05, 0.0, 1);
  EXPECT_EQ(none.cloud.points, r.cloud.points);

  const TailedCloud t = inject_frustum_tails(r, 0.05, 0.5, 1);
  ASSERT_GT(t.tails.size(), 10u);
  ASSERT_EQ(t.cloud.size(), r.cloud.size() + static_cast<Eigen::Index>(t.tails.size()));
  for (std::size_t i = 0; i < t.tails.size(); ++i) {
    const TailSample& ts = t.tails[i];
    const int row = ts.pixel / view.width, col = ts.pixel % view.width;
    const Eigen::Vector3d dir = view.ray_direction(col, row);
    const Eigen::Vector3d p = t.cloud.points.col(t.source_count + static_cast<Eigen::Index>(i));
    // On the silhouette pixel's ray, strictly between the two surfaces.
    EXPECT_LE((p - view.position).cross(dir).norm(), 1e-9);
    EXPECT_GT(ts.depth, ts.foreground_depth);
    EXPECT_LT(ts.depth, ts.background_depth);
    EXPECT_NEAR((p - view.position).norm(), ts.depth, 1e-9);
    // The pixel itself sees the plane past the box edge.
    EXPECT_FALSE(std::isfinite(ray_box(view.position, dir, box)));
    EXPECT_NEAR(ts.background_depth, (-1.0 - view.position.z()) / dir.z(), 1e-6);
  }
  EXPECT_THROW(inject_frustum_tails(r, 0.05, 1.5, 1), DomainError);
}

TEST(SceneTails, MissingDepthImageRejected) {
  RenderedView r;
  r.cloud = sample_surface(sphere_scene(), 10, 1);
  EXPECT_THROW(inject_frustum_tails(r, 0.05, 0.5, 1), DomainError);
}

TEST(SceneNormalize, DistancesScale) {
  Scene s;
  s.primitives.push_back(Sphere{Eigen::Vector3d(1, 2, 3), 0.7});
  s.primitives.push_back(Box{Eigen::Vector3d(-1, 0, 2), Eigen::Vector3d(0.3, 0.4, 0.5)});
  s.primitives.push_back(Capsule{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1), 0.2});
  s.primitives.push_back(Plane{Eigen::Vector3d(0, 0.6, 0.8), 0.5});
  Normalization n;
  n.scale = 2.5;
  n.center = Eigen::Vector3d(0.3, -0.1, 1.7);
  const Scene ns = normalize_scene(s, n);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d x(u(rng), u(rng), u(rng));
    EXPECT_NEAR(exact_distance(ns, n.apply(x)), exact_distance(s, x) / n.scale, 1e-12);
    EXPECT_EQ(clearance(ns, n.apply(x)) == 0.0, clearance(s, x) == 0.0);
  }
}

TEST(SceneFileTest, RoundTripAndStarts) {
  SceneFile f;
  f.scene = sphere_scene();
  f.scene.id = "unit";
  f.camera = CameraView{};
  f.navigation = NavigationSetup{};
  const SceneFile back = parse_scene(scene_to_json(f));
  EXPECT_EQ(back.scene.id, "unit");
  ASSERT_EQ(back.scene.primitives.size(), 1u);
  ASSERT_TRUE(back.navigation.has_value());
  const auto starts = shell_starts(*back.navigation, Eigen::Vector3d::Zero(), 3);
  ASSERT_EQ(starts.size(), 8u);
  for (const auto& p : starts) {
    EXPECT_NEAR(p.norm(), 1.2, 1e-12);
    // 35 degrees off the axis pointing away from the goal.
    EXPECT_NEAR(std::acos(-p.normalized().x()), 35.0 * M_PI / 180.0, 1e-9);
  }
  EXPECT_THROW(parse_scene("{\"primitives\": [{\"type\": \"torus\"}]}"), Error);
}
