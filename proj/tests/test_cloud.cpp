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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "metricnav/chamfer.hpp"
#include "metricnav/cloud_io.hpp"
#include "metricnav/errors.hpp"
#include "metricnav/icp.hpp"
#include "metricnav/kdtree.hpp"
#include "metricnav/point_cloud.hpp"

namespace fs = std::filesystem;
using namespace metricnav;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("metricnav_cloud_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

Points3d random_points(Eigen::Index n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Points3d p(3, n);
  for (Eigen::Index i = 0; i < n; ++i) p.col(i) = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

double brute_nearest(const Points3d& pts, const Eigen::Vector3d& q) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) best = std::min(best, (pts.col(i) - q).norm());
  return best;
}

}  // namespace

TEST(CloudIo, ThreePointXyz) {
  const auto dir = temp_dir("xyz3");
  write_text(dir / "a.xyz", "0 0 0\n1 0 0\n0 1 0\n");
  const PointCloud c = load_cloud(dir / "a.xyz");
  EXPECT_EQ(c.size(), 3);
  EXPECT_EQ(c.points.col(1), Eigen::Vector3d(1, 0, 0));
  EXPECT_FALSE(c.confidence.has_value());
}

TEST(CloudIo, ConfidenceThreshold) {
  const auto dir = temp_dir("conf");
  write_text(dir / "a.xyz", "0 0 0 0.2\n1 0 0 0.9\n2 0 0 0.5\n");
  const PointCloud c = load_cloud(dir / "a.xyz", 0.4);
  ASSERT_EQ(c.size(), 2);
  EXPECT_EQ(c.points(0, 0), 1.0);
  EXPECT_EQ(c.points(0, 1), 2.0);
}

TEST(CloudIo, MalformedLineCarriesLineNumber) {
  const auto dir = temp_dir("bad");
  write_text(dir / "a.xyz", "0 0 0\n1 zero 0\n");
  try {
    load_cloud(dir / "a.xyz");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(CloudIo, NothingSurvivesIsEmptyCloud) {
  const auto dir = temp_dir("empty");
  write_text(dir / "a.xyz", "0 0 0 0.1\n1 0 0 0.2\n");
  EXPECT_THROW(load_cloud(dir / "a.xyz", 0.5), EmptyCloudError);
  EXPECT_THROW(load_cloud(dir / "missing.xyz"), IoError);
}

// Binary little-endian PLY with float xyz, uchar rgb and float confidence,
// against a scalar filter applied to the values that were written.
TEST(CloudIo, FuzzedPlyMatchesScalarFilter) {
  const auto dir = temp_dir("fuzz");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  std::uniform_real_distribution<float> uc(0.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 400);
    const double t = uc(rng);
    std::string body;
    std::vector<std::array<float, 3>> xyz(n);
    std::vector<float> conf(n);
    for (int i = 0; i < n; ++i) {
      xyz[i] = {u(rng), u(rng), u(rng)};
      conf[i] = uc(rng);
      char buf[12];
      std::memcpy(buf, xyz[i].data(), 12);
      body.append(buf, 12);
      const unsigned char rgb[3] = {static_cast<unsigned char>(rng() % 256), 0, 255};
      body.append(reinterpret_cast<const char*>(rgb), 3);
      char cbuf[4];
      std::memcpy(cbuf, &conf[i], 4);
      body.append(cbuf, 4);
    }
    const std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(n) +
                               "\nproperty float x\nproperty float y\nproperty float z\n"
                               "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                               "property float confidence\nend_header\n";
    write_text(dir / "f.ply", header + body);

    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
      if (static_cast<double>(conf[i]) >= t) keep.push_back(i);
    if (keep.empty()) {
      EXPECT_THROW(load_cloud(dir / "f.ply", t), EmptyCloudError);
      continue;
    }
    const PointCloud c = load_cloud(dir / "f.ply", t);
    ASSERT_EQ(c.size(), static_cast<Eigen::Index>(keep.size()));
    ASSERT_TRUE(c.colors.has_value());
    for (std::size_t k = 0; k < keep.size(); ++k)
      for (int a = 0; a < 3; ++a) EXPECT_EQ(c.points(a, k), static_cast<double>(xyz[keep[k]][a]));
  }
}

TEST(CloudIo, PlyRoundTrip) {
  const auto dir = temp_dir("round");
  PointCloud c(random_points(50, 3));
  c.confidence = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  const std::pair<const char*, CloudFormat> cases[] = {
      {"a.ply", CloudFormat::PlyAscii}, {"b.ply", CloudFormat::PlyBinary}, {"c.xyz", CloudFormat::Xyz}};
  for (const auto& [name, fmt] : cases) {
    save_cloud(dir / name, c, fmt);
    const PointCloud back = load_cloud(dir / name);
    ASSERT_EQ(back.size(), 50);
    EXPECT_EQ(back.points, c.points);
  }
}

TEST(Normalize, TwoPoints) {
  Points3d p(3, 2);
  p << 0, 2, 0, 0, 0, 0;
  const NormalizedCloud n = normalize(PointCloud(p));
  EXPECT_DOUBLE_EQ(n.normalization.scale, 1.0);
  EXPECT_EQ(n.normalization.center, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(n.cloud.points.col(0), Eigen::Vector3d(-1, 0, 0));
  EXPECT_EQ(n.cloud.points.col(1), Eigen::Vector3d(1, 0, 0));
}

TEST(Normalize, CubeCornersFixed) {
  Points3d p(3, 8);
  for (int i = 0; i < 8; ++i) p.col(i) = Eigen::Vector3d(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1);
  const NormalizedCloud n = normalize(PointCloud(p));
  EXPECT_EQ(n.normalization.scale, 1.0);
  EXPECT_EQ(n.normalization.center, Eigen::Vector3d::Zero());
  EXPECT_EQ(n.cloud.points, p);
}

TEST(Normalize, RoundTripAndBounds) {
  const PointCloud c(random_points(500, 5, -7.0, 3.0));
  const NormalizedCloud n = normalize(c);
  EXPECT_LE(n.cloud.points.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  const PointCloud back = denormalize(n.cloud, n.normalization);
  EXPECT_LE((back.points - c.points).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, DegenerateCloudRejected) {
  Points3d p = Points3d::Ones(3, 4);
  EXPECT_THROW(normalize(PointCloud(p)), DomainError);
}

TEST(SpatialIndexTest, TrivialQueries) {
  Points3d one(3, 1);
  one << 1, 0, 0;
  const SpatialIndex idx(one);
  EXPECT_EQ(nearest_distance(idx, Eigen::Vector3d::Zero()), 1.0);
  EXPECT_EQ(nearest_distance(idx, Eigen::Vector3d(1, 0, 0)), 0.0);
  EXPECT_THROW(nearest_distance(idx, Eigen::Vector3d(std::nan(""), 0, 0)), DomainError);
}

TEST(SpatialIndexTest, MatchesLinearScan) {
  const Points3d pts = random_points(1000, 7);
  const Points3d q = random_points(100, 8, -1.5, 1.5);
  const SpatialIndex idx(pts);
  for (Eigen::Index i = 0; i < q.cols(); ++i)
    EXPECT_NEAR(nearest_distance(idx, q.col(i)), brute_nearest(pts, q.col(i)), 1e-12);
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(nearest_distance(idx, pts.col(i)), 0.0);
}

TEST(ChamferTest, Trivial) {
  const PointCloud a(random_points(40, 9));
  EXPECT_EQ(chamfer(a, a), 0.0);
  Points3d p0(3, 1), p1(3, 1);
  p0 << 0, 0, 0;
  p1 << 1, 0, 0;
  EXPECT_DOUBLE_EQ(chamfer(PointCloud(p0), PointCloud(p1)), 2.0);
  EXPECT_THROW(chamfer(PointCloud(), a), Error);
}

TEST(ChamferTest, MatchesDoubleLoop) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Points3d a = random_points(50, 100 + s);
    const Points3d b = random_points(50, 200 + s);
    double ab = 0.0, ba = 0.0;
    for (Eigen::Index i = 0; i < 50; ++i) ab += brute_nearest(b, a.col(i));
    for (Eigen::Index i = 0; i < 50; ++i) ba += brute_nearest(a, b.col(i));
    EXPECT_NEAR(chamfer(PointCloud(a), PointCloud(b)), ab / 50 + ba / 50, 1e-10);
  }
}

namespace {

// Anisotropic blob so the alignment has a unique optimum.
Points3d asymmetric_cloud(Eigen::Index n, std::uint64_t seed) {
  Points3d p = random_points(n, seed);
  p.row(0) *= 1.0;
  p.row(1) *= 0.6;
  p.row(2) *= 0.3;
  for (Eigen::Index i = 0; i < n; ++i) p(1, i) += 0.4 * p(0, i) * p(0, i);
  return p;
}

RigidTransformd make_transform(double angle_deg, const Eigen::Vector3d& axis, const Eigen::Vector3d& t) {
  RigidTransformd T;
  T.rotation = Eigen::AngleAxisd(angle_deg * M_PI / 180.0, axis.normalized()).toRotationMatrix();
  T.translation = t;
  return T;
}

}  // namespace

TEST(Icp, IdenticalCloudsGiveIdentity) {
  const PointCloud a(asymmetric_cloud(300, 1));
  const IcpResult r = icp_align(a, a);
  EXPECT_LE((r.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(r.transform.translation.norm(), 1e-12);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(Icp, RecoversFiveDegreesAboutZ) {
  const Points3d src = asymmetric_cloud(500, 2);
  const RigidTransformd T = make_transform(5.0, Eigen::Vector3d::UnitZ(), Eigen::Vector3d(0.1, 0, 0));
  const IcpResult r = icp_align(PointCloud(src), PointCloud(T.apply(src)));
  EXPECT_LE((r.transform.rotation - T.rotation).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((r.transform.translation - T.translation).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(r.transform.is_proper(1e-9));
}

TEST(Icp, PartialOverlapResidualNonIncreasing) {
  const Points3d all = asymmetric_cloud(800, 3);
  std::vector<Eigen::Index> a_idx, b_idx;
  for (Eigen::Index i = 0; i < all.cols(); ++i) {
    if (all(0, i) < 0.4) a_idx.push_back(i);
    if (all(0, i) > -0.4) b_idx.push_back(i);
  }
  const PointCloud a = select(PointCloud(all), a_idx);
  const RigidTransformd T = make_transform(8.0, Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0.05, -0.02, 0.03));
  const PointCloud b(T.apply(select(PointCloud(all), b_idx).points));
  const IcpResult r = icp_align(a, b);
  ASSERT_GE(r.residual_trace.size(), 2u);
  for (std::size_t i = 1; i < r.residual_trace.size(); ++i)
    EXPECT_LE(r.residual_trace[i], r.residual_trace[i - 1] + 1e-15);
}

TEST(Icp, DegenerateCovarianceRaises) {
  Points3d one = Points3d::Zero(3, 5);
  try {
    icp_align(PointCloud(one), PointCloud(one));
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_TRUE(e.last_valid().is_proper(1e-12));
  }
}
