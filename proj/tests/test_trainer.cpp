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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "metricnav/checkpoint.hpp"
#include "metricnav/errors.hpp"
#include "metricnav/scenes.hpp"
#include "metricnav/trainer.hpp"

namespace fs = std::filesystem;
using namespace metricnav;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("metricnav_trainer_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PointCloud unit_sphere_cloud(Eigen::Index n, std::uint64_t seed) {
  Scene s;
  s.primitives.push_back(Sphere{});
  return sample_surface(s, n, seed);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.width = 16;
  c.layers = 2;
  c.epochs_per_lr = 5;
  c.learning_rates = {1e-3, 1e-4};
  c.surface_batch = 200;
  c.cloud_subsample = 500;
  c.seed = 3;
  return c;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace

TEST(QuerySampling, LogSigmaMean) {
  const PointCloud cloud = unit_sphere_cloud(1000, 1);
  const SpatialIndex index(cloud);
  TrainConfig c;
  Points3d surface(3, 100000);
  for (Eigen::Index i = 0; i < surface.cols(); ++i) surface.col(i) = cloud.points.col(i % cloud.size());
  const QueryBatch b = sample_queries(index, surface, c, 17);
  ASSERT_EQ(b.sigmas.size(), 100000);
  const double mean = b.sigmas.array().log().mean();
  // (ln 0.0025 + ln 0.1) / 2 = -4.14702
  const double expected = 0.5 * (std::log(0.0025) + std::log(0.1));
  EXPECT_NEAR(mean, expected, 0.01 * std::abs(expected));
  EXPECT_GE(b.sigmas.minCoeff(), 0.0025 * (1 - 1e-12));
  EXPECT_LE(b.sigmas.maxCoeff(), 0.1 * (1 + 1e-12));
}

TEST(QuerySampling, DegenerateInterval) {
  const PointCloud cloud = unit_sphere_cloud(100, 2);
  const SpatialIndex index(cloud);
  TrainConfig c;
  c.sigma_min = c.sigma_max = 0.01;
  const QueryBatch b = sample_queries(index, cloud.points, c, 1);
  for (Eigen::Index i = 0; i < b.sigmas.size(); ++i) EXPECT_EQ(b.sigmas(i), 0.01);
}

TEST(QuerySampling, DistancesMatchLinearScan) {
  const PointCloud cloud = unit_sphere_cloud(300, 3);
  const SpatialIndex index(cloud);
  TrainConfig c;
  c.perturbations = 2;
  const QueryBatch b = sample_queries(index, cloud.points.leftCols(50), c, 4);
  ASSERT_EQ(b.queries.cols(), 100);
  for (Eigen::Index q = 0; q < b.queries.cols(); ++q) {
    double best = INFINITY;
    for (Eigen::Index i = 0; i < cloud.size(); ++i) best = std::min(best, (cloud.points.col(i) - b.queries.col(q)).norm());
    EXPECT_NEAR(b.distances(q), best, 1e-12);
  }
}

TEST(QuerySampling, SeedDeterminism) {
  const PointCloud cloud = unit_sphere_cloud(300, 3);
  const SpatialIndex index(cloud);
  const TrainConfig c;
  const QueryBatch a = sample_queries(index, cloud.points, c, 9);
  const QueryBatch b = sample_queries(index, cloud.points, c, 9);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.distances, b.distances);
}

TEST(TrainConfigTest, JsonAndOverrides) {
  TrainConfig c;
  apply_config_json(c, R"({"train": {"width": 64, "learning_rates": [0.01, 0.001]}})");
  EXPECT_EQ(c.width, 64);
  EXPECT_EQ(c.total_iterations(), 4000);
  apply_config_override(c, "epochs_per_lr", "10");
  apply_config_override(c, "learning_rates", "0.1,0.05,0.01");
  EXPECT_EQ(c.total_iterations(), 30);
  EXPECT_THROW(apply_config_override(c, "nonsense", "1"), UsageError);
  EXPECT_THROW(apply_config_override(c, "width", "wide"), UsageError);
  EXPECT_THROW(apply_config_json(c, "{"), ParseError);
  TrainConfig back;
  apply_config_json(back, config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  c.learning_rates = {1e-4, 1e-3};
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(Training, LogLengthAndDeterminism) {
  const PointCloud cloud = unit_sphere_cloud(2000, 5);
  const TrainConfig c = tiny_config();
  int calls = 0;
  const TrainResult a = train(cloud, c, [&](const TrainLogEntry&) { ++calls; });
  const TrainResult b = train(cloud, c);
  ASSERT_EQ(a.log.size(), 10u);
  EXPECT_EQ(calls, 10);
  EXPECT_EQ(a.log[5].learning_rate, 1e-4);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss.total, b.log[i].loss.total);
    EXPECT_EQ(a.log[i].iteration, static_cast<int>(i));
  }
  EXPECT_EQ(a.model.flatten(), b.model.flatten());
  EXPECT_THROW(train(PointCloud(), c), EmptyCloudError);
}

TEST(Training, LossDecreasesOnSphere) {
  const PointCloud cloud = unit_sphere_cloud(2000, 6);
  TrainConfig c = tiny_config();
  c.width = 32;
  c.epochs_per_lr = 150;
  c.learning_rates = {1e-3};
  const TrainResult r = train(cloud, c);
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += r.log[i].loss.total;
    last += r.log[r.log.size() - 1 - i].loss.total;
  }
  EXPECT_LT(last, 0.5 * first);
}

TEST(Training, NonFiniteLossAborts) {
  const PointCloud cloud = unit_sphere_cloud(500, 7);
  TrainConfig c = tiny_config();
  c.learning_rates = {1e300};
  try {
    train(cloud, c);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_TRUE(e.partial().model.all_finite());
    EXPECT_LT(e.partial().log.size(), 10u);
    for (const auto& entry : e.partial().log) EXPECT_TRUE(std::isfinite(entry.loss.total));
  }
}

TEST(Training, LogCsvRows) {
  const auto dir = temp_dir("log");
  const TrainResult r = train(unit_sphere_cloud(500, 8), tiny_config());
  write_training_log(dir / "log.csv", r.log);
  std::ifstream in(dir / "log.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "iteration,lr,fit,surf,eik,total");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 10);
}

TEST(CheckpointTest, RoundTripBitExact) {
  const auto dir = temp_dir("ckpt");
  const FieldModel m = init_model<double>(24, 3, 25.0, 11);
  Normalization n;
  n.scale = 1.7;
  n.center = Eigen::Vector3d(0.1, -0.2, 0.3);
  save_checkpoint(dir / "m.ckpt", m, n);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.model.flatten(), m.flatten());
  EXPECT_EQ(back.model.omega0, m.omega0);
  EXPECT_EQ(back.normalization.scale, n.scale);
  EXPECT_EQ(back.normalization.center, n.center);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(u(rng), u(rng), u(rng));
    const auto a = evaluate(m, x), b = evaluate(back.model, x);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.gradient, b.gradient);
  }
  save_checkpoint(dir / "m2.ckpt", back.model, back.normalization);
  EXPECT_EQ(read_bytes(dir / "m.ckpt"), read_bytes(dir / "m2.ckpt"));
}

TEST(CheckpointTest, TruncatedCorruptAndVersioned) {
  const auto dir = temp_dir("bad");
  save_checkpoint(dir / "m.ckpt", init_model<double>(8, 2, 25.0, 1));
  const std::string bytes = read_bytes(dir / "m.ckpt");

  write_bytes(dir / "t.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(dir / "t.ckpt"), ChecksumError);

  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  write_bytes(dir / "c.ckpt", flipped);
  EXPECT_THROW(load_checkpoint(dir / "c.ckpt"), ChecksumError);

  std::string old = bytes;
  old[8] = 0;  // version field follows the 8-byte magic
  write_bytes(dir / "v.ckpt", old);
  try {
    load_checkpoint(dir / "v.ckpt");
    FAIL() << "expected VersionError";
  } catch (const VersionError& e) {
    EXPECT_NE(std::string(e.what()).find("version 0"), std::string::npos);
  }

  write_bytes(dir / "x.ckpt", "not a checkpoint at all, just text");
  EXPECT_THROW(load_checkpoint(dir / "x.ckpt"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}
