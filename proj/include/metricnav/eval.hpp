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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metricnav/icp.hpp"
#include "metricnav/point_cloud.hpp"
#include "metricnav/policy.hpp"
#include "metricnav/scenes.hpp"
#include "metricnav/trainer.hpp"

namespace metricnav {

/// Coupling distance between two polylines (columns are vertices):
/// min over monotone couplings of the largest paired distance.
double discrete_frechet(const Points3d& a, const Points3d& b);

/// discrete_frechet over positions divided by |reference start - goal|.
/// Both trajectories must start within the goal radius of each other and
/// target the same goal.
double normalized_dfd(const Trajectory& trajectory, const Trajectory& reference);

/// Contact tolerance below which a sample counts as a collision.
inline constexpr double kContactTolerance = 1e-6;

struct CollisionAudit {
  double min_clearance = 0.0;
  int violations = 0;
  std::vector<double> clearances;
};

CollisionAudit collision_audit(const Trajectory& trajectory, const Scene& scene);

enum class Variant { FullView, SingleView, SingleViewTails };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ExperimentConfig {
  TrainConfig train;
  PolicyConfig policy;
  IcpOptions icp;
  Eigen::Index ground_truth_count = 100000;
  Eigen::Index cloud_count = 30000;
  double edge_threshold = 0.05;
  double tail_density = 0.3;
  std::uint64_t seed = 0;
  std::vector<Variant> variants{Variant::FullView, Variant::SingleView, Variant::SingleViewTails};

  void validate() const;
};

/// Config bundle: {"seed", "train": {...}, "policy": {...},
/// "experiment": {ground_truth_count, cloud_count, edge_threshold,
/// tail_density, variants, icp_max_iters, icp_tol, icp_estimate_scale}}.
void apply_experiment_json(ExperimentConfig& config, const std::string& json_text);
/// Keys "train.<key>", "policy.<key>", "seed" or a bare experiment key.
void apply_experiment_override(ExperimentConfig& config, const std::string& key, const std::string& value);
std::string experiment_to_json(const ExperimentConfig& config);

/// Per-purpose seed derived from the experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Synthetic cloud for one variant in scene coordinates. `tail_count`
/// receives the number of injected tail points.
PointCloud variant_cloud(const SceneFile& scene, Variant variant, const ExperimentConfig& config,
                         Eigen::Index* tail_count = nullptr);

struct TrajectoryMetrics {
  int start = 0;
  std::string status;
  int steps = 0;
  bool reached_goal = false;
  double normalized_dfd = 0.0;
  double min_clearance = 0.0;
  int violations = 0;
  int degenerate_steps = 0;
};

struct VariantReport {
  Variant variant = Variant::FullView;
  bool ok = true;
  std::string error;
  Eigen::Index cloud_points = 0;
  Eigen::Index tail_points = 0;
  double icp_residual = 0.0;
  int icp_iterations = 0;
  double chamfer = 0.0;
  double final_loss = 0.0;
  double mean_dfd = 0.0;
  std::vector<TrajectoryMetrics> trajectories;
};

inline constexpr int kReportVersion = 1;

struct MetricReport {
  int version = kReportVersion;
  std::string scene_id;
  std::uint64_t seed = 0;
  Normalization normalization;
  Eigen::Vector3d goal = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> starts;
  /// Oracle-field runs; their DFD entries are against themselves.
  std::vector<TrajectoryMetrics> ground_truth;
  std::vector<VariantReport> variants;
};

struct ExperimentOutput {
  MetricReport report;
  std::vector<Trajectory> ground_truth;
  std::map<Variant, std::vector<Trajectory>> trajectories;
  /// Wall-clock seconds per stage; kept out of the report so reports stay
  /// reproducible.
  std::map<std::string, double> timings;
};

/// Scores each variant against a dense ground-truth sample: the cloud is
/// put in the ground-truth normalized frame, aligned by ICP, scored by
/// Chamfer, trained, and navigated from the shell starts. A variant that
/// fails is marked in the report and the rest still run.
ExperimentOutput run_experiment(const SceneFile& scene, const ExperimentConfig& config,
                                const TrainProgress& progress = {});

std::string report_to_json(const MetricReport& report);
/// Empty when the text is a well-formed report of the current version.
std::vector<std::string> check_report_schema(const std::string& json_text);

/// report.json, chamfer.csv, trajectories.csv, timings.json and one
/// polyline file per trajectory under polylines/. Returns written paths.
std::vector<std::filesystem::path> write_experiment(const std::filesystem::path& dir,
                                                    const ExperimentOutput& output);

}  // namespace metricnav
