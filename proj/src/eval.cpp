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

#include "metricnav/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "metricnav/chamfer.hpp"
#include "metricnav/errors.hpp"

namespace metricnav {

double discrete_frechet(const Points3d& a, const Points3d& b) {
  const Eigen::Index n = a.cols(), m = b.cols();
  if (n == 0 || m == 0) throw EmptyCloudError("discrete Frechet distance needs nonempty paths");
  // Two rolling rows of the coupling table.
  std::vector<double> prev(static_cast<std::size_t>(m)), cur(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double d = (a.col(i) - b.col(j)).norm();
      double reach;
      if (i == 0 && j == 0)
        reach = d;
      else if (i == 0)
        reach = cur[j - 1];
      else if (j == 0)
        reach = prev[0];
      else
        reach = std::min({prev[j], prev[j - 1], cur[j - 1]});
      cur[j] = std::max(d, reach);
    }
    std::swap(prev, cur);
  }
  return prev[static_cast<std::size_t>(m - 1)];
}

double normalized_dfd(const Trajectory& trajectory, const Trajectory& reference) {
  if (trajectory.samples.empty() || reference.samples.empty())
    throw EmptyCloudError("normalized DFD needs nonempty trajectories");
  const Eigen::Vector3d& start = reference.samples.front().position;
  const double radius = std::max(trajectory.goal_radius, reference.goal_radius);
  if ((trajectory.samples.front().position - start).norm() > radius ||
      (trajectory.goal - reference.goal).norm() > radius)
    throw DomainError("trajectories must share start and goal");
  const double span = (start - reference.goal).norm();
  if (!(span > 0.0)) throw DomainError("start and goal coincide; normalized DFD is undefined");
  return discrete_frechet(trajectory.positions(), reference.positions()) / span;
}

CollisionAudit collision_audit(const Trajectory& trajectory, const Scene& scene) {
  CollisionAudit audit;
  audit.min_clearance = std::numeric_limits<double>::infinity();
  for (const auto& s : trajectory.samples) {
    const double c = clearance(scene, s.position);
    audit.clearances.push_back(c);
    audit.min_clearance = std::min(audit.min_clearance, c);
    if (c < kContactTolerance) ++audit.violations;
  }
  return audit;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::FullView: return "full-view";
    case Variant::SingleView: return "single-view";
    case Variant::SingleViewTails: return "single-view+tails";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::FullView, Variant::SingleView, Variant::SingleViewTails})
    if (to_string(v) == name) return v;
  throw UsageError("unknown variant '" + name + "' (expected full-view, single-view or single-view+tails)");
}

void ExperimentConfig::validate() const {
  train.validate();
  policy.validate();
  if (ground_truth_count < 1 || cloud_count < 1) throw DomainError("cloud counts must be at least 1");
  if (!(edge_threshold > 0.0) || !(tail_density >= 0.0 && tail_density <= 1.0))
    throw DomainError("tail parameters out of range");
  if (variants.empty()) throw DomainError("no variants selected");
}

namespace {

using nlohmann::json;

void experiment_from_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "ground_truth_count") c.ground_truth_count = v.get<Eigen::Index>();
    else if (key == "cloud_count") c.cloud_count = v.get<Eigen::Index>();
    else if (key == "edge_threshold") c.edge_threshold = v.get<double>();
    else if (key == "tail_density") c.tail_density = v.get<double>();
    else if (key == "icp_max_iters") c.icp.max_iters = v.get<int>();
    else if (key == "icp_tol") c.icp.tol = v.get<double>();
    else if (key == "icp_estimate_scale") c.icp.estimate_scale = v.get<bool>();
    else if (key == "variants") {
      c.variants.clear();
      for (const auto& name : v) c.variants.push_back(variant_from_string(name.get<std::string>()));
    } else {
      throw ParseError("unknown experiment key '" + key + "'");
    }
  }
}

}  // namespace

void apply_experiment_json(ExperimentConfig& config, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid experiment config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
  try {
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("experiment")) experiment_from_json(config, j.at("experiment"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid experiment config: ") + e.what());
  }
  if (j.contains("train")) apply_config_json(config.train, j.at("train").dump());
  if (j.contains("policy")) apply_policy_json(config.policy, j.at("policy").dump());
}

void apply_experiment_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key.rfind("train.", 0) == 0) return apply_config_override(config.train, key.substr(6), value);
  if (key.rfind("policy.", 0) == 0) return apply_policy_override(config.policy, key.substr(7), value);
  try {
    if (key == "seed") {
      config.seed = json::parse(value).get<std::uint64_t>();
      return;
    }
    json j;
    if (key == "variants") {
      j[key] = json::array();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) j[key].push_back(item);
    } else {
      j[key] = json::parse(value);
    }
    experiment_from_json(config, j);
  } catch (const json::exception&) {
    throw UsageError("invalid value '" + value + "' for experiment key '" + key + "'");
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

std::string experiment_to_json(const ExperimentConfig& c) {
  json variants = json::array();
  for (Variant v : c.variants) variants.push_back(to_string(v));
  json j{{"seed", c.seed},
         {"train", json::parse(config_to_json(c.train))},
         {"policy", json::parse(policy_to_json(c.policy))},
         {"experiment",
          {{"ground_truth_count", c.ground_truth_count},
           {"cloud_count", c.cloud_count},
           {"edge_threshold", c.edge_threshold},
           {"tail_density", c.tail_density},
           {"variants", variants},
           {"icp_max_iters", c.icp.max_iters},
           {"icp_tol", c.icp.tol},
           {"icp_estimate_scale", c.icp.estimate_scale}}}};
  return j.dump(2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined words.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kGroundTruth = 1, kStarts = 2, kFullView = 10, kRender = 11, kTails = 12, kTrain = 20 };

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrajectoryMetrics metrics_for(int start, const Trajectory& t, const Trajectory& reference, const Scene& scene) {
  TrajectoryMetrics m;
  m.start = start;
  m.status = to_string(t.status);
  m.steps = t.steps();
  m.reached_goal = t.status == TerminalStatus::ReachedGoal;
  m.normalized_dfd = normalized_dfd(t, reference);
  const CollisionAudit audit = collision_audit(t, scene);
  m.min_clearance = audit.min_clearance;
  m.violations = audit.violations;
  m.degenerate_steps = t.degenerate_steps;
  return m;
}

}  // namespace

PointCloud variant_cloud(const SceneFile& scene, Variant variant, const ExperimentConfig& config,
                         Eigen::Index* tail_count) {
  if (tail_count) *tail_count = 0;
  if (variant == Variant::FullView)
    return sample_surface(scene.scene, config.cloud_count, derive_seed(config.seed, kFullView));
  if (!scene.camera) throw UsageError("single-view variants need a camera in the scene file");
  // Both single-view variants share one render so they differ only by tails.
  const RenderedView view =
      render_visible_cloud(scene.scene, *scene.camera, config.cloud_count, derive_seed(config.seed, kRender));
  if (view.cloud.empty()) throw EmptyCloudError("camera sees no surface");
  if (variant == Variant::SingleView) return view.cloud;
  TailedCloud tailed =
      inject_frustum_tails(view, config.edge_threshold, config.tail_density, derive_seed(config.seed, kTails));
  if (tail_count) *tail_count = static_cast<Eigen::Index>(tailed.tails.size());
  return std::move(tailed.cloud);
}

ExperimentOutput run_experiment(const SceneFile& scene, const ExperimentConfig& config,
                                const TrainProgress& progress) {
  config.validate();
  scene.scene.validate();
  ExperimentOutput out;
  MetricReport& report = out.report;
  report.scene_id = scene.scene.id;
  report.seed = config.seed;

  auto t0 = std::chrono::steady_clock::now();
  const PointCloud truth_raw =
      sample_surface(scene.scene, config.ground_truth_count, derive_seed(config.seed, kGroundTruth));
  report.normalization = fit_normalization(truth_raw);
  const PointCloud truth = apply_normalization(truth_raw, report.normalization);
  const Scene frame_scene = normalize_scene(scene.scene, report.normalization);
  out.timings["ground_truth_sample"] = seconds_since(t0);

  const NavigationSetup nav = scene.navigation.value_or(NavigationSetup{});
  PolicyConfig policy = config.policy;
  policy.goal = nav.goal;
  report.goal = nav.goal;
  report.starts = shell_starts(nav, Eigen::Vector3d::Zero(), derive_seed(config.seed, kStarts));

  t0 = std::chrono::steady_clock::now();
  const OracleField oracle{&frame_scene};
  for (const auto& s : report.starts) out.ground_truth.push_back(integrate(oracle, s, policy));
  for (std::size_t i = 0; i < out.ground_truth.size(); ++i)
    report.ground_truth.push_back(
        metrics_for(static_cast<int>(i), out.ground_truth[i], out.ground_truth[i], frame_scene));
  out.timings["ground_truth_trajectories"] = seconds_since(t0);

  for (Variant variant : config.variants) {
    const std::string name = to_string(variant);
    VariantReport vr;
    vr.variant = variant;
    try {
      t0 = std::chrono::steady_clock::now();
      const PointCloud raw = variant_cloud(scene, variant, config, &vr.tail_points);
      const PointCloud cloud = apply_normalization(raw, report.normalization);
      vr.cloud_points = cloud.size();
      const IcpResult icp = icp_align(cloud, truth, config.icp);
      vr.icp_residual = icp.residual;
      vr.icp_iterations = icp.iterations;
      PointCloud aligned = cloud;
      aligned.points = ((icp.scale * icp.transform.rotation * cloud.points).colwise() + icp.transform.translation);
      vr.chamfer = chamfer(aligned, truth);
      out.timings[name + "/cloud"] = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      TrainConfig tc = config.train;
      tc.seed = derive_seed(config.seed, kTrain + static_cast<std::uint64_t>(variant));
      const TrainResult trained = train(aligned, tc, progress);
      vr.final_loss = trained.log.empty() ? 0.0 : trained.log.back().loss.total;
      out.timings[name + "/train"] = seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      const LearnedField field{&trained.model};
      auto& trajectories = out.trajectories[variant];
      double dfd_sum = 0.0;
      for (std::size_t i = 0; i < report.starts.size(); ++i) {
        trajectories.push_back(integrate(field, report.starts[i], policy));
        vr.trajectories.push_back(
            metrics_for(static_cast<int>(i), trajectories.back(), out.ground_truth[i], frame_scene));
        dfd_sum += vr.trajectories.back().normalized_dfd;
      }
      vr.mean_dfd = report.starts.empty() ? 0.0 : dfd_sum / static_cast<double>(report.starts.size());
      out.timings[name + "/trajectories"] = seconds_since(t0);
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      vr.ok = false;
      vr.error = e.what();
    }
    report.variants.push_back(std::move(vr));
  }
  return out;
}

}  // namespace metricnav
