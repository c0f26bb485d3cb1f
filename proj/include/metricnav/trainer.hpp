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
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "metricnav/errors.hpp"
#include "metricnav/kdtree.hpp"
#include "metricnav/point_cloud.hpp"
#include "metricnav/siren.hpp"

namespace metricnav {

/// Training hyperparameters. Defaults reproduce the reference setup:
/// 3 x 256 sine network, omega0 = 25, 2000 iterations at each of four
/// learning rates.
struct TrainConfig {
  double alpha_surf = 0.5;
  double alpha_eik = 0.1;
  double sigma_min = 0.0025;
  double sigma_max = 0.1;
  Eigen::Index cloud_subsample = 10000;
  Eigen::Index surface_batch = 5000;
  /// Optimization iterations (one batch each) per learning-rate stage.
  int epochs_per_lr = 2000;
  std::vector<double> learning_rates{3e-4, 1e-4, 5e-5, 1e-5};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int width = 256;
  int layers = 3;
  double omega0 = 25.0;
  /// Perturbed queries per surface point.
  int perturbations = 1;
  std::uint64_t seed = 0;

  void validate() const;
  int total_iterations() const { return epochs_per_lr * static_cast<int>(learning_rates.size()); }
};

/// Reads keys present in a JSON object; absent keys keep their current value.
void apply_config_json(TrainConfig& config, const std::string& json_text);
/// `key=value` override with the same key names as the JSON form.
void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value);
std::string config_to_json(const TrainConfig& config);

struct QueryBatch {
  Points3d surface;
  Points3d queries;
  Eigen::VectorXd sigmas;
  /// Nearest-neighbour distance from each query to the training cloud.
  Eigen::VectorXd distances;
};

/// Perturbs each surface point `config.perturbations` times with isotropic
/// Gaussian noise whose standard deviation is log-uniform in
/// [sigma_min, sigma_max], and attaches the exact cloud distance.
QueryBatch sample_queries(const SpatialIndex& cloud_index, const Points3d& surface_batch,
                          const TrainConfig& config, std::mt19937_64& rng);
QueryBatch sample_queries(const SpatialIndex& cloud_index, const Points3d& surface_batch,
                          const TrainConfig& config, std::uint64_t seed);

struct TrainLogEntry {
  int iteration = 0;
  double learning_rate = 0.0;
  LossBreakdown loss;
};

struct TrainResult {
  FieldModel model;
  std::vector<TrainLogEntry> log;
};

/// Raised on a non-finite loss; carries the last parameters that produced a
/// finite loss and the log up to that point.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainResult partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const TrainResult& partial() const { return partial_; }

 private:
  TrainResult partial_;
};

/// First/second-moment adaptive optimizer over SirenField parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(const FieldModel& shape, double beta1, double beta2, double epsilon);
  void step(FieldModel& model, const FieldModel& gradient, double learning_rate);
  long steps() const { return t_; }

 private:
  FieldModel m_, v_;
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
};

using TrainProgress = std::function<void(const TrainLogEntry&)>;

/// Fits a field to `cloud`. Clouds larger than `cloud_subsample` are
/// subsampled once without replacement; each iteration draws the surface
/// batch uniformly with replacement. Deterministic in `config.seed`.
TrainResult train(const PointCloud& cloud, const TrainConfig& config, const TrainProgress& progress = {});

/// CSV with header "iteration,lr,fit,surf,eik,total".
void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log);

}  // namespace metricnav
