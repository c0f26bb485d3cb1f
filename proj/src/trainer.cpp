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

#include "metricnav/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

namespace metricnav {

void TrainConfig::validate() const {
  if (!(sigma_min > 0.0 && sigma_min <= sigma_max))
    throw DomainError("noise scales must satisfy 0 < sigma_min <= sigma_max");
  if (cloud_subsample < 1 || surface_batch < 1 || perturbations < 1)
    throw DomainError("batch sizes must be at least 1");
  if (epochs_per_lr < 0) throw DomainError("epochs_per_lr must be nonnegative");
  if (learning_rates.empty()) throw DomainError("at least one learning rate is required");
  for (std::size_t i = 0; i < learning_rates.size(); ++i) {
    if (!(learning_rates[i] > 0.0)) throw DomainError("learning rates must be positive");
    if (i > 0 && !(learning_rates[i] < learning_rates[i - 1]))
      throw DomainError("learning rates must be strictly decreasing");
  }
  if (!(alpha_surf >= 0.0 && alpha_eik >= 0.0)) throw DomainError("loss weights must be nonnegative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_epsilon > 0.0))
    throw DomainError("invalid optimizer moment parameters");
  if (width < 1 || layers < 1 || !(omega0 > 0.0)) throw DomainError("invalid network architecture");
}

namespace {

using nlohmann::json;

void from_json_object(TrainConfig& c, const json& j) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("alpha_surf", c.alpha_surf);
  take("alpha_eik", c.alpha_eik);
  take("sigma_min", c.sigma_min);
  take("sigma_max", c.sigma_max);
  take("cloud_subsample", c.cloud_subsample);
  take("surface_batch", c.surface_batch);
  take("epochs_per_lr", c.epochs_per_lr);
  take("learning_rates", c.learning_rates);
  take("adam_beta1", c.adam_beta1);
  take("adam_beta2", c.adam_beta2);
  take("adam_epsilon", c.adam_epsilon);
  take("width", c.width);
  take("layers", c.layers);
  take("omega0", c.omega0);
  take("perturbations", c.perturbations);
  take("seed", c.seed);
}

}  // namespace

void apply_config_json(TrainConfig& config, const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    // Accept either a bare object or one nested under "train".
    from_json_object(config, j.contains("train") ? j.at("train") : j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid training config: ") + e.what());
  }
}

void apply_config_override(TrainConfig& config, const std::string& key, const std::string& value) {
  json j;
  try {
    if (key == "learning_rates") {
      std::vector<double> rates;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) rates.push_back(std::stod(item));
      j[key] = rates;
    } else {
      j[key] = json::parse(value);
    }
  } catch (const std::exception&) {
    throw UsageError("invalid value '" + value + "' for config key '" + key + "'");
  }
  static const char* kKeys[] = {"alpha_surf", "alpha_eik", "sigma_min", "sigma_max", "cloud_subsample",
                                "surface_batch", "epochs_per_lr", "learning_rates", "adam_beta1",
                                "adam_beta2", "adam_epsilon", "width", "layers", "omega0",
                                "perturbations", "seed"};
  if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; }) == std::end(kKeys))
    throw UsageError("unknown config key '" + key + "'");
  try {
    from_json_object(config, j);
  } catch (const json::exception&) {
    throw UsageError("invalid value '" + value + "' for config key '" + key + "'");
  }
}

std::string config_to_json(const TrainConfig& c) {
  json j{{"alpha_surf", c.alpha_surf},     {"alpha_eik", c.alpha_eik},
         {"sigma_min", c.sigma_min},       {"sigma_max", c.sigma_max},
         {"cloud_subsample", c.cloud_subsample}, {"surface_batch", c.surface_batch},
         {"epochs_per_lr", c.epochs_per_lr}, {"learning_rates", c.learning_rates},
         {"adam_beta1", c.adam_beta1},     {"adam_beta2", c.adam_beta2},
         {"adam_epsilon", c.adam_epsilon}, {"width", c.width},
         {"layers", c.layers},             {"omega0", c.omega0},
         {"perturbations", c.perturbations}, {"seed", c.seed}};
  return j.dump(2);
}

QueryBatch sample_queries(const SpatialIndex& cloud_index, const Points3d& surface_batch,
                          const TrainConfig& config, std::mt19937_64& rng) {
  const Eigen::Index per = config.perturbations;
  const Eigen::Index n = surface_batch.cols() * per;
  std::uniform_real_distribution<double> log_sigma(std::log(config.sigma_min), std::log(config.sigma_max));
  std::normal_distribution<double> gauss(0.0, 1.0);
  QueryBatch batch;
  batch.surface = surface_batch;
  batch.queries.resize(3, n);
  batch.sigmas.resize(n);
  batch.distances.resize(n);
  for (Eigen::Index i = 0; i < surface_batch.cols(); ++i) {
    for (Eigen::Index j = 0; j < per; ++j) {
      const Eigen::Index q = i * per + j;
      // The degenerate interval [s, s] must give exactly s.
      const double sigma =
          config.sigma_min == config.sigma_max ? config.sigma_min : std::exp(log_sigma(rng));
      const Eigen::Vector3d noise(gauss(rng), gauss(rng), gauss(rng));
      batch.sigmas(q) = sigma;
      batch.queries.col(q) = surface_batch.col(i) + sigma * noise;
      batch.distances(q) = cloud_index.nearest(batch.queries.col(q)).distance;
    }
  }
  return batch;
}

QueryBatch sample_queries(const SpatialIndex& cloud_index, const Points3d& surface_batch,
                          const TrainConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_queries(cloud_index, surface_batch, config, rng);
}

AdamOptimizer::AdamOptimizer(const FieldModel& shape, double beta1, double beta2, double epsilon)
    : m_(shape.zeros_like()), v_(shape.zeros_like()), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamOptimizer::step(FieldModel& model, const FieldModel& gradient, double learning_rate) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m.array() = beta1_ * m.array() + (1.0 - beta1_) * g.array();
    v.array() = beta2_ * v.array() + (1.0 - beta2_) * g.array().square();
    param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon_);
  };
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    update(model.layers[l].weight, gradient.layers[l].weight, m_.layers[l].weight, v_.layers[l].weight);
    update(model.layers[l].bias, gradient.layers[l].bias, m_.layers[l].bias, v_.layers[l].bias);
  }
}

TrainResult train(const PointCloud& cloud, const TrainConfig& config, const TrainProgress& progress) {
  config.validate();
  if (cloud.empty()) throw EmptyCloudError("cannot train on an empty cloud");
  cloud.validate();

  std::mt19937_64 rng(config.seed);
  Points3d points = cloud.points;
  if (cloud.size() > config.cloud_subsample) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(cloud.size()));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(config.cloud_subsample));
    std::sample(all.begin(), all.end(), std::back_inserter(keep), config.cloud_subsample, rng);
    points = select(cloud, keep).points;
  }
  const SpatialIndex index(points);

  TrainResult result;
  result.model = init_model<double>(config.width, config.layers, config.omega0, rng());
  result.log.reserve(static_cast<std::size_t>(config.total_iterations()));
  AdamOptimizer adam(result.model, config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  const LossWeights weights{config.alpha_surf, config.alpha_eik};
  std::uniform_int_distribution<Eigen::Index> pick(0, points.cols() - 1);
  Points3d surface(3, config.surface_batch);

  // Parameters of the most recent iteration whose loss was finite.
  FieldModel last_finite = result.model;
  int iteration = 0;
  for (const double lr : config.learning_rates) {
    for (int e = 0; e < config.epochs_per_lr; ++e, ++iteration) {
      for (Eigen::Index i = 0; i < surface.cols(); ++i) surface.col(i) = points.col(pick(rng));
      const QueryBatch batch = sample_queries(index, surface, config, rng);
      auto lg = loss_and_param_grads(result.model, batch.surface, batch.queries, batch.distances, weights);
      const TrainLogEntry entry{iteration, lr, lg.loss};
      if (!std::isfinite(lg.loss.total) || !lg.gradient.all_finite()) {
        std::ostringstream msg;
        msg << "non-finite loss at iteration " << iteration << " (fit=" << lg.loss.fit << ", surf=" << lg.loss.surf
            << ", eik=" << lg.loss.eik << ")";
        result.model = std::move(last_finite);
        throw TrainingAborted(msg.str(), std::move(result));
      }
      last_finite = result.model;
      result.log.push_back(entry);
      if (progress) progress(entry);
      adam.step(result.model, lg.gradient, lr);
    }
  }
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<TrainLogEntry>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write training log '" + path.string() + "'");
  out << "iteration,lr,fit,surf,eik,total\n";
  char buf[32];
  auto num = [&](double v) {
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  };
  for (const auto& e : log)
    out << e.iteration << ',' << num(e.learning_rate) << ',' << num(e.loss.fit) << ',' << num(e.loss.surf) << ','
        << num(e.loss.eik) << ',' << num(e.loss.total) << '\n';
  if (!out) throw IoError("failed writing training log '" + path.string() + "'");
}

}  // namespace metricnav
