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

// metricnav command-line driver.
//
// Exit codes: 0 success, 1 other failure, 2 usage, 3 I/O, 4 parse or
// corrupt input, 5 numeric failure.

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "manifest.hpp"
#include "metricnav/checkpoint.hpp"
#include "metricnav/cloud_io.hpp"
#include "metricnav/errors.hpp"
#include "metricnav/eval.hpp"
#include "metricnav/policy.hpp"
#include "metricnav/scenes.hpp"
#include "metricnav/trainer.hpp"

namespace fs = std::filesystem;
using namespace metricnav;
using cli::RunManifest;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kParse = 4, kNumeric = 5 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("no such file: " + path.string());
}

// "x,y,z" with three finite numbers.
Eigen::Vector3d parse_vec3(const std::string& text, const std::string& what) {
  Eigen::Vector3d v;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 3; ++i) {
    while (p < end && *p == ' ') ++p;
    double x = 0.0;
    auto [next, ec] = std::from_chars(p, end, x);
    if (ec != std::errc() || !std::isfinite(x)) throw UsageError(what + " must be three numbers 'x,y,z'");
    v(i) = x;
    p = next;
    while (p < end && *p == ' ') ++p;
    if (i < 2) {
      if (p == end || *p != ',') throw UsageError(what + " must be three numbers 'x,y,z'");
      ++p;
    }
  }
  if (p != end) throw UsageError(what + " must be three numbers 'x,y,z'");
  return v;
}

std::pair<std::string, std::string> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + kv + "' must look like key=value");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

// ---------------------------------------------------------------- ingest

struct IngestOptions {
  std::string input, output;
  std::optional<double> threshold;
  bool keep_frame = false;
  bool binary = false;
};

int run_ingest(const IngestOptions& o, const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  require_file(o.input);
  const PointCloud all = load_cloud(o.input);
  PointCloud kept = o.threshold ? filter_by_confidence(all, *o.threshold) : all;
  if (kept.empty()) throw EmptyCloudError("no points survive the confidence threshold");

  CloudMetadata meta;
  meta.input_count = static_cast<std::size_t>(all.size());
  meta.retained_count = static_cast<std::size_t>(kept.size());
  meta.confidence_threshold = o.threshold;
  if (!o.keep_frame) {
    NormalizedCloud n = normalize(kept);
    kept = std::move(n.cloud);
    meta.normalization = n.normalization;
  }
  save_cloud(o.output, kept, format_from_path(o.output, o.binary));
  const fs::path sidecar = sidecar_path(o.output);
  save_metadata(sidecar, meta);

  std::cout << "read " << meta.input_count << " points, kept " << meta.retained_count << '\n';
  std::cout << std::setprecision(17) << "scale " << meta.normalization.scale << " center "
            << meta.normalization.center.transpose() << '\n';

  RunManifest m;
  m.command = "ingest";
  m.arguments = args;
  m.inputs = {o.input};
  m.outputs = {o.output, sidecar};
  m.timings["total"] = seconds_since(t0);
  cli::write_manifest(with_suffix(o.output, ".manifest.json"), m);
  return kOk;
}

// ----------------------------------------------------------------- scene

struct SceneOptions {
  std::string scene, output, mode = "full-view";
  Eigen::Index count = 10000;
  std::uint64_t seed = 0;
  double edge_threshold = 0.05;
  double density = 0.3;
  bool binary = false;
};

int run_scene(const SceneOptions& o, const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  require_file(o.scene);
  const SceneFile scene = load_scene(o.scene);
  ExperimentConfig config;
  config.cloud_count = o.count;
  config.seed = o.seed;
  config.edge_threshold = o.edge_threshold;
  config.tail_density = o.density;
  if (o.count < 1) throw UsageError("--count must be at least 1");
  Eigen::Index tails = 0;
  const PointCloud cloud = variant_cloud(scene, variant_from_string(o.mode), config, &tails);
  save_cloud(o.output, cloud, format_from_path(o.output, o.binary));
  std::cout << "wrote " << cloud.size() << " points (" << tails << " tail points) to " << o.output << '\n';

  RunManifest m;
  m.command = "scene";
  m.arguments = args;
  m.seeds["seed"] = o.seed;
  m.inputs = {o.scene};
  m.outputs = {o.output};
  m.timings["total"] = seconds_since(t0);
  cli::write_manifest(with_suffix(o.output, ".manifest.json"), m);
  return kOk;
}

// ----------------------------------------------------------------- train

struct TrainOptions {
  std::string cloud, config, output, log;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int report_every = 100;
  bool quiet = false;
};

int run_train(const TrainOptions& o, const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  TrainConfig config;
  RunManifest m;
  m.command = "train";
  m.arguments = args;
  if (!o.config.empty()) {
    require_file(o.config);
    const std::string text = read_text(o.config);
    apply_config_json(config, text);
    m.config_path = o.config;
    m.config_hash = cli::sha256_text(text);
    m.inputs.push_back(o.config);
  }
  for (const auto& kv : o.overrides) {
    const auto [key, value] = split_override(kv);
    apply_config_override(config, key, value);
  }
  if (o.seed) config.seed = *o.seed;
  config.validate();

  require_file(o.cloud);
  const PointCloud raw = load_cloud(o.cloud);
  m.inputs.push_back(o.cloud);
  // Train in the normalized frame; if the cloud came from `ingest`, chain
  // its recorded normalization so the checkpoint maps original coordinates.
  NormalizedCloud nc = normalize(raw);
  Normalization frame = nc.normalization;
  const fs::path sidecar = sidecar_path(o.cloud);
  if (fs::exists(sidecar)) {
    const Normalization first = load_metadata(sidecar).normalization;
    frame.center = first.center + first.scale * nc.normalization.center;
    frame.scale = first.scale * nc.normalization.scale;
    m.inputs.push_back(sidecar);
  }

  const fs::path log_path = o.log.empty() ? with_suffix(o.output, ".log.csv") : fs::path(o.log);
  const int total = config.total_iterations();
  auto progress = [&](const TrainLogEntry& e) {
    if (o.quiet || o.report_every <= 0) return;
    if (e.iteration % o.report_every == 0 || e.iteration + 1 == total)
      std::cerr << "iter " << e.iteration << "/" << total << " lr " << e.learning_rate << " loss "
                << e.loss.total << " (fit " << e.loss.fit << " surf " << e.loss.surf << " eik " << e.loss.eik
                << ")\n";
  };

  m.seeds["train"] = config.seed;
  m.effective_config = config_to_json(config);
  TrainResult result;
  try {
    result = train(nc.cloud, config, progress);
  } catch (const TrainingAborted& e) {
    const fs::path partial = with_suffix(o.output, ".partial");
    save_checkpoint(partial, e.partial().model, frame);
    write_training_log(log_path, e.partial().log);
    json marker{{"status", "aborted"},
                {"reason", e.what()},
                {"iterations_completed", e.partial().log.size()},
                {"checkpoint", partial.string()}};
    write_text(with_suffix(o.output, ".partial.json"), marker.dump(2) + "\n");
    m.outputs = {partial, log_path, with_suffix(o.output, ".partial.json")};
    m.timings["total"] = seconds_since(t0);
    cli::write_manifest(with_suffix(o.output, ".manifest.json"), m);
    throw;
  }
  save_checkpoint(o.output, result.model, frame);
  write_training_log(log_path, result.log);
  if (!result.log.empty())
    std::cout << "trained " << result.log.size() << " iterations, final loss " << std::setprecision(9)
              << result.log.back().loss.total << '\n';
  m.outputs = {o.output, log_path};
  m.timings["train"] = seconds_since(t0);
  cli::write_manifest(with_suffix(o.output, ".manifest.json"), m);
  return kOk;
}

// ----------------------------------------------------------------- trace

struct TraceOptions {
  std::string checkpoint, start, goal, config, output, summary, scene;
  std::vector<std::string> overrides;
};

int run_trace(const TraceOptions& o, const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  const Eigen::Vector3d start = parse_vec3(o.start, "--start");
  const Eigen::Vector3d goal = parse_vec3(o.goal, "--goal");
  PolicyConfig policy;
  RunManifest m;
  m.command = "trace";
  m.arguments = args;
  if (!o.config.empty()) {
    require_file(o.config);
    const std::string text = read_text(o.config);
    apply_policy_json(policy, text);
    m.config_path = o.config;
    m.config_hash = cli::sha256_text(text);
    m.inputs.push_back(o.config);
  }
  for (const auto& kv : o.overrides) {
    const auto [key, value] = split_override(kv);
    apply_policy_override(policy, key, value);
  }
  policy.goal = goal;

  require_file(o.checkpoint);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  m.inputs.push_back(o.checkpoint);
  std::optional<Scene> scene;
  if (!o.scene.empty()) {
    require_file(o.scene);
    scene = normalize_scene(load_scene(o.scene).scene, ckpt.normalization);
    m.inputs.push_back(o.scene);
  }

  const Trajectory traj = integrate(LearnedField{&ckpt.model}, start, policy);

  std::ostringstream csv;
  csv << std::setprecision(17) << "t,x,y,z,vx,vy,vz,f_theta,f_blow" << (scene ? ",clearance" : "") << '\n';
  double min_clearance = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.samples) {
    csv << s.time << ',' << s.position.x() << ',' << s.position.y() << ',' << s.position.z() << ','
        << s.velocity.x() << ',' << s.velocity.y() << ',' << s.velocity.z() << ',' << s.f_value << ',' << s.f_blow;
    if (scene) {
      const double c = clearance(*scene, s.position);
      min_clearance = std::min(min_clearance, c);
      csv << ',' << c;
    }
    csv << '\n';
  }
  write_text(o.output, csv.str());

  json summary{{"status", to_string(traj.status)},
               {"steps", traj.steps()},
               {"rows", traj.samples.size()},
               {"degenerate_steps", traj.degenerate_steps},
               {"final_position", {traj.samples.back().position.x(), traj.samples.back().position.y(),
                                   traj.samples.back().position.z()}},
               {"policy", json::parse(policy_to_json(policy))}};
  if (scene) summary["min_clearance"] = min_clearance;
  const fs::path summary_path = o.summary.empty() ? with_suffix(o.output, ".summary.json") : fs::path(o.summary);
  write_text(summary_path, summary.dump(2) + "\n");
  std::cout << "status " << to_string(traj.status) << ", " << traj.steps() << " steps";
  if (scene) std::cout << ", min clearance " << min_clearance;
  std::cout << '\n';

  m.effective_config = policy_to_json(policy);
  m.outputs = {o.output, summary_path};
  m.timings["total"] = seconds_since(t0);
  cli::write_manifest(with_suffix(o.output, ".manifest.json"), m);
  return kOk;
}

// ------------------------------------------------------------------ eval

struct EvalOptions {
  std::string scene, config, output;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string variants;
  bool quiet = false;
};

int run_eval(const EvalOptions& o, const std::vector<std::string>& args) {
  const auto t0 = Clock::now();
  ExperimentConfig config;
  RunManifest m;
  m.command = "eval";
  m.arguments = args;
  if (!o.config.empty()) {
    require_file(o.config);
    const std::string text = read_text(o.config);
    apply_experiment_json(config, text);
    m.config_path = o.config;
    m.config_hash = cli::sha256_text(text);
    m.inputs.push_back(o.config);
  }
  for (const auto& kv : o.overrides) {
    const auto [key, value] = split_override(kv);
    apply_experiment_override(config, key, value);
  }
  if (!o.variants.empty()) apply_experiment_override(config, "variants", o.variants);
  if (o.seed) config.seed = *o.seed;
  config.validate();

  require_file(o.scene);
  const SceneFile scene = load_scene(o.scene);
  m.inputs.push_back(o.scene);

  const int total = config.train.total_iterations();
  auto progress = [&](const TrainLogEntry& e) {
    if (!o.quiet && (e.iteration % 500 == 0 || e.iteration + 1 == total))
      std::cerr << "  train iter " << e.iteration << "/" << total << " loss " << e.loss.total << '\n';
  };
  const ExperimentOutput out = run_experiment(scene, config, progress);
  const fs::path dir = o.output;
  m.outputs = write_experiment(dir, out);

  bool failed = false;
  std::cout << std::setprecision(6);
  for (const auto& v : out.report.variants) {
    if (!v.ok) {
      failed = true;
      std::cout << to_string(v.variant) << ": FAILED (" << v.error << ")\n";
      continue;
    }
    int reached = 0;
    for (const auto& t : v.trajectories) reached += t.reached_goal;
    std::cout << to_string(v.variant) << ": chamfer " << v.chamfer << ", mean DFD " << v.mean_dfd << ", reached "
              << reached << "/" << v.trajectories.size() << '\n';
  }
  m.effective_config = experiment_to_json(config);
  m.seeds["experiment"] = config.seed;
  m.timings = out.timings;
  m.timings["total"] = seconds_since(t0);
  cli::write_manifest(dir / "manifest.json", m);
  return failed ? kNumeric : kOk;
}

// ----------------------------------------------------------------- bench

struct BenchOptions {
  std::string checkpoint, output;
  int width = 256, layers = 3, iterations = 2000, warmup = 100;
  double omega0 = 25.0;
  std::uint64_t seed = 0;
};

int run_bench(const BenchOptions& o) {
  if (o.iterations < 1 || o.warmup < 0) throw UsageError("--iterations must be positive");
  const FieldModel model =
      o.checkpoint.empty() ? init_model<double>(o.width, o.layers, o.omega0, o.seed) : load_checkpoint(o.checkpoint).model;
  PolicyConfig policy;
  policy.goal = Eigen::Vector3d(1.2, 0.0, 0.0);
  const LearnedField field{&model};
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Eigen::Vector3d> points(static_cast<std::size_t>(o.iterations + o.warmup));
  for (auto& p : points) p = Eigen::Vector3d(u(rng), u(rng), u(rng));

  std::vector<double> ms;
  double sink = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto t0 = Clock::now();
    const PolicyStep step = modulated_velocity(field, points[i], policy);
    const double dt = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    sink += step.velocity.sum();
    if (i >= static_cast<std::size_t>(o.warmup)) ms.push_back(dt);
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const auto pct = [&](double q) { return sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))]; };
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mean = 0.0;
  for (double x : ms) mean += x;
  mean /= static_cast<double>(n);

  std::cout << std::setprecision(4) << "model " << model.depth() << "x" << model.width() << " ("
            << model.parameter_count() << " parameters), " << n << " velocity evaluations\n"
            << "median_ms " << median << "\nmean_ms " << mean << "\np95_ms " << pct(0.95) << "\nbudget_1ms "
            << (median < 1.0 ? "met" : "missed") << '\n';
  if (!std::isfinite(sink)) std::cerr << "warning: non-finite velocity encountered\n";
  if (!o.output.empty()) {
    json j{{"layers", model.depth()},  {"width", model.width()}, {"evaluations", n},
           {"median_ms", median},      {"mean_ms", mean},        {"p95_ms", pct(0.95)},
           {"budget_met", median < 1.0}};
    write_text(o.output, j.dump(2) + "\n");
  }
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kUsage;
  if (dynamic_cast<const IoError*>(&e)) return kIo;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ChecksumError*>(&e) ||
      dynamic_cast<const VersionError*>(&e))
    return kParse;
  if (dynamic_cast<const NumericError*>(&e)) return kNumeric;
  return kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit distance fields from point clouds and metric-modulated motion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "metricnav 0.1.0");

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Filter and normalize a point cloud");
  c_ingest->add_option("input", ingest.input, "XYZ or PLY cloud")->required();
  c_ingest->add_option("-o,--output", ingest.output, "Output cloud (.xyz or .ply)")->required();
  c_ingest->add_option("--confidence", ingest.threshold, "Keep points with confidence >= this");
  c_ingest->add_flag("--keep-frame", ingest.keep_frame, "Skip normalization to [-1,1]");
  c_ingest->add_flag("--binary", ingest.binary, "Write binary PLY");

  SceneOptions scene;
  auto* c_scene = app.add_subcommand("scene", "Sample a synthetic cloud from a scene file");
  c_scene->add_option("scene", scene.scene, "Scene JSON")->required();
  c_scene->add_option("-o,--output", scene.output, "Output cloud")->required();
  c_scene->add_option("--mode", scene.mode, "full-view, single-view or single-view+tails");
  c_scene->add_option("--count", scene.count, "Number of surface points");
  c_scene->add_option("--seed", scene.seed, "Random seed");
  c_scene->add_option("--edge-threshold", scene.edge_threshold, "Depth jump that marks a silhouette");
  c_scene->add_option("--density", scene.density, "Tail point keep probability");
  c_scene->add_flag("--binary", scene.binary, "Write binary PLY");

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Fit a distance field to a cloud");
  c_train->add_option("cloud", tr.cloud, "Training cloud")->required();
  c_train->add_option("-o,--output", tr.output, "Checkpoint path")->required();
  c_train->add_option("-c,--config", tr.config, "Training config JSON");
  c_train->add_option("--set", tr.overrides, "Override a config key (key=value), repeatable");
  c_train->add_option("--seed", tr.seed, "Random seed (overrides config)");
  c_train->add_option("--log", tr.log, "Training log CSV (default <output>.log.csv)");
  c_train->add_option("--report-every", tr.report_every, "Progress interval in iterations");
  c_train->add_flag("-q,--quiet", tr.quiet, "No progress output");

  TraceOptions trace;
  auto* c_trace = app.add_subcommand("trace", "Integrate a trajectory through a trained field");
  c_trace->add_option("checkpoint", trace.checkpoint, "Checkpoint path")->required();
  c_trace->add_option("--start", trace.start, "Start point x,y,z (normalized frame)")->required();
  c_trace->add_option("--goal", trace.goal, "Goal point x,y,z (normalized frame)")->required();
  c_trace->add_option("-o,--output", trace.output, "Trajectory CSV")->required();
  c_trace->add_option("-c,--config", trace.config, "Policy config JSON");
  c_trace->add_option("--set", trace.overrides, "Override a policy key (key=value), repeatable");
  c_trace->add_option("--summary", trace.summary, "Summary JSON (default <output>.summary.json)");
  c_trace->add_option("--scene", trace.scene, "Scene file for the clearance column");

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Run the reconstruction and navigation experiment");
  c_eval->add_option("scene", ev.scene, "Scene JSON")->required();
  c_eval->add_option("-o,--output", ev.output, "Output directory")->required();
  c_eval->add_option("-c,--config", ev.config, "Config bundle JSON");
  c_eval->add_option("--set", ev.overrides, "Override (train.key, policy.key or experiment key)=value");
  c_eval->add_option("--seed", ev.seed, "Experiment seed");
  c_eval->add_option("--variants", ev.variants, "Comma-separated variant list");
  c_eval->add_flag("-q,--quiet", ev.quiet, "No progress output");

  BenchOptions bench;
  auto* c_bench = app.add_subcommand("bench", "Time per-step modulated velocity evaluation");
  c_bench->add_option("--checkpoint", bench.checkpoint, "Benchmark a trained model instead");
  c_bench->add_option("--width", bench.width, "Hidden width of the random model");
  c_bench->add_option("--layers", bench.layers, "Hidden layers of the random model");
  c_bench->add_option("--omega0", bench.omega0, "Frequency scale");
  c_bench->add_option("--iterations", bench.iterations, "Timed evaluations");
  c_bench->add_option("--warmup", bench.warmup, "Untimed evaluations first");
  c_bench->add_option("--seed", bench.seed, "Model and query seed");
  c_bench->add_option("--output", bench.output, "Write results as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (*c_ingest) return run_ingest(ingest, args);
    if (*c_scene) return run_scene(scene, args);
    if (*c_train) return run_train(tr, args);
    if (*c_trace) return run_trace(trace, args);
    if (*c_eval) return run_eval(ev, args);
    if (*c_bench) return run_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kFailure;
}
