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

#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "metricnav/errors.hpp"
#include "metricnav/eval.hpp"

namespace metricnav {
namespace {

using nlohmann::json;

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json metrics_json(const TrajectoryMetrics& m) {
  return {{"start", m.start},
          {"status", m.status},
          {"steps", m.steps},
          {"reached_goal", m.reached_goal},
          {"normalized_dfd", m.normalized_dfd},
          {"min_clearance", m.min_clearance},
          {"violations", m.violations},
          {"degenerate_steps", m.degenerate_steps}};
}

std::string file_stem(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (c == '+') c = '_';
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

void write_polyline(const std::filesystem::path& path, const Trajectory& t) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,y,z\n";
  for (const auto& s : t.samples) os << s.position.x() << ',' << s.position.y() << ',' << s.position.z() << '\n';
  write_text(path, os.str());
}

// Collects a problem when `key` is missing or has the wrong type.
bool expect(const json& j, const std::string& where, const std::string& key, json::value_t type,
            std::vector<std::string>& problems) {
  if (!j.contains(key)) {
    problems.push_back(where + ": missing '" + key + "'");
    return false;
  }
  const auto t = j.at(key).type();
  const bool numeric = type == json::value_t::number_float &&
                       (t == json::value_t::number_integer || t == json::value_t::number_unsigned);
  const bool integral = type == json::value_t::number_integer && t == json::value_t::number_unsigned;
  if (t != type && !numeric && !integral) {
    problems.push_back(where + ": '" + key + "' has the wrong type");
    return false;
  }
  return true;
}

void check_nonnegative(const json& j, const std::string& where, const std::string& key,
                       std::vector<std::string>& problems) {
  if (expect(j, where, key, json::value_t::number_float, problems) && !(j.at(key).get<double>() >= 0.0))
    problems.push_back(where + ": '" + key + "' must be nonnegative");
}

void check_trajectory(const json& j, const std::string& where, std::vector<std::string>& problems) {
  expect(j, where, "start", json::value_t::number_integer, problems);
  expect(j, where, "status", json::value_t::string, problems);
  expect(j, where, "steps", json::value_t::number_integer, problems);
  expect(j, where, "reached_goal", json::value_t::boolean, problems);
  check_nonnegative(j, where, "normalized_dfd", problems);
  check_nonnegative(j, where, "min_clearance", problems);
  expect(j, where, "violations", json::value_t::number_integer, problems);
}

}  // namespace

std::string report_to_json(const MetricReport& report) {
  json j;
  j["version"] = report.version;
  j["scene_id"] = report.scene_id;
  j["seed"] = report.seed;
  j["normalization"] = {{"scale", report.normalization.scale}, {"center", vec3(report.normalization.center)}};
  j["goal"] = vec3(report.goal);
  j["starts"] = json::array();
  for (const auto& s : report.starts) j["starts"].push_back(vec3(s));
  j["ground_truth"] = json::array();
  for (const auto& m : report.ground_truth) j["ground_truth"].push_back(metrics_json(m));
  j["variants"] = json::array();
  for (const auto& v : report.variants) {
    json jv = {{"variant", to_string(v.variant)},
               {"ok", v.ok},
               {"error", v.error},
               {"cloud_points", v.cloud_points},
               {"tail_points", v.tail_points},
               {"icp_residual", v.icp_residual},
               {"icp_iterations", v.icp_iterations},
               {"normalized_chamfer", v.chamfer},
               {"final_loss", v.final_loss},
               {"mean_normalized_dfd", v.mean_dfd},
               {"trajectories", json::array()}};
    for (const auto& m : v.trajectories) jv["trajectories"].push_back(metrics_json(m));
    j["variants"].push_back(std::move(jv));
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> check_report_schema(const std::string& json_text) {
  std::vector<std::string> problems;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    return {std::string("not JSON: ") + e.what()};
  }
  if (!j.is_object()) return {"report must be a JSON object"};
  if (expect(j, "report", "version", json::value_t::number_integer, problems) &&
      j.at("version").get<int>() != kReportVersion)
    problems.push_back("report: unsupported version " + j.at("version").dump());
  expect(j, "report", "scene_id", json::value_t::string, problems);
  expect(j, "report", "seed", json::value_t::number_unsigned, problems);
  if (expect(j, "report", "normalization", json::value_t::object, problems)) {
    const auto& n = j.at("normalization");
    if (expect(n, "normalization", "scale", json::value_t::number_float, problems) &&
        !(n.at("scale").get<double>() > 0.0))
      problems.push_back("normalization: 'scale' must be positive");
    expect(n, "normalization", "center", json::value_t::array, problems);
  }
  expect(j, "report", "goal", json::value_t::array, problems);
  expect(j, "report", "starts", json::value_t::array, problems);
  if (expect(j, "report", "ground_truth", json::value_t::array, problems))
    for (std::size_t i = 0; i < j.at("ground_truth").size(); ++i)
      check_trajectory(j.at("ground_truth")[i], "ground_truth[" + std::to_string(i) + "]", problems);
  if (expect(j, "report", "variants", json::value_t::array, problems)) {
    for (std::size_t i = 0; i < j.at("variants").size(); ++i) {
      const auto& v = j.at("variants")[i];
      const std::string where = "variants[" + std::to_string(i) + "]";
      if (expect(v, where, "variant", json::value_t::string, problems)) {
        try {
          variant_from_string(v.at("variant").get<std::string>());
        } catch (const UsageError&) {
          problems.push_back(where + ": unknown variant");
        }
      }
      expect(v, where, "ok", json::value_t::boolean, problems);
      expect(v, where, "error", json::value_t::string, problems);
      check_nonnegative(v, where, "cloud_points", problems);
      check_nonnegative(v, where, "tail_points", problems);
      check_nonnegative(v, where, "icp_residual", problems);
      check_nonnegative(v, where, "normalized_chamfer", problems);
      check_nonnegative(v, where, "mean_normalized_dfd", problems);
      if (expect(v, where, "trajectories", json::value_t::array, problems))
        for (std::size_t k = 0; k < v.at("trajectories").size(); ++k)
          check_trajectory(v.at("trajectories")[k], where + ".trajectories[" + std::to_string(k) + "]", problems);
    }
  }
  return problems;
}

std::vector<std::filesystem::path> write_experiment(const std::filesystem::path& dir,
                                                    const ExperimentOutput& output) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "polylines", ec);
  if (ec) throw IoError("cannot create " + (dir / "polylines").string() + ": " + ec.message());
  std::vector<fs::path> written;
  const MetricReport& r = output.report;

  write_text(dir / "report.json", report_to_json(r));
  written.push_back(dir / "report.json");

  std::ostringstream chamfer_csv;
  chamfer_csv << std::setprecision(17)
              << "variant,ok,cloud_points,tail_points,icp_residual,icp_iterations,normalized_chamfer,mean_normalized_dfd\n";
  for (const auto& v : r.variants)
    chamfer_csv << to_string(v.variant) << ',' << (v.ok ? 1 : 0) << ',' << v.cloud_points << ',' << v.tail_points
                << ',' << v.icp_residual << ',' << v.icp_iterations << ',' << v.chamfer << ',' << v.mean_dfd << '\n';
  write_text(dir / "chamfer.csv", chamfer_csv.str());
  written.push_back(dir / "chamfer.csv");

  std::ostringstream traj_csv;
  traj_csv << std::setprecision(17)
           << "variant,start,status,steps,normalized_dfd,min_clearance,violations,degenerate_steps\n";
  auto rows = [&](const std::string& name, const std::vector<TrajectoryMetrics>& ms) {
    for (const auto& m : ms)
      traj_csv << name << ',' << m.start << ',' << m.status << ',' << m.steps << ',' << m.normalized_dfd << ','
               << m.min_clearance << ',' << m.violations << ',' << m.degenerate_steps << '\n';
  };
  rows("ground-truth", r.ground_truth);
  for (const auto& v : r.variants) rows(to_string(v.variant), v.trajectories);
  write_text(dir / "trajectories.csv", traj_csv.str());
  written.push_back(dir / "trajectories.csv");

  json timings(output.timings);
  write_text(dir / "timings.json", timings.dump(2) + "\n");
  written.push_back(dir / "timings.json");

  for (std::size_t i = 0; i < output.ground_truth.size(); ++i) {
    const fs::path p = dir / "polylines" / ("ground-truth_" + std::to_string(i) + ".csv");
    write_polyline(p, output.ground_truth[i]);
    written.push_back(p);
  }
  for (const auto& [variant, trajectories] : output.trajectories) {
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
      const fs::path p = dir / "polylines" / (file_stem(to_string(variant)) + "_" + std::to_string(i) + ".csv");
      write_polyline(p, trajectories[i]);
      written.push_back(p);
    }
  }
  return written;
}

}  // namespace metricnav
