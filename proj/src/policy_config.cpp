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

#include <json.hpp>

#include "metricnav/errors.hpp"
#include "metricnav/policy.hpp"

namespace metricnav {
namespace {

using nlohmann::json;

void from_json_object(PolicyConfig& c, const json& j) {
  if (!j.is_object()) throw ParseError("policy config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "k") c.k = v.get<double>();
    else if (key == "beta") c.beta = v.get<double>();
    else if (key == "epsilon") c.epsilon = v.get<double>();
    else if (key == "gain") c.gain = v.get<double>();
    else if (key == "speed_cap") c.speed_cap = v.get<double>();
    else if (key == "step") c.step = v.get<double>();
    else if (key == "max_steps") c.max_steps = v.get<int>();
    else if (key == "goal_radius") c.goal_radius = v.get<double>();
    else if (key == "goal") {
      const auto g = v.get<std::vector<double>>();
      if (g.size() != 3) throw ParseError("policy goal must have three components");
      c.goal = Eigen::Vector3d(g[0], g[1], g[2]);
    } else {
      throw ParseError("unknown policy key '" + key + "'");
    }
  }
}

}  // namespace

void apply_policy_json(PolicyConfig& config, const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    from_json_object(config, j.contains("policy") ? j.at("policy") : j);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid policy config: ") + e.what());
  }
}

void apply_policy_override(PolicyConfig& config, const std::string& key, const std::string& value) {
  json j;
  try {
    j[key] = key == "goal" ? json::parse("[" + value + "]") : json::parse(value);
    from_json_object(config, j);
  } catch (const json::exception&) {
    throw UsageError("invalid value '" + value + "' for policy key '" + key + "'");
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

std::string policy_to_json(const PolicyConfig& c) {
  json j{{"k", c.k},
         {"beta", c.beta},
         {"epsilon", c.epsilon},
         {"goal", {c.goal.x(), c.goal.y(), c.goal.z()}},
         {"gain", c.gain},
         {"speed_cap", c.speed_cap},
         {"step", c.step},
         {"max_steps", c.max_steps},
         {"goal_radius", c.goal_radius}};
  return j.dump(2);
}

}  // namespace metricnav
