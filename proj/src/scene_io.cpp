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
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "metricnav/errors.hpp"
#include "metricnav/scenes.hpp"

namespace metricnav {
namespace {

using nlohmann::json;

Eigen::Vector3d vec3(const json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw ParseError(std::string("'") + key + "' must have 3 components");
  return {v[0], v[1], v[2]};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Primitive parse_primitive(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "sphere") return Sphere{vec3(j, "center"), j.at("radius").get<double>()};
  if (type == "box") return Box{vec3(j, "center"), vec3(j, "half_extents")};
  if (type == "plane") {
    // Normals are normalized on load so hand-written files need not be exact.
    const Eigen::Vector3d n = vec3(j, "normal");
    if (n.norm() == 0.0) throw ParseError("plane normal must be nonzero");
    return Plane{n.normalized(), j.at("offset").get<double>()};
  }
  if (type == "capsule") return Capsule{vec3(j, "a"), vec3(j, "b"), j.at("radius").get<double>()};
  throw ParseError("unknown primitive type '" + type + "'");
}

json primitive_json(const Primitive& p) {
  if (const auto* s = std::get_if<Sphere>(&p))
    return {{"type", "sphere"}, {"center", to_json(s->center)}, {"radius", s->radius}};
  if (const auto* b = std::get_if<Box>(&p))
    return {{"type", "box"}, {"center", to_json(b->center)}, {"half_extents", to_json(b->half_extents)}};
  if (const auto* pl = std::get_if<Plane>(&p))
    return {{"type", "plane"}, {"normal", to_json(pl->normal)}, {"offset", pl->offset}};
  const auto& c = std::get<Capsule>(p);
  return {{"type", "capsule"}, {"a", to_json(c.a)}, {"b", to_json(c.b)}, {"radius", c.radius}};
}

}  // namespace

SceneFile parse_scene(const std::string& json_text) {
  SceneFile file;
  try {
    const json j = json::parse(json_text);
    file.scene.id = j.value("id", std::string("scene"));
    for (const auto& p : j.at("primitives")) file.scene.primitives.push_back(parse_primitive(p));
    if (j.contains("camera")) {
      const auto& c = j["camera"];
      CameraView view;
      view.position = vec3(c, "position");
      view.look_at = vec3(c, "look_at");
      view.fov = c.value("fov_deg", 60.0) * std::numbers::pi / 180.0;
      view.width = c.value("width", 128);
      view.height = c.value("height", 128);
      file.camera = view;
    }
    if (j.contains("navigation")) {
      const auto& n = j["navigation"];
      NavigationSetup nav;
      nav.goal = vec3(n, "goal");
      nav.start_radius = n.value("start_radius", nav.start_radius);
      nav.start_count = n.value("start_count", nav.start_count);
      nav.start_cone = n.value("start_cone_deg", 35.0) * std::numbers::pi / 180.0;
      file.navigation = nav;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid scene description: ") + e.what());
  }
  try {
    file.scene.validate();
    if (file.camera) file.camera->validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid scene description: ") + e.what());
  }
  return file;
}

SceneFile load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_json(const SceneFile& file) {
  json j;
  j["id"] = file.scene.id;
  j["primitives"] = json::array();
  for (const auto& p : file.scene.primitives) j["primitives"].push_back(primitive_json(p));
  if (file.camera) {
    const auto& c = *file.camera;
    j["camera"] = {{"position", to_json(c.position)},
                   {"look_at", to_json(c.look_at)},
                   {"fov_deg", c.fov * 180.0 / std::numbers::pi},
                   {"width", c.width},
                   {"height", c.height}};
  }
  if (file.navigation) {
    const auto& n = *file.navigation;
    j["navigation"] = {{"goal", to_json(n.goal)},
                       {"start_radius", n.start_radius},
                       {"start_count", n.start_count},
                       {"start_cone_deg", n.start_cone * 180.0 / std::numbers::pi}};
  }
  return j.dump(2);
}

}  // namespace metricnav
