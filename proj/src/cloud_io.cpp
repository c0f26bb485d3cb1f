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

#include "metricnav/cloud_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "metricnav/errors.hpp"

namespace metricnav {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return ss.str();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  return v;
}

// Walks a buffer line by line, tracking 1-based line numbers.
class LineReader {
 public:
  LineReader(std::string_view data, std::size_t offset = 0) : data_(data), pos_(offset) {}

  bool next(std::string_view& line) {
    if (pos_ >= data_.size()) return false;
    std::size_t eol = data_.find('\n', pos_);
    if (eol == std::string_view::npos) eol = data_.size();
    line = data_.substr(pos_, eol - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = eol + 1;
    ++line_no_;
    return true;
  }

  std::size_t line() const { return line_no_; }
  std::size_t offset() const { return std::min(pos_, data_.size()); }
  void set_line(std::size_t n) { line_no_ = n; }

 private:
  std::string_view data_;
  std::size_t pos_;
  std::size_t line_no_ = 0;
};

PointCloud assemble(const std::vector<double>& xyz, const std::vector<double>& rgb,
                    const std::vector<double>& conf) {
  const auto n = static_cast<Eigen::Index>(xyz.size() / 3);
  PointCloud cloud;
  cloud.points = Eigen::Map<const Points3d>(xyz.data(), 3, n);
  if (!rgb.empty()) cloud.colors = Eigen::Map<const Points3d>(rgb.data(), 3, n);
  if (!conf.empty()) cloud.confidence = Eigen::Map<const Eigen::VectorXd>(conf.data(), n);
  return cloud;
}

PointCloud parse_xyz(std::string_view data) {
  LineReader reader(data);
  std::vector<double> xyz, rgb, conf;
  std::string_view line;
  std::size_t columns = 0;
  while (reader.next(line)) {
    const auto toks = split_ws(line);
    if (toks.empty() || toks.front().front() == '#') continue;
    if (columns == 0) {
      columns = toks.size();
      if (columns != 3 && columns != 4 && columns != 6 && columns != 7)
        throw ParseError("expected 3, 4, 6 or 7 columns, got " + std::to_string(columns),
                         reader.line());
    } else if (toks.size() != columns) {
      throw ParseError("expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(toks.size()),
                       reader.line());
    }
    for (int k = 0; k < 3; ++k) xyz.push_back(parse_double(toks[k], reader.line()));
    if (columns >= 6)
      for (int k = 3; k < 6; ++k) rgb.push_back(parse_double(toks[k], reader.line()));
    if (columns == 4 || columns == 7) conf.push_back(parse_double(toks.back(), reader.line()));
  }
  // 0-255 colors are rescaled to [0,1] when any component exceeds 1.
  if (!rgb.empty() && *std::max_element(rgb.begin(), rgb.end()) > 1.0)
    for (double& c : rgb) c /= 255.0;
  return assemble(xyz, rgb, conf);
}

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType ply_type(std::string_view name, std::size_t line) {
  if (name == "char" || name == "int8") return PlyType::I8;
  if (name == "uchar" || name == "uint8") return PlyType::U8;
  if (name == "short" || name == "int16") return PlyType::I16;
  if (name == "ushort" || name == "uint16") return PlyType::U16;
  if (name == "int" || name == "int32") return PlyType::I32;
  if (name == "uint" || name == "uint32") return PlyType::U32;
  if (name == "float" || name == "float32") return PlyType::F32;
  if (name == "double" || name == "float64") return PlyType::F64;
  throw ParseError("unknown PLY property type '" + std::string(name) + "'", line);
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

bool is_integer(PlyType t) { return t != PlyType::F32 && t != PlyType::F64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

enum class PlyEncoding { Ascii, BinaryLittle, BinaryBig };

template <typename T>
T load_raw(const char* p, bool swap) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if (swap) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

double read_binary(const char* p, PlyType t, bool swap) {
  switch (t) {
    case PlyType::I8: return load_raw<std::int8_t>(p, swap);
    case PlyType::U8: return load_raw<std::uint8_t>(p, swap);
    case PlyType::I16: return load_raw<std::int16_t>(p, swap);
    case PlyType::U16: return load_raw<std::uint16_t>(p, swap);
    case PlyType::I32: return load_raw<std::int32_t>(p, swap);
    case PlyType::U32: return load_raw<std::uint32_t>(p, swap);
    case PlyType::F32: return load_raw<float>(p, swap);
    case PlyType::F64: return load_raw<double>(p, swap);
  }
  return 0.0;
}

// Role of a vertex property: 0-2 xyz, 3-5 rgb, 6 confidence, -1 ignored.
int vertex_role(const std::string& name) {
  static const std::pair<const char*, int> kRoles[] = {
      {"x", 0},         {"y", 1},     {"z", 2},           {"red", 3},
      {"green", 4},     {"blue", 5},  {"r", 3},           {"g", 4},
      {"b", 5},         {"diffuse_red", 3}, {"diffuse_green", 4}, {"diffuse_blue", 5},
      {"confidence", 6}, {"conf", 6}};
  for (const auto& [key, role] : kRoles)
    if (name == key) return role;
  return -1;
}

PointCloud parse_ply(std::string_view data) {
  LineReader reader(data);
  std::string_view line;
  if (!reader.next(line) || line != "ply") throw ParseError("missing 'ply' magic", 1);

  PlyEncoding encoding = PlyEncoding::Ascii;
  bool have_format = false;
  std::vector<PlyElement> elements;
  bool header_done = false;
  while (reader.next(line)) {
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    const auto& kw = toks[0];
    if (kw == "end_header") {
      header_done = true;
      break;
    }
    if (kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      if (toks.size() < 2) throw ParseError("malformed format line", reader.line());
      if (toks[1] == "ascii") encoding = PlyEncoding::Ascii;
      else if (toks[1] == "binary_little_endian") encoding = PlyEncoding::BinaryLittle;
      else if (toks[1] == "binary_big_endian") encoding = PlyEncoding::BinaryBig;
      else throw ParseError("unsupported PLY format '" + std::string(toks[1]) + "'", reader.line());
      have_format = true;
    } else if (kw == "element") {
      if (toks.size() != 3) throw ParseError("malformed element line", reader.line());
      PlyElement e;
      e.name = toks[1];
      e.count = static_cast<std::size_t>(parse_double(toks[2], reader.line()));
      elements.push_back(std::move(e));
    } else if (kw == "property") {
      if (elements.empty()) throw ParseError("property before any element", reader.line());
      PlyProperty p;
      if (toks.size() == 5 && toks[1] == "list") {
        p.is_list = true;
        p.count_type = ply_type(toks[2], reader.line());
        p.type = ply_type(toks[3], reader.line());
        p.name = toks[4];
      } else if (toks.size() == 3) {
        p.type = ply_type(toks[1], reader.line());
        p.name = toks[2];
      } else {
        throw ParseError("malformed property line", reader.line());
      }
      elements.back().properties.push_back(std::move(p));
    } else {
      throw ParseError("unexpected header keyword '" + std::string(kw) + "'", reader.line());
    }
  }
  if (!header_done) throw ParseError("PLY header has no end_header", reader.line());
  if (!have_format) throw ParseError("PLY header has no format line", reader.line());

  const auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                      [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end()) throw ParseError("PLY file has no vertex element");
  std::vector<int> roles;
  bool has_role[7] = {};
  std::vector<PlyType> role_type(7, PlyType::F32);
  for (const auto& p : vertex_it->properties) {
    const int role = p.is_list ? -1 : vertex_role(p.name);
    roles.push_back(role);
    if (role >= 0) {
      has_role[role] = true;
      role_type[role] = p.type;
    }
  }
  if (!has_role[0] || !has_role[1] || !has_role[2])
    throw ParseError("PLY vertex element lacks x, y or z");
  const bool has_rgb = has_role[3] && has_role[4] && has_role[5];
  const bool has_conf = has_role[6];

  const std::size_t n = vertex_it->count;
  std::vector<double> xyz(3 * n), rgb(has_rgb ? 3 * n : 0), conf(has_conf ? n : 0);
  auto store = [&](std::size_t i, int role, double v) {
    if (role < 0) return;
    if (role < 3) xyz[3 * i + role] = v;
    else if (role < 6) {
      if (has_rgb) rgb[3 * i + (role - 3)] = is_integer(role_type[role]) ? v / 255.0 : v;
    } else conf[i] = v;
  };

  if (encoding == PlyEncoding::Ascii) {
    for (const auto& element : elements) {
      const bool is_vertex = &element == &*vertex_it;
      for (std::size_t i = 0; i < element.count; ++i) {
        std::vector<std::string_view> toks;
        do {
          if (!reader.next(line))
            throw ParseError("unexpected end of file in element '" + element.name + "'",
                             reader.line());
          toks = split_ws(line);
        } while (toks.empty());
        std::size_t t = 0;
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& p = element.properties[k];
          if (t >= toks.size()) throw ParseError("too few values", reader.line());
          if (p.is_list) {
            const auto len = static_cast<std::size_t>(parse_double(toks[t++], reader.line()));
            if (t + len > toks.size()) throw ParseError("truncated list", reader.line());
            t += len;
            continue;
          }
          const double v = parse_double(toks[t++], reader.line());
          if (is_vertex) store(i, roles[k], v);
        }
        if (t != toks.size()) throw ParseError("too many values", reader.line());
      }
      if (is_vertex) break;
    }
  } else {
    const bool swap = (encoding == PlyEncoding::BinaryBig) != (std::endian::native == std::endian::big);
    std::size_t pos = reader.offset();
    auto need = [&](std::size_t bytes) {
      if (pos + bytes > data.size())
        throw ParseError("truncated binary PLY body at byte offset " + std::to_string(pos));
    };
    for (const auto& element : elements) {
      const bool is_vertex = &element == &*vertex_it;
      for (std::size_t i = 0; i < element.count; ++i) {
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& p = element.properties[k];
          if (p.is_list) {
            need(type_size(p.count_type));
            const auto len = static_cast<std::size_t>(read_binary(data.data() + pos, p.count_type, swap));
            pos += type_size(p.count_type);
            need(len * type_size(p.type));
            pos += len * type_size(p.type);
            continue;
          }
          need(type_size(p.type));
          const double v = read_binary(data.data() + pos, p.type, swap);
          pos += type_size(p.type);
          if (is_vertex) store(i, roles[k], v);
        }
      }
      if (is_vertex) break;
    }
  }
  return assemble(xyz, rgb, conf);
}

void write_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path, bool binary_ply) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return binary_ply ? CloudFormat::PlyBinary : CloudFormat::PlyAscii;
  return CloudFormat::Xyz;
}

PointCloud filter_by_confidence(const PointCloud& cloud, double threshold) {
  if (!cloud.confidence) return cloud;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if ((*cloud.confidence)(i) >= threshold) keep.push_back(i);
  return select(cloud, keep);
}

PointCloud load_cloud(const std::filesystem::path& path, std::optional<double> confidence_threshold) {
  const std::string data = read_file(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  PointCloud cloud = (ext == ".ply" || data.rfind("ply", 0) == 0) ? parse_ply(data) : parse_xyz(data);
  cloud.validate();
  if (confidence_threshold) cloud = filter_by_confidence(cloud, *confidence_threshold);
  if (cloud.empty()) throw EmptyCloudError("no points survive loading '" + path.string() + "'");
  return cloud;
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format) {
  std::string out;
  const bool rgb = cloud.colors.has_value();
  const bool conf = cloud.confidence.has_value();
  auto color_byte = [](double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };

  if (format == CloudFormat::Xyz) {
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        if (k) out.push_back(' ');
        write_number(out, cloud.points(k, i));
      }
      if (rgb)
        for (int k = 0; k < 3; ++k) {
          out.push_back(' ');
          write_number(out, (*cloud.colors)(k, i));
        }
      if (conf) {
        out.push_back(' ');
        write_number(out, (*cloud.confidence)(i));
      }
      out.push_back('\n');
    }
  } else {
    const bool binary = format == CloudFormat::PlyBinary;
    out += "ply\nformat ";
    out += binary ? "binary_little_endian 1.0\n" : "ascii 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (rgb) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (conf) out += "property double confidence\n";
    out += "end_header\n";
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      if (binary) {
        auto put = [&](auto v) {
          static_assert(std::endian::native == std::endian::little);
          const auto bytes = std::bit_cast<std::array<char, sizeof(v)>>(v);
          out.append(bytes.data(), bytes.size());
        };
        for (int k = 0; k < 3; ++k) put(cloud.points(k, i));
        if (rgb)
          for (int k = 0; k < 3; ++k) put(color_byte((*cloud.colors)(k, i)));
        if (conf) put((*cloud.confidence)(i));
      } else {
        for (int k = 0; k < 3; ++k) {
          if (k) out.push_back(' ');
          write_number(out, cloud.points(k, i));
        }
        if (rgb)
          for (int k = 0; k < 3; ++k) out += " " + std::to_string(color_byte((*cloud.colors)(k, i)));
        if (conf) {
          out.push_back(' ');
          write_number(out, (*cloud.confidence)(i));
        }
        out.push_back('\n');
      }
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& cloud_path) {
  return cloud_path.string() + ".meta.json";
}

void save_metadata(const std::filesystem::path& path, const CloudMetadata& meta) {
  nlohmann::json j;
  j["scale"] = meta.normalization.scale;
  j["center"] = {meta.normalization.center.x(), meta.normalization.center.y(),
                 meta.normalization.center.z()};
  j["input_count"] = meta.input_count;
  j["retained_count"] = meta.retained_count;
  j["confidence_threshold"] =
      meta.confidence_threshold ? nlohmann::json(*meta.confidence_threshold) : nlohmann::json();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << j.dump(2) << '\n';
}

CloudMetadata load_metadata(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    const auto j = nlohmann::json::parse(data);
    CloudMetadata meta;
    meta.normalization.scale = j.at("scale").get<double>();
    const auto c = j.at("center").get<std::vector<double>>();
    if (c.size() != 3) throw ParseError("metadata center must have 3 components");
    meta.normalization.center = Eigen::Vector3d(c[0], c[1], c[2]);
    meta.input_count = j.value("input_count", std::size_t{0});
    meta.retained_count = j.value("retained_count", std::size_t{0});
    if (j.contains("confidence_threshold") && !j["confidence_threshold"].is_null())
      meta.confidence_threshold = j["confidence_threshold"].get<double>();
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("invalid metadata '" + path.string() + "': " + e.what());
  }
}

}  // namespace metricnav
