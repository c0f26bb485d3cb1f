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

#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <json.hpp>
#include <memory>

#include "metricnav/checkpoint.hpp"
#include "metricnav/errors.hpp"
#include "metricnav/eval.hpp"

namespace metricnav::cli {
namespace {

using nlohmann::json;

struct Digest {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (is) {
    is.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  return d.hex();
}

std::string sha256_text(const std::string& text) {
  Digest d;
  d.update(text.data(), text.size());
  return d.hex();
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["arguments"] = m.arguments;
  j["config_path"] = m.config_path;
  j["config_hash"] = m.config_hash;
  j["effective_config"] = m.effective_config.empty() ? json() : json::parse(m.effective_config);
  j["seeds"] = m.seeds;
  j["versions"] = {{"metricnav", "0.1.0"},
                   {"checkpoint_format", kCheckpointVersion},
                   {"report_format", kReportVersion}};
  j["inputs"] = json::array();
  for (const auto& p : m.inputs) j["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  j["outputs"] = json::array();
  for (const auto& p : m.outputs) j["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  j["timings"] = m.timings;
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

std::vector<std::string> verify_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid manifest: ") + e.what());
  }
  std::vector<std::string> bad;
  for (const auto& o : j.at("outputs")) {
    const std::string p = o.at("path").get<std::string>();
    if (!std::filesystem::exists(p) || sha256_file(p) != o.at("sha256").get<std::string>()) bad.push_back(p);
  }
  return bad;
}

}  // namespace metricnav::cli
