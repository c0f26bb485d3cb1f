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
#include <string>
#include <vector>

namespace metricnav::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

/// Record of one command invocation. Checksums are taken when the manifest
/// is written, so it must be written after every output exists.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_path;
  /// SHA-256 of the config file bytes, empty when none was given.
  std::string config_hash;
  /// Effective configuration after defaults, file and overrides.
  std::string effective_config;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::map<std::string, double> timings;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Re-hashes every listed output; returns the paths that are missing or
/// differ from the recorded checksum.
std::vector<std::string> verify_manifest(const std::filesystem::path& path);

}  // namespace metricnav::cli
