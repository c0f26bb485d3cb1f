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

#include "metricnav/point_cloud.hpp"
#include "metricnav/siren.hpp"

namespace metricnav {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  FieldModel model;
  /// Normalization of the cloud the model was trained on.
  Normalization normalization;
};

/// Little-endian binary container:
///   "MNAVFLD\0" | u32 version | u32 depth | u32 width | f64 omega0
///   | f64 scale | f64 center[3]
///   | per layer: u32 rows | u32 cols | f64 weights (row-major) | f64 bias[rows]
///   | u32 CRC-32 of everything before it
/// Parameters round-trip bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const FieldModel& model,
                     const Normalization& normalization = {});

/// Throws VersionError for other format versions, ChecksumError for
/// truncated or corrupted files, ParseError for a foreign file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metricnav
