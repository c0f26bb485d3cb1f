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

#include <filesystem>
#include <optional>
#include <string>

#include "metricnav/point_cloud.hpp"

namespace metricnav {

enum class CloudFormat { Xyz, PlyAscii, PlyBinary };

/// Picks the format from the extension: ".ply" reads either PLY flavour,
/// anything else is treated as whitespace-separated XYZ.
CloudFormat format_from_path(const std::filesystem::path& path, bool binary_ply = false);

/// Reads an XYZ ("x y z [r g b] [conf]") or PLY (ascii / binary little- or
/// big-endian) file. Points with confidence below `confidence_threshold` are
/// dropped; survivors keep their input order. Clouds without a confidence
/// channel pass unfiltered.
///
/// Throws IoError (unreadable), ParseError (malformed; carries the line for
/// text input) and EmptyCloudError (nothing survives).
PointCloud load_cloud(const std::filesystem::path& path,
                      std::optional<double> confidence_threshold = std::nullopt);

/// Filter applied by load_cloud, exposed for reuse on in-memory clouds.
PointCloud filter_by_confidence(const PointCloud& cloud, double threshold);

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud, CloudFormat format);

/// JSON sidecar recording the normalization of a written cloud.
struct CloudMetadata {
  Normalization normalization;
  std::size_t input_count = 0;
  std::size_t retained_count = 0;
  std::optional<double> confidence_threshold;
};

void save_metadata(const std::filesystem::path& path, const CloudMetadata& meta);
CloudMetadata load_metadata(const std::filesystem::path& path);

/// "<cloud>.meta.json"
std::filesystem::path sidecar_path(const std::filesystem::path& cloud_path);

}  // namespace metricnav
