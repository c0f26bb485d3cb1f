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

#include "metricnav/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "metricnav/errors.hpp"

namespace metricnav {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'M', 'N', 'A', 'V', 'F', 'L', 'D', '\0'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    buf_.append(bytes.data(), bytes.size());
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  std::string& buffer() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : data_(data), end_(end) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > end_) throw ChecksumError("checkpoint is truncated");
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return std::bit_cast<T>(bytes);
  }
  void skip(std::size_t n) { pos_ += n; }
  std::size_t position() const { return pos_; }

 private:
  const std::string& data_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FieldModel& model,
                     const Normalization& normalization) {
  model.validate();
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.depth()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.width()));
  w.put<double>(model.omega0);
  w.put<double>(normalization.scale);
  for (int k = 0; k < 3; ++k) w.put<double>(normalization.center(k));
  for (const auto& layer : model.layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.put<double>(layer.weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.put<double>(layer.bias(r));
  }
  w.put<std::uint32_t>(crc_of(w.buffer().data(), w.buffer().size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (data.size() < sizeof(kMagic) + 4 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    if (data.size() < sizeof(kMagic) + 4 && data.size() > 0 &&
        std::memcmp(data.data(), kMagic, std::min(data.size(), sizeof(kMagic))) == 0)
      throw ChecksumError("checkpoint is truncated");
    throw ParseError("'" + path.string() + "' is not a field checkpoint");
  }
  std::uint32_t version = 0;
  std::memcpy(&version, data.data() + sizeof(kMagic), sizeof(version));
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  if (data.size() < sizeof(kMagic) + 8) throw ChecksumError("checkpoint is truncated");

  const std::size_t body = data.size() - 4;
  std::uint32_t stored = 0;
  std::memcpy(&stored, data.data() + body, sizeof(stored));
  if (stored != crc_of(data.data(), body)) throw ChecksumError("checkpoint checksum mismatch (truncated or corrupt)");

  Reader r(data, body);
  r.skip(sizeof(kMagic) + 4);
  const auto depth = r.get<std::uint32_t>();
  const auto width = r.get<std::uint32_t>();
  Checkpoint ck;
  ck.model.omega0 = r.get<double>();
  ck.normalization.scale = r.get<double>();
  for (int k = 0; k < 3; ++k) ck.normalization.center(k) = r.get<double>();
  for (std::uint32_t l = 0; l <= depth; ++l) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    SirenLayer<double> layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) layer.weight(i, j) = r.get<double>();
    for (std::uint32_t i = 0; i < rows; ++i) layer.bias(i) = r.get<double>();
    ck.model.layers.push_back(std::move(layer));
  }
  if (r.position() != body) throw ParseError("checkpoint has trailing bytes");
  try {
    ck.model.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("checkpoint describes an invalid model: ") + e.what());
  }
  if (ck.model.width() != static_cast<int>(width)) throw ParseError("checkpoint width header mismatch");
  return ck;
}

}  // namespace metricnav
