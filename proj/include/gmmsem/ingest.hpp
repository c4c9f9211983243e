// Copyright 2026 The gmmsem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GMMSEM_INGEST_HPP_
#define GMMSEM_INGEST_HPP_

#include "gmmsem/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gmmsem {

/// Dataset CSV: no header, one point per row, comma separated, LF endings.
/// Errors carry 1-based row and column numbers and the offending token.
DataSet parse_csv(std::string_view text);
DataSet load_csv(const std::filesystem::path& path);
std::string format_csv(const DataSet& data);
void save_csv(const DataSet& data, const std::filesystem::path& path);

/// Formats a double with 17 significant digits so parsing it back is exact.
std::string format_double(double value);

/// Per-coordinate offset and scale of a min-max normalization. A scale of 0
/// marks a coordinate with zero spread, which normalize maps to 0.
struct NormalizationRecord {
  Vector offset;
  Vector scale;

  bool constant(std::size_t d) const { return scale[static_cast<Eigen::Index>(d)] == 0.0; }
  std::vector<std::size_t> constant_coordinates() const;
};

struct Normalized {
  DataSet data;
  NormalizationRecord record;
};

/// x' = (x - min) / (max - min) per coordinate.
Normalized normalize(const DataSet& data);

/// Inverse of normalize; constant coordinates come back as their offset.
DataSet denormalize(const DataSet& data, const NormalizationRecord& record);

/// Two CSV lines: offsets, then scales.
std::string format_normalization(const NormalizationRecord& record);
NormalizationRecord parse_normalization(std::string_view text);
void save_normalization(const NormalizationRecord& record, const std::filesystem::path& path);
NormalizationRecord load_normalization(const std::filesystem::path& path);

/// Model text: `gmm K D`, then per component `w v`, `mu v...` and D lines
/// `sigma v...`.
std::string format_model(const MixtureModel& model);
MixtureModel parse_model(std::string_view text);
void save_model(const MixtureModel& model, const std::filesystem::path& path);
MixtureModel load_model(const std::filesystem::path& path);

/// One 0-based label per line.
std::string format_labels(std::span<const std::uint32_t> labels);
void save_labels(std::span<const std::uint32_t> labels, const std::filesystem::path& path);
std::vector<std::uint32_t> load_labels(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace gmmsem

#endif  // GMMSEM_INGEST_HPP_
