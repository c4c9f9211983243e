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

#include "gmmsem/ingest.hpp"

#include "gmmsem/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gmmsem {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

std::string location(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_number(std::string_view token, std::size_t row, std::size_t col) {
  const std::string_view t = trim(token);
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw DataError("parse error at " + location(row, col) + ": '" + std::string(t) +
                    "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw DataError("parse error at " + location(row, col) + ": '" + std::string(t) +
                    "' is not finite");
  }
  return value;
}

std::vector<double> parse_fields(std::string_view line, char sep, std::size_t row) {
  std::vector<double> values;
  std::size_t col = 1;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) end = line.size();
    const std::string_view token = line.substr(start, end - start);
    if (sep != ' ' || !trim(token).empty()) {
      values.push_back(parse_number(token, row, col));
      ++col;
    }
    if (end == line.size()) break;
    start = end + 1;
  }
  return values;
}

std::string join(std::span<const double> values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += format_double(values[i]);
  }
  return out;
}

std::string join(const Vector& v, char sep) {
  return join(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), sep);
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

DataSet parse_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("empty dataset");
  std::vector<double> values;
  std::size_t d = 0;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto row = parse_fields(lines[r], ',', r + 1);
    if (r == 0) {
      d = row.size();
    } else if (row.size() != d) {
      throw DataError("ragged row " + std::to_string(r + 1) + ": expected " +
                      std::to_string(d) + " columns, found " + std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  RowMatrix points(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(d));
  std::copy(values.begin(), values.end(), points.data());
  return DataSet(std::move(points));
}

DataSet load_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_csv(const DataSet& data) {
  std::string out;
  out.reserve(data.n() * data.d() * 24);
  for (std::size_t n = 0; n < data.n(); ++n) {
    out += join(std::span<const double>(data.row(n), data.d()), ',');
    out.push_back('\n');
  }
  return out;
}

void save_csv(const DataSet& data, const std::filesystem::path& path) {
  write_file(path, format_csv(data));
}

std::vector<std::size_t> NormalizationRecord::constant_coordinates() const {
  std::vector<std::size_t> out;
  for (Eigen::Index d = 0; d < scale.size(); ++d) {
    if (scale[d] == 0.0) out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

Normalized normalize(const DataSet& data) {
  const auto& pts = data.points();
  NormalizationRecord rec;
  rec.offset = pts.colwise().minCoeff().transpose();
  rec.scale = pts.colwise().maxCoeff().transpose() - rec.offset;
  RowMatrix out(pts.rows(), pts.cols());
  for (Eigen::Index n = 0; n < pts.rows(); ++n) {
    for (Eigen::Index d = 0; d < pts.cols(); ++d) {
      out(n, d) = rec.scale[d] > 0.0 ? (pts(n, d) - rec.offset[d]) / rec.scale[d] : 0.0;
    }
  }
  return {DataSet(std::move(out)), std::move(rec)};
}

DataSet denormalize(const DataSet& data, const NormalizationRecord& record) {
  if (static_cast<std::size_t>(record.offset.size()) != data.d() ||
      static_cast<std::size_t>(record.scale.size()) != data.d()) {
    throw DataError("normalization record has the wrong dimension");
  }
  RowMatrix out(data.points().rows(), data.points().cols());
  for (Eigen::Index n = 0; n < out.rows(); ++n) {
    for (Eigen::Index d = 0; d < out.cols(); ++d) {
      out(n, d) = data.points()(n, d) * record.scale[d] + record.offset[d];
    }
  }
  return DataSet(std::move(out));
}

std::string format_normalization(const NormalizationRecord& record) {
  return join(record.offset, ',') + "\n" + join(record.scale, ',') + "\n";
}

NormalizationRecord parse_normalization(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.size() != 2) throw DataError("normalization record must have exactly 2 lines");
  const auto offset = parse_fields(lines[0], ',', 1);
  const auto scale = parse_fields(lines[1], ',', 2);
  if (offset.size() != scale.size()) throw DataError("normalization record lines differ in length");
  NormalizationRecord rec;
  rec.offset = Eigen::Map<const Vector>(offset.data(), static_cast<Eigen::Index>(offset.size()));
  rec.scale = Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  if ((rec.scale.array() < 0.0).any()) throw DataError("normalization scale must be >= 0");
  return rec;
}

void save_normalization(const NormalizationRecord& record, const std::filesystem::path& path) {
  write_file(path, format_normalization(record));
}

NormalizationRecord load_normalization(const std::filesystem::path& path) {
  return parse_normalization(read_file(path));
}

std::string format_model(const MixtureModel& model) {
  std::string out = "gmm " + std::to_string(model.k()) + " " + std::to_string(model.d()) + "\n";
  for (std::size_t k = 0; k < model.k(); ++k) {
    out += "w " + format_double(model.weight(k)) + "\n";
    out += "mu " + join(model.mean(k), ' ') + "\n";
    const Matrix& c = model.covariance(k);
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      const Vector row = c.row(i).transpose();
      out += "sigma " + join(row, ' ') + "\n";
    }
  }
  return out;
}

MixtureModel parse_model(std::string_view text) {
  const auto lines = split_lines(text);
  std::size_t cursor = 0;
  auto expect = [&](std::string_view keyword, std::size_t count) {
    if (cursor >= lines.size()) {
      throw DataError("model file truncated: expected '" + std::string(keyword) + "' at line " +
                      std::to_string(cursor + 1));
    }
    const std::size_t line_no = cursor + 1;
    std::string_view line = trim(lines[cursor++]);
    if (line.substr(0, keyword.size()) != keyword ||
        (line.size() > keyword.size() && line[keyword.size()] != ' ')) {
      throw DataError("model file line " + std::to_string(line_no) + ": expected '" +
                      std::string(keyword) + "'");
    }
    line.remove_prefix(keyword.size());
    auto values = parse_fields(line, ' ', line_no);
    if (values.size() != count) {
      throw DataError("model file line " + std::to_string(line_no) + ": expected " +
                      std::to_string(count) + " values, found " + std::to_string(values.size()));
    }
    return values;
  };
  const auto header = expect("gmm", 2);
  if (header[0] < 1 || header[1] < 1 || header[0] != std::floor(header[0]) ||
      header[1] != std::floor(header[1])) {
    throw DataError("model file header must be 'gmm K D' with positive integers");
  }
  const auto k = static_cast<std::size_t>(header[0]);
  const auto d = static_cast<std::size_t>(header[1]);
  MixtureParams params;
  for (std::size_t j = 0; j < k; ++j) {
    params.weights.push_back(expect("w", 1)[0]);
    const auto mu = expect("mu", d);
    params.means.emplace_back(Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(d)));
    Matrix c(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = expect("sigma", d);
      for (std::size_t m = 0; m < d; ++m) c(i, m) = row[m];
    }
    params.covariances.push_back(std::move(c));
  }
  if (cursor != lines.size()) {
    throw DataError("model file has trailing content at line " + std::to_string(cursor + 1));
  }
  return MixtureModel(std::move(params));
}

void save_model(const MixtureModel& model, const std::filesystem::path& path) {
  write_file(path, format_model(model));
}

MixtureModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_file(path));
  } catch (const InvalidModelError& e) {
    throw InvalidModelError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_labels(std::span<const std::uint32_t> labels) {
  std::string out;
  for (auto l : labels) {
    out += std::to_string(l);
    out.push_back('\n');
  }
  return out;
}

void save_labels(std::span<const std::uint32_t> labels, const std::filesystem::path& path) {
  write_file(path, format_labels(labels));
}

std::vector<std::uint32_t> load_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::uint32_t> labels;
  std::size_t row = 0;
  for (auto line : split_lines(text)) {
    ++row;
    const auto t = trim(line);
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
      throw DataError("label file row " + std::to_string(row) + ": '" + std::string(t) +
                      "' is not a label");
    }
    labels.push_back(v);
  }
  return labels;
}

}  // namespace gmmsem
