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

#include "gmmsem/synth.hpp"

#include "gmmsem/error.hpp"
#include "gmmsem/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace gmmsem {

namespace {

constexpr int kPlacementAttempts = 1000;
constexpr int kInitRedraws = 100;
constexpr double kMinEigenvalue = 0.5;
constexpr double kMaxEigenvalue = 2.0;
constexpr double kMinSeparationFraction = 0.25;

Matrix random_covariance(std::size_t d, RngStream& rng) {
  Matrix g(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Vector eig(d);
  const double lo = std::log(kMinEigenvalue);
  const double hi = std::log(kMaxEigenvalue);
  for (std::size_t i = 0; i < d; ++i) eig[i] = std::exp(lo + (hi - lo) * rng.uniform());
  const Matrix c = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (c + c.transpose());
}

double trace_scale(const Matrix& c) { return std::sqrt(c.trace()); }

std::size_t count_distinct_rows(const DataSet& data, std::size_t stop_at) {
  std::set<std::vector<double>> seen;
  for (std::size_t n = 0; n < data.n() && seen.size() < stop_at; ++n) {
    seen.emplace(data.row(n), data.row(n) + data.d());
  }
  return seen.size();
}

}  // namespace

std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::balanced ? "balanced" : "unbalanced";
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "balanced") return WeightMode::balanced;
  if (name == "unbalanced") return WeightMode::unbalanced;
  throw UsageError("unknown weight mode '" + std::string(name) + "'");
}

void GenSpec::validate() const {
  if (d < 1) throw UsageError("GenSpec: d must be at least 1");
  if (k < 1) throw UsageError("GenSpec: k must be at least 1");
  if (n < d + 1) throw UsageError("GenSpec: n must be at least d + 1");
  if (!(overlap > 0.0)) throw UsageError("GenSpec: overlap must be positive");
}

MixtureModel generate_mixture(const GenSpec& spec, RngStream& rng) {
  spec.validate();
  const std::size_t d = spec.d;
  const std::size_t k = spec.k;
  MixtureParams params;
  for (std::size_t j = 0; j < k; ++j) params.covariances.push_back(random_covariance(d, rng));
  std::vector<double> scale(k);
  for (std::size_t j = 0; j < k; ++j) scale[j] = trace_scale(params.covariances[j]);

  const double box = 10.0 * std::sqrt(static_cast<double>(d));
  auto in_box = [&](const Vector& v) { return (v.array() >= 0.0).all() && (v.array() <= box).all(); };
  Vector first(d);
  for (std::size_t i = 0; i < d; ++i) first[i] = box * rng.uniform();
  params.means.push_back(first);

  for (std::size_t j = 1; j < k; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const std::size_t anchor = rng.uniform_index(j);
      Vector dir(d);
      for (std::size_t i = 0; i < d; ++i) dir[i] = rng.normal();
      const double norm = dir.norm();
      if (!(norm > 0.0)) continue;
      const double reach = spec.overlap * (scale[j] + scale[anchor]);
      const double dist = reach * (0.5 + 0.5 * rng.uniform());
      Vector candidate = params.means[anchor] + dir * (dist / norm);
      if (!in_box(candidate)) continue;
      bool separated = true;
      for (std::size_t i = 0; i < j && separated; ++i) {
        const double min_dist = kMinSeparationFraction * spec.overlap * (scale[i] + scale[j]);
        separated = (candidate - params.means[i]).norm() >= min_dist;
      }
      if (!separated) continue;
      params.means.push_back(std::move(candidate));
      placed = true;
    }
    if (!placed) {
      throw DataError("generate_mixture: could not place component " + std::to_string(j) +
                      " in " + std::to_string(kPlacementAttempts) +
                      " attempts; adjust the overlap");
    }
  }

  if (spec.weight_mode == WeightMode::balanced) {
    params.weights.assign(k, 1.0 / static_cast<double>(k));
  } else {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += 1.0 / static_cast<double>(j + 1);
    for (std::size_t j = 0; j < k; ++j) {
      params.weights.push_back(1.0 / static_cast<double>(j + 1) / total);
    }
  }
  return MixtureModel(std::move(params));
}

bool is_interfusing(const MixtureModel& model, double overlap) {
  const std::size_t k = model.k();
  std::vector<double> scale(k);
  for (std::size_t j = 0; j < k; ++j) scale[j] = trace_scale(model.covariance(j));
  for (std::size_t i = 0; i < k; ++i) {
    bool has_neighbor = k == 1;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double dist = (model.mean(i) - model.mean(j)).norm();
      const double reach = overlap * (scale[i] + scale[j]);
      if (dist < kMinSeparationFraction * reach) return false;
      if (dist <= reach) has_neighbor = true;
    }
    if (!has_neighbor) return false;
  }
  return true;
}

std::vector<std::uint32_t> sample_labels(std::span<const double> weights, std::size_t n,
                                         RngStream& rng) {
  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels) l = static_cast<std::uint32_t>(sample_categorical(weights, rng.uniform()));
  return labels;
}

LabeledSample sample_dataset(const MixtureModel& model, std::size_t n, RngStream& rng) {
  const std::size_t d = model.d();
  std::vector<std::uint32_t> labels = sample_labels(model.weights(), n, rng);
  RowMatrix points(n, d);
  Vector g(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) g[j] = rng.normal();
    points.row(i) = (model.mean(labels[i]) + model.factor(labels[i]).apply_lower(g)).transpose();
  }
  return {DataSet(std::move(points)), std::move(labels)};
}

SyntheticDataset generate_dataset(const GenSpec& spec) {
  RngStream gen_rng(derive_seed(spec.rng_seed, {0}));
  MixtureModel truth = generate_mixture(spec, gen_rng);
  RngStream sample_rng(derive_seed(spec.rng_seed, {1}));
  LabeledSample sample = sample_dataset(truth, spec.n, sample_rng);
  return {std::move(truth), std::move(sample.data), std::move(sample.labels)};
}

MixtureModel initialize(const DataSet& data, std::size_t k, RngStream& rng) {
  if (k < 1) throw UsageError("initialize: k must be at least 1");
  if (data.n() < k) {
    throw DataError("initialize: " + std::to_string(data.n()) + " points cannot seed " +
                    std::to_string(k) + " components");
  }
  const std::size_t d = data.d();
  const double two_d = 2.0 * static_cast<double>(d);
  for (int attempt = 0; attempt <= kInitRedraws; ++attempt) {
    std::vector<std::size_t> chosen;
    while (chosen.size() < k) {
      const std::size_t idx = rng.uniform_index(data.n());
      if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) chosen.push_back(idx);
    }
    MixtureParams params;
    for (std::size_t idx : chosen) params.means.emplace_back(Eigen::Map<const Vector>(data.row(idx), d));
    std::vector<double> variance(k);
    if (k == 1) {
      CompensatedSum total;
      for (std::size_t n = 0; n < data.n(); ++n) {
        total.add((Eigen::Map<const Vector>(data.row(n), d) - params.means[0]).squaredNorm());
      }
      variance[0] = total.value() / static_cast<double>(data.n()) / two_d;
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) {
          if (j != i) best = std::min(best, (params.means[i] - params.means[j]).squaredNorm());
        }
        variance[i] = best / two_d;
      }
    }
    if (std::any_of(variance.begin(), variance.end(), [](double v) { return !(v > 0.0); })) {
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      params.covariances.push_back(Matrix::Identity(d, d) * variance[i]);
    }
    params.weights.assign(k, 1.0 / static_cast<double>(k));
    return MixtureModel(std::move(params));
  }
  if (count_distinct_rows(data, k) < k || k == 1) {
    throw DataError("initialize: data has fewer than " + std::to_string(k) +
                    " distinct points (or zero spread)");
  }
  throw DataError("initialize: no " + std::to_string(k) + " distinct means found in " +
                  std::to_string(kInitRedraws) + " redraws");
}

}  // namespace gmmsem
