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

#ifndef GMMSEM_SYNTH_HPP_
#define GMMSEM_SYNTH_HPP_

#include "gmmsem/model.hpp"
#include "gmmsem/rng.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gmmsem {

enum class WeightMode { balanced, unbalanced };

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view name);

/// Recipe for a synthetic ground-truth mixture.
struct GenSpec {
  std::size_t d = 3;
  std::size_t k = 3;
  std::size_t n = 1000;
  WeightMode weight_mode = WeightMode::balanced;
  /// Separation factor c: every mean has a neighbor within
  /// c * (sqrt(tr Sigma_i) + sqrt(tr Sigma_j)), and no pair is closer than a
  /// quarter of that.
  double overlap = 1.0;
  std::uint64_t rng_seed = 0;

  /// Throws UsageError unless d >= 1, k >= 1, n >= d + 1 and overlap > 0.
  void validate() const;
};

/// Draws a mixture of interfusing Gaussians. Covariances are Q Lambda Q^T
/// with Haar-random Q and log-uniform eigenvalues in [0.5, 2]; means live in
/// [0, 10 sqrt(D)]^D and are placed one at a time next to an already placed
/// mean. Balanced weights are exactly 1/K, unbalanced ones follow Zipf(1).
/// Throws DataError when a mean cannot be placed in 1000 attempts.
MixtureModel generate_mixture(const GenSpec& spec, RngStream& rng);

/// The interfusion predicate generate_mixture guarantees.
bool is_interfusing(const MixtureModel& model, double overlap);

/// Component labels drawn by inverse CDF on `weights`.
std::vector<std::uint32_t> sample_labels(std::span<const double> weights, std::size_t n,
                                         RngStream& rng);

struct LabeledSample {
  DataSet data;
  std::vector<std::uint32_t> labels;
};

/// Ancestral sampling: a component by weight, then mu_k + L_k g.
LabeledSample sample_dataset(const MixtureModel& model, std::size_t n, RngStream& rng);

struct SyntheticDataset {
  MixtureModel truth;
  DataSet data;
  std::vector<std::uint32_t> labels;
};

/// generate_mixture followed by sample_dataset of spec.n points, each on its own
/// stream derived from spec.rng_seed.
SyntheticDataset generate_dataset(const GenSpec& spec);

/// Initial model: K distinct data points as means, Sigma_k = I * min_{i != k}
/// ||mu_k - mu_i||^2 / (2D), weights 1/K. For K = 1 the scale is the mean
/// squared distance of X to the mean. Duplicate draws are redrawn up to 100
/// times; throws DataError when X has fewer than K distinct points.
MixtureModel initialize(const DataSet& data, std::size_t k, RngStream& rng);

}  // namespace gmmsem

#endif  // GMMSEM_SYNTH_HPP_
