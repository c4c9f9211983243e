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

#ifndef GMMSEM_SEM_HPP_
#define GMMSEM_SEM_HPP_

#include "gmmsem/estep.hpp"
#include "gmmsem/model.hpp"
#include "gmmsem/numeric.hpp"
#include "gmmsem/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gmmsem {

enum class RepairPolicy {
  resample_mean_fresh_covariance,
  blend_with_previous,
  keep_previous_covariance,
};

std::string_view to_string(RepairPolicy policy);
/// Accepts "resample", "blend", "keep" or the full enumerator names.
RepairPolicy parse_repair_policy(std::string_view name);

struct SemConfig {
  /// Minimum points per component; unset means D + 1.
  std::optional<std::size_t> zeta;
  RepairPolicy repair_policy = RepairPolicy::resample_mean_fresh_covariance;
  std::uint64_t rng_seed = 0;

  /// Throws UsageError when zeta is set to 0.
  std::size_t effective_zeta(std::size_t d) const;
};

/// In-progress parameters of one component during an M-step. `mass` is c_k
/// for SEM and r_k for EM.
struct ComponentEstimate {
  double mass = 0.0;
  Vector mean;
  Matrix cov;
};

enum class RepairReason { empty, too_few_points, singular_covariance };
enum class RepairAction { ridge, resample_mean, fresh_covariance, blend, keep_previous };

std::string_view to_string(RepairReason reason);
std::string_view to_string(RepairAction action);

struct RepairEvent {
  std::size_t round = 0;  // 1-based; 0 outside a fit
  std::size_t component = 0;
  RepairReason reason = RepairReason::empty;
  RepairAction action = RepairAction::resample_mean;
  double support = 0.0;  // c_k or r_k before repair

  std::string describe() const;
};

/// Models after each round (models[t] is the result of round t + 1) and
/// every repair that happened along the way.
struct FitResult {
  std::vector<MixtureModel> models;
  std::vector<RepairEvent> repairs;
};

/// Draws one label per row by inverse CDF over the row.
Assignment sample_assignment(const ResponsibilityMatrix& resp, RngStream& rng);

/// Per-component maximum-likelihood moments of the points assigned to each
/// component: c_k, the sample mean and the biased sample covariance.
/// Components with c_k = 0 get a NaN mean and a zero covariance.
std::vector<ComponentEstimate> assignment_moments(const Assignment& assign, const DataSet& data,
                                                  MultCounter* counter = nullptr);

struct RepairOutcome {
  ComponentEstimate estimate;
  RepairAction action;
};

/// Replaces degenerate component k of `partial`.
///
/// Empty components always get a mean drawn uniformly from X and the fresh
/// covariance I * min_{i != k} ||mu_k - mu_i||^2 / (2D). Otherwise the
/// configured policy applies: `resample_mean_fresh_covariance` keeps the
/// sample mean and uses the fresh covariance, `blend_with_previous` averages
/// the partial and previous covariances with weight 0.5 (needs mass >= 2,
/// else the previous covariance is kept), `keep_previous_covariance` reuses
/// the previous covariance. A repaired component's mass is max(mass, 1).
/// Other means are read from `partial`, so repairing in index order lets
/// later repairs see earlier ones. Throws UnrecoverableDegeneracyError when
/// no positive fresh covariance is found within 10 draws.
RepairOutcome repair_component(std::size_t k, const DataSet& data, const MixtureModel& prev,
                               std::span<const ComponentEstimate> partial,
                               RepairReason reason, const SemConfig& cfg, RngStream& rng);

/// Repairs every flagged component in index order, then builds the model
/// with weights mass_k / sum_j mass_j (mass_k / N when nothing was repaired).
MixtureModel finalize_with_repairs(std::vector<ComponentEstimate> estimates,
                                   std::span<const std::optional<RepairReason>> flags,
                                   const DataSet& data, const MixtureModel& prev,
                                   const SemConfig& cfg, RngStream& rng, std::size_t round,
                                   std::vector<RepairEvent>* events);

/// SEM M-step: w_k = c_k / N and the per-component Gaussian MLE over Y_k.
/// Components with c_k < zeta or a covariance that does not factorize are
/// repaired before the weights are finalized.
MixtureModel sem_m_step(const Assignment& assign, const DataSet& data, const MixtureModel& prev,
                        const SemConfig& cfg, RngStream& rng, MultCounter* counter = nullptr,
                        std::vector<RepairEvent>* events = nullptr, std::size_t round = 0);

/// Stream used by round `round` (1-based) of a fit seeded with `seed`.
RngStream round_stream(std::uint64_t seed, std::size_t round);

/// Runs `rounds` SEM iterations. Fully determined by the inputs and
/// cfg.rng_seed.
FitResult sem_fit(const MixtureModel& model0, const DataSet& data, std::size_t rounds,
                  const SemConfig& cfg, OpCounter* ops = nullptr);

}  // namespace gmmsem

#endif  // GMMSEM_SEM_HPP_
