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

#ifndef GMMSEM_EM_HPP_
#define GMMSEM_EM_HPP_

#include "gmmsem/estep.hpp"
#include "gmmsem/model.hpp"
#include "gmmsem/numeric.hpp"
#include "gmmsem/sem.hpp"

#include <vector>

namespace gmmsem {

/// Components with r_k below this fraction of N are degenerate.
inline constexpr double kEmDegenerateFraction = 1e-12;
inline constexpr double kRidgeStart = 1e-6;
inline constexpr double kRidgeMax = 1e-2;

struct EmConfig {
  /// Policy used once ridge escalation is exhausted.
  RepairPolicy repair_policy = RepairPolicy::resample_mean_fresh_covariance;
  /// Only consumed when a component has to be resampled.
  std::uint64_t rng_seed = 0;
};

/// Weighted moments r_k, mu_k and Sigma_k for every component (two-pass
/// covariance around the new mean). Components with r_k < 1e-12 N get a NaN
/// mean and a zero covariance.
std::vector<ComponentEstimate> em_moments(const ResponsibilityMatrix& resp, const DataSet& data,
                                          MultCounter* counter = nullptr);

/// Adds eps * trace(Sigma) / D * I with eps = 1e-6, 2e-6, ... up to 1e-2
/// until the covariance factorizes. Returns false when nothing works.
bool ridge_repair(Matrix& cov);

/// Deterministic EM M-step. Applies ridge repair to covariances that do not
/// factorize; throws DegenerateComponentError(k) when r_k is negligible or
/// ridge repair fails.
MixtureModel em_m_step(const ResponsibilityMatrix& resp, const DataSet& data,
                       MultCounter* counter = nullptr);

/// Runs `rounds` EM iterations from model0. Degenerate components escalate
/// to repair_component with the configured policy.
FitResult em_fit(const MixtureModel& model0, const DataSet& data, std::size_t rounds,
                 const EmConfig& cfg = {}, OpCounter* ops = nullptr);

}  // namespace gmmsem

#endif  // GMMSEM_EM_HPP_
