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

#ifndef GMMSEM_BOUNDS_HPP_
#define GMMSEM_BOUNDS_HPP_

#include "gmmsem/estep.hpp"
#include "gmmsem/model.hpp"
#include "gmmsem/sem.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gmmsem {

// Proximity bounds between one EM update and one SEM update computed from the
// same responsibilities. All quantities are functions of (resp, data, delta).

/// tau_kd = sqrt(sum_n p_nk (1 - p_nk) (x_n - mu_k)_d^2); K x D.
Matrix compute_tau(const ResponsibilityMatrix& resp, const DataSet& data,
                   std::span<const Vector> em_means);

/// rho_kij = sqrt(sum_n p_nk (1 - p_nk) (Y_kn - Sigma_k)_ij^2) with
/// Y_kn = (x_n - mu_k)(x_n - mu_k)^T; one D x D matrix per component.
std::vector<Matrix> compute_rho(const ResponsibilityMatrix& resp, const DataSet& data,
                                std::span<const Vector> em_means,
                                std::span<const Matrix> em_covs);

struct WeightLambda {
  double value = 0.0;
  /// 2 exp(-r_k / 3) <= delta.
  bool hypothesis_holds = false;
  /// value < 1, required before the mean and covariance bounds mean anything.
  bool below_one = false;

  bool applicable() const noexcept { return hypothesis_holds && below_one; }
};

/// lambda_w = sqrt(3 ln(2 / delta) / r_k).
WeightLambda lambda_weight(double r_k, double delta);

/// Two-branch factor for a bounded zero-mean sum with standard deviation
/// `sigma` and summand bound `c`: sqrt(2e ln(2/delta)) when
/// sigma / c >= sqrt(2e ln(2/delta)) / e, else (2c / sigma) ln(2/delta).
/// Zero when sigma = 0 (the sum vanishes identically).
double deviation_lambda(double sigma, double c, double delta);

inline double lambda_mean(double tau_ki, double spread_i, double delta) {
  return deviation_lambda(tau_ki, spread_i, delta);
}
inline double lambda_cov(double rho_kij, double spread_i, double spread_j, double delta) {
  return deviation_lambda(rho_kij, spread_i * spread_j, delta);
}

/// Everything the three proximity theorems need for one fixed
/// ResponsibilityMatrix. Components with r_k = 0 are NaN throughout; mean
/// and covariance bounds are NaN when lambda_w >= 1. Whether a bound may be
/// relied on is carried by the flags, never by the values.
struct BoundReport {
  double delta = 0.0;
  Vector r;                             // K
  std::vector<WeightLambda> lambda_w;   // K
  Matrix tau;                           // K x D
  std::vector<Matrix> rho;              // K of D x D
  Matrix lambda_mu;                     // K x D
  std::vector<Matrix> lambda_sigma;     // K of D x D
  Vector weight_bound;                  // lambda_w * w_k^EM, see weight_applicable
  Matrix mean_bound;                    // K x D
  Vector mean_bound_euclid;             // K
  std::vector<Matrix> cov_bound;        // K of D x D
  std::vector<bool> weight_applicable;  // hypothesis of the weight theorem
  std::vector<bool> applicable;         // mean / covariance bounds usable

  std::size_t k() const noexcept { return lambda_w.size(); }
};

/// Assembles the bounds at per-check failure probability `delta`. The
/// caller picks delta (e.g. 1 / (100 K (D + 1)) for a joint 1/100 budget).
BoundReport assemble_bounds(const ResponsibilityMatrix& resp, const DataSet& data,
                            std::span<const ComponentEstimate> em_update, double delta);
BoundReport assemble_bounds(const ResponsibilityMatrix& resp, const DataSet& data,
                            const MixtureModel& em_model, double delta);

enum class BoundTarget { weights, means, covariances };

struct ViolationTally {
  bool applicable = false;
  std::size_t trials = 0;
  /// Trials where the theorem's conditioning event held.
  std::size_t conditioned = 0;
  std::size_t violations = 0;

  /// Violation fraction among conditioned trials; nullopt when the
  /// conditioning event never occurred or the bound is not applicable.
  std::optional<double> fraction() const noexcept;
  double conditioning_frequency() const noexcept;
};

struct ViolationReport {
  BoundTarget target = BoundTarget::weights;
  BoundReport bounds;
  std::size_t d = 0;
  std::vector<ViolationTally> weights;      // K
  std::vector<ViolationTally> means;        // K * D
  std::vector<ViolationTally> covariances;  // K * D * D

  const ViolationTally& mean(std::size_t k, std::size_t i) const { return means[k * d + i]; }
  const ViolationTally& cov(std::size_t k, std::size_t i, std::size_t j) const {
    return covariances[(k * d + i) * d + j];
  }
};

/// Samples Z `trials` times (>= 1000) from the fixed responsibilities and
/// counts bound violations. Weights are counted unconditionally, means on
/// the event E_w, covariances on E_w plus the mean bounds of both
/// coordinates. Trial t draws from derive_seed(seed, {t}).
ViolationReport monte_carlo_violation_rate(const ResponsibilityMatrix& resp, const DataSet& data,
                                           double delta, std::size_t trials, std::uint64_t seed,
                                           BoundTarget target);

}  // namespace gmmsem

#endif  // GMMSEM_BOUNDS_HPP_
