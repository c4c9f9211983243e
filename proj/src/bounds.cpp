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

#include "gmmsem/bounds.hpp"

#include "gmmsem/em.hpp"

#include "gmmsem/error.hpp"
#include "gmmsem/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gmmsem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Rounding slack when comparing a realized deviation against its bound.
constexpr double kCompareSlack = 1e-12;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
}

bool exceeds(double deviation, double bound, double scale) {
  return deviation > bound + kCompareSlack * scale;
}

}  // namespace

Matrix compute_tau(const ResponsibilityMatrix& resp, const DataSet& data,
                   std::span<const Vector> em_means) {
  const std::size_t k = resp.k();
  const std::size_t d = data.d();
  if (em_means.size() != k || resp.n() != data.n()) {
    throw DataError("compute_tau: shape mismatch");
  }
  Matrix tau(k, d);
  std::vector<CompensatedSum> sums(d);
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(sums.begin(), sums.end(), CompensatedSum{});
    const double* mu = em_means[j].data();
    for (std::size_t n = 0; n < data.n(); ++n) {
      const double p = resp.probs(n, j);
      const double v = p * (1.0 - p);
      if (v == 0.0) continue;
      const double* x = data.row(n);
      for (std::size_t i = 0; i < d; ++i) {
        const double dev = x[i] - mu[i];
        sums[i].add(v * dev * dev);
      }
    }
    for (std::size_t i = 0; i < d; ++i) tau(j, i) = std::sqrt(sums[i].value());
  }
  return tau;
}

std::vector<Matrix> compute_rho(const ResponsibilityMatrix& resp, const DataSet& data,
                                std::span<const Vector> em_means,
                                std::span<const Matrix> em_covs) {
  const std::size_t k = resp.k();
  const std::size_t d = data.d();
  if (em_means.size() != k || em_covs.size() != k || resp.n() != data.n()) {
    throw DataError("compute_rho: shape mismatch");
  }
  std::vector<Matrix> rho(k, Matrix::Zero(d, d));
  std::vector<CompensatedSum> sums(d * d);
  std::vector<double> dev(d);
  for (std::size_t j = 0; j < k; ++j) {
    std::fill(sums.begin(), sums.end(), CompensatedSum{});
    const double* mu = em_means[j].data();
    const Matrix& sigma = em_covs[j];
    for (std::size_t n = 0; n < data.n(); ++n) {
      const double p = resp.probs(n, j);
      const double v = p * (1.0 - p);
      if (v == 0.0) continue;
      const double* x = data.row(n);
      for (std::size_t i = 0; i < d; ++i) dev[i] = x[i] - mu[i];
      // Upper triangle only; (Y - Sigma)_ij is symmetric in (i, j).
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
          const double e = dev[a] * dev[b] - sigma(a, b);
          sums[a * d + b].add(v * e * e);
        }
      }
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        rho[j](a, b) = rho[j](b, a) = std::sqrt(sums[a * d + b].value());
      }
    }
  }
  return rho;
}

WeightLambda lambda_weight(double r_k, double delta) {
  check_delta(delta);
  WeightLambda out;
  if (!(r_k > 0.0)) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::sqrt(3.0 * std::log(2.0 / delta) / r_k);
  out.hypothesis_holds = delta >= 2.0 * std::exp(-r_k / 3.0);
  out.below_one = out.value < 1.0;
  return out;
}

double deviation_lambda(double sigma, double c, double delta) {
  check_delta(delta);
  if (sigma == 0.0) return 0.0;
  const double log_term = std::log(2.0 / delta);
  const double first = std::sqrt(2.0 * std::numbers::e * log_term);
  if (sigma / c >= first / std::numbers::e) return first;
  return 2.0 * c / sigma * log_term;
}

BoundReport assemble_bounds(const ResponsibilityMatrix& resp, const DataSet& data,
                            std::span<const ComponentEstimate> em_update, double delta) {
  check_delta(delta);
  const std::size_t k = resp.k();
  const std::size_t d = data.d();
  if (em_update.size() != k) throw DataError("assemble_bounds: component count mismatch");
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (const auto& e : em_update) {
    means.push_back(e.mean);
    covs.push_back(e.cov);
  }
  const Vector& spread = data.spread();
  const double n = static_cast<double>(data.n());

  BoundReport rep;
  rep.delta = delta;
  rep.r = resp.column_sums;
  rep.tau = compute_tau(resp, data, means);
  rep.rho = compute_rho(resp, data, means, covs);
  rep.lambda_mu = Matrix::Constant(k, d, kNaN);
  rep.lambda_sigma.assign(k, Matrix::Constant(d, d, kNaN));
  rep.weight_bound = Vector::Constant(k, kNaN);
  rep.mean_bound = Matrix::Constant(k, d, kNaN);
  rep.mean_bound_euclid = Vector::Constant(k, kNaN);
  rep.cov_bound.assign(k, Matrix::Constant(d, d, kNaN));
  rep.weight_applicable.assign(k, false);
  rep.applicable.assign(k, false);

  for (std::size_t j = 0; j < k; ++j) {
    const double r = rep.r[j];
    rep.lambda_w.push_back(lambda_weight(r, delta));
    const WeightLambda& lw = rep.lambda_w.back();
    rep.weight_applicable[j] = lw.hypothesis_holds;
    rep.applicable[j] = lw.applicable();
    if (!(r > 0.0)) continue;
    rep.weight_bound[j] = lw.value * (r / n);
    for (std::size_t i = 0; i < d; ++i) {
      rep.lambda_mu(j, i) = lambda_mean(rep.tau(j, i), spread[i], delta);
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        rep.lambda_sigma[j](a, b) = lambda_cov(rep.rho[j](a, b), spread[a], spread[b], delta);
      }
    }
    // 1 / (1 - lambda_w) has no meaning once lambda_w >= 1.
    if (!lw.below_one) continue;
    const double shrink = 1.0 - lw.value;
    double euclid_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      rep.mean_bound(j, i) = rep.lambda_mu(j, i) / shrink * rep.tau(j, i) / r;
      euclid_sq += rep.mean_bound(j, i) * rep.mean_bound(j, i);
    }
    rep.mean_bound_euclid[j] = std::sqrt(euclid_sq);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        rep.cov_bound[j](a, b) =
            rep.lambda_sigma[j](a, b) / shrink * rep.rho[j](a, b) / r +
            rep.lambda_mu(j, a) * rep.lambda_mu(j, b) / (shrink * shrink) * rep.tau(j, a) *
                rep.tau(j, b) / (r * r);
      }
    }
  }
  return rep;
}

BoundReport assemble_bounds(const ResponsibilityMatrix& resp, const DataSet& data,
                            const MixtureModel& em_model, double delta) {
  std::vector<ComponentEstimate> update;
  for (std::size_t j = 0; j < em_model.k(); ++j) {
    update.push_back({resp.column_sums[j], em_model.mean(j), em_model.covariance(j)});
  }
  return assemble_bounds(resp, data, update, delta);
}

std::optional<double> ViolationTally::fraction() const noexcept {
  if (!applicable || conditioned == 0) return std::nullopt;
  return static_cast<double>(violations) / static_cast<double>(conditioned);
}

double ViolationTally::conditioning_frequency() const noexcept {
  return trials == 0 ? 0.0 : static_cast<double>(conditioned) / static_cast<double>(trials);
}

ViolationReport monte_carlo_violation_rate(const ResponsibilityMatrix& resp, const DataSet& data,
                                           double delta, std::size_t trials, std::uint64_t seed,
                                           BoundTarget target) {
  if (trials < 1000) throw UsageError("monte_carlo_violation_rate needs at least 1000 trials");
  const std::size_t k = resp.k();
  const std::size_t d = data.d();
  const double n = static_cast<double>(data.n());

  const std::vector<ComponentEstimate> em = em_moments(resp, data);
  ViolationReport rep;
  rep.target = target;
  rep.bounds = assemble_bounds(resp, data, em, delta);
  rep.d = d;
  const BoundReport& b = rep.bounds;
  const Vector& spread = data.spread();

  ViolationTally blank;
  blank.trials = trials;
  rep.weights.assign(k, blank);
  if (target != BoundTarget::weights) rep.means.assign(k * d, blank);
  if (target == BoundTarget::covariances) rep.covariances.assign(k * d * d, blank);
  for (std::size_t j = 0; j < k; ++j) {
    rep.weights[j].applicable = b.weight_applicable[j];
    for (std::size_t i = 0; i < d && !rep.means.empty(); ++i) {
      rep.means[j * d + i].applicable = b.applicable[j];
    }
    for (std::size_t idx = 0; idx < d * d && !rep.covariances.empty(); ++idx) {
      rep.covariances[j * d * d + idx].applicable = b.applicable[j];
    }
  }

  std::vector<std::uint8_t> mean_ok(d);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const Assignment assign = sample_assignment(resp, rng);
    std::vector<ComponentEstimate> sem;
    if (target != BoundTarget::weights) sem = assignment_moments(assign, data);
    for (std::size_t j = 0; j < k; ++j) {
      const double w_em = b.r[j] / n;
      const double w_sem = static_cast<double>(assign.count(j)) / n;
      const double w_dev = std::fabs(w_sem - w_em);
      if (b.weight_applicable[j]) {
        ViolationTally& tw = rep.weights[j];
        ++tw.conditioned;
        if (exceeds(w_dev, b.weight_bound[j], w_em)) ++tw.violations;
      }
      if (target == BoundTarget::weights || !b.applicable[j]) continue;
      if (w_dev > b.weight_bound[j]) continue;  // outside E_w
      for (std::size_t i = 0; i < d; ++i) {
        const double dev = std::fabs(sem[j].mean[i] - em[j].mean[i]);
        mean_ok[i] = dev <= b.mean_bound(j, i) ? 1 : 0;
        ViolationTally& tm = rep.means[j * d + i];
        ++tm.conditioned;
        if (exceeds(dev, b.mean_bound(j, i), spread[i])) ++tm.violations;
      }
      if (target != BoundTarget::covariances) continue;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t c = 0; c < d; ++c) {
          if (!mean_ok[a] || !mean_ok[c]) continue;  // outside E_{w,lambda}
          ViolationTally& tc = rep.covariances[(j * d + a) * d + c];
          ++tc.conditioned;
          const double dev = std::fabs(sem[j].cov(a, c) - em[j].cov(a, c));
          if (exceeds(dev, b.cov_bound[j](a, c), spread[a] * spread[c])) ++tc.violations;
        }
      }
    }
  }
  return rep;
}

}  // namespace gmmsem
