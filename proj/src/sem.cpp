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

#include "gmmsem/sem.hpp"

#include "gmmsem/error.hpp"
#include "moments.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace gmmsem {

namespace {

constexpr int kFreshCovarianceRetries = 10;

/// (1 / 2D) * min_{i != k} ||mu - mu_i||^2 over components with a finite
/// mean; with no other component, (1 / 2D) * mean ||x_n - mu||^2.
double fresh_variance(std::size_t k, const Vector& mu, std::span<const ComponentEstimate> partial,
                      const DataSet& data) {
  const double two_d = 2.0 * static_cast<double>(data.d());
  double best = std::numeric_limits<double>::infinity();
  bool any_other = false;
  for (std::size_t i = 0; i < partial.size(); ++i) {
    if (i == k || partial[i].mean.size() == 0 || !partial[i].mean.allFinite()) continue;
    any_other = true;
    best = std::min(best, (mu - partial[i].mean).squaredNorm());
  }
  if (any_other) return best / two_d;
  CompensatedSum total;
  for (std::size_t n = 0; n < data.n(); ++n) {
    total.add((Eigen::Map<const Vector>(data.row(n), data.d()) - mu).squaredNorm());
  }
  return total.value() / static_cast<double>(data.n()) / two_d;
}

Vector draw_point(const DataSet& data, RngStream& rng) {
  return Eigen::Map<const Vector>(data.row(rng.uniform_index(data.n())), data.d());
}

}  // namespace

std::string_view to_string(RepairPolicy policy) {
  switch (policy) {
    case RepairPolicy::resample_mean_fresh_covariance: return "resample_mean_fresh_covariance";
    case RepairPolicy::blend_with_previous: return "blend_with_previous";
    case RepairPolicy::keep_previous_covariance: return "keep_previous_covariance";
  }
  return "unknown";
}

RepairPolicy parse_repair_policy(std::string_view name) {
  if (name == "resample" || name == "resample_mean_fresh_covariance") {
    return RepairPolicy::resample_mean_fresh_covariance;
  }
  if (name == "blend" || name == "blend_with_previous") return RepairPolicy::blend_with_previous;
  if (name == "keep" || name == "keep_previous_covariance") {
    return RepairPolicy::keep_previous_covariance;
  }
  throw UsageError("unknown repair policy '" + std::string(name) + "'");
}

std::size_t SemConfig::effective_zeta(std::size_t d) const {
  if (!zeta) return d + 1;
  if (*zeta < 1) throw UsageError("zeta must be at least 1");
  return *zeta;
}

std::string_view to_string(RepairReason reason) {
  switch (reason) {
    case RepairReason::empty: return "empty";
    case RepairReason::too_few_points: return "too_few_points";
    case RepairReason::singular_covariance: return "singular_covariance";
  }
  return "unknown";
}

std::string_view to_string(RepairAction action) {
  switch (action) {
    case RepairAction::ridge: return "ridge";
    case RepairAction::resample_mean: return "resample_mean";
    case RepairAction::fresh_covariance: return "fresh_covariance";
    case RepairAction::blend: return "blend";
    case RepairAction::keep_previous: return "keep_previous";
  }
  return "unknown";
}

std::string RepairEvent::describe() const {
  return "round " + std::to_string(round) + " component " + std::to_string(component) + ": " +
         std::string(to_string(reason)) + " (support " + std::to_string(support) + ") -> " +
         std::string(to_string(action));
}

Assignment sample_assignment(const ResponsibilityMatrix& resp, RngStream& rng) {
  const std::size_t k = resp.k();
  std::vector<std::uint32_t> labels(resp.n());
  for (std::size_t n = 0; n < resp.n(); ++n) {
    const double u = rng.uniform();
    labels[n] = static_cast<std::uint32_t>(sample_categorical({resp.row(n), k}, u));
  }
  return Assignment(std::move(labels), k);
}

std::vector<ComponentEstimate> assignment_moments(const Assignment& assign, const DataSet& data,
                                                  MultCounter* counter) {
  const std::size_t k = assign.k();
  const std::size_t d = data.d();
  if (assign.n() != data.n()) {
    throw DataError("assignment has " + std::to_string(assign.n()) + " labels for " +
                    std::to_string(data.n()) + " points");
  }
  std::vector<Vector> sums(k, Vector::Zero(d));
  for (std::size_t n = 0; n < data.n(); ++n) {
    double* s = sums[assign.label(n)].data();
    const double* x = data.row(n);
    for (std::size_t i = 0; i < d; ++i) s[i] += x[i];
  }
  std::vector<ComponentEstimate> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    out[j].mass = static_cast<double>(assign.count(j));
    out[j].mean = assign.count(j) > 0
                      ? detail::finish_mean(sums[j], out[j].mass)
                      : Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<Matrix> scatter(k, Matrix::Zero(d, d));
  std::vector<double> diff(d);
  for (std::size_t n = 0; n < data.n(); ++n) {
    const std::uint32_t l = assign.label(n);
    const double* x = data.row(n);
    const double* mu = out[l].mean.data();
    for (std::size_t i = 0; i < d; ++i) diff[i] = x[i] - mu[i];
    detail::add_outer(scatter[l].data(), diff.data(), diff.data(), d);
  }
  count_mults(counter, data.n() * d * d);
  for (std::size_t j = 0; j < k; ++j) {
    out[j].cov = assign.count(j) > 0 ? detail::finish_covariance(scatter[j], out[j].mass)
                                     : Matrix::Zero(d, d);
  }
  return out;
}

RepairOutcome repair_component(std::size_t k, const DataSet& data, const MixtureModel& prev,
                               std::span<const ComponentEstimate> partial,
                               RepairReason reason, const SemConfig& cfg, RngStream& rng) {
  const std::size_t d = data.d();
  const ComponentEstimate& current = partial[k];
  const bool has_mean = current.mass > 0.0 && current.mean.size() == static_cast<Eigen::Index>(d) &&
                        current.mean.allFinite() && reason != RepairReason::empty;

  auto fresh = [&](bool keep_mean) -> RepairOutcome {
    Vector mu = keep_mean ? current.mean : draw_point(data, rng);
    RepairAction action = keep_mean ? RepairAction::fresh_covariance : RepairAction::resample_mean;
    for (int attempt = 0; attempt <= kFreshCovarianceRetries; ++attempt) {
      const double variance = fresh_variance(k, mu, partial, data);
      if (variance > 0.0 && std::isfinite(variance)) {
        return {ComponentEstimate{std::max(current.mass, 1.0), std::move(mu),
                                  Matrix::Identity(d, d) * variance},
                action};
      }
      mu = draw_point(data, rng);
      action = RepairAction::resample_mean;
    }
    throw UnrecoverableDegeneracyError(
        k, "component " + std::to_string(k) +
               ": resampled mean coincides with every other mean after " +
               std::to_string(kFreshCovarianceRetries) + " retries");
  };

  if (!has_mean) return fresh(false);

  ComponentEstimate est{std::max(current.mass, 1.0), current.mean, Matrix()};
  RepairAction action = RepairAction::keep_previous;
  switch (cfg.repair_policy) {
    case RepairPolicy::resample_mean_fresh_covariance:
      return fresh(true);
    case RepairPolicy::blend_with_previous:
      if (current.mass >= 2.0) {
        est.cov = 0.5 * current.cov + 0.5 * prev.covariance(k);
        est.cov = 0.5 * (est.cov + est.cov.transpose()).eval();
        action = RepairAction::blend;
      } else {
        est.cov = prev.covariance(k);
      }
      break;
    case RepairPolicy::keep_previous_covariance:
      est.cov = prev.covariance(k);
      break;
  }
  if (!CholeskyFactor::compute(est.cov)) return fresh(true);
  return {std::move(est), action};
}

MixtureModel finalize_with_repairs(std::vector<ComponentEstimate> estimates,
                                   std::span<const std::optional<RepairReason>> flags,
                                   const DataSet& data, const MixtureModel& prev,
                                   const SemConfig& cfg, RngStream& rng, std::size_t round,
                                   std::vector<RepairEvent>* events) {
  const std::size_t k = estimates.size();
  bool repaired = false;
  for (std::size_t j = 0; j < k; ++j) {
    if (!flags[j]) continue;
    const double support = estimates[j].mass;
    RepairOutcome outcome = repair_component(j, data, prev, estimates, *flags[j], cfg, rng);
    estimates[j] = std::move(outcome.estimate);
    repaired = true;
    if (events != nullptr) events->push_back({round, j, *flags[j], outcome.action, support});
  }
  double normalizer = static_cast<double>(data.n());
  if (repaired) {
    normalizer = 0.0;
    for (const auto& e : estimates) normalizer += e.mass;
  }
  MixtureParams params;
  params.weights.reserve(k);
  for (auto& e : estimates) {
    params.weights.push_back(e.mass / normalizer);
    params.means.push_back(std::move(e.mean));
    params.covariances.push_back(std::move(e.cov));
  }
  return MixtureModel(std::move(params));
}

MixtureModel sem_m_step(const Assignment& assign, const DataSet& data, const MixtureModel& prev,
                        const SemConfig& cfg, RngStream& rng, MultCounter* counter,
                        std::vector<RepairEvent>* events, std::size_t round) {
  if (prev.d() != data.d() || prev.k() != assign.k()) {
    throw DataError("sem_m_step: previous model does not match data or assignment");
  }
  const std::size_t zeta = cfg.effective_zeta(data.d());
  std::vector<ComponentEstimate> estimates = assignment_moments(assign, data, counter);
  std::vector<std::optional<RepairReason>> flags(estimates.size());
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    const std::size_t count = assign.count(j);
    if (count == 0) {
      flags[j] = RepairReason::empty;
    } else if (count < zeta) {
      flags[j] = RepairReason::too_few_points;
    } else if (!CholeskyFactor::compute(estimates[j].cov)) {
      flags[j] = RepairReason::singular_covariance;
    }
  }
  return finalize_with_repairs(std::move(estimates), flags, data, prev, cfg, rng, round, events);
}

RngStream round_stream(std::uint64_t seed, std::size_t round) {
  return RngStream(derive_seed(seed, {static_cast<std::uint64_t>(round)}));
}

FitResult sem_fit(const MixtureModel& model0, const DataSet& data, std::size_t rounds,
                  const SemConfig& cfg, OpCounter* ops) {
  if (model0.d() != data.d()) {
    throw DataError("sem_fit: model dimension " + std::to_string(model0.d()) +
                    " does not match data dimension " + std::to_string(data.d()));
  }
  if (data.n() < data.d() + 1) throw DataError("fitting needs N >= D + 1 points");
  cfg.effective_zeta(data.d());
  FitResult result;
  result.models.reserve(rounds);
  const MixtureModel* current = &model0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    MultCounter mults;
    RngStream rng = round_stream(cfg.rng_seed, t);
    const ResponsibilityMatrix resp = responsibilities(*current, data, &mults);
    const Assignment assign = sample_assignment(resp, rng);
    result.models.push_back(
        sem_m_step(assign, data, *current, cfg, rng, &mults, &result.repairs, t));
    const auto stop = std::chrono::steady_clock::now();
    if (ops != nullptr) {
      ops->record(mults.count,
                  std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
    }
    current = &result.models.back();
  }
  return result;
}

}  // namespace gmmsem
