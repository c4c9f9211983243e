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

#include "gmmsem/em.hpp"

#include "gmmsem/error.hpp"
#include "moments.hpp"

#include <chrono>
#include <limits>

namespace gmmsem {

namespace {

struct EmStepOutcome {
  std::vector<ComponentEstimate> estimates;
  std::vector<std::optional<RepairReason>> flags;
};

EmStepOutcome em_step_estimates(const ResponsibilityMatrix& resp, const DataSet& data,
                                MultCounter* counter, std::size_t round,
                                std::vector<RepairEvent>* events) {
  EmStepOutcome out{em_moments(resp, data, counter), {}};
  out.flags.resize(out.estimates.size());
  const double threshold = kEmDegenerateFraction * static_cast<double>(data.n());
  for (std::size_t j = 0; j < out.estimates.size(); ++j) {
    ComponentEstimate& e = out.estimates[j];
    if (!(e.mass >= threshold)) {
      out.flags[j] = RepairReason::empty;
      continue;
    }
    if (CholeskyFactor::compute(e.cov)) continue;
    if (ridge_repair(e.cov)) {
      if (events != nullptr) {
        events->push_back({round, j, RepairReason::singular_covariance, RepairAction::ridge, e.mass});
      }
      continue;
    }
    out.flags[j] = RepairReason::singular_covariance;
  }
  return out;
}

}  // namespace

std::vector<ComponentEstimate> em_moments(const ResponsibilityMatrix& resp, const DataSet& data,
                                          MultCounter* counter) {
  if (resp.n() != data.n()) {
    throw DataError("responsibilities have " + std::to_string(resp.n()) + " rows for " +
                    std::to_string(data.n()) + " points");
  }
  const std::size_t k = resp.k();
  const std::size_t d = data.d();
  const double threshold = kEmDegenerateFraction * static_cast<double>(data.n());
  std::vector<ComponentEstimate> out(k);
  std::vector<double> diff(d), weighted(d);
  for (std::size_t j = 0; j < k; ++j) {
    ComponentEstimate& e = out[j];
    e.mass = resp.column_sums[j];
    if (!(e.mass >= threshold)) {
      e.mean = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
      e.cov = Matrix::Zero(d, d);
      continue;
    }
    std::uint64_t active = 0;
    Vector sum = Vector::Zero(d);
    for (std::size_t n = 0; n < data.n(); ++n) {
      const double p = resp.probs(n, j);
      if (p == 0.0) continue;
      ++active;
      const double* x = data.row(n);
      for (std::size_t i = 0; i < d; ++i) sum[i] += p * x[i];
    }
    e.mean = detail::finish_mean(sum, e.mass);
    Matrix scatter = Matrix::Zero(d, d);
    const double* mu = e.mean.data();
    for (std::size_t n = 0; n < data.n(); ++n) {
      const double p = resp.probs(n, j);
      if (p == 0.0) continue;
      const double* x = data.row(n);
      for (std::size_t i = 0; i < d; ++i) {
        diff[i] = x[i] - mu[i];
        weighted[i] = p * diff[i];
      }
      detail::add_outer(scatter.data(), weighted.data(), diff.data(), d);
    }
    e.cov = detail::finish_covariance(scatter, e.mass);
    count_mults(counter, active * (d * d + 2 * d));
  }
  return out;
}

bool ridge_repair(Matrix& cov) {
  const double d = static_cast<double>(cov.rows());
  const double trace = cov.trace();
  if (!(trace > 0.0) || !std::isfinite(trace)) return false;
  for (double eps = kRidgeStart; eps <= kRidgeMax * (1.0 + 1e-9); eps *= 2.0) {
    Matrix trial = cov;
    trial.diagonal().array() += eps * trace / d;
    if (CholeskyFactor::compute(trial)) {
      cov = std::move(trial);
      return true;
    }
  }
  return false;
}

MixtureModel em_m_step(const ResponsibilityMatrix& resp, const DataSet& data,
                       MultCounter* counter) {
  if (data.n() < data.d() + 1) throw DataError("fitting needs N >= D + 1 points");
  EmStepOutcome step = em_step_estimates(resp, data, counter, 0, nullptr);
  for (std::size_t j = 0; j < step.flags.size(); ++j) {
    if (step.flags[j]) {
      throw DegenerateComponentError(
          j, "component " + std::to_string(j) + " is degenerate (" +
                 std::string(to_string(*step.flags[j])) + ", r_k = " +
                 std::to_string(step.estimates[j].mass) + ")");
    }
  }
  const double n = static_cast<double>(data.n());
  MixtureParams params;
  for (auto& e : step.estimates) {
    params.weights.push_back(e.mass / n);
    params.means.push_back(std::move(e.mean));
    params.covariances.push_back(std::move(e.cov));
  }
  return MixtureModel(std::move(params));
}

FitResult em_fit(const MixtureModel& model0, const DataSet& data, std::size_t rounds,
                 const EmConfig& cfg, OpCounter* ops) {
  if (model0.d() != data.d()) {
    throw DataError("em_fit: model dimension " + std::to_string(model0.d()) +
                    " does not match data dimension " + std::to_string(data.d()));
  }
  if (data.n() < data.d() + 1) throw DataError("fitting needs N >= D + 1 points");
  const SemConfig repair_cfg{std::nullopt, cfg.repair_policy, cfg.rng_seed};
  FitResult result;
  result.models.reserve(rounds);
  const MixtureModel* current = &model0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto start = std::chrono::steady_clock::now();
    MultCounter mults;
    const ResponsibilityMatrix resp = responsibilities(*current, data, &mults);
    EmStepOutcome step = em_step_estimates(resp, data, &mults, t, &result.repairs);
    RngStream rng = round_stream(cfg.rng_seed, t);
    result.models.push_back(finalize_with_repairs(std::move(step.estimates), step.flags, data,
                                                  *current, repair_cfg, rng, t,
                                                  &result.repairs));
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
