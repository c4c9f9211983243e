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

#include "gmmsem/estep.hpp"

#include "gmmsem/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace gmmsem {

namespace {

Vector sum_columns(const RowMatrix& probs) {
  const auto k = probs.cols();
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(k));
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    for (Eigen::Index j = 0; j < k; ++j) sums[j].add(probs(n, j));
  }
  Vector out(k);
  for (Eigen::Index j = 0; j < k; ++j) out[j] = sums[j].value();
  return out;
}

}  // namespace

ResponsibilityMatrix ResponsibilityMatrix::from_probs(RowMatrix probs) {
  if (probs.rows() < 1 || probs.cols() < 1) throw DataError("empty responsibility matrix");
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    double row_sum = 0.0;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(n, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw DataError("responsibility out of [0,1] at row " + std::to_string(n + 1));
      }
      row_sum += p;
    }
    if (std::fabs(row_sum - 1.0) > 1e-12) {
      throw DataError("responsibility row " + std::to_string(n + 1) + " does not sum to 1");
    }
  }
  Vector sums = sum_columns(probs);
  return ResponsibilityMatrix{std::move(probs), std::move(sums)};
}

ResponsibilityMatrix responsibilities(const MixtureModel& model, const DataSet& data,
                                      MultCounter* counter) {
  if (model.d() != data.d()) {
    throw DataError("responsibilities: model dimension " + std::to_string(model.d()) +
                    " does not match data dimension " + std::to_string(data.d()));
  }
  const std::size_t n_points = data.n();
  const std::size_t k = model.k();
  const std::size_t d = data.d();
  const double log_2pi = std::log(2.0 * std::numbers::pi);

  // Log numerators l_nk = ln w_k + ln N(x_n | mu_k, Sigma_k), one component at a time.
  RowMatrix logp(n_points, k);
  constexpr std::size_t kBlock = 1024;
  std::vector<double> maha(kBlock);
  Matrix work;
  for (std::size_t j = 0; j < k; ++j) {
    const CholeskyFactor& factor = model.factor(j);
    const double offset = std::log(model.weight(j)) -
                          0.5 * (static_cast<double>(d) * log_2pi + factor.log_det());
    for (std::size_t start = 0; start < n_points; start += kBlock) {
      const std::size_t m = std::min(kBlock, n_points - start);
      factor.mahalanobis_block(data.row(start), m, model.mean(j), work, maha.data());
      for (std::size_t c = 0; c < m; ++c) logp(start + c, j) = offset - 0.5 * maha[c];
    }
    count_mults(counter, n_points * (factor.mahalanobis_mults() + 1));
  }

  for (std::size_t n = 0; n < n_points; ++n) {
    double* row = logp.data() + n * k;
    double max_value = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) max_value = std::max(max_value, row[j]);
    if (!std::isfinite(max_value)) {
      throw DataError("responsibilities: row " + std::to_string(n + 1) +
                      " has zero density under every component");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - max_value);
      total += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= total;
  }

  Vector sums = sum_columns(logp);
  return ResponsibilityMatrix{std::move(logp), std::move(sums)};
}

}  // namespace gmmsem
