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

#ifndef GMMSEM_ESTEP_HPP_
#define GMMSEM_ESTEP_HPP_

#include "gmmsem/model.hpp"
#include "gmmsem/numeric.hpp"

namespace gmmsem {

/// Posteriors p_nk = p(z_nk = 1 | X, theta) and column sums r_k.
struct ResponsibilityMatrix {
  RowMatrix probs;     // N x K
  Vector column_sums;  // r_k, compensated sums

  std::size_t n() const noexcept { return static_cast<std::size_t>(probs.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(probs.cols()); }
  const double* row(std::size_t n) const noexcept { return probs.data() + n * k(); }

  /// Builds from an explicit N x K matrix (rows must be probability vectors);
  /// computes r_k. Throws DataError on bad entries.
  static ResponsibilityMatrix from_probs(RowMatrix probs);
};

/// E-step shared by EM and SEM. Row-wise log-sum-exp; every row is divided
/// by its own sum after exponentiation. Throws DataError on dimension
/// mismatch or when a row is impossible under every component.
ResponsibilityMatrix responsibilities(const MixtureModel& model, const DataSet& data,
                                      MultCounter* counter = nullptr);

}  // namespace gmmsem

#endif  // GMMSEM_ESTEP_HPP_
