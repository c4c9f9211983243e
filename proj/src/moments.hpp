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

#ifndef GMMSEM_SRC_MOMENTS_HPP_
#define GMMSEM_SRC_MOMENTS_HPP_

// Accumulation helpers shared by the EM and SEM M-steps. Both steps must go
// through these so that hard responsibilities reproduce the SEM update bit
// for bit.

#include "gmmsem/model.hpp"

#include <cstddef>

namespace gmmsem::detail {

/// c += q d^T over a row-major D x D buffer.
inline void add_outer(double* c, const double* q, const double* d, std::size_t dim) noexcept {
  for (std::size_t i = 0; i < dim; ++i) {
    const double qi = q[i];
    double* ci = c + i * dim;
    for (std::size_t j = 0; j < dim; ++j) ci[j] += qi * d[j];
  }
}

inline Vector finish_mean(const Vector& sum, double mass) { return sum / mass; }

/// Divides the accumulated scatter by the mass and symmetrizes.
inline Matrix finish_covariance(const Matrix& scatter, double mass) {
  const Matrix c = scatter / mass;
  return 0.5 * (c + c.transpose());
}

}  // namespace gmmsem::detail

#endif  // GMMSEM_SRC_MOMENTS_HPP_
