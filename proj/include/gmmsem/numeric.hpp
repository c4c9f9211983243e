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

#ifndef GMMSEM_NUMERIC_HPP_
#define GMMSEM_NUMERIC_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace gmmsem {

/// Neumaier-compensated running sum. The error term stays O(eps) independent
/// of the number of summands, which the bound formulas (dividing by r_k over
/// up to millions of rows) rely on.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// ln(sum_i exp(v_i)) with the max-shift; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values) noexcept;

/// Counts real multiplications performed by the update loops. Kernels add
/// their analytic per-call counts; nothing is sampled.
struct MultCounter {
  std::uint64_t count = 0;
  void add(std::uint64_t m) noexcept { count += m; }
};

inline void count_mults(MultCounter* counter, std::uint64_t m) noexcept {
  if (counter != nullptr) counter->add(m);
}

/// Per-iteration multiplication counts and wall-clock times of one fit.
struct OpCounter {
  std::vector<std::uint64_t> mults;
  std::vector<std::int64_t> wall_ns;

  void record(std::uint64_t iteration_mults, std::int64_t iteration_ns) {
    mults.push_back(iteration_mults);
    wall_ns.push_back(iteration_ns);
  }
  std::uint64_t total_mults() const noexcept {
    std::uint64_t total = 0;
    for (auto m : mults) total += m;
    return total;
  }
};

}  // namespace gmmsem

#endif  // GMMSEM_NUMERIC_HPP_
