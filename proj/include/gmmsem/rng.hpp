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

#ifndef GMMSEM_RNG_HPP_
#define GMMSEM_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace gmmsem {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a master seed and a path of
/// indices, e.g. derive_seed(master, {init, run}). The result depends only
/// on the arguments, never on the order in which streams are created.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded random stream. Distributions are implemented here rather than
/// taken from <random> so that draws are identical across standard
/// libraries (std::mt19937_64 itself is fully specified).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero();
  /// Uniform integer in [0, n); n > 0.
  std::size_t uniform_index(std::size_t n);
  /// Standard normal via Box-Muller (one draw per call, no caching).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw from a probability row given u in [0, 1). Mass lost to
/// rounding (u beyond the accumulated total) goes to the last entry with
/// positive probability. Zero-probability entries are never returned.
std::size_t sample_categorical(std::span<const double> probs, double u) noexcept;

}  // namespace gmmsem

#endif  // GMMSEM_RNG_HPP_
