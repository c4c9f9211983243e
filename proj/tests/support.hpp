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

// Shared fixtures for the unit tests and the acceptance suite.

#ifndef GMMSEM_TESTS_SUPPORT_HPP_
#define GMMSEM_TESTS_SUPPORT_HPP_

#include "gmmsem/estep.hpp"
#include "gmmsem/model.hpp"
#include "gmmsem/rng.hpp"
#include "gmmsem/synth.hpp"

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace gmmsem::testing {

inline DataSet rows(const std::vector<std::vector<double>>& pts) {
  RowMatrix m(pts.size(), pts.front().size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts[i].size(); ++j) m(i, j) = pts[i][j];
  }
  return DataSet(std::move(m));
}

inline DataSet line(std::initializer_list<double> xs) {
  RowMatrix m(xs.size(), 1);
  std::size_t i = 0;
  for (double x : xs) m(i++, 0) = x;
  return DataSet(std::move(m));
}

/// 1-D mixture from weights, means and variances.
inline MixtureModel model_1d(std::vector<double> w, std::vector<double> mu, std::vector<double> var) {
  MixtureParams p;
  p.weights = std::move(w);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    p.means.push_back(Vector::Constant(1, mu[k]));
    p.covariances.push_back(Matrix::Constant(1, 1, var[k]));
  }
  return MixtureModel(std::move(p));
}

inline ResponsibilityMatrix one_hot(const std::vector<std::uint32_t>& labels, std::size_t k) {
  RowMatrix p = RowMatrix::Zero(labels.size(), k);
  for (std::size_t n = 0; n < labels.size(); ++n) p(n, labels[n]) = 1.0;
  return ResponsibilityMatrix::from_probs(std::move(p));
}

inline SyntheticDataset synthetic(std::size_t d, std::size_t k, std::size_t n, std::uint64_t seed,
                                  double overlap = 1.0,
                                  WeightMode mode = WeightMode::balanced) {
  GenSpec spec;
  spec.d = d;
  spec.k = k;
  spec.n = n;
  spec.overlap = overlap;
  spec.weight_mode = mode;
  spec.rng_seed = seed;
  return generate_dataset(spec);
}

/// Clusters so far apart (about 1000 standard deviations) that every
/// responsibility is exactly 0 or 1 in double precision.
struct SeparatedFixture {
  DataSet data;
  std::vector<std::uint32_t> labels;
  MixtureModel model0;
};

inline SeparatedFixture separated(std::size_t d, std::size_t k, std::size_t per_cluster,
                                  std::uint64_t seed) {
  RngStream rng(seed);
  const double gap = 1000.0;
  RowMatrix pts(k * per_cluster, d);
  std::vector<std::uint32_t> labels;
  MixtureParams p;
  for (std::size_t c = 0; c < k; ++c) {
    Vector centre = Vector::Zero(d);
    centre[c % d] = gap * static_cast<double>(c / d + 1) * (c % 2 == 0 ? 1.0 : -1.0);
    if (c == 0) centre.setZero();
    for (std::size_t n = 0; n < per_cluster; ++n) {
      for (std::size_t j = 0; j < d; ++j) pts(c * per_cluster + n, j) = centre[j] + rng.normal();
      labels.push_back(static_cast<std::uint32_t>(c));
    }
    Vector start = centre;
    for (std::size_t j = 0; j < d; ++j) start[j] += 0.3 * rng.normal();
    p.means.push_back(start);
    p.covariances.push_back(Matrix::Identity(d, d) * (1.0 + 0.5 * rng.uniform()));
    p.weights.push_back(1.0 / static_cast<double>(k));
  }
  return {DataSet(std::move(pts)), std::move(labels), MixtureModel(std::move(p))};
}

inline bool is_one_hot(const ResponsibilityMatrix& resp) {
  for (Eigen::Index n = 0; n < resp.probs.rows(); ++n) {
    for (Eigen::Index k = 0; k < resp.probs.cols(); ++k) {
      const double p = resp.probs(n, k);
      if (p != 0.0 && p != 1.0) return false;
    }
  }
  return true;
}

}  // namespace gmmsem::testing

#endif  // GMMSEM_TESTS_SUPPORT_HPP_
