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

#ifndef GMMSEM_MODEL_HPP_
#define GMMSEM_MODEL_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gmmsem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-coordinate spread max_n x_nd - min_n x_nd of an N x D point matrix.
Vector compute_spread(const RowMatrix& points);

/// Observation matrix X: N points in D dimensions, one point per row.
/// Immutable; the spread is computed once at construction.
class DataSet {
 public:
  /// Throws DataError unless N >= 1, D >= 1 and every coordinate is finite.
  explicit DataSet(RowMatrix points);

  std::size_t n() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const RowMatrix& points() const noexcept { return points_; }
  /// Contiguous coordinates of point i.
  const double* row(std::size_t i) const noexcept { return points_.data() + i * d(); }
  const Vector& spread() const noexcept { return spread_; }
  /// Largest per-coordinate spread.
  double max_spread() const noexcept { return spread_.maxCoeff(); }

 private:
  RowMatrix points_;
  Vector spread_;
};

/// Returns the cached spread of `data`.
inline const Vector& compute_spread(const DataSet& data) { return data.spread(); }

/// Lower Cholesky factor L of a covariance (Sigma = L L^T) together with
/// log det Sigma. Quadratic forms are evaluated by forward substitution.
class CholeskyFactor {
 public:
  /// Returns nullopt unless `cov` is square, finite and every pivot of the
  /// factorization is strictly positive.
  static std::optional<CholeskyFactor> compute(const Matrix& cov);

  std::size_t dim() const noexcept { return dim_; }
  double log_det() const noexcept { return log_det_; }
  Matrix lower() const;

  /// Squared Mahalanobis distances of `count` row-major points starting at
  /// `points` to `mean`, as ||L^{-1} (x - mean)||^2 with a triangular matrix
  /// product per block. `work` is resized as needed.
  void mahalanobis_block(const double* points, std::size_t count, const Vector& mean,
                         Matrix& work, double* out) const;
  const Matrix& inverse_lower() const noexcept { return inverse_; }

  /// Solves L y = diff and returns ||y||^2 = diff^T Sigma^{-1} diff.
  /// `scratch` must hold dim() doubles.
  double mahalanobis_sq(const double* diff, double* scratch) const noexcept;

  /// y = L g (used to sample from the Gaussian).
  Vector apply_lower(const Vector& g) const;

  /// Multiplications performed by one mahalanobis_sq call.
  std::uint64_t mahalanobis_mults() const noexcept {
    return dim_ * (dim_ + 1) / 2 + dim_;
  }

 private:
  CholeskyFactor() = default;
  std::size_t dim_ = 0;
  std::vector<double> packed_;    // row-major strict lower triangle
  std::vector<double> inv_diag_;  // 1 / L_ii
  Matrix inverse_;                // L^{-1}, lower triangular
  double log_det_ = 0.0;
};

/// -0.5 * (D ln(2 pi) + ln det Sigma + (x - mu)^T Sigma^{-1} (x - mu)).
double gaussian_log_density(const Vector& mean, const CholeskyFactor& factor,
                            const Vector& x);

/// Raw parameter vector theta = (w, mu, Sigma); may violate invariants.
struct MixtureParams {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
};

struct Violation {
  enum class Kind {
    empty,
    shape,
    non_finite,
    non_positive_weight,
    weights_sum,
    asymmetric_covariance,
    not_positive_definite,
  };
  Kind kind;
  std::optional<std::size_t> component;
  std::string message;  // without the component

  /// Message prefixed with "component k: " when one is involved.
  std::string describe() const;
};

/// Absolute tolerance on sum_k w_k - 1 for a valid model.
inline constexpr double kWeightSumTolerance = 1e-12;
/// Weight drift that construction silently renormalizes away.
inline constexpr double kWeightDriftTolerance = 1e-9;
/// Symmetry tolerance, relative to max(1, max |Sigma_ij|).
inline constexpr double kSymmetryTolerance = 1e-12;

/// Checks every model invariant; returns the first violation found.
std::optional<Violation> validate(const MixtureParams& params);

/// A validated Gaussian mixture. Immutable after construction; every
/// covariance carries its Cholesky factor.
class MixtureModel {
 public:
  /// Renormalizes weights when their sum drifts from 1 by at most
  /// kWeightDriftTolerance, then validates. Throws InvalidModelError.
  explicit MixtureModel(MixtureParams params);

  std::size_t k() const noexcept { return params_.weights.size(); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(params_.means.front().size()); }
  const MixtureParams& params() const noexcept { return params_; }
  std::span<const double> weights() const noexcept { return params_.weights; }
  double weight(std::size_t k) const { return params_.weights[k]; }
  const Vector& mean(std::size_t k) const { return params_.means[k]; }
  const Matrix& covariance(std::size_t k) const { return params_.covariances[k]; }
  const CholeskyFactor& factor(std::size_t k) const { return factors_[k]; }

  bool operator==(const MixtureModel& other) const;

 private:
  MixtureParams params_;
  std::vector<CholeskyFactor> factors_;
};

std::optional<Violation> validate(const MixtureModel& model);

/// sum_n ln sum_k w_k N(x_n | mu_k, Sigma_k), evaluated in log space.
/// Throws DataError on dimension mismatch.
double log_likelihood(const MixtureModel& model, const DataSet& data);

/// Dense labels of a hard assignment Z (label[n] = k  <=>  z_nk = 1) plus
/// per-component counts c_k. Labels are 0-based.
class Assignment {
 public:
  Assignment(std::vector<std::uint32_t> labels, std::size_t k);

  std::size_t n() const noexcept { return labels_.size(); }
  std::size_t k() const noexcept { return counts_.size(); }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  std::span<const std::size_t> counts() const noexcept { return counts_; }
  std::uint32_t label(std::size_t n) const { return labels_[n]; }
  std::size_t count(std::size_t k) const { return counts_[k]; }

  /// Recounts labels and compares against the stored counts.
  bool consistent() const;

 private:
  std::vector<std::uint32_t> labels_;
  std::vector<std::size_t> counts_;
};

}  // namespace gmmsem

#endif  // GMMSEM_MODEL_HPP_
