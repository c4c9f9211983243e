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

#include "gmmsem/model.hpp"

#include "gmmsem/error.hpp"
#include "gmmsem/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gmmsem {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::string component_tag(std::size_t k) { return "component " + std::to_string(k); }

Violation violation(Violation::Kind kind, std::optional<std::size_t> k, std::string msg) {
  return Violation{kind, k, std::move(msg)};
}

}  // namespace

Vector compute_spread(const RowMatrix& points) {
  if (points.rows() == 0) return Vector::Zero(points.cols());
  return points.colwise().maxCoeff().transpose() - points.colwise().minCoeff().transpose();
}

DataSet::DataSet(RowMatrix points) : points_(std::move(points)) {
  if (points_.rows() < 1 || points_.cols() < 1) {
    throw DataError("data set needs at least one point and one dimension");
  }
  for (Eigen::Index i = 0; i < points_.rows(); ++i) {
    for (Eigen::Index j = 0; j < points_.cols(); ++j) {
      if (!std::isfinite(points_(i, j))) {
        throw DataError("non-finite coordinate at row " + std::to_string(i + 1) +
                        ", column " + std::to_string(j + 1));
      }
    }
  }
  spread_ = compute_spread(points_);
}

std::optional<CholeskyFactor> CholeskyFactor::compute(const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0 || !cov.allFinite()) return std::nullopt;
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix lower = llt.matrixL();
  CholeskyFactor f;
  f.dim_ = static_cast<std::size_t>(cov.rows());
  f.packed_.reserve(f.dim_ * (f.dim_ - 1) / 2);
  f.inv_diag_.resize(f.dim_);
  double log_det = 0.0;
  for (std::size_t i = 0; i < f.dim_; ++i) {
    const double pivot = lower(i, i);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) return std::nullopt;
    for (std::size_t j = 0; j < i; ++j) f.packed_.push_back(lower(i, j));
    f.inv_diag_[i] = 1.0 / pivot;
    log_det += std::log(pivot);
  }
  f.log_det_ = 2.0 * log_det;
  if (!std::isfinite(f.log_det_)) return std::nullopt;
  f.inverse_ = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(cov.rows(), cov.cols()));
  f.inverse_ = f.inverse_.triangularView<Eigen::Lower>();
  if (!f.inverse_.allFinite()) return std::nullopt;
  return f;
}

void CholeskyFactor::mahalanobis_block(const double* points, std::size_t count,
                                       const Vector& mean, Matrix& work, double* out) const {
  const auto d = static_cast<Eigen::Index>(dim_);
  const auto m = static_cast<Eigen::Index>(count);
  // Row-major points viewed column-major: one point per column.
  const Matrix diff = Eigen::Map<const Matrix>(points, d, m).colwise() - mean;
  work.resize(d, m);
  work.noalias() = inverse_.triangularView<Eigen::Lower>() * diff;
  for (Eigen::Index c = 0; c < m; ++c) out[c] = work.col(c).squaredNorm();
}

Matrix CholeskyFactor::lower() const {
  Matrix l = Matrix::Zero(dim_, dim_);
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < i; ++j) l(i, j) = packed_[idx++];
    l(i, i) = 1.0 / inv_diag_[i];
  }
  return l;
}

double CholeskyFactor::mahalanobis_sq(const double* diff, double* y) const noexcept {
  const double* row = packed_.data();
  double norm = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = diff[i];
    for (std::size_t j = 0; j < i; ++j) acc -= row[j] * y[j];
    row += i;
    y[i] = acc * inv_diag_[i];
    norm += y[i] * y[i];
  }
  return norm;
}

Vector CholeskyFactor::apply_lower(const Vector& g) const {
  Vector out(dim_);
  const double* row = packed_.data();
  for (std::size_t i = 0; i < dim_; ++i) {
    double acc = g[i] / inv_diag_[i];
    for (std::size_t j = 0; j < i; ++j) acc += row[j] * g[j];
    row += i;
    out[i] = acc;
  }
  return out;
}

double gaussian_log_density(const Vector& mean, const CholeskyFactor& factor,
                            const Vector& x) {
  const auto d = static_cast<Eigen::Index>(factor.dim());
  if (mean.size() != d || x.size() != d) {
    throw DataError("gaussian_log_density: dimension mismatch");
  }
  const Vector diff = x - mean;
  Vector scratch(d);
  const double maha = factor.mahalanobis_sq(diff.data(), scratch.data());
  return -0.5 * (static_cast<double>(d) * kLog2Pi + factor.log_det() + maha);
}

std::optional<Violation> validate(const MixtureParams& p) {
  using Kind = Violation::Kind;
  const std::size_t k = p.weights.size();
  if (k == 0) return violation(Kind::empty, std::nullopt, "model has no components");
  if (p.means.size() != k || p.covariances.size() != k) {
    return violation(Kind::shape, std::nullopt, "weights, means and covariances differ in count");
  }
  const Eigen::Index d = p.means.front().size();
  if (d < 1) return violation(Kind::shape, 0, "mean has dimension 0");
  for (std::size_t i = 0; i < k; ++i) {
    if (p.means[i].size() != d) return violation(Kind::shape, i, "mean dimension mismatch");
    if (p.covariances[i].rows() != d || p.covariances[i].cols() != d) {
      return violation(Kind::shape, i, "covariance dimension mismatch");
    }
    if (!std::isfinite(p.weights[i]) || !p.means[i].allFinite() ||
        !p.covariances[i].allFinite()) {
      return violation(Kind::non_finite, i, "non-finite parameter");
    }
    if (!(p.weights[i] > 0.0)) {
      return violation(Kind::non_positive_weight, i, "weight not positive");
    }
  }
  double sum = 0.0;
  for (double w : p.weights) sum += w;
  if (std::fabs(sum - 1.0) > kWeightSumTolerance) {
    return violation(Kind::weights_sum, std::nullopt,
                     "weights sum ≠ 1");
  }
  for (std::size_t i = 0; i < k; ++i) {
    const Matrix& c = p.covariances[i];
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
      return violation(Kind::asymmetric_covariance, i, "covariance not symmetric");
    }
    if (!CholeskyFactor::compute(c)) {
      return violation(Kind::not_positive_definite, i, "covariance not positive definite");
    }
  }
  return std::nullopt;
}

std::string Violation::describe() const {
  return component ? component_tag(*component) + ": " + message : message;
}

MixtureModel::MixtureModel(MixtureParams params) : params_(std::move(params)) {
  double sum = 0.0;
  for (double w : params_.weights) sum += w;
  const double drift = std::fabs(sum - 1.0);
  if (std::isfinite(sum) && drift > kWeightSumTolerance && drift <= kWeightDriftTolerance) {
    for (double& w : params_.weights) w /= sum;
  }
  if (auto v = validate(params_)) throw InvalidModelError("invalid mixture model: " + v->describe());
  factors_.reserve(k());
  for (const Matrix& c : params_.covariances) factors_.push_back(*CholeskyFactor::compute(c));
}

bool MixtureModel::operator==(const MixtureModel& other) const {
  if (k() != other.k() || d() != other.d()) return false;
  for (std::size_t i = 0; i < k(); ++i) {
    if (params_.weights[i] != other.params_.weights[i] ||
        params_.means[i] != other.params_.means[i] ||
        params_.covariances[i] != other.params_.covariances[i]) {
      return false;
    }
  }
  return true;
}

std::optional<Violation> validate(const MixtureModel& model) { return validate(model.params()); }

double log_likelihood(const MixtureModel& model, const DataSet& data) {
  if (model.d() != data.d()) {
    throw DataError("log_likelihood: model dimension " + std::to_string(model.d()) +
                    " does not match data dimension " + std::to_string(data.d()));
  }
  const std::size_t k = model.k();
  const std::size_t d = data.d();
  std::vector<double> offsets(k);
  for (std::size_t j = 0; j < k; ++j) {
    offsets[j] = std::log(model.weight(j)) -
                 0.5 * (static_cast<double>(d) * kLog2Pi + model.factor(j).log_det());
  }
  // Blocks of points; per block a K-column table of log terms.
  constexpr std::size_t kBlock = 1024;
  std::vector<double> maha(kBlock * k), terms(k);
  Matrix work;
  CompensatedSum total;
  for (std::size_t start = 0; start < data.n(); start += kBlock) {
    const std::size_t m = std::min(kBlock, data.n() - start);
    for (std::size_t j = 0; j < k; ++j) {
      model.factor(j).mahalanobis_block(data.row(start), m, model.mean(j), work,
                                        maha.data() + j * kBlock);
    }
    for (std::size_t c = 0; c < m; ++c) {
      for (std::size_t j = 0; j < k; ++j) terms[j] = offsets[j] - 0.5 * maha[j * kBlock + c];
      total.add(log_sum_exp(terms));
    }
  }
  return total.value();
}

Assignment::Assignment(std::vector<std::uint32_t> labels, std::size_t k)
    : labels_(std::move(labels)), counts_(k, 0) {
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] >= k) {
      throw DataError("assignment label " + std::to_string(labels_[n]) + " at row " +
                      std::to_string(n + 1) + " out of range for K = " + std::to_string(k));
    }
    ++counts_[labels_[n]];
  }
}

bool Assignment::consistent() const {
  std::vector<std::size_t> recount(counts_.size(), 0);
  for (std::uint32_t l : labels_) {
    if (l >= recount.size()) return false;
    ++recount[l];
  }
  std::size_t total = 0;
  for (std::size_t c : counts_) total += c;
  return recount == counts_ && total == labels_.size();
}

}  // namespace gmmsem
