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

// Independent scalar evaluation of the proximity bounds: plain loops in long
// double over nested vectors, sharing no code with the library.

#ifndef GMMSEM_TESTS_BOUND_ORACLE_HPP_
#define GMMSEM_TESTS_BOUND_ORACLE_HPP_

#include "gmmsem/bounds.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <limits>
#include <vector>

namespace gmmsem::testing {

using Real = long double;
using Grid = std::vector<std::vector<Real>>;

struct OracleReport {
  std::vector<Real> r;
  Grid mu;                              // K x D
  std::vector<Grid> cov;                // K x D x D
  Grid tau;                             // K x D
  std::vector<Grid> rho;                // K x D x D
  std::vector<Real> lambda_w;
  std::vector<bool> hypothesis, below_one;
  Grid lambda_mu;
  std::vector<Grid> lambda_sigma;
  std::vector<Real> weight_bound;
  Grid mean_bound;                      // NaN when lambda_w >= 1
  std::vector<Real> mean_bound_euclid;
  std::vector<Grid> cov_bound;
};

inline Real oracle_lambda(Real sigma, Real c, Real delta) {
  if (sigma == 0) return 0;
  const Real e = std::exp(static_cast<Real>(1));
  const Real l = std::log(2 / delta);
  const Real big = std::sqrt(2 * e * l);
  if (sigma / c >= big / e) return big;
  return 2 * c / sigma * l;
}

/// x: N x D points, p: N x K responsibilities.
inline OracleReport bound_oracle(const Grid& x, const Grid& p, Real delta) {
  const std::size_t n = x.size(), d = x[0].size(), k = p[0].size();
  const Real nan = std::numeric_limits<Real>::quiet_NaN();
  std::vector<Real> spread(d);
  for (std::size_t j = 0; j < d; ++j) {
    Real lo = x[0][j], hi = x[0][j];
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, x[i][j]);
      hi = std::max(hi, x[i][j]);
    }
    spread[j] = hi - lo;
  }
  OracleReport o;
  const Real l = std::log(2 / delta);
  for (std::size_t c = 0; c < k; ++c) {
    Real r = 0;
    for (std::size_t i = 0; i < n; ++i) r += p[i][c];
    o.r.push_back(r);
    std::vector<Real> mu(d, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) mu[j] += p[i][c] * x[i][j];
    for (auto& m : mu) m /= r;
    Grid cov(d, std::vector<Real>(d, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          cov[a][b] += p[i][c] * (x[i][a] - mu[a]) * (x[i][b] - mu[b]);
    for (auto& row : cov)
      for (auto& v : row) v /= r;
    std::vector<Real> tau(d, 0);
    Grid rho(d, std::vector<Real>(d, 0));
    for (std::size_t i = 0; i < n; ++i) {
      const Real v = p[i][c] * (1 - p[i][c]);
      for (std::size_t a = 0; a < d; ++a) {
        tau[a] += v * (x[i][a] - mu[a]) * (x[i][a] - mu[a]);
        for (std::size_t b = 0; b < d; ++b) {
          const Real dev = (x[i][a] - mu[a]) * (x[i][b] - mu[b]) - cov[a][b];
          rho[a][b] += v * dev * dev;
        }
      }
    }
    for (auto& t : tau) t = std::sqrt(t);
    for (auto& row : rho)
      for (auto& v : row) v = std::sqrt(v);

    const Real lw = std::sqrt(3 * l / r);
    o.lambda_w.push_back(lw);
    o.hypothesis.push_back(delta >= 2 * std::exp(-r / 3));
    o.below_one.push_back(lw < 1);
    o.weight_bound.push_back(lw * r / static_cast<Real>(n));
    std::vector<Real> lmu(d);
    for (std::size_t a = 0; a < d; ++a) lmu[a] = oracle_lambda(tau[a], spread[a], delta);
    Grid lsig(d, std::vector<Real>(d));
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        lsig[a][b] = oracle_lambda(rho[a][b], spread[a] * spread[b], delta);
    std::vector<Real> mb(d, nan);
    Grid cb(d, std::vector<Real>(d, nan));
    Real euclid = nan;
    if (lw < 1) {
      const Real s = 1 - lw;
      euclid = 0;
      for (std::size_t a = 0; a < d; ++a) {
        mb[a] = lmu[a] / s * tau[a] / r;
        euclid += mb[a] * mb[a];
      }
      euclid = std::sqrt(euclid);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          cb[a][b] = lsig[a][b] / s * rho[a][b] / r + lmu[a] * lmu[b] / (s * s) * tau[a] * tau[b] / (r * r);
    }
    o.mu.push_back(mu);
    o.cov.push_back(cov);
    o.tau.push_back(tau);
    o.rho.push_back(rho);
    o.lambda_mu.push_back(lmu);
    o.lambda_sigma.push_back(lsig);
    o.mean_bound.push_back(mb);
    o.mean_bound_euclid.push_back(euclid);
    o.cov_bound.push_back(cb);
  }
  return o;
}

/// |a - b| <= tol * max(1, |b|), with NaN matching NaN.
inline bool close(double a, Real b, Real tol) {
  if (std::isnan(static_cast<double>(b))) return std::isnan(a);
  const Real scale = std::max<Real>(1, std::fabs(b));
  return std::fabs(static_cast<Real>(a) - b) <= tol * scale;
}

/// Every entry of a library report against the oracle; returns the
/// mismatching entry names.
inline std::vector<std::string> compare_report(const BoundReport& rep, const OracleReport& o,
                                               Real tol) {
  std::vector<std::string> bad;
  auto check = [&](double a, Real b, const std::string& what) {
    if (!close(a, b, tol)) bad.push_back(what);
  };
  const std::size_t k = o.r.size(), d = o.tau[0].size();
  if (rep.k() != k) return {"component count"};
  for (std::size_t c = 0; c < k; ++c) {
    const std::string ck = "k" + std::to_string(c);
    check(rep.r[c], o.r[c], ck + " r");
    check(rep.lambda_w[c].value, o.lambda_w[c], ck + " lambda_w");
    if (rep.lambda_w[c].hypothesis_holds != o.hypothesis[c]) bad.push_back(ck + " hypothesis");
    if (rep.lambda_w[c].below_one != o.below_one[c]) bad.push_back(ck + " below_one");
    if (rep.applicable[c] != (o.hypothesis[c] && o.below_one[c])) bad.push_back(ck + " applicable");
    check(rep.weight_bound[c], o.weight_bound[c], ck + " weight_bound");
    check(rep.mean_bound_euclid[c], o.mean_bound_euclid[c], ck + " mean_bound_euclid");
    for (std::size_t a = 0; a < d; ++a) {
      const std::string ca = ck + " [" + std::to_string(a) + "]";
      check(rep.tau(c, a), o.tau[c][a], ca + " tau");
      check(rep.lambda_mu(c, a), o.lambda_mu[c][a], ca + " lambda_mu");
      check(rep.mean_bound(c, a), o.mean_bound[c][a], ca + " mean_bound");
      for (std::size_t b = 0; b < d; ++b) {
        const std::string cab = ck + " [" + std::to_string(a) + "," + std::to_string(b) + "]";
        check(rep.rho[c](a, b), o.rho[c][a][b], cab + " rho");
        check(rep.lambda_sigma[c](a, b), o.lambda_sigma[c][a][b], cab + " lambda_sigma");
        check(rep.cov_bound[c](a, b), o.cov_bound[c][a][b], cab + " cov_bound");
      }
    }
  }
  return bad;
}

/// X = {0, 1, 2, 3} under w = (1/2, 1/2), mu = (1, 2), Sigma = (1, 1).
struct TinyFixture {
  Grid x;
  Grid p;  // closed-form responsibilities
};

inline TinyFixture tiny_fixture() {
  TinyFixture f;
  for (int i = 0; i < 4; ++i) {
    const Real xi = i;
    // p_1 / p_2 = exp(-(x-1)^2/2 + (x-2)^2/2) = exp(1.5 - x)
    const Real p1 = 1 / (1 + std::exp(xi - static_cast<Real>(1.5)));
    f.x.push_back({xi});
    f.p.push_back({p1, 1 - p1});
  }
  return f;
}

}  // namespace gmmsem::testing

#endif  // GMMSEM_TESTS_BOUND_ORACLE_HPP_
