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

// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 when any
// criterion fails. Tolerances and sizes are pinned below.

#include "gmmsem/bounds.hpp"
#include "gmmsem/em.hpp"
#include "gmmsem/estep.hpp"
#include "gmmsem/harness.hpp"
#include "gmmsem/ingest.hpp"
#include "gmmsem/rng.hpp"
#include "gmmsem/sem.hpp"
#include "gmmsem/synth.hpp"
#include "bound_oracle.hpp"
#include "support.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace gmmsem {
namespace {

// Pinned tolerances.
constexpr double kRowSumTolerance = 1e-12;
constexpr double kMonotoneSlack = 1e-9;
constexpr double kMcDelta = 0.05;
constexpr std::size_t kMcTrials = 20000;
constexpr double kExpectationSE = 4.0;
constexpr std::size_t kExpectationSamplings = 10000;
constexpr double kBoundSatisfied = 0.99;
constexpr double kMultRatioLo = 1.8, kMultRatioHi = 3.0;
constexpr double kWallRatioLo = 1.5, kWallRatioHi = 3.5;
constexpr double kDominanceLo = 0.8, kDominanceHi = 1.5;
// Pilot run (seed 9, 10 inits x 10 runs x 50 rounds): worst median relative
// gap 7.0e-5, so 1% leaves two orders of margin.
constexpr double kProximityThreshold = 0.01;
constexpr double kProximityInitShare = 0.90;
constexpr double kOracleTolerance = 1e-10;
constexpr double kContinuityTolerance = 1e-12;

double mc_band(double delta, std::size_t trials) {
  return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool row_sums_ok(const ResponsibilityMatrix& resp, double* worst) {
  for (Eigen::Index n = 0; n < resp.probs.rows(); ++n) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < resp.probs.cols(); ++k) s += resp.probs(n, k);
    *worst = std::max(*worst, std::fabs(s - 1.0));
  }
  return *worst <= kRowSumTolerance;
}

// 1
Outcome row_stochasticity() {
  Outcome o;
  double worst = 0.0;
  std::size_t models = 0, instances = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream pick(derive_seed(101, {i}));
    const std::size_t d = 1 + pick.uniform_index(10);
    const std::size_t k = 1 + pick.uniform_index(8);
    const std::size_t n = 200 + pick.uniform_index(4801);
    const auto ds = testing::synthetic(d, k, n, derive_seed(102, {i}), 0.5 + pick.uniform());
    RngStream init_rng(derive_seed(103, {i}));
    const MixtureModel model0 = initialize(ds.data, k, init_rng);
    const FitResult em = em_fit(model0, ds.data, 3, EmConfig{RepairPolicy::resample_mean_fresh_covariance, i});
    const FitResult sem = sem_fit(model0, ds.data, 3, SemConfig{std::nullopt, RepairPolicy::resample_mean_fresh_covariance, i});
    bool ok = row_sums_ok(responsibilities(model0, ds.data), &worst);
    for (const auto* fit : {&em, &sem}) {
      for (const auto& m : fit->models) {
        ++models;
        if (validate(m)) ok = false;
        ok = row_sums_ok(responsibilities(m, ds.data), &worst) && ok;
      }
    }
    ++instances;
    if (!ok) o.pass = false;
  }
  o.detail = std::to_string(instances) + " instances, " + std::to_string(models) +
             " models validated, worst |row sum - 1| " + fmt("%.3g", worst);
  return o;
}

// 2
Outcome em_monotonicity() {
  Outcome o;
  double worst = -INFINITY;
  std::size_t repairs = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t d = 1 + i % 4, k = 2 + i % 4;
    const auto ds = testing::synthetic(d, k, 2000, derive_seed(201, {i}));
    RngStream rng(derive_seed(202, {i}));
    const MixtureModel model0 = initialize(ds.data, k, rng);
    const FitResult fit = em_fit(model0, ds.data, 50);
    repairs += fit.repairs.size();
    double prev = -log_likelihood(model0, ds.data);
    for (const auto& m : fit.models) {
      const double cur = -log_likelihood(m, ds.data);
      const double rise = (cur - prev) / std::fabs(prev);
      worst = std::max(worst, rise);
      if (rise > kMonotoneSlack) o.pass = false;
      prev = cur;
    }
  }
  o.detail = "20 instances x 50 rounds, largest relative NLL rise " + fmt("%.3g", worst) +
             " (slack 1e-9), repairs " + std::to_string(repairs);
  return o;
}

// 3
Outcome z_equals_p() {
  Outcome o;
  std::size_t compared = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t d = 1 + i % 4, k = 2 + i % 3;
    const auto fx = testing::separated(d, k, 30 + 5 * i, derive_seed(301, {i}));
    if (!testing::is_one_hot(responsibilities(fx.model0, fx.data))) {
      o.pass = false;
      o.detail = "fixture " + std::to_string(i) + " is not one-hot";
      return o;
    }
    const FitResult em = em_fit(fx.model0, fx.data, 50);
    const FitResult sem = sem_fit(fx.model0, fx.data, 50, SemConfig{std::nullopt, {}, i});
    for (std::size_t t = 0; t < 50; ++t) {
      ++compared;
      if (!(em.models[t] == sem.models[t])) o.pass = false;
    }
  }
  o.detail = std::to_string(compared) + " rounds compared entrywise on 20 instances";
  return o;
}

struct McFixture {
  DataSet data;
  ResponsibilityMatrix resp;
};

// Two components, r_1 = r and r_2 = 2r, on 2-D Gaussian points.
McFixture mc_fixture(double r, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(3 * r);
  RngStream rng(seed);
  RowMatrix x(n, 2);
  Vector s(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 0.5 * x(i, 0) + rng.normal();
    s[i] = 1.0 / (1.0 + std::exp(-2.0 * x(i, 0)));
  }
  s *= r / s.sum();
  RowMatrix p(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    p(i, 0) = s[i];
    p(i, 1) = 1.0 - s[i];
  }
  return {DataSet(std::move(x)), ResponsibilityMatrix::from_probs(std::move(p))};
}

struct McSummary {
  std::vector<ViolationReport> reports;
  std::vector<double> rs;
  double seconds = 0.0;
};

const McSummary& mc_runs() {
  static const McSummary summary = [] {
    McSummary s;
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t seed = 400;
    for (double r : {50.0, 500.0, 5000.0}) {
      const McFixture fx = mc_fixture(r, seed++);
      s.rs.push_back(r);
      s.reports.push_back(monte_carlo_violation_rate(fx.resp, fx.data, kMcDelta, kMcTrials, seed++,
                                                     BoundTarget::covariances));
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
  }();
  return summary;
}

// 4
Outcome theorem1() {
  Outcome o;
  const McSummary& s = mc_runs();
  const double band = mc_band(kMcDelta, kMcTrials);
  std::ostringstream d;
  d << "band " << band << ";";
  for (std::size_t f = 0; f < s.reports.size(); ++f) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& t = s.reports[f].weights[k];
      const auto frac = t.fraction();
      if (!frac || *frac > band) o.pass = false;
      d << " r=" << s.reports[f].bounds.r[k] << ":" << (frac ? *frac : -1.0);
    }
  }
  d << " (shared MC time " << fmt("%.1f", s.seconds) << " s)";
  o.detail = d.str();
  return o;
}

// 5
Outcome theorems2and3() {
  Outcome o;
  const McSummary& s = mc_runs();
  const double band = mc_band(kMcDelta, kMcTrials);
  double worst_mean = 0.0, worst_cov = 0.0, min_cond = 1.0;
  std::size_t checked = 0;
  for (const auto& rep : s.reports) {
    for (const auto* tallies : {&rep.means, &rep.covariances}) {
      for (const auto& t : *tallies) {
        const auto frac = t.fraction();
        if (!t.applicable || !frac) {
          o.pass = false;
          continue;
        }
        ++checked;
        if (*frac > band) o.pass = false;
        min_cond = std::min(min_cond, t.conditioning_frequency());
        (tallies == &rep.means ? worst_mean : worst_cov) =
            std::max(tallies == &rep.means ? worst_mean : worst_cov, *frac);
      }
    }
  }
  o.detail = std::to_string(checked) + " conditional tallies, worst mean " + fmt("%.4g", worst_mean) +
             ", worst cov " + fmt("%.4g", worst_cov) + ", band " + fmt("%.4g", band) +
             ", lowest conditioning frequency " + fmt("%.4g", min_cond);
  return o;
}

// 6
Outcome expectation_identity() {
  Outcome o;
  const auto ds = testing::synthetic(3, 4, 2000, 601, 0.6, WeightMode::unbalanced);
  const auto resp = responsibilities(ds.truth, ds.data);
  const double n = static_cast<double>(ds.data.n());
  std::vector<double> sum(4, 0.0);
  for (std::size_t t = 0; t < kExpectationSamplings; ++t) {
    RngStream rng(derive_seed(602, {t}));
    const Assignment a = sample_assignment(resp, rng);
    for (std::size_t k = 0; k < 4; ++k) sum[k] += static_cast<double>(a.count(k)) / n;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    double var = 0.0;
    for (std::size_t i = 0; i < ds.data.n(); ++i) {
      const double p = resp.probs(i, k);
      var += p * (1 - p);
    }
    const double se = std::sqrt(var) / n / std::sqrt(static_cast<double>(kExpectationSamplings));
    const double mean = sum[k] / static_cast<double>(kExpectationSamplings);
    const double z = std::fabs(mean - resp.column_sums[k] / n) / se;
    worst = std::max(worst, z);
    if (z > kExpectationSE) o.pass = false;
  }
  o.detail = "largest deviation " + fmt("%.3f", worst) + " standard errors over 4 components";
  return o;
}

// 7
Outcome bound_experiment() {
  Outcome o;
  ExperimentPlan plan = ExperimentPlan::ci();
  plan.master_seed = 7;
  plan.gen.rng_seed = 7;
  const PreparedData prepared = prepare_data(plan);
  const BoundResult res = run_bound_experiment(plan, prepared.data);
  o.pass = res.applicable > 0 && res.satisfied_fraction() >= kBoundSatisfied;
  o.detail = std::to_string(res.satisfied) + "/" + std::to_string(res.applicable) +
             " applicable cells satisfied (" + fmt("%.4f", res.satisfied_fraction()) + "), " +
             std::to_string(res.cells.size()) + " cells, " +
             std::to_string(res.trace.exclusions.size()) + " exclusions";
  return o;
}

// 8
Outcome speedup() {
  Outcome o;
  ExperimentPlan plan = ExperimentPlan::ci();
  plan.gen.d = 10;
  plan.gen.k = 10;
  plan.gen.n = 100000;
  plan.k = 10;
  plan.rounds = 10;
  plan.master_seed = 8;
  plan.gen.rng_seed = 8;
  const PreparedData prepared = prepare_data(plan);
  const SpeedResult res = run_speed_experiment(plan, prepared.data);
  o.pass = res.mult_ratio >= kMultRatioLo && res.mult_ratio <= kMultRatioHi &&
           res.wall_ratio >= kWallRatioLo && res.wall_ratio <= kWallRatioHi &&
           res.em_dominance >= kDominanceLo && res.em_dominance <= kDominanceHi;
  o.detail = "mult ratio " + fmt("%.4f", res.mult_ratio) + ", wall ratio " + fmt("%.3f", res.wall_ratio) +
             ", EM / (2KND^2) " + fmt("%.4f", res.em_dominance);
  return o;
}

// 9
Outcome proximity() {
  Outcome o;
  ExperimentPlan plan = ExperimentPlan::ci();
  plan.rounds = 50;
  plan.n_inits = 10;
  plan.runs_per_init = 10;
  plan.master_seed = 9;
  plan.gen.rng_seed = 9;
  const PreparedData prepared = prepare_data(plan);
  const LikelihoodResult res = run_likelihood_experiment(plan, prepared.data);
  std::size_t close = 0, inits = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < plan.n_inits; ++i) {
    ++inits;
    if (res.em_nll[i].empty()) continue;
    std::vector<double> finals;
    for (const auto& run : res.sem_nll[i]) {
      if (!run.empty()) finals.push_back(run.back());
    }
    if (finals.empty()) continue;
    std::sort(finals.begin(), finals.end());
    const double median = sorted_quantile(finals, 0.5);
    const double em = res.em_nll[i].back();
    const double gap = std::fabs(median - em) / std::fabs(em);
    worst = std::max(worst, gap);
    if (gap <= kProximityThreshold) ++close;
  }
  const double share = static_cast<double>(close) / static_cast<double>(inits);
  o.pass = share >= kProximityInitShare;
  o.detail = std::to_string(close) + "/" + std::to_string(inits) + " inits within 1%, worst gap " +
             fmt("%.3g", worst);
  return o;
}

// 10
Outcome degeneracy_repair() {
  Outcome o;
  MixtureParams truth;
  truth.weights = {0.001, 0.24975, 0.24975, 0.24975, 0.24975};
  const double centres[5][2] = {{30, 30}, {0, 0}, {3, 0}, {0, 3}, {3, 3}};
  for (auto& c : centres) {
    truth.means.push_back(Vector{{c[0], c[1]}});
    truth.covariances.push_back(Matrix::Identity(2, 2));
  }
  const MixtureModel model(truth);
  std::size_t fits = 0, total_repairs = 0, unlogged = 0, invalid = 0, mismatched = 0;
  for (RepairPolicy policy : {RepairPolicy::resample_mean_fresh_covariance, RepairPolicy::blend_with_previous,
                              RepairPolicy::keep_previous_covariance}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      RngStream sample_rng(derive_seed(1000, {seed}));
      const LabeledSample sample = sample_dataset(model, 3000, sample_rng);
      RngStream init_rng(derive_seed(1001, {seed}));
      const MixtureModel model0 = initialize(sample.data, 5, init_rng);
      const SemConfig cfg{3, policy, derive_seed(1002, {seed})};  // zeta = D + 1
      FitResult fit;
      try {
        fit = sem_fit(model0, sample.data, 50, cfg);
      } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("sem_fit failed: ") + e.what();
        return o;
      }
      ++fits;
      total_repairs += fit.repairs.size();
      // Replay the rounds independently and check every short component was logged.
      const MixtureModel* current = &model0;
      for (std::size_t t = 1; t <= 50; ++t) {
        RngStream rng = round_stream(cfg.rng_seed, t);
        const Assignment assign = sample_assignment(responsibilities(*current, sample.data), rng);
        for (std::size_t k = 0; k < 5; ++k) {
          if (assign.count(k) >= 3) continue;
          const bool logged = std::any_of(fit.repairs.begin(), fit.repairs.end(), [&](const RepairEvent& e) {
            return e.round == t && e.component == k &&
                   e.support == static_cast<double>(assign.count(k));
          });
          if (!logged) ++unlogged;
        }
        std::vector<RepairEvent> events;
        const MixtureModel next = sem_m_step(assign, sample.data, *current, cfg, rng, nullptr, &events, t);
        if (!(next == fit.models[t - 1])) ++mismatched;
        if (validate(fit.models[t - 1])) ++invalid;
        current = &fit.models[t - 1];
      }
    }
  }
  o.pass = unlogged == 0 && invalid == 0 && mismatched == 0 && total_repairs > 0;
  o.detail = std::to_string(fits) + " fits x 50 rounds, " + std::to_string(total_repairs) +
             " repair events, unlogged " + std::to_string(unlogged) + ", invalid models " +
             std::to_string(invalid) + ", replay mismatches " + std::to_string(mismatched);
  return o;
}

// 11
Outcome determinism() {
  Outcome o;
  const auto ds = testing::synthetic(3, 3, 5000, 1101);
  ExperimentPlan plan;
  plan.k = 3;
  plan.n_inits = 3;
  plan.runs_per_init = 4;
  plan.rounds = 6;
  plan.master_seed = 11;
  ExperimentPlan threaded = plan;
  threaded.threads = 4;
  std::size_t identical = 0, traces = 0;
  auto same = [&](const std::string& a, const std::string& b, const std::string& c) {
    traces += 1;
    if (a == b && b == c && !a.empty()) ++identical;
    else o.pass = false;
  };
  same(run_likelihood_experiment(plan, ds.data).trace.csv, run_likelihood_experiment(plan, ds.data).trace.csv,
       run_likelihood_experiment(threaded, ds.data).trace.csv);
  same(run_diff_experiment(plan, ds.data).trace.csv, run_diff_experiment(plan, ds.data).trace.csv,
       run_diff_experiment(threaded, ds.data).trace.csv);
  same(run_bound_experiment(plan, ds.data).trace.csv, run_bound_experiment(plan, ds.data).trace.csv,
       run_bound_experiment(threaded, ds.data).trace.csv);

  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "gmmsem_acceptance";
  RngStream rng(1102);
  RowMatrix m(1000, 4);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(j * 5) - 8);
  }
  const DataSet data(m);
  save_csv(data, dir / "data.csv");
  const DataSet back = load_csv(dir / "data.csv");
  bool exact = back.n() == data.n();
  for (Eigen::Index i = 0; exact && i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      exact = exact && std::bit_cast<std::uint64_t>(back.points()(i, j)) == std::bit_cast<std::uint64_t>(m(i, j));
    }
  }
  save_model(ds.truth, dir / "truth.gmm");
  const bool model_exact = load_model(dir / "truth.gmm") == ds.truth;
  if (!exact || !model_exact) o.pass = false;
  o.detail = std::to_string(identical) + "/" + std::to_string(traces) +
             " traces byte-identical across runs and 1 vs 4 threads; dataset round-trip " +
             (exact ? "exact" : "NOT exact") + ", model round-trip " + (model_exact ? "exact" : "NOT exact");
  return o;
}

// 12
Outcome bound_formula_fixture() {
  Outcome o;
  const auto fx = testing::tiny_fixture();
  const DataSet x = testing::line({0, 1, 2, 3});
  const auto resp = responsibilities(testing::model_1d({0.5, 0.5}, {1, 2}, {1, 1}), x);
  std::size_t reports = 0, entries_bad = 0;
  for (double delta : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
    const auto rep = assemble_bounds(resp, x, em_moments(resp, x), delta);
    const auto bad = compare_report(rep, testing::bound_oracle(fx.x, fx.p, delta), kOracleTolerance);
    entries_bad += bad.size();
    ++reports;
  }
  // Both lambda branches and the boundary, at the fixture's spread.
  const double spread = x.spread()[0];
  std::size_t branch_checks = 0, branch_bad = 0;
  for (double delta : {0.01, 0.05, 0.5}) {
    const double big = std::sqrt(2.0 * std::numbers::e * std::log(2.0 / delta));
    const double boundary = spread * big / std::numbers::e;
    for (double tau : {0.1 * boundary, 0.9 * boundary, boundary, 1.5 * boundary, 4.0 * boundary}) {
      ++branch_checks;
      const double mine = lambda_mean(tau, spread, delta);
      const double ref = static_cast<double>(testing::oracle_lambda(tau, spread, delta));
      if (std::fabs(mine - ref) > kOracleTolerance * std::max(1.0, ref)) ++branch_bad;
      const double mine_c = lambda_cov(tau * spread, spread, spread, delta);
      const double ref_c = static_cast<double>(testing::oracle_lambda(tau * spread, spread * spread, delta));
      if (std::fabs(mine_c - ref_c) > kOracleTolerance * std::max(1.0, ref_c)) ++branch_bad;
    }
    // Left limit of the second branch meets the first.
    const double left = 2.0 * spread / std::nextafter(boundary, 0.0) * std::log(2.0 / delta);
    ++branch_checks;
    if (std::fabs(left - big) > kContinuityTolerance * big ||
        std::fabs(lambda_mean(boundary, spread, delta) - big) > kContinuityTolerance * big) {
      ++branch_bad;
    }
  }
  o.pass = entries_bad == 0 && branch_bad == 0;
  o.detail = std::to_string(reports) + " reports vs scalar oracle (" + std::to_string(entries_bad) +
             " mismatches), " + std::to_string(branch_checks) + " branch/boundary checks (" +
             std::to_string(branch_bad) + " mismatches)";
  return o;
}

}  // namespace
}  // namespace gmmsem

int main() {
  using namespace gmmsem;
  const std::vector<Criterion> criteria = {
      {1, "row-stochasticity and model validity", 60, row_stochasticity},
      {2, "EM monotonicity", 120, em_monotonicity},
      {3, "one-hot responsibilities give identical EM and SEM", 60, z_equals_p},
      {4, "weight bound Monte-Carlo soundness", 120, theorem1},
      {5, "conditional mean and covariance bound soundness", 300, theorems2and3},
      {6, "expectation identity for SEM weights", 60, expectation_identity},
      {7, "bound vs actual at desk scale", 600, bound_experiment},
      {8, "speedup", 180, speedup},
      {9, "likelihood proximity at scale", 600, proximity},
      {10, "degeneracy repair", 60, degeneracy_repair},
      {11, "determinism and round-trips", 60, determinism},
      {12, "bound formula fixture", 1, bound_formula_fixture},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("[%2d] %s %s | %s | %.2f s (limit %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, c.limit_seconds, in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
