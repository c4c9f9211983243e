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

#ifndef GMMSEM_HARNESS_HPP_
#define GMMSEM_HARNESS_HPP_

#include "gmmsem/em.hpp"
#include "gmmsem/ingest.hpp"
#include "gmmsem/model.hpp"
#include "gmmsem/numeric.hpp"
#include "gmmsem/sem.hpp"
#include "gmmsem/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gmmsem {

/// Everything an experiment needs. Data comes from `dataset_path` when set,
/// otherwise from `gen`.
struct ExperimentPlan {
  std::optional<std::filesystem::path> dataset_path;
  GenSpec gen;
  bool normalize = false;
  std::size_t k = 3;
  std::size_t rounds = 50;
  std::size_t n_inits = 30;
  std::size_t runs_per_init = 100;
  std::uint64_t master_seed = 0;
  /// Per-check failure probability; unset means 1 / (100 K (D + 1)).
  std::optional<double> delta;
  std::optional<std::size_t> zeta;
  RepairPolicy repair_policy = RepairPolicy::resample_mean_fresh_covariance;
  /// Worker threads. Outputs do not depend on it.
  std::size_t threads = 1;
  std::filesystem::path out_dir = ".";
  /// Fixed starting model shared by every init instead of initialize().
  std::optional<MixtureModel> init_model;

  /// 3 inits x 10 runs x 20 rounds on N = 100 000, D = K = 3.
  static ExperimentPlan ci();
  /// 30 inits x 100 runs x 50 rounds.
  static ExperimentPlan full();
  static ExperimentPlan profile(std::string_view name);

  void validate() const;
  double check_delta(std::size_t d) const;
  SemConfig sem_config(std::size_t init, std::size_t run) const;
  EmConfig em_config(std::size_t init) const;
};

/// Applies one `key=value` setting; throws UsageError on unknown keys or bad
/// values. Keys: data, normalize, gen_d, gen_k, gen_n, weights, overlap,
/// gen_seed, k, rounds, inits, runs, seed, delta, zeta, policy, threads, out,
/// profile, init_model (a model file path). `seed` also seeds data generation unless gen_seed follows.
void apply_setting(ExperimentPlan& plan, std::string_view key, std::string_view value);

/// Reads `key=value` lines; blank lines and lines starting with '#' are skipped.
void apply_config_text(ExperimentPlan& plan, std::string_view text);
void apply_config_file(ExperimentPlan& plan, const std::filesystem::path& path);

std::uint64_t init_seed(std::uint64_t master, std::size_t init);
std::uint64_t em_seed(std::uint64_t master, std::size_t init);
std::uint64_t sem_seed(std::uint64_t master, std::size_t init, std::size_t run);

/// FNV-1a of the model's text form; logged into traces to show pairing.
std::uint64_t model_hash(const MixtureModel& model);

struct PreparedData {
  DataSet data;
  std::optional<NormalizationRecord> normalization;
  std::string source;
};

PreparedData prepare_data(const ExperimentPlan& plan);

/// Runs fn(0..count-1) on up to `threads` workers. fn must not throw.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Linear-interpolation quantile of sorted values, position (n - 1) * q.
double sorted_quantile(std::span<const double> sorted, double q);

struct Exclusion {
  std::size_t init = 0;
  std::optional<std::size_t> run;  // unset: EM run or the whole init
  std::string algorithm;
  std::string reason;
};

struct Trace {
  std::string name;
  std::string csv;
  std::size_t rows = 0;
  std::vector<Exclusion> exclusions;
};

/// Initial models per init; an init whose initialization failed is nullopt
/// and logged as an exclusion.
struct InitSet {
  std::vector<std::optional<MixtureModel>> models;
  std::vector<Exclusion> exclusions;
};

InitSet make_inits(const ExperimentPlan& plan, const DataSet& data);

struct LikelihoodResult {
  Trace trace;
  /// [init][round - 1]; empty when excluded.
  std::vector<std::vector<double>> em_nll;
  /// [init][run][round - 1]; empty when excluded.
  std::vector<std::vector<std::vector<double>>> sem_nll;
};

/// Columns: init_id, algorithm, round, stat, nll. EM emits stat `value`;
/// SEM emits `value` for a single run, else min, q1, median, q3 and max.
LikelihoodResult run_likelihood_experiment(const ExperimentPlan& plan, const DataSet& data);

struct DiffRoundSummary {
  double max_weight = 0.0;
  double max_mean = 0.0;  // normalized, per coordinate
  double max_cov = 0.0;   // normalized, per entry
};

struct DiffResult {
  Trace trace;
  double gamma_mu = 0.0;
  double gamma_sigma = 0.0;
  /// Maxima over inits, runs and components, per round.
  std::vector<DiffRoundSummary> rounds;
};

/// Columns: init_id, run_id, round, component, param, index_i, index_j,
/// raw_diff, normalized_diff. Params: weight (w_EM - w_SEM), mean and
/// mean_norm (mu_SEM - mu_EM), cov for i <= j and cov_frobenius
/// (Sigma_SEM - Sigma_EM). Normalizers sqrt(D) * Delta and D * Delta^2.
DiffResult run_diff_experiment(const ExperimentPlan& plan, const DataSet& data);

struct BoundCell {
  std::size_t init = 0;
  std::size_t run = 0;
  std::size_t round = 0;
  std::size_t component = 0;
  double actual = 0.0;
  std::optional<double> bound;  // unset when not applicable
};

struct BoundResult {
  Trace trace;
  std::vector<BoundCell> cells;
  std::size_t applicable = 0;
  std::size_t satisfied = 0;

  double satisfied_fraction() const {
    return applicable == 0 ? 0.0 : static_cast<double>(satisfied) / static_cast<double>(applicable);
  }
};

/// Along every SEM trajectory, compares the SEM mean of each round with the
/// EM update from the same current model and reports the Euclidean mean
/// bound. Columns: init_id, run_id, round, component, actual_euclid,
/// bound_euclid, applicable. Components repaired in a round are not
/// applicable.
BoundResult run_bound_experiment(const ExperimentPlan& plan, const DataSet& data);

struct SpeedResult {
  Trace trace;
  OpCounter em;
  OpCounter sem;
  double mult_ratio = 0.0;    // mean EM mults / mean SEM mults per iteration
  double wall_ratio = 0.0;    // median EM wall / median SEM wall
  double em_dominance = 0.0;  // mean EM mults / (2 K N D^2)
};

/// Fits EM and SEM from init 0 for plan.rounds iterations each. Columns:
/// algorithm, iteration, mults, wall_ns.
SpeedResult run_speed_experiment(const ExperimentPlan& plan, const DataSet& data);

/// Writes <out_dir>/<trace.name>.csv.
std::filesystem::path write_trace(const ExperimentPlan& plan, const Trace& trace);

}  // namespace gmmsem

#endif  // GMMSEM_HARNESS_HPP_
