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

// Command-line driver: data generation, fitting and the experiment traces.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 unrecoverable
// degeneracy.

#include "gmmsem/bounds.hpp"
#include "gmmsem/em.hpp"
#include "gmmsem/error.hpp"
#include "gmmsem/harness.hpp"
#include "gmmsem/ingest.hpp"
#include "gmmsem/sem.hpp"
#include "gmmsem/synth.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace gmmsem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDegenerate = 3;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> rounds;
  std::optional<std::size_t> k;
  std::optional<double> delta;
};

/// Experiment options shared by compare, bounds and speed.
struct PlanFlags {
  std::optional<std::string> config;
  std::optional<std::string> profile;
  std::optional<std::string> data;
  bool normalize = false;
  std::optional<std::size_t> gen_d, gen_k, gen_n, inits, runs, threads, zeta;
  std::optional<std::string> weights, policy, init_model;
  std::optional<double> overlap;
};

fs::path out_dir(const GlobalFlags& g) {
  if (g.out) return *g.out;
  if (const char* env = std::getenv("GMMSEM_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

void add_plan_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--config", f.config, "key=value settings file");
  cmd->add_option("--profile", f.profile, "ci or full");
  cmd->add_option("--data", f.data, "dataset CSV (default: synthetic)");
  cmd->add_flag("--normalize", f.normalize, "min-max normalize the data first");
  cmd->add_option("--gen-d", f.gen_d, "synthetic dimension");
  cmd->add_option("--gen-k", f.gen_k, "synthetic components");
  cmd->add_option("--gen-n", f.gen_n, "synthetic points");
  cmd->add_option("--weights", f.weights, "balanced or unbalanced");
  cmd->add_option("--overlap", f.overlap, "synthetic separation factor");
  cmd->add_option("--inits", f.inits, "initial models");
  cmd->add_option("--runs", f.runs, "SEM runs per initial model");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--zeta", f.zeta, "minimum points per SEM component");
  cmd->add_option("--policy", f.policy, "repair policy: resample, blend or keep");
  cmd->add_option("--init-model", f.init_model, "start every init from this model file");
}

template <typename T>
void put(std::vector<std::pair<std::string, std::string>>& kv, const char* key,
         const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    kv.emplace_back(key, *v);
  } else if constexpr (std::is_same_v<T, double>) {
    kv.emplace_back(key, format_double(*v));
  } else {
    kv.emplace_back(key, std::to_string(*v));
  }
}

ExperimentPlan build_plan(const GlobalFlags& g, const PlanFlags& f,
                          const std::vector<std::pair<std::string, std::string>>& base) {
  ExperimentPlan plan = ExperimentPlan::ci();
  for (const auto& [key, value] : base) apply_setting(plan, key, value);
  if (f.profile) apply_setting(plan, "profile", *f.profile);
  plan.out_dir = out_dir(GlobalFlags{});
  if (f.config) apply_config_file(plan, *f.config);
  std::vector<std::pair<std::string, std::string>> kv;
  put(kv, "seed", g.seed);
  put(kv, "data", f.data);
  if (f.normalize) kv.emplace_back("normalize", "true");
  put(kv, "gen_d", f.gen_d);
  put(kv, "gen_k", f.gen_k);
  put(kv, "gen_n", f.gen_n);
  put(kv, "weights", f.weights);
  put(kv, "overlap", f.overlap);
  put(kv, "init_model", f.init_model);
  put(kv, "k", g.k);
  put(kv, "rounds", g.rounds);
  put(kv, "inits", f.inits);
  put(kv, "runs", f.runs);
  put(kv, "delta", g.delta);
  put(kv, "zeta", f.zeta);
  put(kv, "policy", f.policy);
  put(kv, "threads", f.threads);
  for (const auto& [key, value] : kv) apply_setting(plan, key, value);
  if (g.out) plan.out_dir = *g.out;
  plan.validate();
  return plan;
}

void report_written(const fs::path& path) { std::cout << "wrote " << path.string() << "\n"; }

void write_repairs(const std::vector<RepairEvent>& repairs, const fs::path& path) {
  std::string csv = "round,component,reason,action,support\n";
  for (const auto& e : repairs) {
    csv += std::to_string(e.round) + "," + std::to_string(e.component) + "," +
           std::string(to_string(e.reason)) + "," + std::string(to_string(e.action)) + "," +
           format_double(e.support) + "\n";
    std::cerr << e.describe() << "\n";
  }
  write_file(path, csv);
}

void write_nll(const FitResult& fit, const DataSet& data, const fs::path& path) {
  std::string csv = "round,nll\n";
  for (std::size_t t = 0; t < fit.models.size(); ++t) {
    csv += std::to_string(t + 1) + "," + format_double(-log_likelihood(fit.models[t], data)) + "\n";
  }
  write_file(path, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian mixture fitting with EM and stochastic EM"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--seed", g.seed, "master seed for all randomness");
  app.add_option("--out", g.out, "output directory (default $GMMSEM_OUT_DIR or .)");
  app.add_option("--rounds", g.rounds, "fit rounds");
  app.add_option("--k", g.k, "number of components");
  app.add_option("--delta", g.delta, "per-check failure probability");

  // gen
  auto* gen = app.add_subcommand("gen", "sample a synthetic mixture and dataset");
  std::size_t gen_d = 3, gen_n = 1000;
  std::string gen_weights = "balanced";
  double gen_overlap = 1.0;
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--n", gen_n, "points");
  gen->add_option("--weights", gen_weights, "balanced or unbalanced");
  gen->add_option("--overlap", gen_overlap, "separation factor");

  // init
  auto* init = app.add_subcommand("init", "draw an initial model from a dataset");
  std::string init_data;
  std::size_t init_index = 0;
  init->add_option("--data", init_data, "dataset CSV")->required();
  init->add_option("--index", init_index, "initial model index");

  // normalize
  auto* norm = app.add_subcommand("normalize", "min-max normalize a dataset");
  std::string norm_data;
  norm->add_option("--data", norm_data, "dataset CSV")->required();

  // fit-em / fit-sem
  std::string fit_data, fit_model, fit_policy = "resample";
  std::optional<std::size_t> fit_zeta;
  auto* fit_em = app.add_subcommand("fit-em", "run EM from a model file");
  auto* fit_sem = app.add_subcommand("fit-sem", "run stochastic EM from a model file");
  for (auto* cmd : {fit_em, fit_sem}) {
    cmd->add_option("--data", fit_data, "dataset CSV")->required();
    cmd->add_option("--model", fit_model, "initial model file")->required();
    cmd->add_option("--policy", fit_policy, "repair policy: resample, blend or keep");
  }
  fit_sem->add_option("--zeta", fit_zeta, "minimum points per component");

  // experiments
  PlanFlags plan_flags;
  auto* compare = app.add_subcommand("compare", "likelihood and difference traces");
  auto* bounds = app.add_subcommand("bounds", "bound-vs-actual trace");
  auto* speed = app.add_subcommand("speed", "multiplication counts and wall-clock");
  for (auto* cmd : {compare, bounds, speed}) add_plan_flags(cmd, plan_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  const auto seed = g.seed.value_or(0);
  try {
    const fs::path out = out_dir(g);
    if (gen->parsed()) {
      GenSpec spec;
      spec.d = gen_d;
      spec.k = g.k.value_or(3);
      spec.n = gen_n;
      spec.weight_mode = parse_weight_mode(gen_weights);
      spec.overlap = gen_overlap;
      spec.rng_seed = seed;
      const SyntheticDataset ds = generate_dataset(spec);
      save_csv(ds.data, out / "data.csv");
      save_model(ds.truth, out / "truth.gmm");
      save_labels(ds.labels, out / "labels.csv");
      report_written(out / "data.csv");
    } else if (init->parsed()) {
      const DataSet data = load_csv(init_data);
      RngStream rng(init_seed(seed, init_index));
      save_model(initialize(data, g.k.value_or(3), rng), out / "init.gmm");
      report_written(out / "init.gmm");
    } else if (norm->parsed()) {
      const Normalized result = normalize(load_csv(norm_data));
      save_csv(result.data, out / "data.csv");
      save_normalization(result.record, out / "normalization.csv");
      for (std::size_t d : result.record.constant_coordinates()) {
        std::cerr << "coordinate " << d << " has zero spread; mapped to 0\n";
      }
      report_written(out / "data.csv");
    } else if (fit_em->parsed() || fit_sem->parsed()) {
      const DataSet data = load_csv(fit_data);
      const MixtureModel model0 = load_model(fit_model);
      const std::size_t rounds = g.rounds.value_or(50);
      const RepairPolicy policy = parse_repair_policy(fit_policy);
      const bool is_em = fit_em->parsed();
      const FitResult fit =
          is_em ? em_fit(model0, data, rounds, EmConfig{policy, seed})
                : sem_fit(model0, data, rounds, SemConfig{fit_zeta, policy, seed});
      const std::string name = is_em ? "em" : "sem";
      const MixtureModel& last = fit.models.empty() ? model0 : fit.models.back();
      save_model(last, out / (name + ".gmm"));
      write_nll(fit, data, out / (name + "_nll.csv"));
      write_repairs(fit.repairs, out / (name + "_repairs.csv"));
      report_written(out / (name + ".gmm"));
    } else if (compare->parsed()) {
      const ExperimentPlan plan = build_plan(g, plan_flags, {});
      const PreparedData prepared = prepare_data(plan);
      const auto lik = run_likelihood_experiment(plan, prepared.data);
      report_written(write_trace(plan, lik.trace));
      const auto diff = run_diff_experiment(plan, prepared.data);
      report_written(write_trace(plan, diff.trace));
      for (const auto& e : diff.trace.exclusions) std::cerr << "excluded init " << e.init << ": " << e.reason << "\n";
    } else if (bounds->parsed()) {
      const ExperimentPlan plan = build_plan(g, plan_flags, {});
      const PreparedData prepared = prepare_data(plan);
      const auto result = run_bound_experiment(plan, prepared.data);
      report_written(write_trace(plan, result.trace));
      std::printf("applicable cells %zu, actual <= bound in %zu (%.4f)\n", result.applicable,
                  result.satisfied, result.satisfied_fraction());
      for (const auto& e : result.trace.exclusions) std::cerr << "excluded init " << e.init << ": " << e.reason << "\n";
    } else if (speed->parsed()) {
      const ExperimentPlan plan = build_plan(
          g, plan_flags,
          {{"gen_d", "10"}, {"gen_k", "10"}, {"gen_n", "100000"}, {"k", "10"}, {"rounds", "10"}});
      const PreparedData prepared = prepare_data(plan);
      const auto result = run_speed_experiment(plan, prepared.data);
      report_written(write_trace(plan, result.trace));
      std::printf("mult ratio em/sem %.4f, wall ratio %.4f, em / (2 K N D^2) %.4f\n",
                  result.mult_ratio, result.wall_ratio, result.em_dominance);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnrecoverableDegeneracyError& e) {
    std::cerr << "unrecoverable degeneracy: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const DegenerateComponentError& e) {
    std::cerr << "degenerate component: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
