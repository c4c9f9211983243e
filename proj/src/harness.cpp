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

#include "gmmsem/harness.hpp"

#include "gmmsem/bounds.hpp"
#include "gmmsem/error.hpp"
#include "gmmsem/estep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace gmmsem {

namespace {

constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kEmTag = 2;
constexpr std::uint64_t kSemTag = 3;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_unsigned(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError("setting '" + std::string(key) + "' needs a non-negative integer, got '" +
                     std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size() ||
      !std::isfinite(out)) {
    throw UsageError("setting '" + std::string(key) + "' needs a number, got '" +
                     std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw UsageError("setting '" + std::string(key) + "' needs a boolean, got '" +
                   std::string(value) + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string preamble(const std::string& kind, const ExperimentPlan& plan, const DataSet& data,
                     const InitSet& inits) {
  std::string out = "# trace " + kind + "\n";
  out += "# master_seed " + std::to_string(plan.master_seed) + " inits " +
         std::to_string(plan.n_inits) + " runs " + std::to_string(plan.runs_per_init) +
         " rounds " + std::to_string(plan.rounds) + " k " + std::to_string(plan.k) + "\n";
  out += "# data n " + std::to_string(data.n()) + " d " + std::to_string(data.d()) +
         " normalized " + (plan.normalize ? "yes" : "no") + " spread";
  for (Eigen::Index d = 0; d < data.spread().size(); ++d) out += " " + fmt(data.spread()[d]);
  out += "\n";
  for (std::size_t i = 0; i < inits.models.size(); ++i) {
    if (inits.models[i]) out += "# init " + std::to_string(i) + " hash " + hex64(model_hash(*inits.models[i])) + "\n";
  }
  return out;
}

std::string exclusion_lines(const std::vector<Exclusion>& exclusions) {
  std::string out;
  for (const auto& e : exclusions) {
    out += "# excluded init " + std::to_string(e.init);
    if (e.run) out += " run " + std::to_string(*e.run);
    out += " " + e.algorithm + ": " + e.reason + "\n";
  }
  return out;
}

/// Outcome of one trajectory: models on success, reason on failure.
struct RunOutcome {
  std::optional<FitResult> fit;
  std::string error;
};

template <typename Fn>
RunOutcome guarded(Fn&& fn) {
  RunOutcome out;
  try {
    out.fit = fn();
  } catch (const DataError& e) {
    out.error = e.what();
  } catch (const DegenerateComponentError& e) {
    out.error = e.what();
  }
  return out;
}

/// Flattened (init, run) index space where run == runs means the EM run.
struct Task {
  std::size_t init;
  std::size_t run;
  bool em;
};

std::vector<Task> make_tasks(const ExperimentPlan& plan, const InitSet& inits, bool with_em) {
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < plan.n_inits; ++i) {
    if (!inits.models[i]) continue;
    if (with_em) tasks.push_back({i, 0, true});
    for (std::size_t r = 0; r < plan.runs_per_init; ++r) tasks.push_back({i, r, false});
  }
  return tasks;
}

std::vector<RunOutcome> run_tasks(const ExperimentPlan& plan, const DataSet& data,
                                  const InitSet& inits, const std::vector<Task>& tasks) {
  std::vector<RunOutcome> outcomes(tasks.size());
  parallel_for(tasks.size(), plan.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const MixtureModel& model0 = *inits.models[task.init];
    if (task.em) {
      outcomes[t] = guarded([&] { return em_fit(model0, data, plan.rounds, plan.em_config(task.init)); });
    } else {
      outcomes[t] = guarded(
          [&] { return sem_fit(model0, data, plan.rounds, plan.sem_config(task.init, task.run)); });
    }
  });
  return outcomes;
}

std::vector<double> nll_trajectory(const FitResult& fit, const DataSet& data) {
  std::vector<double> out;
  out.reserve(fit.models.size());
  for (const auto& m : fit.models) out.push_back(-log_likelihood(m, data));
  return out;
}

}  // namespace

ExperimentPlan ExperimentPlan::ci() {
  ExperimentPlan plan;
  plan.gen.d = 3;
  plan.gen.k = 3;
  plan.gen.n = 100000;
  plan.k = 3;
  plan.rounds = 20;
  plan.n_inits = 3;
  plan.runs_per_init = 10;
  return plan;
}

ExperimentPlan ExperimentPlan::full() {
  ExperimentPlan plan = ci();
  plan.rounds = 50;
  plan.n_inits = 30;
  plan.runs_per_init = 100;
  return plan;
}

ExperimentPlan ExperimentPlan::profile(std::string_view name) {
  if (name == "ci") return ci();
  if (name == "full") return full();
  throw UsageError("unknown profile '" + std::string(name) + "' (expected ci or full)");
}

void ExperimentPlan::validate() const {
  if (rounds < 1) throw UsageError("rounds must be at least 1");
  if (n_inits < 1) throw UsageError("inits must be at least 1");
  if (runs_per_init < 1) throw UsageError("runs must be at least 1");
  if (k < 1) throw UsageError("k must be at least 1");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw UsageError("delta must lie in (0, 1)");
  if (zeta && *zeta == 0) throw UsageError("zeta must be at least 1");
  if (init_model && init_model->k() != k) throw UsageError("init_model has a different k than the plan");
  if (!dataset_path) gen.validate();
}

double ExperimentPlan::check_delta(std::size_t d) const {
  if (delta) return *delta;
  return 1.0 / (100.0 * static_cast<double>(k) * static_cast<double>(d + 1));
}

SemConfig ExperimentPlan::sem_config(std::size_t init, std::size_t run) const {
  return SemConfig{zeta, repair_policy, sem_seed(master_seed, init, run)};
}

EmConfig ExperimentPlan::em_config(std::size_t init) const {
  return EmConfig{repair_policy, em_seed(master_seed, init)};
}

void apply_setting(ExperimentPlan& plan, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "data") {
    plan.dataset_path = std::filesystem::path(std::string(value));
  } else if (key == "normalize") {
    plan.normalize = parse_bool(key, value);
  } else if (key == "gen_d") {
    plan.gen.d = parse_unsigned<std::size_t>(key, value);
  } else if (key == "gen_k") {
    plan.gen.k = parse_unsigned<std::size_t>(key, value);
  } else if (key == "gen_n") {
    plan.gen.n = parse_unsigned<std::size_t>(key, value);
  } else if (key == "weights") {
    plan.gen.weight_mode = parse_weight_mode(value);
  } else if (key == "overlap") {
    plan.gen.overlap = parse_real(key, value);
  } else if (key == "gen_seed") {
    plan.gen.rng_seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "k") {
    plan.k = parse_unsigned<std::size_t>(key, value);
  } else if (key == "rounds") {
    plan.rounds = parse_unsigned<std::size_t>(key, value);
  } else if (key == "inits") {
    plan.n_inits = parse_unsigned<std::size_t>(key, value);
  } else if (key == "runs") {
    plan.runs_per_init = parse_unsigned<std::size_t>(key, value);
  } else if (key == "seed") {
    plan.master_seed = parse_unsigned<std::uint64_t>(key, value);
    plan.gen.rng_seed = plan.master_seed;
  } else if (key == "delta") {
    plan.delta = parse_real(key, value);
  } else if (key == "zeta") {
    plan.zeta = parse_unsigned<std::size_t>(key, value);
  } else if (key == "policy") {
    plan.repair_policy = parse_repair_policy(value);
  } else if (key == "threads") {
    plan.threads = std::max<std::size_t>(1, parse_unsigned<std::size_t>(key, value));
  } else if (key == "out") {
    plan.out_dir = std::filesystem::path(std::string(value));
  } else if (key == "init_model") {
    plan.init_model = load_model(std::filesystem::path(std::string(value)));
    plan.k = plan.init_model->k();
  } else if (key == "profile") {
    const ExperimentPlan base = ExperimentPlan::profile(value);
    plan.gen = base.gen;
    plan.k = base.k;
    plan.rounds = base.rounds;
    plan.n_inits = base.n_inits;
    plan.runs_per_init = base.runs_per_init;
  } else {
    throw UsageError("unknown setting '" + std::string(key) + "'");
  }
}

void apply_config_text(ExperimentPlan& plan, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(plan, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentPlan& plan, const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  apply_config_text(plan, text);
}

std::uint64_t init_seed(std::uint64_t master, std::size_t init) {
  return derive_seed(master, {kInitTag, init});
}

std::uint64_t em_seed(std::uint64_t master, std::size_t init) {
  return derive_seed(master, {kEmTag, init});
}

std::uint64_t sem_seed(std::uint64_t master, std::size_t init, std::size_t run) {
  return derive_seed(master, {kSemTag, init, run});
}

std::uint64_t model_hash(const MixtureModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : format_model(model)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

PreparedData prepare_data(const ExperimentPlan& plan) {
  std::optional<DataSet> raw;
  std::string source;
  if (plan.dataset_path) {
    raw = load_csv(*plan.dataset_path);
    source = plan.dataset_path->string();
  } else {
    raw = generate_dataset(plan.gen).data;
    source = "synthetic";
  }
  if (!plan.normalize) return {std::move(*raw), std::nullopt, source};
  Normalized norm = normalize(*raw);
  return {std::move(norm.data), std::move(norm.record), source};
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

InitSet make_inits(const ExperimentPlan& plan, const DataSet& data) {
  InitSet set;
  set.models.resize(plan.n_inits);
  if (plan.init_model) {
    if (plan.init_model->d() != data.d()) {
      throw DataError("init_model has dimension " + std::to_string(plan.init_model->d()) +
                      " but the data has " + std::to_string(data.d()));
    }
    set.models.assign(plan.n_inits, *plan.init_model);
    return set;
  }
  for (std::size_t i = 0; i < plan.n_inits; ++i) {
    RngStream rng(init_seed(plan.master_seed, i));
    try {
      set.models[i] = initialize(data, plan.k, rng);
    } catch (const DataError& e) {
      set.exclusions.push_back({i, std::nullopt, "init", e.what()});
    }
  }
  return set;
}

LikelihoodResult run_likelihood_experiment(const ExperimentPlan& plan, const DataSet& data) {
  plan.validate();
  const InitSet inits = make_inits(plan, data);
  const auto tasks = make_tasks(plan, inits, true);
  const auto outcomes = run_tasks(plan, data, inits, tasks);

  LikelihoodResult result;
  result.em_nll.assign(plan.n_inits, {});
  result.sem_nll.assign(plan.n_inits, std::vector<std::vector<double>>(plan.runs_per_init));
  std::vector<Exclusion> exclusions = inits.exclusions;
  std::vector<std::vector<double>> nll(tasks.size());
  parallel_for(tasks.size(), plan.threads, [&](std::size_t t) {
    if (outcomes[t].fit) nll[t] = nll_trajectory(*outcomes[t].fit, data);
  });
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    if (!outcomes[t].fit) {
      exclusions.push_back({task.init, task.em ? std::nullopt : std::optional(task.run),
                            task.em ? "em" : "sem", outcomes[t].error});
      continue;
    }
    if (task.em) {
      result.em_nll[task.init] = std::move(nll[t]);
    } else {
      result.sem_nll[task.init][task.run] = std::move(nll[t]);
    }
  }

  std::string body = "init_id,algorithm,round,stat,nll\n";
  std::size_t rows = 0;
  auto emit = [&](std::size_t init, const char* alg, std::size_t round, const char* stat, double v) {
    body += std::to_string(init) + "," + alg + "," + std::to_string(round) + "," + stat + "," +
            fmt(v) + "\n";
    ++rows;
  };
  static constexpr const char* kStats[] = {"min", "q1", "median", "q3", "max"};
  static constexpr double kLevels[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (std::size_t i = 0; i < plan.n_inits; ++i) {
    for (std::size_t t = 0; t < result.em_nll[i].size(); ++t) emit(i, "em", t + 1, "value", result.em_nll[i][t]);
    for (std::size_t t = 0; t < plan.rounds; ++t) {
      std::vector<double> values;
      for (const auto& run : result.sem_nll[i]) {
        if (!run.empty()) values.push_back(run[t]);
      }
      if (values.empty()) continue;
      if (plan.runs_per_init == 1) {
        emit(i, "sem", t + 1, "value", values.front());
        continue;
      }
      std::sort(values.begin(), values.end());
      for (std::size_t s = 0; s < 5; ++s) emit(i, "sem", t + 1, kStats[s], sorted_quantile(values, kLevels[s]));
    }
  }
  result.trace.name = "likelihood";
  result.trace.csv = preamble("likelihood", plan, data, inits) +
                     "# sem stats over runs: min, q1, median, q3, max; quantile at position "
                     "(n-1)*q with linear interpolation\n" +
                     "# em is a single deterministic series per init\n" +
                     exclusion_lines(exclusions) + body;
  result.trace.rows = rows;
  result.trace.exclusions = std::move(exclusions);
  return result;
}

DiffResult run_diff_experiment(const ExperimentPlan& plan, const DataSet& data) {
  plan.validate();
  const InitSet inits = make_inits(plan, data);
  const auto tasks = make_tasks(plan, inits, true);
  const auto outcomes = run_tasks(plan, data, inits, tasks);

  DiffResult result;
  const double delta_max = data.max_spread();
  const double dd = static_cast<double>(data.d());
  result.gamma_mu = std::sqrt(dd) * delta_max;
  result.gamma_sigma = dd * delta_max * delta_max;
  result.rounds.assign(plan.rounds, {});

  std::vector<Exclusion> exclusions = inits.exclusions;
  std::vector<const FitResult*> em_fit_of(plan.n_inits, nullptr);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (tasks[t].em && outcomes[t].fit) em_fit_of[tasks[t].init] = &*outcomes[t].fit;
  }
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!outcomes[t].fit) {
      exclusions.push_back({tasks[t].init, tasks[t].em ? std::nullopt : std::optional(tasks[t].run),
                            tasks[t].em ? "em" : "sem", outcomes[t].error});
    }
  }

  const std::size_t d = data.d();
  std::string body = "init_id,run_id,round,component,param,index_i,index_j,raw_diff,normalized_diff\n";
  std::size_t rows = 0;
  auto normalized = [](double raw, double gamma) {
    return gamma > 0.0 ? raw / gamma : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    if (task.em || !outcomes[t].fit) continue;
    const FitResult* em = em_fit_of[task.init];
    if (em == nullptr) continue;
    const FitResult& sem = *outcomes[t].fit;
    const std::string prefix = std::to_string(task.init) + "," + std::to_string(task.run) + ",";
    for (std::size_t round = 0; round < plan.rounds; ++round) {
      const MixtureModel& a = em->models[round];
      const MixtureModel& b = sem.models[round];
      DiffRoundSummary& summary = result.rounds[round];
      for (std::size_t k = 0; k < a.k(); ++k) {
        const std::string head = prefix + std::to_string(round + 1) + "," + std::to_string(k) + ",";
        auto emit = [&](const char* param, std::string i, std::string j, double raw, double norm) {
          body += head + param + "," + i + "," + j + "," + fmt(raw) + "," + fmt(norm) + "\n";
          ++rows;
        };
        const double dw = a.weight(k) - b.weight(k);
        emit("weight", "", "", dw, dw);
        summary.max_weight = std::max(summary.max_weight, std::fabs(dw));
        const Vector dmu = b.mean(k) - a.mean(k);
        for (std::size_t i = 0; i < d; ++i) {
          const double nv = normalized(dmu[i], result.gamma_mu);
          emit("mean", std::to_string(i), "", dmu[i], nv);
          if (std::isfinite(nv)) summary.max_mean = std::max(summary.max_mean, std::fabs(nv));
        }
        emit("mean_norm", "", "", dmu.norm(), normalized(dmu.norm(), result.gamma_mu));
        const Matrix dcov = b.covariance(k) - a.covariance(k);
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = i; j < d; ++j) {
            const double nv = normalized(dcov(i, j), result.gamma_sigma);
            emit("cov", std::to_string(i), std::to_string(j), dcov(i, j), nv);
            if (std::isfinite(nv)) summary.max_cov = std::max(summary.max_cov, std::fabs(nv));
          }
        }
        emit("cov_frobenius", "", "", dcov.norm(), normalized(dcov.norm(), result.gamma_sigma));
      }
    }
  }
  result.trace.name = "diff";
  result.trace.csv = preamble("diff", plan, data, inits) + "# gamma_mu " + fmt(result.gamma_mu) +
                     " gamma_sigma " + fmt(result.gamma_sigma) + "\n" +
                     "# weight: w_em - w_sem; mean, cov: sem - em; cov rows cover i <= j\n" +
                     exclusion_lines(exclusions) + body;
  result.trace.rows = rows;
  result.trace.exclusions = std::move(exclusions);
  return result;
}

BoundResult run_bound_experiment(const ExperimentPlan& plan, const DataSet& data) {
  plan.validate();
  const InitSet inits = make_inits(plan, data);
  const auto tasks = make_tasks(plan, inits, false);
  const double delta = plan.check_delta(data.d());

  struct Outcome {
    std::vector<BoundCell> cells;
    std::string error;
  };
  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), plan.threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const SemConfig cfg = plan.sem_config(task.init, task.run);
    std::vector<BoundCell> cells;
    try {
      if (data.n() < data.d() + 1) throw DataError("fitting needs N >= D + 1 points");
      std::optional<MixtureModel> current = *inits.models[task.init];
      std::vector<RepairEvent> events;
      for (std::size_t round = 1; round <= plan.rounds; ++round) {
        RngStream rng = round_stream(cfg.rng_seed, round);
        const ResponsibilityMatrix resp = responsibilities(*current, data);
        const Assignment assign = sample_assignment(resp, rng);
        const std::size_t before = events.size();
        MixtureModel next = sem_m_step(assign, data, *current, cfg, rng, nullptr, &events, round);
        const auto em_update = em_moments(resp, data);
        const BoundReport report = assemble_bounds(resp, data, em_update, delta);
        std::vector<bool> repaired(next.k(), false);
        for (std::size_t e = before; e < events.size(); ++e) repaired[events[e].component] = true;
        for (std::size_t k = 0; k < next.k(); ++k) {
          BoundCell cell{task.init, task.run, round, k, (next.mean(k) - em_update[k].mean).norm(),
                         std::nullopt};
          if (report.applicable[k] && !repaired[k] && std::isfinite(report.mean_bound_euclid[k])) {
            cell.bound = report.mean_bound_euclid[k];
          }
          cells.push_back(cell);
        }
        current = std::move(next);
      }
      outcomes[t].cells = std::move(cells);
    } catch (const DataError& e) {
      outcomes[t].error = e.what();
    } catch (const DegenerateComponentError& e) {
      outcomes[t].error = e.what();
    }
  });

  BoundResult result;
  std::vector<Exclusion> exclusions = inits.exclusions;
  std::string body = "init_id,run_id,round,component,actual_euclid,bound_euclid,applicable\n";
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!outcomes[t].error.empty()) {
      exclusions.push_back({tasks[t].init, tasks[t].run, "sem", outcomes[t].error});
      continue;
    }
    for (const auto& cell : outcomes[t].cells) {
      body += std::to_string(cell.init) + "," + std::to_string(cell.run) + "," +
              std::to_string(cell.round) + "," + std::to_string(cell.component) + "," +
              fmt(cell.actual) + "," + (cell.bound ? fmt(*cell.bound) : std::string()) + "," +
              (cell.bound ? "1" : "0") + "\n";
      if (cell.bound) {
        ++result.applicable;
        if (cell.actual <= *cell.bound) ++result.satisfied;
      }
      result.cells.push_back(cell);
    }
  }
  result.trace.name = "bounds";
  result.trace.csv = preamble("bounds", plan, data, inits) + "# delta per check " + fmt(delta) +
                     "\n" + exclusion_lines(exclusions) + body;
  result.trace.rows = result.cells.size();
  result.trace.exclusions = std::move(exclusions);
  return result;
}

SpeedResult run_speed_experiment(const ExperimentPlan& plan, const DataSet& data) {
  plan.validate();
  ExperimentPlan single = plan;
  single.n_inits = 1;
  const InitSet inits = make_inits(single, data);
  if (!inits.models[0]) throw DataError("speed: initialization failed: " + inits.exclusions[0].reason);
  const MixtureModel& model0 = *inits.models[0];

  SpeedResult result;
  em_fit(model0, data, plan.rounds, plan.em_config(0), &result.em);
  sem_fit(model0, data, plan.rounds, plan.sem_config(0, 0), &result.sem);

  auto mean_mults = [](const OpCounter& c) {
    return static_cast<double>(c.total_mults()) / static_cast<double>(c.mults.size());
  };
  auto median_wall = [](const OpCounter& c) {
    std::vector<double> w(c.wall_ns.begin(), c.wall_ns.end());
    std::sort(w.begin(), w.end());
    return sorted_quantile(w, 0.5);
  };
  const double em_m = mean_mults(result.em);
  const double sem_m = mean_mults(result.sem);
  const double dd = static_cast<double>(data.d());
  result.mult_ratio = em_m / sem_m;
  result.wall_ratio = median_wall(result.em) / median_wall(result.sem);
  result.em_dominance =
      em_m / (2.0 * static_cast<double>(model0.k()) * static_cast<double>(data.n()) * dd * dd);

  std::string body = "algorithm,iteration,mults,wall_ns\n";
  std::size_t rows = 0;
  auto emit = [&](const char* alg, const OpCounter& c) {
    for (std::size_t i = 0; i < c.mults.size(); ++i) {
      body += std::string(alg) + "," + std::to_string(i + 1) + "," + std::to_string(c.mults[i]) +
              "," + std::to_string(c.wall_ns[i]) + "\n";
      ++rows;
    }
  };
  emit("em", result.em);
  emit("sem", result.sem);
  result.trace.name = "speed";
  result.trace.csv = preamble("speed", single, data, inits) + "# mult_ratio " +
                     fmt(result.mult_ratio) + " wall_ratio " + fmt(result.wall_ratio) +
                     " em_over_2knd2 " + fmt(result.em_dominance) + "\n" + body;
  result.trace.rows = rows;
  return result;
}

std::filesystem::path write_trace(const ExperimentPlan& plan, const Trace& trace) {
  const auto path = plan.out_dir / (trace.name + ".csv");
  write_file(path, trace.csv);
  return path;
}

}  // namespace gmmsem
