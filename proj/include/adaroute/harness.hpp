// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/evaluator.hpp"
#include "adaroute/fusion.hpp"
#include "adaroute/pairing.hpp"
#include "adaroute/retrieval.hpp"

namespace adaroute {

using TestSets = std::map<std::string, std::vector<ValidationItem>>;

struct TaskScore {
  std::string task_id;
  MetricKind metric = MetricKind::RougeAvg;
  double method_score = 0.0;
  double oracle_score = 0.0;
};

struct NormalizedAverage {
  double value = 0.0;                 // percent
  std::vector<std::string> excluded;  // tasks whose oracle score is zero
};

/// Mean over tasks of 100 * method / oracle. Zero-oracle tasks are excluded
/// and listed. The ratio is taken before scaling so method == oracle gives
/// exactly 100.
inline NormalizedAverage normalized_average(const std::vector<TaskScore>& rows) {
  NormalizedAverage out;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.oracle_score == 0.0) {
      out.excluded.push_back(r.task_id);
      continue;
    }
    sum += 100.0 * (r.method_score / r.oracle_score);
    ++n;
  }
  out.value = n == 0 ? 0.0 : sum / static_cast<double>(n);
  return out;
}

struct EvaluationReport {
  Regime regime = Regime::NonOOD;
  std::vector<TaskScore> rows;  // sorted by task id
  NormalizedAverage average;
  std::string oracle_note;
};

/// Score of each task's aligned adapter on its held-out test items.
inline std::map<std::string, double> oracle_scores(const Catalog& catalog, const Evaluator& evaluator,
                                                   const TestSets& test_sets,
                                                   const std::map<std::string, std::string>& aligned) {
  std::map<std::string, double> out;
  for (const auto& [task_id, items] : test_sets) {
    auto a = aligned.find(task_id);
    if (a == aligned.end()) throw ConfigError("no aligned adapter for test task '" + task_id + "'");
    auto t = catalog.tasks.find(task_id);
    const MetricKind metric = t != catalog.tasks.end() ? t->second.metric : MetricKind::RougeAvg;
    out[task_id] = evaluate(evaluator, a->second, items, metric);
  }
  return out;
}

struct RouterConfig {
  const Encoder* encoder = nullptr;
  std::size_t k = kDefaultTopK;
  double temperature = kDefaultTemperature;
  PairingStrategy repair = Exhaustive{};  // re-pairing after adapter removal
};

/// Evaluates routed output-space fusion on every test task under a regime.
///
/// For each target task the catalog is reduced with remove_for_regime;
/// SemiOOD re-pairs the tasks whose adapter was removed. Each test query is
/// routed and its fused output scored against the aligned-adapter oracle.
inline EvaluationReport run_regime(const Catalog& catalog, Regime regime, const RouterConfig& router,
                                   const Evaluator& evaluator, const TestSets& test_sets,
                                   const std::map<std::string, std::string>& aligned) {
  if (router.encoder == nullptr) throw ConfigError("router has no encoder");
  const auto oracle = oracle_scores(catalog, evaluator, test_sets, aligned);
  EvaluationReport report;
  report.regime = regime;
  report.oracle_note = "oracle = aligned adapter on the task's test items";
  for (const auto& [task_id, items] : test_sets) {
    if (items.empty()) continue;
    Catalog view = remove_for_regime(catalog, task_id, regime);
    if (regime == Regime::SemiOOD) view = build_pairing(view, evaluator, router.repair, true).catalog;
    auto t = catalog.tasks.find(task_id);
    const MetricKind metric = t != catalog.tasks.end() ? t->second.metric : MetricKind::RougeAvg;
    double sum = 0.0;
    for (const auto& item : items) {
      const RoutingDecision d =
          route_embedding(view, router.encoder->encode(item.input), router.k, router.temperature, item.input);
      sum += detail::guarded_score([&] { return evaluator.score_decision(d, item, metric); }, "query '" + item.input + "'");
    }
    report.rows.push_back({task_id, metric, sum / static_cast<double>(items.size()), oracle.at(task_id)});
  }
  report.average = normalized_average(report.rows);
  return report;
}

inline json report_to_json(const EvaluationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"task_id", row.task_id},
                    {"metric", metric_name(row.metric)},
                    {"method_score", row.method_score},
                    {"oracle_score", row.oracle_score}});
  }
  return {{"regime", regime_name(r.regime)},
          {"oracle", r.oracle_note},
          {"rows", rows},
          {"normalized_average", r.average.value},
          {"excluded_zero_oracle", r.average.excluded}};
}

// --- budget sweep ------------------------------------------------------------

struct SweepRow {
  std::size_t budget = 0;
  std::string method;  // "uniform" or "sh"
  bool available = true;
  double mean = 0.0;   // normalized true score of the selected adapter
  double stddev = 0.0;
  double mean_budget_spent = 0.0;
  std::size_t runs = 0;
};

struct SweepTable {
  std::string task_id;
  double peak_score = 0.0;  // full-validation score of the exhaustive winner
  std::vector<SweepRow> rows;
};

/// Smallest budget at which `method` reaches `level` (mean normalized score).
inline std::optional<std::size_t> budget_to_reach(const SweepTable& table, const std::string& method, double level) {
  for (const auto& r : table.rows) {
    if (r.method == method && r.available && r.mean >= level) return r.budget;
  }
  return std::nullopt;
}

/// Compares uniform selection and Successive Halving at each budget over
/// `runs` seeded repetitions. The selected adapter is scored on the full
/// validation set and normalised by the exhaustive winner's score. Budgets
/// too small for any halving schedule are reported as unavailable for SH.
inline SweepTable budget_sweep(const TaskRecord& task, const std::vector<std::string>& pool, const Evaluator& evaluator,
                               const std::vector<std::size_t>& budgets, std::size_t runs, std::uint64_t seed,
                               const ShConfig& sh_base = {}) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) throw ConfigError("budgets must be ascending");
  if (runs == 0) throw ConfigError("runs must be positive");
  const PairingOutcome full = exhaustive_pairing(task, pool, evaluator);
  std::map<std::string, double> true_score;
  for (std::size_t i = 0; i < full.trace.front().survivors.size(); ++i) {
    true_score[full.trace.front().survivors[i]] = full.trace.front().scores[i];
  }
  SweepTable table;
  table.task_id = task.id;
  table.peak_score = true_score.at(full.winner);
  if (table.peak_score == 0.0) throw ConfigError("task '" + task.id + "' has a zero peak score");
  const std::size_t n = true_score.size();
  const std::size_t v = task.validation.size();

  auto summarize = [&](SweepRow row, const std::vector<double>& scores, const std::vector<double>& spent) {
    double mean = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      mean += scores[i];
      sp += spent[i];
    }
    mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    row.mean = mean;
    row.stddev = scores.size() > 1 ? std::sqrt(var / static_cast<double>(scores.size() - 1)) : 0.0;
    row.mean_budget_spent = sp / static_cast<double>(scores.size());
    row.runs = scores.size();
    table.rows.push_back(row);
  };

  for (std::size_t budget : budgets) {
    std::vector<double> u_scores, u_spent, s_scores, s_spent;
    std::optional<ShConfig> sh_cfg;
    try {
      sh_cfg = sh_config_for_budget(n, v, sh_base, budget);
    } catch (const InsufficientBudgetError&) {
    }
    for (std::size_t run = 0; run < runs; ++run) {
      const std::uint64_t run_seed = mix_seed(seed, run);
      if (budget >= n) {
        const auto u = uniform_selection(task, pool, evaluator, budget, run_seed);
        u_scores.push_back(true_score.at(u.winner) / table.peak_score);
        u_spent.push_back(static_cast<double>(u.total_budget_spent));
      }
      if (sh_cfg) {
        ShConfig cfg = *sh_cfg;
        cfg.seed = run_seed;
        const auto s = successive_halving(task, pool, evaluator, cfg);
        s_scores.push_back(true_score.at(s.winner) / table.peak_score);
        s_spent.push_back(static_cast<double>(s.total_budget_spent));
      }
    }
    if (u_scores.empty()) {
      table.rows.push_back({budget, "uniform", false});
    } else {
      summarize({budget, "uniform"}, u_scores, u_spent);
    }
    if (s_scores.empty()) {
      table.rows.push_back({budget, "sh", false});
    } else {
      summarize({budget, "sh"}, s_scores, s_spent);
    }
  }
  return table;
}

inline json sweep_to_json(const SweepTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = {{"budget", r.budget}, {"method", r.method}, {"available", r.available}};
    if (r.available) {
      row["mean"] = r.mean;
      row["stddev"] = r.stddev;
      row["mean_budget_spent"] = r.mean_budget_spent;
      row["runs"] = r.runs;
    }
    rows.push_back(row);
  }
  return {{"task_id", t.task_id}, {"peak_score", t.peak_score}, {"rows", rows}};
}

// --- performance matrix --------------------------------------------------------

struct PerformanceMatrix {
  std::vector<std::string> task_ids;
  std::vector<std::string> adapter_ids;
  std::vector<std::vector<double>> raw;         // [task][adapter], full validation set
  std::vector<std::vector<double>> normalized;  // row-wise min-max to [0, 1]
};

/// Row-wise min-max normalisation; constant rows map to zeros.
inline std::vector<std::vector<double>> row_normalize(const std::vector<std::vector<double>>& m) {
  std::vector<std::vector<double>> out = m;
  for (auto& row : out) {
    if (row.empty()) continue;
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    const double min = *lo, range = *hi - *lo;
    for (double& v : row) v = range > 0.0 ? (v - min) / range : 0.0;
  }
  return out;
}

inline PerformanceMatrix performance_matrix(const Catalog& catalog, const Evaluator& evaluator) {
  PerformanceMatrix pm;
  for (const auto& [id, a] : catalog.pool) pm.adapter_ids.push_back(id);
  for (const auto& [id, task] : catalog.tasks) {
    pm.task_ids.push_back(id);
    std::vector<double> row;
    for (const auto& a : pm.adapter_ids) row.push_back(evaluate(evaluator, a, task.validation, task.metric));
    pm.raw.push_back(std::move(row));
  }
  pm.normalized = row_normalize(pm.raw);
  return pm;
}

}  // namespace adaroute
