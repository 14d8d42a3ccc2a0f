// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/evaluator.hpp"
#include "adaroute/random.hpp"

namespace adaroute {

/// Successive Halving parameters.
struct ShConfig {
  std::size_t base_samples = 8;   // m
  double keep_ratio = 0.5;        // eta, in (0, 1)
  double budget_growth = 2.0;     // gamma, > 1
  std::size_t rounds = 0;         // R; 0 selects ceil(log_{1/eta} N) + 2
  std::size_t warmup_rounds = 1;  // k
  std::uint64_t seed = 0;

  void validate() const {
    if (base_samples == 0) throw ConfigError("base_samples must be positive");
    if (!(keep_ratio > 0.0 && keep_ratio < 1.0)) throw ConfigError("keep_ratio must lie in (0, 1)");
    if (!(budget_growth > 1.0) || !std::isfinite(budget_growth)) throw ConfigError("budget_growth must exceed 1");
  }
};

struct RoundTrace {
  std::size_t round = 0;
  std::size_t samples_used = 0;
  std::vector<std::string> survivors;  // adapters scored this round, id order
  std::vector<double> scores;          // aligned with survivors

  friend bool operator==(const RoundTrace&, const RoundTrace&) = default;
};

struct PairingOutcome {
  std::string winner;
  std::vector<RoundTrace> trace;
  std::size_t total_budget_spent = 0;

  friend bool operator==(const PairingOutcome&, const PairingOutcome&) = default;
};

namespace detail {

// ceil() that ignores representation error just above an integer (0.3 * 10).
inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

inline std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

inline std::vector<const ValidationItem*> pick(const std::vector<ValidationItem>& items,
                                                const std::vector<std::size_t>& idx) {
  std::vector<const ValidationItem*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&items[i]);
  return out;
}

/// Scores every candidate on the same sample; returns scores in candidate order.
inline RoundTrace score_round(std::size_t round, const std::vector<std::string>& candidates,
                              const std::vector<const ValidationItem*>& samples, const TaskRecord& task,
                              const Evaluator& evaluator) {
  RoundTrace t{round, samples.size(), candidates, {}};
  t.scores.reserve(candidates.size());
  for (const auto& id : candidates) t.scores.push_back(evaluate(evaluator, id, samples, task.metric));
  return t;
}

/// Candidate indices ordered by score descending, id ascending on ties.
inline std::vector<std::size_t> ranking(const RoundTrace& t) {
  std::vector<std::size_t> order(t.survivors.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return t.scores[a] != t.scores[b] ? t.scores[a] > t.scores[b] : t.survivors[a] < t.survivors[b];
  });
  return order;
}

inline void require_pool(const std::vector<std::string>& pool, const TaskRecord& task) {
  if (pool.empty()) throw EmptyPoolError("no adapters to pair with task '" + task.id + "'");
  if (task.validation.empty()) throw EmptyTaskError("task '" + task.id + "' has no validation items");
}

}  // namespace detail

inline std::size_t default_sh_rounds(std::size_t n_adapters, double keep_ratio) {
  std::size_t j = 0;
  for (double reach = 1.0; reach < static_cast<double>(n_adapters) - 1e-9; reach /= keep_ratio) ++j;
  return j + 2;
}

/// Per-adapter sample count for round r under the warmup / growth schedule.
inline std::size_t sh_samples_for_round(const ShConfig& cfg, std::size_t round, std::size_t validation_size) {
  std::size_t m = cfg.base_samples;
  if (round >= cfg.warmup_rounds) {
    const double grown = static_cast<double>(cfg.base_samples) *
                         std::pow(cfg.budget_growth, static_cast<double>(round - cfg.warmup_rounds + 1));
    m = grown >= static_cast<double>(validation_size) ? validation_size : detail::ceil_count(grown);
  }
  return std::min(m, validation_size);
}

/// Budget Successive Halving will spend; depends only on the schedule.
inline std::size_t sh_planned_budget(std::size_t n_adapters, std::size_t validation_size, const ShConfig& cfg) {
  if (n_adapters <= 1) return 0;
  const std::size_t rounds = cfg.rounds ? cfg.rounds : default_sh_rounds(n_adapters, cfg.keep_ratio);
  std::size_t alive = n_adapters;
  std::size_t spent = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    spent += sh_samples_for_round(cfg, r, validation_size) * alive;
    alive = std::max<std::size_t>(1, detail::ceil_count(cfg.keep_ratio * static_cast<double>(alive)));
    if (alive == 1) break;
  }
  return spent;
}

/// Fits a schedule into `budget`: over base sample counts m and warmup
/// lengths from cfg.warmup_rounds up to the round count, picks the one with
/// the largest planned spend not above the budget. Ties keep the shorter
/// warmup.
inline ShConfig sh_config_for_budget(std::size_t n_adapters, std::size_t validation_size, ShConfig cfg,
                                     std::size_t budget) {
  const std::size_t rounds = cfg.rounds ? cfg.rounds : default_sh_rounds(n_adapters, cfg.keep_ratio);
  std::optional<ShConfig> best;
  std::size_t best_spend = 0;
  for (std::size_t k = cfg.warmup_rounds; k <= std::max(rounds, cfg.warmup_rounds); ++k) {
    ShConfig c = cfg;
    c.warmup_rounds = k;
    for (std::size_t m = 1; m <= validation_size; ++m) {
      c.base_samples = m;
      const std::size_t spend = sh_planned_budget(n_adapters, validation_size, c);
      if (spend > budget) break;
      if (!best || spend > best_spend) {
        best = c;
        best_spend = spend;
      }
    }
  }
  if (!best) {
    throw InsufficientBudgetError("budget " + std::to_string(budget) + " is below the smallest halving schedule");
  }
  return *best;
}

/// Every adapter on the full validation set.
inline PairingOutcome exhaustive_pairing(const TaskRecord& task, const std::vector<std::string>& pool,
                                         const Evaluator& evaluator) {
  const auto candidates = detail::sorted_unique(pool);
  detail::require_pool(candidates, task);
  std::vector<const ValidationItem*> all;
  for (const auto& v : task.validation) all.push_back(&v);
  RoundTrace t = detail::score_round(0, candidates, all, task, evaluator);
  PairingOutcome out;
  out.winner = t.survivors[detail::ranking(t).front()];
  out.total_budget_spent = t.samples_used * t.survivors.size();
  out.trace.push_back(std::move(t));
  return out;
}

/// Splits the budget evenly: every adapter is scored on the same
/// floor(budget / N) sampled items.
inline PairingOutcome uniform_selection(const TaskRecord& task, const std::vector<std::string>& pool,
                                        const Evaluator& evaluator, std::size_t total_budget, std::uint64_t seed) {
  const auto candidates = detail::sorted_unique(pool);
  detail::require_pool(candidates, task);
  if (total_budget < candidates.size()) {
    throw InsufficientBudgetError("budget " + std::to_string(total_budget) + " < " +
                                  std::to_string(candidates.size()) + " adapters");
  }
  Rng rng(seed);
  const std::size_t per_adapter = std::min(total_budget / candidates.size(), task.validation.size());
  const auto samples = detail::pick(task.validation, sample_indices(task.validation.size(), per_adapter, rng));
  RoundTrace t = detail::score_round(0, candidates, samples, task, evaluator);
  PairingOutcome out;
  out.winner = t.survivors[detail::ranking(t).front()];
  out.total_budget_spent = t.samples_used * t.survivors.size();
  out.trace.push_back(std::move(t));
  return out;
}

/// Successive Halving with a warmup phase and separate keep / growth rates.
///
/// Each round draws a fresh sample shared by all survivors, keeps the top
/// max(1, ceil(eta |S|)) by score (ties to the smaller id) and stops once a
/// single adapter remains or the rounds run out. A single-adapter pool
/// returns immediately without spending budget.
inline PairingOutcome successive_halving(const TaskRecord& task, const std::vector<std::string>& pool,
                                         const Evaluator& evaluator, const ShConfig& cfg) {
  cfg.validate();
  auto survivors = detail::sorted_unique(pool);
  detail::require_pool(survivors, task);
  PairingOutcome out;
  if (survivors.size() == 1) {
    out.winner = survivors.front();
    return out;
  }
  const std::size_t rounds = cfg.rounds ? cfg.rounds : default_sh_rounds(survivors.size(), cfg.keep_ratio);
  Rng rng(cfg.seed);
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t m_r = sh_samples_for_round(cfg, r, task.validation.size());
    const auto samples = detail::pick(task.validation, sample_indices(task.validation.size(), m_r, rng));
    RoundTrace t = detail::score_round(r, survivors, samples, task, evaluator);
    out.total_budget_spent += t.samples_used * t.survivors.size();

    const std::size_t keep =
        std::max<std::size_t>(1, detail::ceil_count(cfg.keep_ratio * static_cast<double>(survivors.size())));
    const auto order = detail::ranking(t);
    std::vector<std::string> next;
    for (std::size_t i = 0; i < keep; ++i) next.push_back(t.survivors[order[i]]);
    out.winner = next.front();
    std::sort(next.begin(), next.end());
    survivors = std::move(next);
    out.trace.push_back(std::move(t));
    if (survivors.size() == 1) break;
  }
  return out;
}

struct Exhaustive {};
struct Uniform {
  std::size_t budget = 0;
  std::uint64_t seed = 0;
};
using PairingStrategy = std::variant<Exhaustive, ShConfig, Uniform>;

using PairingReport = std::map<std::string, PairingOutcome>;

struct PairingResult {
  Catalog catalog;
  PairingReport report;
};

inline PairingOutcome pair_task(const TaskRecord& task, const std::vector<std::string>& pool,
                                const Evaluator& evaluator, const PairingStrategy& strategy) {
  const std::uint64_t salt = fnv1a64(task.id);
  return std::visit(
      [&](const auto& s) -> PairingOutcome {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Exhaustive>) {
          return exhaustive_pairing(task, pool, evaluator);
        } else if constexpr (std::is_same_v<S, Uniform>) {
          return uniform_selection(task, pool, evaluator, s.budget, mix_seed(s.seed, salt));
        } else {
          ShConfig cfg = s;
          cfg.seed = mix_seed(s.seed, salt);
          return successive_halving(task, pool, evaluator, cfg);
        }
      },
      strategy);
}

/// Pairs every task (or only tasks without a pairing entry) with its best
/// adapter. Failing tasks are collected and reported together.
inline PairingResult build_pairing(const Catalog& catalog, const Evaluator& evaluator,
                                   const PairingStrategy& strategy, bool only_unpaired = false) {
  validate(catalog);
  std::vector<std::string> pool;
  for (const auto& [id, a] : catalog.pool) pool.push_back(id);
  PairingResult result{catalog, {}};
  std::string failures;
  for (const auto& [id, task] : catalog.tasks) {
    if (only_unpaired && catalog.pairing.contains(id)) continue;
    try {
      PairingOutcome o = pair_task(task, pool, evaluator, strategy);
      result.catalog.pairing[id] = o.winner;
      result.report.emplace(id, std::move(o));
    } catch (const Error& e) {
      result.catalog.pairing.erase(id);
      failures += "\n  " + id + ": " + e.what();
    }
  }
  if (!failures.empty()) throw EvaluationError("pairing failed for tasks:" + failures);
  return result;
}

inline json outcome_to_json(const PairingOutcome& o) {
  json trace = json::array();
  for (const auto& t : o.trace) {
    trace.push_back({{"round", t.round}, {"samples_used", t.samples_used}, {"survivors", t.survivors}, {"scores", t.scores}});
  }
  return {{"winner", o.winner}, {"budget_spent", o.total_budget_spent}, {"trace", trace}};
}

inline json pairing_report_to_json(const PairingReport& report) {
  json j = json::object();
  for (const auto& [task, o] : report) j[task] = outcome_to_json(o);
  return j;
}

}  // namespace adaroute
