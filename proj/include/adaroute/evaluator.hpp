// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "adaroute/catalog.hpp"
#include "adaroute/decision.hpp"
#include "adaroute/metrics.hpp"

namespace adaroute {

/// Scores adapter outputs against validation targets.
///
/// Cost model: one budget unit per (adapter, sample) evaluation. Scores must
/// lie in [0, 1] and be deterministic for a given (adapter, item).
class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual double score_adapter(const std::string& adapter_id, const ValidationItem& item, MetricKind metric) const = 0;

  /// Scores the fused output of a routing decision. Evaluators that cannot
  /// fuse support single-adapter decisions only.
  virtual double score_decision(const RoutingDecision& decision, const ValidationItem& item, MetricKind metric) const {
    if (decision.entries.size() == 1 && decision.entries.front().weight == 1.0) {
      return score_adapter(decision.entries.front().adapter_id, item, metric);
    }
    throw EvaluationError("this evaluator cannot score fused decisions");
  }
};

namespace detail {

template <typename F>
double guarded_score(F&& f, const std::string& what) {
  double s = 0.0;
  try {
    s = f();
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(what + ": " + e.what());
  }
  if (!(s >= 0.0 && s <= 1.0)) throw EvaluationError(what + ": score " + std::to_string(s) + " outside [0, 1]");
  return s;
}

}  // namespace detail

/// Mean per-sample score of one adapter.
inline double evaluate(const Evaluator& evaluator, const std::string& adapter_id,
                       std::span<const ValidationItem* const> samples, MetricKind metric) {
  if (samples.empty()) throw EvaluationError("evaluate: no samples for adapter '" + adapter_id + "'");
  double sum = 0.0;
  for (const ValidationItem* item : samples) {
    sum += detail::guarded_score([&] { return evaluator.score_adapter(adapter_id, *item, metric); },
                                 "adapter '" + adapter_id + "'");
  }
  return sum / static_cast<double>(samples.size());
}

inline double evaluate(const Evaluator& evaluator, const std::string& adapter_id,
                       std::span<const ValidationItem> samples, MetricKind metric) {
  std::vector<const ValidationItem*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return evaluate(evaluator, adapter_id, std::span<const ValidationItem* const>(ptrs), metric);
}

/// Adapts a plain callable (adapter id, item) -> score.
class FunctionEvaluator final : public Evaluator {
 public:
  using Fn = std::function<double(const std::string&, const ValidationItem&)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}

  double score_adapter(const std::string& adapter_id, const ValidationItem& item, MetricKind) const override {
    return fn_(adapter_id, item);
  }

 private:
  Fn fn_;
};

/// Replays precomputed adapter outputs and scores them with the task metric.
class ReplayEvaluator final : public Evaluator {
 public:
  void add(std::string adapter_id, std::string input, std::string output) {
    outputs_[{std::move(adapter_id), std::move(input)}] = std::move(output);
  }

  double score_adapter(const std::string& adapter_id, const ValidationItem& item, MetricKind metric) const override {
    auto it = outputs_.find({adapter_id, item.input});
    if (it == outputs_.end()) {
      throw EvaluationError("no cached output for adapter '" + adapter_id + "' on '" + item.input + "'");
    }
    return score(metric, it->second, item.target);
  }

  std::size_t size() const { return outputs_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, std::string> outputs_;
};

/// JSON lines of {"adapter_id", "input", "output"}.
inline ReplayEvaluator load_replay_evaluator(const std::filesystem::path& path) {
  ReplayEvaluator ev;
  for (const auto& j : read_json_lines(path)) {
    ev.add(field<std::string>(j, "adapter_id", "prediction"), field<std::string>(j, "input", "prediction"),
           field<std::string>(j, "output", "prediction"));
  }
  return ev;
}

}  // namespace adaroute
