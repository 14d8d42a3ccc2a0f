// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/decision.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/linalg.hpp"
#include "adaroute/retrieval.hpp"

namespace adaroute {

inline constexpr double kWeightSumTolerance = 1e-12;

inline void check_decision_weights(const RoutingDecision& d) {
  if (d.entries.empty()) throw ValidationError("routing decision '" + d.query_id + "' has no entries");
  double sum = 0.0;
  for (const auto& e : d.entries) {
    if (!(e.weight >= 0.0 && e.weight <= 1.0)) {
      throw ValidationError("weight " + std::to_string(e.weight) + " for adapter '" + e.adapter_id + "' outside [0, 1]");
    }
    sum += e.weight;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance * static_cast<double>(d.entries.size())) {
    throw ValidationError("routing weights sum to " + std::to_string(sum));
  }
}

/// Output-space fusion: every layer adds sum_i w_i (alpha_i / r_i) B_i A_i x
/// to the frozen output. Ranks may differ between adapters. Contributions are
/// summed in adapter-id order so the result does not depend on entry order.
inline Vector compose_output_space(const ToyBackend& backend, const RoutingDecision& decision,
                                   const AdapterPool& pool, std::span<const double> x) {
  check_decision_weights(decision);
  std::vector<WeightedAdapter> set;
  set.reserve(decision.entries.size());
  for (const auto& e : decision.entries) {
    auto it = pool.find(e.adapter_id);
    if (it == pool.end()) throw NotFoundError("adapter '" + e.adapter_id + "' is not in the pool");
    set.push_back({&it->second, e.weight});
  }
  std::stable_sort(set.begin(), set.end(),
                   [](const WeightedAdapter& a, const WeightedAdapter& b) { return a.adapter->id < b.adapter->id; });
  return forward(backend, x, set);
}

/// lambda * delta_a(x) + (1 - lambda) * delta_b(x), each delta carrying its
/// own alpha / r scale.
class InterpolatedDelta {
 public:
  InterpolatedDelta(LoraAdapter a, LoraAdapter b, double lambda)
      : a_(std::move(a)), b_(std::move(b)), lambda_(lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    if (a_.layers.size() != b_.layers.size()) {
      throw IncompatibleAdaptersError("'" + a_.id + "' and '" + b_.id + "' cover different layer sets");
    }
    for (std::size_t i = 0; i < a_.layers.size(); ++i) {
      const auto& la = a_.layers[i];
      const auto& lb = b_.layers[i];
      if (la.layer_index != lb.layer_index) {
        throw IncompatibleAdaptersError("'" + a_.id + "' and '" + b_.id + "' cover different layer sets");
      }
      if (la.A.cols() != lb.A.cols() || la.B.rows() != lb.B.rows()) {
        throw IncompatibleAdaptersError("layer " + std::to_string(la.layer_index) + " shapes differ");
      }
    }
  }

  Vector apply(std::size_t layer_index, std::span<const double> x) const {
    Vector da = lora_delta(a_, layer_index, x);
    const Vector db = lora_delta(b_, layer_index, x);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] = lambda_ * da[i] + (1.0 - lambda_) * db[i];
    return da;
  }

  double lambda() const { return lambda_; }

 private:
  LoraAdapter a_;
  LoraAdapter b_;
  double lambda_;
};

inline InterpolatedDelta compose_param_interp(const LoraAdapter& a, const LoraAdapter& b, double lambda) {
  return InterpolatedDelta(a, b, lambda);
}

/// Parameter-space fusion: A' = sum w_i A_i and B' = sum w_i B_i per layer.
/// Requires a shared rank, alpha and layer layout.
inline LoraAdapter compose_lorahub(std::span<const LoraAdapter> adapters, std::span<const double> weights) {
  if (adapters.empty()) throw IncompatibleAdaptersError("no adapters to merge");
  if (adapters.size() != weights.size()) throw IncompatibleAdaptersError("adapter / weight count mismatch");
  const LoraAdapter& first = adapters.front();
  LoraAdapter out;
  out.id = "lorahub";
  out.rank = first.rank;
  out.alpha = first.alpha;
  for (const auto& l : first.layers) {
    out.layers.push_back({l.layer_index, Matrix(l.A.rows(), l.A.cols()), Matrix(l.B.rows(), l.B.cols())});
  }
  for (std::size_t k = 0; k < adapters.size(); ++k) {
    const LoraAdapter& a = adapters[k];
    out.id += (k == 0 ? ":" : "+") + a.id;
    if (a.rank != first.rank || a.alpha != first.alpha || a.layers.size() != first.layers.size()) {
      throw IncompatibleAdaptersError("'" + a.id + "' differs from '" + first.id + "' in rank, alpha or layers");
    }
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      const auto& src = a.layers[i];
      auto& dst = out.layers[i];
      if (src.layer_index != dst.layer_index || src.A.cols() != dst.A.cols() || src.B.rows() != dst.B.rows()) {
        throw IncompatibleAdaptersError("'" + a.id + "' layer layout differs from '" + first.id + "'");
      }
      for (std::size_t r = 0; r < dst.A.rows(); ++r)
        for (std::size_t c = 0; c < dst.A.cols(); ++c) dst.A(r, c) += weights[k] * src.A(r, c);
      for (std::size_t r = 0; r < dst.B.rows(); ++r)
        for (std::size_t c = 0; c < dst.B.cols(); ++c) dst.B(r, c) += weights[k] * src.B(r, c);
    }
  }
  return out;
}

/// Maps retrieved tasks to their paired adapters. Tasks sharing an adapter
/// have their probabilities summed onto the first (highest ranked) entry.
inline RoutingDecision decision_from_retrieval(const Catalog& catalog, const RetrievalResult& retrieved,
                                               std::string query_id = {}) {
  RoutingDecision d{std::move(query_id), {}};
  for (const auto& r : retrieved.entries) {
    auto it = catalog.pairing.find(r.task_id);
    if (it == catalog.pairing.end()) throw UnpairedTaskError("task '" + r.task_id + "' has no paired adapter");
    auto same = std::find_if(d.entries.begin(), d.entries.end(),
                             [&](const RoutedAdapter& e) { return e.adapter_id == it->second; });
    if (same != d.entries.end()) {
      same->weight += r.probability;
    } else {
      d.entries.push_back({r.task_id, it->second, r.probability});
    }
  }
  return d;
}

inline RoutingDecision route_embedding(const Catalog& catalog, const Embedding& query, std::size_t k,
                                       double temperature = kDefaultTemperature, std::string query_id = {}) {
  if (catalog.pool.empty()) throw EmptyCatalogError("adapter pool is empty, routing disabled");
  return decision_from_retrieval(catalog, retrieve(catalog, query, k, temperature), std::move(query_id));
}

/// Encode, retrieve the top-k tasks, resolve their adapters.
inline RoutingDecision route(const Catalog& catalog, const Encoder& encoder, std::string_view query,
                             std::size_t k = kDefaultTopK, double temperature = kDefaultTemperature,
                             std::string query_id = {}) {
  return route_embedding(catalog, encoder.encode(query), k, temperature, std::move(query_id));
}

}  // namespace adaroute
