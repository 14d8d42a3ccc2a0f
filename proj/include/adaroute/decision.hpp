// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "adaroute/io.hpp"

namespace adaroute {

struct RoutedAdapter {
  std::string task_id;
  std::string adapter_id;
  double weight = 0.0;

  friend bool operator==(const RoutedAdapter&, const RoutedAdapter&) = default;
};

/// Adapters selected for one query and their fusion weights (sum to 1).
struct RoutingDecision {
  std::string query_id;
  std::vector<RoutedAdapter> entries;

  static RoutingDecision single(std::string adapter_id) {
    return {{}, {{std::string{}, std::move(adapter_id), 1.0}}};
  }

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

inline json decision_to_json(const RoutingDecision& d) {
  json entries = json::array();
  for (const auto& e : d.entries) {
    entries.push_back({{"task_id", e.task_id}, {"adapter_id", e.adapter_id}, {"weight", e.weight}});
  }
  return {{"query_id", d.query_id}, {"entries", entries}};
}

inline RoutingDecision decision_from_json(const json& j) {
  RoutingDecision d;
  d.query_id = field<std::string>(j, "query_id", "routing decision");
  for (const auto& e : j.at("entries")) {
    d.entries.push_back({field<std::string>(e, "task_id", "routing entry"),
                         field<std::string>(e, "adapter_id", "routing entry"), field<double>(e, "weight", "routing entry")});
  }
  return d;
}

}  // namespace adaroute
