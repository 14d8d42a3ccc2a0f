// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaroute/adapter_io.hpp"
#include "adaroute/io.hpp"
#include "adaroute/linalg.hpp"
#include "adaroute/metrics.hpp"

namespace adaroute {

inline constexpr std::size_t kDefaultValidationCap = 200;

struct ValidationItem {
  std::string input;
  std::string target;

  friend bool operator==(const ValidationItem&, const ValidationItem&) = default;
};

struct TaskRecord {
  std::string id;
  MetricKind metric = MetricKind::ExactMatch;
  std::vector<ValidationItem> validation;
  std::optional<Vector> representation;

  friend bool operator==(const TaskRecord&, const TaskRecord&) = default;
};

/// Task database, adapter pool and the task -> adapter pairing map.
///
/// Treated as an immutable snapshot: operations that change it return a copy.
struct Catalog {
  std::map<std::string, TaskRecord> tasks;
  AdapterPool pool;
  std::map<std::string, std::string> pairing;
  std::string encoder_fingerprint;
  std::size_t validation_cap = kDefaultValidationCap;
  /// Where the pool lives relative to the catalog file; empty picks a default on save.
  std::string adapter_pool_path;

  bool routable() const { return !tasks.empty() && !pool.empty(); }

  friend bool operator==(const Catalog&, const Catalog&) = default;
};

/// Checks every catalog invariant, naming the offending record.
inline void validate(const Catalog& c) {
  std::optional<std::size_t> dim;
  for (const auto& [id, t] : c.tasks) {
    if (id.empty() || t.id != id) throw ValidationError("task key '" + id + "' does not match record id '" + t.id + "'");
    if (t.validation.empty()) throw ValidationError("task '" + id + "' has no validation items");
    if (t.validation.size() > c.validation_cap) {
      throw ValidationError("task '" + id + "' has " + std::to_string(t.validation.size()) +
                            " validation items, cap is " + std::to_string(c.validation_cap));
    }
    for (const auto& item : t.validation) {
      if (item.input.empty()) throw ValidationError("task '" + id + "' has a validation item with empty input");
    }
    if (t.representation) {
      if (!all_finite(*t.representation)) throw ValidationError("task '" + id + "' has a non-finite representation");
      if (dim && *dim != t.representation->size()) {
        throw ValidationError("task '" + id + "' representation dimension " +
                              std::to_string(t.representation->size()) + " differs from " + std::to_string(*dim));
      }
      dim = t.representation->size();
    }
  }
  for (const auto& [id, a] : c.pool) {
    if (a.id != id) throw ValidationError("adapter key '" + id + "' does not match record id '" + a.id + "'");
  }
  for (const auto& [task, adapter] : c.pairing) {
    if (!c.tasks.contains(task)) throw ValidationError("pairing references unknown task '" + task + "'");
    if (!c.pool.contains(adapter)) {
      throw ValidationError("pairing maps task '" + task + "' to missing adapter '" + adapter + "'");
    }
  }
}

enum class Regime { NonOOD, SemiOOD, OOD };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::SemiOOD: return "semi-ood";
    case Regime::OOD: return "ood";
    case Regime::NonOOD: break;
  }
  return "non-ood";
}

inline Regime regime_from_name(const std::string& s) {
  if (s == "non-ood") return Regime::NonOOD;
  if (s == "semi-ood") return Regime::SemiOOD;
  if (s == "ood") return Regime::OOD;
  throw ConfigError("unknown regime '" + s + "'");
}

/// Copy of the catalog as seen by a query whose ground-truth task is `target_task`.
///
/// SemiOOD drops the target's paired adapter (and every pairing entry that
/// pointed to it) but keeps the task; the cleared entries need re-pairing.
/// OOD drops both the task and its paired adapter.
inline Catalog remove_for_regime(const Catalog& catalog, const std::string& target_task, Regime regime) {
  if (!catalog.tasks.contains(target_task)) throw NotFoundError("task '" + target_task + "'");
  Catalog out = catalog;
  if (regime == Regime::NonOOD) return out;
  if (auto it = out.pairing.find(target_task); it != out.pairing.end()) {
    const std::string adapter = it->second;
    out.pool.erase(adapter);
    std::erase_if(out.pairing, [&](const auto& kv) { return kv.second == adapter; });
  }
  if (regime == Regime::OOD) out.tasks.erase(target_task);
  return out;
}

// --- serialization -------------------------------------------------------

inline json task_to_json(const TaskRecord& t) {
  json items = json::array();
  for (const auto& v : t.validation) items.push_back({{"input", v.input}, {"target", v.target}});
  json j = {{"id", t.id}, {"metric", metric_name(t.metric)}, {"validation", items}};
  j["representation"] = t.representation ? json(*t.representation) : json(nullptr);
  return j;
}

inline TaskRecord task_from_json(const json& j) {
  TaskRecord t;
  t.id = field<std::string>(j, "id", "task");
  const std::string where = "task '" + t.id + "'";
  t.metric = metric_from_name(field<std::string>(j, "metric", where));
  if (!j.contains("validation") || !j.at("validation").is_array()) {
    throw FormatError(where + ": validation must be an array");
  }
  for (const auto& v : j.at("validation")) {
    t.validation.push_back({field<std::string>(v, "input", where), field<std::string>(v, "target", where)});
  }
  if (j.contains("representation") && !j.at("representation").is_null()) {
    t.representation = field<Vector>(j, "representation", where);
  }
  return t;
}

inline std::vector<TaskRecord> tasks_from_json(const json& j) {
  if (!j.is_object() || !j.contains("tasks") || !j.at("tasks").is_array()) {
    throw FormatError("expected {\"tasks\": [...]}");
  }
  std::vector<TaskRecord> out;
  for (const auto& tj : j.at("tasks")) out.push_back(task_from_json(tj));
  return out;
}

inline json catalog_to_json(const Catalog& c) {
  json tasks = json::array();
  for (const auto& [id, t] : c.tasks) tasks.push_back(task_to_json(t));
  json j = {{"encoder_fingerprint", c.encoder_fingerprint},
            {"tasks", tasks},
            {"pairing", c.pairing},
            {"adapter_pool_path", c.adapter_pool_path}};
  if (c.validation_cap != kDefaultValidationCap) j["validation_cap"] = c.validation_cap;
  return j;
}

/// Parses the catalog document; `pool` is supplied separately.
inline Catalog catalog_from_json(const json& j, AdapterPool pool) {
  if (!j.is_object()) throw FormatError("catalog: expected a JSON object");
  Catalog c;
  c.encoder_fingerprint = j.value("encoder_fingerprint", std::string{});
  c.adapter_pool_path = j.value("adapter_pool_path", std::string{});
  if (j.contains("validation_cap")) c.validation_cap = field<std::size_t>(j, "validation_cap", "catalog");
  for (const auto& t : tasks_from_json(j)) {
    std::string id = t.id;
    if (!c.tasks.emplace(id, t).second) throw ValidationError("duplicate task id '" + id + "'");
  }
  if (j.contains("pairing")) {
    if (!j.at("pairing").is_object()) throw FormatError("catalog: pairing must be an object");
    for (const auto& [task, adapter] : j.at("pairing").items()) {
      if (!adapter.is_string()) throw FormatError("catalog: pairing value for '" + task + "' must be a string");
      c.pairing[task] = adapter.get<std::string>();
    }
  }
  c.pool = std::move(pool);
  validate(c);
  return c;
}

inline std::filesystem::path pool_path_for(const Catalog& c, const std::filesystem::path& catalog_path) {
  if (!c.adapter_pool_path.empty()) return catalog_path.parent_path() / c.adapter_pool_path;
  return catalog_path.parent_path() / (catalog_path.stem().string() + ".adapters.json");
}

/// Loads the catalog and the adapter pool file it references. A missing or
/// empty `adapter_pool_path` yields an empty pool.
inline Catalog load_catalog(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  AdapterPool pool;
  const std::string rel = j.is_object() ? j.value("adapter_pool_path", std::string{}) : std::string{};
  if (!rel.empty()) pool = load_adapter_pool(path.parent_path() / rel);
  return catalog_from_json(j, std::move(pool));
}

/// Writes the catalog and its pool. Validation runs before anything touches disk.
inline void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  validate(catalog);
  Catalog c = catalog;
  if (c.adapter_pool_path.empty()) c.adapter_pool_path = path.stem().string() + ".adapters.json";
  save_adapter_pool(c.pool, pool_path_for(c, path));
  write_text_file(path, canonical_dump(catalog_to_json(c)));
}

}  // namespace adaroute
