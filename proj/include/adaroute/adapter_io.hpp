// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "adaroute/io.hpp"
#include "adaroute/linalg.hpp"

namespace adaroute {

using AdapterPool = std::map<std::string, LoraAdapter>;

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": matrix must be an array of rows");
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
  try {
    return Matrix::from_rows(rows);
  } catch (const DimensionError& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline json adapter_to_json(const LoraAdapter& a) {
  json layers = json::array();
  for (const auto& l : a.layers) {
    layers.push_back({{"layer_index", l.layer_index}, {"A", matrix_to_json(l.A)}, {"B", matrix_to_json(l.B)}});
  }
  return {{"id", a.id}, {"rank", a.rank}, {"alpha", a.alpha}, {"layers", layers}};
}

inline LoraAdapter adapter_from_json(const json& j) {
  LoraAdapter a;
  a.id = field<std::string>(j, "id", "adapter");
  const std::string where = "adapter '" + a.id + "'";
  a.rank = field<std::size_t>(j, "rank", where);
  a.alpha = field<double>(j, "alpha", where);
  const json& layers = j.contains("layers") ? j.at("layers") : json::array();
  if (!layers.is_array()) throw FormatError(where + ": layers must be an array");
  for (const auto& lj : layers) {
    LayerDelta l;
    l.layer_index = field<std::size_t>(lj, "layer_index", where);
    const std::string lw = where + " layer " + std::to_string(l.layer_index);
    if (!lj.contains("A") || !lj.contains("B")) throw FormatError(lw + ": missing A or B");
    l.A = matrix_from_json(lj.at("A"), lw + " A");
    l.B = matrix_from_json(lj.at("B"), lw + " B");
    a.layers.push_back(std::move(l));
  }
  a.validate();
  return a;
}

inline json pool_to_json(const AdapterPool& pool) {
  json arr = json::array();
  for (const auto& [id, a] : pool) arr.push_back(adapter_to_json(a));
  return {{"adapters", arr}};
}

/// Rejects duplicate ids.
inline AdapterPool pool_from_json(const json& j) {
  if (!j.is_object() || !j.contains("adapters") || !j.at("adapters").is_array()) {
    throw FormatError("adapter pool: expected {\"adapters\": [...]}");
  }
  AdapterPool pool;
  for (const auto& aj : j.at("adapters")) {
    LoraAdapter a = adapter_from_json(aj);
    std::string id = a.id;
    if (!pool.emplace(id, std::move(a)).second) {
      throw ValidationError("duplicate adapter id '" + id + "'");
    }
  }
  return pool;
}

inline AdapterPool load_adapter_pool(const std::filesystem::path& path) {
  return pool_from_json(read_json_file(path));
}

inline void save_adapter_pool(const AdapterPool& pool, const std::filesystem::path& path) {
  write_text_file(path, canonical_dump(pool_to_json(pool)));
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: break;
  }
  return "identity";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw FormatError("unknown activation '" + s + "'");
}

inline json backend_to_json(const ToyBackend& b) {
  json layers = json::array();
  for (const auto& l : b.layers) {
    layers.push_back({{"W", matrix_to_json(l.W)}, {"activation", activation_name(l.activation)}});
  }
  return {{"layers", layers}};
}

inline ToyBackend backend_from_json(const json& j) {
  ToyBackend b;
  if (!j.is_object() || !j.contains("layers")) throw FormatError("backend: missing layers");
  for (const auto& lj : j.at("layers")) {
    BackendLayer l;
    l.W = matrix_from_json(lj.at("W"), "backend layer");
    l.activation = activation_from_name(field<std::string>(lj, "activation", "backend layer"));
    b.layers.push_back(std::move(l));
  }
  b.validate();
  return b;
}

}  // namespace adaroute
