// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaroute/error.hpp"

namespace adaroute {

using Vector = std::vector<double>;

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

/// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("matrix storage holds " + std::to_string(values_.size()) +
                           " values, expected " + std::to_string(rows_ * cols_));
    }
    if (!all_finite(values_)) throw ValidationError("matrix has non-finite entries");
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix rows");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(flat));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline Vector matvec(const Matrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) {
    throw DimensionError("matvec: matrix has " + std::to_string(m.cols()) + " columns, vector has " +
                         std::to_string(x.size()) + " entries");
  }
  Vector y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

/// Low-rank update for one backend layer: delta W = B A, A is r x d, B is m x r.
struct LayerDelta {
  std::size_t layer_index = 0;
  Matrix A;
  Matrix B;

  friend bool operator==(const LayerDelta&, const LayerDelta&) = default;
};

struct LoraAdapter {
  std::string id;
  std::size_t rank = 0;
  double alpha = 0.0;
  std::vector<LayerDelta> layers;  // sorted by layer_index, unique

  double scale() const { return alpha / static_cast<double>(rank); }

  const LayerDelta* find_layer(std::size_t layer_index) const {
    auto it = std::lower_bound(layers.begin(), layers.end(), layer_index,
                               [](const LayerDelta& l, std::size_t idx) { return l.layer_index < idx; });
    return it != layers.end() && it->layer_index == layer_index ? &*it : nullptr;
  }

  /// Sorts layers and checks the structural invariants.
  void validate() {
    if (id.empty()) throw ValidationError("adapter with empty id");
    if (rank == 0) throw ValidationError("adapter '" + id + "': rank must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ValidationError("adapter '" + id + "': alpha must be a positive finite real");
    }
    std::sort(layers.begin(), layers.end(),
              [](const LayerDelta& a, const LayerDelta& b) { return a.layer_index < b.layer_index; });
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (i > 0 && layers[i - 1].layer_index == l.layer_index) {
        throw ValidationError("adapter '" + id + "': duplicate layer " + std::to_string(l.layer_index));
      }
      if (l.A.rows() != rank || l.B.cols() != rank) {
        throw ValidationError("adapter '" + id + "': layer " + std::to_string(l.layer_index) +
                              " does not match rank " + std::to_string(rank));
      }
    }
  }

  friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;
};

/// (alpha / r) * B (A x) for the given layer. Excludes the frozen W x term.
inline Vector lora_delta(const LoraAdapter& adapter, std::size_t layer_index, std::span<const double> x) {
  const LayerDelta* layer = adapter.find_layer(layer_index);
  if (layer == nullptr) {
    throw MissingLayerError("adapter '" + adapter.id + "' has no layer " + std::to_string(layer_index));
  }
  Vector out = matvec(layer->B, matvec(layer->A, x));
  const double s = adapter.scale();
  for (double& v : out) v *= s;
  return out;
}

enum class Activation { Identity, Relu, Tanh };

inline double activate(Activation act, double v) {
  switch (act) {
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Identity: break;
  }
  return v;
}

struct BackendLayer {
  Matrix W;
  Activation activation = Activation::Identity;
};

/// Frozen stand-in for the base model: a stack of dense layers.
struct ToyBackend {
  std::vector<BackendLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().W.rows(); }

  void validate() const {
    for (std::size_t i = 1; i < layers.size(); ++i) {
      if (layers[i].W.cols() != layers[i - 1].W.rows()) {
        throw DimensionError("backend layer " + std::to_string(i) + " expects input dim " +
                             std::to_string(layers[i].W.cols()) + ", previous layer emits " +
                             std::to_string(layers[i - 1].W.rows()));
      }
    }
  }
};

struct WeightedAdapter {
  const LoraAdapter* adapter = nullptr;
  double weight = 0.0;
};

/// Runs the backend with the weighted adapter set applied at every layer:
/// h = act(W x + sum_i w_i * lora_delta(adapter_i, layer, x)).
/// Adapters without a delta for a layer contribute nothing there. Summation
/// follows the order of `adapters`.
inline Vector forward(const ToyBackend& backend, std::span<const double> x,
                      std::span<const WeightedAdapter> adapters = {}) {
  for (const auto& wa : adapters) {
    if (wa.adapter == nullptr) throw ValidationError("forward: null adapter");
    for (const auto& l : wa.adapter->layers) {
      if (l.layer_index >= backend.layers.size()) {
        throw DimensionError("adapter '" + wa.adapter->id + "' targets layer " +
                             std::to_string(l.layer_index) + " but backend has " +
                             std::to_string(backend.layers.size()));
      }
    }
  }
  Vector h(x.begin(), x.end());
  for (std::size_t li = 0; li < backend.layers.size(); ++li) {
    const auto& layer = backend.layers[li];
    Vector out = matvec(layer.W, h);
    for (const auto& wa : adapters) {
      if (wa.adapter->find_layer(li) == nullptr) continue;
      const Vector d = lora_delta(*wa.adapter, li, h);
      if (d.size() != out.size()) {
        throw DimensionError("adapter '" + wa.adapter->id + "' layer " + std::to_string(li) +
                             " emits " + std::to_string(d.size()) + " values, layer has " +
                             std::to_string(out.size()));
      }
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += wa.weight * d[i];
    }
    for (double& v : out) v = activate(layer.activation, v);
    h = std::move(out);
  }
  return h;
}

}  // namespace adaroute
