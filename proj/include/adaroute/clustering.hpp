// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/random.hpp"

namespace adaroute {

struct KMeansOptions {
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
};

struct ClusterModel {
  std::vector<Vector> centroids;
  std::vector<std::size_t> assignments;  // point index -> cluster index
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> inertia_trace;  // after every assignment step

  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace detail {

inline std::vector<Vector> kmeanspp_seed(const std::vector<Vector>& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centers;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t next = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  while (true) {
    chosen[next] = true;
    centers.push_back(points[next]);
    if (centers.size() == k) break;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
      if (!chosen[i]) total += d2[i];
    }
    if (total > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      next = n;
      std::size_t last = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] == 0.0) continue;
        last = i;
        acc += d2[i];
        if (u < acc) {
          next = i;
          break;
        }
      }
      if (next == n) next = last;
    } else {
      // Remaining points coincide with centers; draw uniformly among them.
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      next = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
  }
  return centers;
}

/// Nearest-centroid assignment (ties to the lower index), then empty-cluster
/// repair. Returns the inertia of the resulting assignment.
inline double assign(const std::vector<Vector>& points, std::vector<Vector>& centroids,
                     std::vector<std::size_t>& assignments) {
  const std::size_t k = centroids.size();
  std::vector<double> dist(points.size());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = squared_distance(points[i], centroids[0]);
    for (std::size_t c = 1; c < k; ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignments[i] = best;
    dist[i] = best_d;
    ++sizes[best];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      if (far == points.size() || dist[i] > dist[far]) far = i;
    }
    --sizes[assignments[far]];
    assignments[far] = c;
    ++sizes[c];
    centroids[c] = points[far];
    dist[far] = 0.0;
  }
  double inertia = 0.0;
  for (double d : dist) inertia += d;
  return inertia;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations, squared Euclidean distance.
/// Stops when no centroid moves more than `tol` in max-norm, or after max_iter.
inline ClusterModel kmeans(const std::vector<Vector>& points, std::size_t k, const KMeansOptions& opts = {}) {
  if (k == 0) throw ConfigError("k must be positive");
  if (points.size() < k) {
    throw TooFewPointsError(std::to_string(points.size()) + " points for k = " + std::to_string(k));
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw DimensionError("points differ in dimension");
  }
  Rng rng(opts.seed);
  ClusterModel model;
  model.centroids = detail::kmeanspp_seed(points, k, rng);
  model.assignments.assign(points.size(), 0);

  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    model.inertia_trace.push_back(detail::assign(points, model.centroids, model.assignments));
    std::vector<Vector> next(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& c = next[model.assignments[i]];
      for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
      ++counts[model.assignments[i]];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t d = 0; d < dim; ++d) {
        next[c][d] /= static_cast<double>(counts[c]);
        shift = std::max(shift, std::abs(next[c][d] - model.centroids[c][d]));
      }
    }
    model.centroids = std::move(next);
    model.iterations_run = it + 1;
    if (shift < opts.tol) break;
  }
  model.inertia = detail::assign(points, model.centroids, model.assignments);
  model.inertia_trace.push_back(model.inertia);
  return model;
}

struct PseudoTasks {
  std::vector<TaskRecord> tasks;
  ClusterModel model;
};

/// Clusters pooled validation items into k pseudo-tasks named cluster_<i>,
/// each represented by its centroid.
inline PseudoTasks build_pseudo_tasks(const std::vector<ValidationItem>& items, const Encoder& encoder, std::size_t k,
                                      std::uint64_t seed, MetricKind metric = MetricKind::RougeAvg) {
  if (items.empty()) throw ConfigError("no items to cluster");
  std::vector<Vector> points;
  points.reserve(items.size());
  for (const auto& item : items) points.push_back(encoder.encode(item.input).values);
  PseudoTasks out;
  out.model = kmeans(points, k, {seed, 100, 1e-6});
  out.tasks.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    out.tasks[c].id = "cluster_" + std::to_string(c);
    out.tasks[c].metric = metric;
    out.tasks[c].representation = out.model.centroids[c];
  }
  for (std::size_t i = 0; i < items.size(); ++i) out.tasks[out.model.assignments[i]].validation.push_back(items[i]);
  return out;
}

}  // namespace adaroute
