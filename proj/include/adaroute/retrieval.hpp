// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/random.hpp"

namespace adaroute {

inline constexpr double kDefaultTemperature = 0.2;
inline constexpr std::size_t kDefaultTopK = 3;
inline constexpr std::size_t kDefaultRepresentationSamples = 32;

/// Cosine similarity in [-1, 1]; 0 when either side has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

/// Mean embedding of min(m, |D|) validation inputs sampled without
/// replacement. The mean is not re-normalised.
inline Vector build_task_representation(const TaskRecord& task, const Encoder& encoder, std::size_t m,
                                        std::uint64_t seed) {
  if (task.validation.empty()) throw EmptyTaskError("task '" + task.id + "' has no validation items");
  if (m == 0) throw ConfigError("representation sample count must be positive");
  Rng rng(seed);
  const auto picked = sample_indices(task.validation.size(), m, rng);
  Vector mean(encoder.spec().dimension, 0.0);
  for (std::size_t i : picked) {
    const Embedding e = encoder.encode(task.validation[i].input);
    if (e.values.size() != mean.size()) throw DimensionError("encoder returned wrong dimension");
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += e.values[d];
  }
  for (double& v : mean) v /= static_cast<double>(picked.size());
  return mean;
}

/// Per-task representation seed, independent of catalog iteration order.
inline std::uint64_t representation_seed(std::uint64_t seed, const std::string& task_id) {
  return mix_seed(seed, fnv1a64(task_id));
}

/// Rebuilds every task representation and stamps the encoder fingerprint.
inline Catalog build_representations(const Catalog& catalog, const Encoder& encoder,
                                     std::size_t m = kDefaultRepresentationSamples, std::uint64_t seed = 0) {
  Catalog out = catalog;
  for (auto& [id, task] : out.tasks) {
    Vector rep = build_task_representation(task, encoder, m, representation_seed(seed, id));
    if (l2_norm(rep) == 0.0) throw ValidationError("task '" + id + "' has a zero-norm representation");
    task.representation = std::move(rep);
  }
  out.encoder_fingerprint = encoder.spec().fingerprint;
  return out;
}

struct RetrievedTask {
  std::string task_id;
  double similarity = 0.0;
  double probability = 0.0;
};

struct RetrievalResult {
  std::vector<RetrievedTask> entries;  // similarity descending, task id ascending on ties
  double temperature = kDefaultTemperature;
};

/// Numerically stable softmax of `scores / temperature`.
inline std::vector<double> softmax(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double hi = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp((scores[i] - hi) / temperature);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

/// Scores every task with a stored representation, keeps the top min(k, T)
/// and normalises their similarities with a temperature softmax.
inline RetrievalResult retrieve(const Catalog& catalog, const Embedding& query, std::size_t k,
                                double temperature = kDefaultTemperature) {
  if (k == 0) throw ConfigError("k must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
  if (query.fingerprint != catalog.encoder_fingerprint) {
    throw EncoderMismatchError("query encoded with '" + query.fingerprint + "', catalog built with '" +
                               catalog.encoder_fingerprint + "'");
  }
  std::vector<RetrievedTask> scored;
  scored.reserve(catalog.tasks.size());
  for (const auto& [id, task] : catalog.tasks) {
    if (!task.representation) continue;
    scored.push_back({id, cosine(query.values, *task.representation), 0.0});
  }
  if (scored.empty()) throw EmptyCatalogError("no task representations to retrieve from");

  const std::size_t keep = std::min(k, scored.size());
  auto before = [](const RetrievedTask& a, const RetrievedTask& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.task_id < b.task_id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), before);
  scored.resize(keep);

  std::vector<double> sims(keep);
  for (std::size_t i = 0; i < keep; ++i) sims[i] = scored[i].similarity;
  const auto probs = softmax(sims, temperature);
  for (std::size_t i = 0; i < keep; ++i) scored[i].probability = probs[i];
  return {std::move(scored), temperature};
}

}  // namespace adaroute
