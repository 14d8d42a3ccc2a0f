// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "adaroute/catalog.hpp"
#include "adaroute/encoder.hpp"
#include "adaroute/evaluator.hpp"
#include "adaroute/fusion.hpp"
#include "adaroute/random.hpp"
#include "adaroute/retrieval.hpp"

namespace adaroute {

/// Parameters of a synthetic routing world.
///
/// Tasks come in families whose anchors share a common direction. Every task
/// has one aligned adapter that solves it exactly; aligned adapters also carry
/// `skill_overlap` of their family siblings' skills. Adapters beyond the first
/// T are attenuated copies of a home task's aligned adapter contaminated by
/// one other skill.
struct WorldSpec {
  std::size_t tasks = 12;
  std::size_t adapters = 24;
  std::size_t embed_dim = 32;
  double query_jitter = 0.05;  // Gaussian jitter of query embeddings around the task anchor
  double eval_noise = 0.0;     // per-sample evaluator noise (standard deviation)
  std::size_t family_size = 4;
  double family_similarity = 0.5;  // anchor cosine between tasks of one family
  double skill_overlap = 0.5;
  double specialist_min = 0.5;  // skill range of the extra adapters on their home task
  double specialist_max = 0.9;
  double specialist_leak = 0.3;  // upper bound of the leaked foreign skill
  double score_scale = 1.0;  // relative output error at which a sample scores exp(-1)
  double target_noise = 0.0;  // per-item deviation of the target from the aligned adapter's output
  std::size_t validation_items = 50;
  std::size_t test_items = 20;
  std::size_t representation_samples = kDefaultRepresentationSamples;
  std::uint64_t seed = 0;

  std::size_t families() const { return (tasks + family_size - 1) / family_size; }
  std::size_t family_of(std::size_t task) const { return task / family_size; }

  void validate() const {
    if (tasks < 2) throw ConfigError("world needs at least 2 tasks");
    if (adapters < tasks) throw ConfigError("world needs at least as many adapters as tasks");
    if (family_size == 0) throw ConfigError("family_size must be positive");
    if (embed_dim < tasks + families()) {
      throw ConfigError("embed_dim must be at least tasks + families (" + std::to_string(tasks + families()) + ")");
    }
    if (!(query_jitter >= 0.0) || !(eval_noise >= 0.0)) throw ConfigError("noise levels must be non-negative");
    if (!(family_similarity >= 0.0 && family_similarity < 1.0)) throw ConfigError("family_similarity must lie in [0, 1)");
    if (validation_items == 0 || test_items == 0) throw ConfigError("item counts must be positive");
    if (!(score_scale > 0.0)) throw ConfigError("score_scale must be positive");
    if (!(target_noise >= 0.0)) throw ConfigError("target_noise must be non-negative");
  }
};

inline json world_spec_to_json(const WorldSpec& s) {
  return {{"tasks", s.tasks},
          {"adapters", s.adapters},
          {"embed_dim", s.embed_dim},
          {"query_jitter", s.query_jitter},
          {"eval_noise", s.eval_noise},
          {"family_size", s.family_size},
          {"family_similarity", s.family_similarity},
          {"skill_overlap", s.skill_overlap},
          {"specialist_min", s.specialist_min},
          {"specialist_max", s.specialist_max},
          {"specialist_leak", s.specialist_leak},
          {"score_scale", s.score_scale},
          {"target_noise", s.target_noise},
          {"validation_items", s.validation_items},
          {"test_items", s.test_items},
          {"representation_samples", s.representation_samples},
          {"seed", s.seed}};
}

/// Missing keys keep their defaults.
inline WorldSpec world_spec_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("world spec must be a JSON object");
  WorldSpec s;
  try {
    s.tasks = j.value("tasks", s.tasks);
    s.adapters = j.value("adapters", s.adapters);
    s.embed_dim = j.value("embed_dim", s.embed_dim);
    s.query_jitter = j.value("query_jitter", s.query_jitter);
    s.eval_noise = j.value("eval_noise", s.eval_noise);
    s.family_size = j.value("family_size", s.family_size);
    s.family_similarity = j.value("family_similarity", s.family_similarity);
    s.skill_overlap = j.value("skill_overlap", s.skill_overlap);
    s.specialist_min = j.value("specialist_min", s.specialist_min);
    s.specialist_max = j.value("specialist_max", s.specialist_max);
    s.specialist_leak = j.value("specialist_leak", s.specialist_leak);
    s.score_scale = j.value("score_scale", s.score_scale);
    s.target_noise = j.value("target_noise", s.target_noise);
    s.validation_items = j.value("validation_items", s.validation_items);
    s.test_items = j.value("test_items", s.test_items);
    s.representation_samples = j.value("representation_samples", s.representation_samples);
    s.seed = j.value("seed", s.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("world spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline std::string indexed_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i);
  return buf;
}

namespace detail {

struct WorldItem {
  std::size_t task = 0;
  Vector x;
  Vector target_offset;  // relative to |delta_aligned x|, empty when zero
};

struct WorldData {
  ToyBackend backend;
  AdapterPool pool;
  std::vector<std::string> adapter_ids;  // sorted
  std::unordered_map<std::string, std::size_t> adapter_index;
  std::vector<std::string> task_ids;
  std::vector<std::string> aligned_ids;  // per task
  std::vector<WorldItem> items;
  std::unordered_map<std::string, std::size_t> item_index;
  std::vector<double> single_scores;  // [adapter * items + item]
  double eval_noise = 0.0;
  double score_scale = 1.0;
  std::uint64_t noise_seed = 0;

  const WorldItem& item(const ValidationItem& v) const {
    auto it = item_index.find(v.input);
    if (it == item_index.end()) throw EvaluationError("item '" + v.input + "' is not part of this world");
    return items[it->second];
  }

  /// exp(-(e / scale)^2), e = |y - y*| / |y_a - W x|, where y_a is the
  /// aligned adapter's output and y* = y_a plus the item's target offset.
  double clean_score(const RoutingDecision& d, const WorldItem& item) const {
    const Vector y = compose_output_space(backend, d, pool, item.x);
    const LoraAdapter& aligned = pool.at(aligned_ids[item.task]);
    const WeightedAdapter one{&aligned, 1.0};
    const Vector target = forward(backend, item.x, std::span(&one, 1));
    const Vector base = forward(backend, item.x);
    double ref = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) ref += (target[i] - base[i]) * (target[i] - base[i]);
    const double ref_norm = std::sqrt(ref);
    double err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double want = target[i] + (item.target_offset.empty() ? 0.0 : ref_norm * item.target_offset[i]);
      err += (y[i] - want) * (y[i] - want);
    }
    if (ref == 0.0) return err == 0.0 ? 1.0 : 0.0;
    return std::exp(-err / (ref * score_scale * score_scale));
  }

  double noisy(double clean, const std::string& key, const std::string& input) const {
    if (eval_noise == 0.0) return clean;
    Rng rng(mix_seed(noise_seed, fnv1a64(input, fnv1a64(key))));
    const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
    return std::clamp(clean + eval_noise * z, 0.0, 1.0);
  }
};

}  // namespace detail

/// Deterministic evaluator backed by the world's backend. Single-adapter
/// scores come from a precomputed table; fused decisions are computed on
/// demand through output-space fusion.
class WorldEvaluator final : public Evaluator {
 public:
  explicit WorldEvaluator(std::shared_ptr<const detail::WorldData> data) : data_(std::move(data)) {}

  double score_adapter(const std::string& adapter_id, const ValidationItem& item, MetricKind) const override {
    auto a = data_->adapter_index.find(adapter_id);
    if (a == data_->adapter_index.end()) throw EvaluationError("unknown adapter '" + adapter_id + "'");
    auto i = data_->item_index.find(item.input);
    if (i == data_->item_index.end()) throw EvaluationError("item '" + item.input + "' is not part of this world");
    return data_->single_scores[a->second * data_->items.size() + i->second];
  }

  double score_decision(const RoutingDecision& d, const ValidationItem& item, MetricKind metric) const override {
    if (d.entries.size() == 1 && d.entries.front().weight == 1.0) {
      return score_adapter(d.entries.front().adapter_id, item, metric);
    }
    std::vector<RoutedAdapter> sorted = d.entries;
    std::sort(sorted.begin(), sorted.end(),
              [](const RoutedAdapter& x, const RoutedAdapter& y) { return x.adapter_id < y.adapter_id; });
    std::string key;
    for (const auto& e : sorted) key += e.adapter_id + "@" + std::to_string(e.weight) + ";";
    return data_->noisy(data_->clean_score(d, data_->item(item)), key, item.input);
  }

 private:
  std::shared_ptr<const detail::WorldData> data_;
};

struct SyntheticWorld {
  WorldSpec spec;
  Catalog catalog;  // tasks with representations, full pool, no pairing
  std::map<std::string, std::vector<ValidationItem>> test_sets;
  std::map<std::string, std::string> aligned;  // task -> adapter trained on it
  std::vector<std::vector<double>> planted_affinity;  // [task][adapter], noiseless score at the anchor
  std::shared_ptr<const TableEncoder> encoder;
  std::shared_ptr<const WorldEvaluator> evaluator;
  std::shared_ptr<const detail::WorldData> data;

  const ToyBackend& backend() const { return data->backend; }
};

namespace detail {

inline std::vector<Vector> orthonormal(std::size_t count, std::size_t dim, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vector> out;
  while (out.size() < count) {
    Vector v(dim);
    for (double& x : v) x = g(rng);
    for (const auto& u : out) {
      const double p = dot(v, u);
      for (std::size_t i = 0; i < dim; ++i) v[i] -= p * u[i];
    }
    const double n = l2_norm(v);
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    out.push_back(std::move(v));
  }
  return out;
}

/// Adapter whose delta is sum_l coeff_l * b_l a_l^T, with alpha = rank.
inline LoraAdapter skill_adapter(std::string id, const std::vector<std::pair<std::size_t, double>>& skills,
                                 const std::vector<Vector>& anchors, const std::vector<Vector>& outputs) {
  const std::size_t r = skills.size();
  const std::size_t d_in = anchors.front().size();
  const std::size_t d_out = outputs.front().size();
  LayerDelta layer{0, Matrix(r, d_in), Matrix(d_out, r)};
  for (std::size_t k = 0; k < r; ++k) {
    const auto [task, coeff] = skills[k];
    for (std::size_t c = 0; c < d_in; ++c) layer.A(k, c) = coeff * anchors[task][c];
    for (std::size_t o = 0; o < d_out; ++o) layer.B(o, k) = outputs[task][o];
  }
  LoraAdapter a{std::move(id), r, static_cast<double>(r), {std::move(layer)}};
  a.validate();
  return a;
}

}  // namespace detail

inline SyntheticWorld generate_world(const WorldSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t T = spec.tasks;
  const std::size_t d = spec.embed_dim;

  // Family centres and per-task directions, mutually orthonormal.
  const auto basis = detail::orthonormal(spec.families() + T, d, rng);
  std::vector<Vector> anchors(T, Vector(d));
  const double shared = std::sqrt(spec.family_similarity);
  const double own = std::sqrt(1.0 - spec.family_similarity);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& f = basis[spec.family_of(t)];
    const auto& u = basis[spec.families() + t];
    for (std::size_t i = 0; i < d; ++i) anchors[t][i] = shared * f[i] + own * u[i];
  }
  const auto outputs = detail::orthonormal(T, d, rng);

  auto data = std::make_shared<detail::WorldData>();
  data->eval_noise = spec.eval_noise;
  data->score_scale = spec.score_scale;
  data->noise_seed = mix_seed(spec.seed, 0x6e6f697365ULL);
  {
    Matrix W(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) W(i, j) = gauss(rng) / std::sqrt(static_cast<double>(d));
    data->backend.layers.push_back({std::move(W), Activation::Identity});
  }

  // Pool ids are a random relabelling so id order carries no information.
  std::vector<std::size_t> label(spec.adapters);
  std::iota(label.begin(), label.end(), std::size_t{0});
  std::shuffle(label.begin(), label.end(), rng);

  for (std::size_t j = 0; j < spec.adapters; ++j) {
    auto aligned_skills = [&](std::size_t t) {
      std::vector<std::pair<std::size_t, double>> out{{t, 1.0}};
      for (std::size_t l = 0; l < T; ++l) {
        if (l != t && spec.family_of(l) == spec.family_of(t)) out.emplace_back(l, spec.skill_overlap);
      }
      return out;
    };
    std::vector<std::pair<std::size_t, double>> skills;
    if (j < T) {
      skills = aligned_skills(j);
    } else {
      // Attenuated copy of the home task's aligned adapter plus a leaked skill.
      const std::size_t home = (j - T) % T;
      const double beta = std::uniform_real_distribution<double>(spec.specialist_min, spec.specialist_max)(rng);
      const double leak = std::uniform_real_distribution<double>(0.0, spec.specialist_leak)(rng);
      std::size_t other = std::uniform_int_distribution<std::size_t>(0, T - 2)(rng);
      if (other >= home) ++other;
      skills = aligned_skills(home);
      for (auto& [t, c] : skills) c *= beta;
      auto hit = std::find_if(skills.begin(), skills.end(), [&](const auto& sc) { return sc.first == other; });
      if (hit != skills.end()) {
        hit->second += leak;
      } else {
        skills.emplace_back(other, leak);
      }
    }
    LoraAdapter a = detail::skill_adapter(indexed_id("adapter", label[j]), skills, anchors, outputs);
    data->pool.emplace(a.id, std::move(a));
  }
  for (const auto& [id, a] : data->pool) {
    data->adapter_index[id] = data->adapter_ids.size();
    data->adapter_ids.push_back(id);
  }

  SyntheticWorld world;
  world.spec = spec;
  auto encoder = std::make_shared<TableEncoder>(
      "synthetic-world", d, hex64(fnv1a64(world_spec_to_json(spec).dump(), fnv1a64("synthetic-world"))));

  auto add_item = [&](std::size_t t, const std::string& input) {
    Vector x = anchors[t];
    if (spec.query_jitter > 0.0) {
      for (double& v : x) v += spec.query_jitter * gauss(rng);
    }
    Vector offset;
    if (spec.target_noise > 0.0) {
      offset.resize(d);
      const double per_axis = spec.target_noise / std::sqrt(static_cast<double>(d));
      for (double& v : offset) v = per_axis * gauss(rng);
    }
    encoder->insert(kRetrievalInstruction, input, x);
    data->item_index[input] = data->items.size();
    data->items.push_back({t, std::move(x), std::move(offset)});
    return ValidationItem{input, indexed_id("task", t)};
  };

  for (std::size_t t = 0; t < T; ++t) {
    const std::string tid = indexed_id("task", t);
    data->task_ids.push_back(tid);
    data->aligned_ids.push_back(indexed_id("adapter", label[t]));
    TaskRecord task{tid, MetricKind::RougeAvg, {}, std::nullopt};
    for (std::size_t v = 0; v < spec.validation_items; ++v) {
      task.validation.push_back(add_item(t, tid + " validation " + std::to_string(v)));
    }
    auto& test = world.test_sets[tid];
    for (std::size_t v = 0; v < spec.test_items; ++v) test.push_back(add_item(t, tid + " test " + std::to_string(v)));
    world.catalog.tasks.emplace(tid, std::move(task));
    world.aligned[tid] = indexed_id("adapter", label[t]);
  }

  // Single-adapter score table.
  const std::size_t n_items = data->items.size();
  data->single_scores.resize(data->adapter_ids.size() * n_items);
  for (std::size_t a = 0; a < data->adapter_ids.size(); ++a) {
    const RoutingDecision one = RoutingDecision::single(data->adapter_ids[a]);
    for (const auto& [input, i] : data->item_index) {
      data->single_scores[a * n_items + i] =
          data->noisy(data->clean_score(one, data->items[i]), data->adapter_ids[a], input);
    }
  }
  world.planted_affinity.assign(T, std::vector<double>(data->adapter_ids.size()));
  for (std::size_t t = 0; t < T; ++t) {
    const detail::WorldItem at_anchor{t, anchors[t], {}};
    for (std::size_t a = 0; a < data->adapter_ids.size(); ++a) {
      world.planted_affinity[t][a] = data->clean_score(RoutingDecision::single(data->adapter_ids[a]), at_anchor);
    }
  }

  world.catalog.pool = data->pool;
  world.catalog.adapter_pool_path = "adapters.json";
  world.catalog = build_representations(world.catalog, *encoder, spec.representation_samples,
                                        mix_seed(spec.seed, 0x72657073ULL));
  world.encoder = std::move(encoder);
  world.evaluator = std::make_shared<WorldEvaluator>(data);
  world.data = std::move(data);
  return world;
}

}  // namespace adaroute
