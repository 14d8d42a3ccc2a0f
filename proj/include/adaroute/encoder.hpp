// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adaroute/io.hpp"
#include "adaroute/linalg.hpp"
#include "adaroute/metrics.hpp"

namespace adaroute {

inline constexpr std::string_view kRetrievalInstruction = "Represent the sentence for similar task retrieval";

struct Embedding {
  Vector values;
  std::string fingerprint;
};

struct EncoderSpec {
  std::string name;
  std::size_t dimension = 0;
  std::string fingerprint;
};

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Sentence encoder contract. Implementations must be deterministic and pure.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual const EncoderSpec& spec() const = 0;
  virtual Embedding encode(std::string_view instruction, std::string_view body) const = 0;

  Embedding encode(std::string_view body) const { return encode(kRetrievalInstruction, body); }
};

/// Reference encoder: signed feature hashing of unigrams and bigrams,
/// L2-normalised. Empty token lists map to the zero vector.
class HashedNgramEncoder final : public Encoder {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ULL;

  explicit HashedNgramEncoder(std::size_t dimension = 256, std::uint64_t seed = kDefaultSeed)
      : seed_(seed | 1ULL) {
    if (dimension == 0) throw ConfigError("encoder dimension must be positive");
    spec_.name = "hashed-ngram";
    spec_.dimension = dimension;
    spec_.fingerprint =
        hex64(fnv1a64("hashed-ngram|dim=" + std::to_string(dimension) + "|seed=" + std::to_string(seed_)));
  }

  using Encoder::encode;
  const EncoderSpec& spec() const override { return spec_; }

  Embedding encode(std::string_view instruction, std::string_view body) const override {
    std::string text(instruction);
    text += ' ';
    text += body;
    const Tokens tokens = tokenize(text);
    Vector v(spec_.dimension, 0.0);
    auto add = [&](std::uint64_t h) {
      const std::uint64_t mixed = h * seed_;
      const std::uint64_t bucket = ((mixed >> 32) * spec_.dimension) >> 32;
      const std::uint64_t sign_bit = (h * 0xd6e8feb86659fd93ULL) >> 63;
      v[bucket] += sign_bit ? -1.0 : 1.0;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      add(fnv1a64(tokens[i]));
      if (i + 1 < tokens.size()) add(fnv1a64(tokens[i + 1], fnv1a64(" ", fnv1a64(tokens[i]))));
    }
    const double n = l2_norm(v);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
    return {std::move(v), spec_.fingerprint};
  }

 private:
  std::uint64_t seed_;
  EncoderSpec spec_;
};

/// Serves embeddings produced elsewhere, keyed by the encoded text
/// (instruction, a single space, body).
class TableEncoder final : public Encoder {
 public:
  TableEncoder(std::string name, std::size_t dimension, std::string fingerprint = {}) {
    spec_.name = std::move(name);
    spec_.dimension = dimension;
    spec_.fingerprint = fingerprint.empty()
                            ? hex64(fnv1a64("table|" + spec_.name + "|dim=" + std::to_string(dimension)))
                            : std::move(fingerprint);
  }

  static std::string key(std::string_view instruction, std::string_view body) {
    std::string k(instruction);
    k += ' ';
    k += body;
    return k;
  }

  void insert(std::string_view instruction, std::string_view body, Vector values) {
    if (values.size() != spec_.dimension) {
      throw DimensionError("embedding has " + std::to_string(values.size()) + " values, encoder dimension is " +
                           std::to_string(spec_.dimension));
    }
    if (!all_finite(values)) throw ValidationError("non-finite embedding for '" + std::string(body) + "'");
    table_[key(instruction, body)] = std::move(values);
  }

  using Encoder::encode;
  const EncoderSpec& spec() const override { return spec_; }

  Embedding encode(std::string_view instruction, std::string_view body) const override {
    auto it = table_.find(key(instruction, body));
    if (it == table_.end()) throw NotFoundError("no embedding for '" + std::string(body) + "'");
    return {it->second, spec_.fingerprint};
  }

  std::size_t size() const { return table_.size(); }

 private:
  EncoderSpec spec_;
  std::unordered_map<std::string, Vector> table_;
};

// --- external encoder exchange ---------------------------------------------

struct EncodeRequest {
  std::string id;
  std::string instruction;
  std::string body;
};

inline void write_encode_requests(const std::vector<EncodeRequest>& requests, const std::filesystem::path& path) {
  std::string out;
  for (const auto& r : requests) {
    out += json{{"id", r.id}, {"instruction", r.instruction}, {"body", r.body}}.dump() + "\n";
  }
  write_text_file(path, out);
}

inline void write_encode_responses(const std::vector<std::pair<std::string, Vector>>& responses,
                                   const std::filesystem::path& path) {
  std::string out;
  for (const auto& [id, v] : responses) out += json{{"id", id}, {"embedding", v}}.dump() + "\n";
  write_text_file(path, out);
}

/// Joins a request file with its response file into a TableEncoder.
inline TableEncoder load_table_encoder(const std::filesystem::path& requests, const std::filesystem::path& responses,
                                       std::string name = "external", std::string fingerprint = {}) {
  std::unordered_map<std::string, EncodeRequest> by_id;
  for (const auto& j : read_json_lines(requests)) {
    EncodeRequest r{field<std::string>(j, "id", "encode request"), field<std::string>(j, "instruction", "encode request"),
                    field<std::string>(j, "body", "encode request")};
    std::string id = r.id;
    if (!by_id.emplace(id, std::move(r)).second) throw ValidationError("duplicate request id '" + id + "'");
  }
  const auto lines = read_json_lines(responses);
  if (lines.empty()) throw ValidationError("empty embedding response file");
  const std::size_t dim = field<Vector>(lines.front(), "embedding", "encode response").size();
  TableEncoder enc(std::move(name), dim, std::move(fingerprint));
  for (const auto& j : lines) {
    const auto id = field<std::string>(j, "id", "encode response");
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("response for unknown request id '" + id + "'");
    enc.insert(it->second.instruction, it->second.body, field<Vector>(j, "embedding", "encode response"));
  }
  return enc;
}

}  // namespace adaroute
