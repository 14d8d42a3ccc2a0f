// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adaroute/error.hpp"

namespace adaroute {

/// Task quality metrics. All are higher-is-better and bounded to [0, 1].
enum class MetricKind { ExactMatch, Bleu, Rouge1, Rouge2, RougeL, RougeAvg };

inline const char* metric_name(MetricKind m) {
  switch (m) {
    case MetricKind::ExactMatch: return "exact_match";
    case MetricKind::Bleu: return "bleu";
    case MetricKind::Rouge1: return "rouge1";
    case MetricKind::Rouge2: return "rouge2";
    case MetricKind::RougeL: return "rougeL";
    case MetricKind::RougeAvg: return "rouge_avg";
  }
  return "exact_match";
}

inline MetricKind metric_from_name(std::string_view s) {
  for (auto m : {MetricKind::ExactMatch, MetricKind::Bleu, MetricKind::Rouge1, MetricKind::Rouge2,
                 MetricKind::RougeL, MetricKind::RougeAvg}) {
    if (s == metric_name(m)) return m;
  }
  throw FormatError("unknown metric '" + std::string(s) + "'");
}

using Tokens = std::vector<std::string>;

inline std::string case_fold(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Case-folds then splits on whitespace. No stemming.
inline Tokens tokenize(std::string_view text) {
  std::istringstream in(case_fold(text));
  Tokens out;
  for (std::string tok; in >> tok;) out.push_back(std::move(tok));
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::map<Tokens, int> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<Tokens, int> counts;
  if (n == 0 || t.size() < n) return counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++counts[Tokens(t.begin() + i, t.begin() + i + n)];
  return counts;
}

/// Overlap with each n-gram's count clipped at its reference count.
inline int clipped_overlap(const std::map<Tokens, int>& pred, const std::map<Tokens, int>& ref) {
  int overlap = 0;
  for (const auto& [g, c] : pred) {
    auto it = ref.find(g);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  return overlap;
}

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

inline double exact_match(std::string_view prediction, std::string_view reference) {
  return case_fold(detail::trim(prediction)) == case_fold(detail::trim(reference)) ? 1.0 : 0.0;
}

/// ROUGE-N F1 over clipped n-gram overlap.
///
/// When both sequences are too short to hold a single n-gram the score is 1
/// for identical non-empty sequences and 0 otherwise, so the identity law
/// holds for one-token answers.
inline double rouge_n(const Tokens& prediction, const Tokens& reference, std::size_t n) {
  if (n != 1 && n != 2) throw ConfigError("rouge_n supports n in {1, 2}");
  if (prediction.empty() || reference.empty()) return 0.0;
  const auto pred = detail::ngram_counts(prediction, n);
  const auto ref = detail::ngram_counts(reference, n);
  if (pred.empty() && ref.empty()) return prediction == reference ? 1.0 : 0.0;
  if (pred.empty() || ref.empty()) return 0.0;
  const double overlap = detail::clipped_overlap(pred, ref);
  const double p = overlap / static_cast<double>(prediction.size() - n + 1);
  const double r = overlap / static_cast<double>(reference.size() - n + 1);
  return detail::f1(p, r);
}

inline double rouge_l(const Tokens& prediction, const Tokens& reference) {
  if (prediction.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(detail::lcs_length(prediction, reference));
  return detail::f1(lcs / static_cast<double>(prediction.size()), lcs / static_cast<double>(reference.size()));
}

/// Sentence BLEU-4, uniform weights, add-one smoothing on the 2..4-gram
/// precisions, brevity penalty exp(1 - |ref|/|pred|) for short predictions.
inline double bleu(const Tokens& prediction, const Tokens& reference) {
  if (prediction.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto pred = detail::ngram_counts(prediction, n);
    const double total = prediction.size() >= n ? static_cast<double>(prediction.size() - n + 1) : 0.0;
    const double overlap = detail::clipped_overlap(pred, detail::ngram_counts(reference, n));
    const double p = n == 1 ? overlap / total : (overlap + 1.0) / (total + 1.0);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double pl = static_cast<double>(prediction.size());
  const double rl = static_cast<double>(reference.size());
  const double bp = pl < rl ? std::exp(1.0 - rl / pl) : 1.0;
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

inline double score(MetricKind metric, std::string_view prediction, std::string_view reference) {
  if (metric == MetricKind::ExactMatch) return exact_match(prediction, reference);
  const Tokens p = tokenize(prediction);
  const Tokens r = tokenize(reference);
  switch (metric) {
    case MetricKind::Bleu: return bleu(p, r);
    case MetricKind::Rouge1: return rouge_n(p, r, 1);
    case MetricKind::Rouge2: return rouge_n(p, r, 2);
    case MetricKind::RougeL: return rouge_l(p, r);
    case MetricKind::RougeAvg: return (rouge_n(p, r, 1) + rouge_n(p, r, 2) + rouge_l(p, r)) / 3.0;
    case MetricKind::ExactMatch: break;
  }
  return 0.0;
}

}  // namespace adaroute
