// Copyright 2026 The ohmpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Word-level ASR error metrics: alignment with S/I/D decomposition, WER/SER
// and their relative reductions, per-domain (macro) aggregation, and
// per-error-type relative rates.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ohmpipe/error.hpp"
#include "ohmpipe/kernels.hpp"

namespace ohmpipe {

struct ErrorCounts {
  std::uint64_t substitutions = 0;
  std::uint64_t insertions = 0;
  std::uint64_t deletions = 0;
  std::uint64_t ref_words = 0;
  std::uint64_t sentences = 0;
  std::uint64_t sentence_errors = 0;

  std::uint64_t errors() const noexcept { return substitutions + insertions + deletions; }
  // Throws metrics.empty_reference when ref_words == 0.
  double wer() const;
  // Throws metrics.empty_input when sentences == 0.
  double ser() const;

  ErrorCounts& operator+=(const ErrorCounts& o) noexcept;
  friend bool operator==(const ErrorCounts&, const ErrorCounts&) = default;
};

nlohmann::json to_json(const ErrorCounts& c);

enum class EditOp { match, substitution, deletion, insertion };

struct AlignStep {
  EditOp op;
  std::ptrdiff_t ref_index;  // -1 for insertions
  std::ptrdiff_t hyp_index;  // -1 for deletions
};

struct Alignment {
  ErrorCounts counts;  // sentences = 1
  std::vector<AlignStep> trace;
};

// Lowercased whitespace tokens.
std::vector<std::string> normalize_tokens(std::string_view text);

// Minimum edit distance alignment with unit costs. The backtrace walks from
// the end of both sequences and, among equal-cost moves, prefers the diagonal
// (match/substitution), then deletion, then insertion.
template <class T>
Alignment align(std::span<const T> ref, std::span<const T> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  const std::size_t w = m + 1;
  std::vector<std::uint32_t> dp((n + 1) * w);
  for (std::size_t j = 0; j <= m; ++j) dp[j] = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    dp[i * w] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = dp[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
      const std::uint32_t del = dp[(i - 1) * w + j] + 1u;
      const std::uint32_t ins = dp[i * w + j - 1] + 1u;
      dp[i * w + j] = std::min(diag, std::min(del, ins));
    }
  }

  Alignment out;
  out.counts.ref_words = n;
  out.counts.sentences = 1;
  out.trace.reserve(n + m);
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    const std::uint32_t here = dp[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (here == dp[(i - 1) * w + j - 1] + (same ? 0u : 1u)) {
        out.trace.push_back({same ? EditOp::match : EditOp::substitution, static_cast<std::ptrdiff_t>(i - 1),
                             static_cast<std::ptrdiff_t>(j - 1)});
        if (!same) ++out.counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && here == dp[(i - 1) * w + j] + 1u) {
      out.trace.push_back({EditOp::deletion, static_cast<std::ptrdiff_t>(i - 1), -1});
      ++out.counts.deletions;
      --i;
      continue;
    }
    out.trace.push_back({EditOp::insertion, -1, static_cast<std::ptrdiff_t>(j - 1)});
    ++out.counts.insertions;
    --j;
  }
  std::reverse(out.trace.begin(), out.trace.end());
  if (out.counts.errors() > 0) out.counts.sentence_errors = 1;
  return out;
}

// Token-normalizes both strings, then aligns.
Alignment align_text(std::string_view ref, std::string_view hyp);

// Plain token-level Levenshtein distance.
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);

// 100 * (base - next) / base. Throws metrics.invalid_base when base <= 0.
double werr(double base_wer, double new_wer);
// Same form applied to sentence error rates.
inline double serr(double base_ser, double new_ser) { return werr(base_ser, new_ser); }
// Share of the teacher's relative gain kept by the student, in percent.
double distillation_efficiency(double student_werr, double teacher_werr);

struct TextPair {
  std::string ref;
  std::string hyp;
};

// Fraction of pairs with any error. Throws metrics.empty_input on an empty list.
double ser(std::span<const TextPair> pairs);

struct DomainRow {
  std::string domain;
  ErrorCounts base;
  ErrorCounts next;
  double base_wer = 0.0;
  double new_wer = 0.0;
  double base_ser = 0.0;
  double new_ser = 0.0;
  std::optional<double> werr;  // undefined when the base system is error-free
  std::optional<double> serr;
};

struct DomainNormalized {
  std::optional<double> werr_macro;
  std::optional<double> serr_macro;
  std::optional<double> werr_micro;
  std::optional<double> serr_micro;
  std::vector<DomainRow> rows;
};

// Per-domain WERR/SERR averaged with equal domain weight (macro), alongside
// the pooled by-utterance figures (micro).
DomainNormalized domain_normalized(const std::map<std::string, ErrorCounts>& base,
                                   const std::map<std::string, ErrorCounts>& next);

nlohmann::json to_json(const DomainNormalized& d);

struct ErrorTypeRates {
  std::optional<double> subr;
  std::optional<double> insr;
  std::optional<double> delr;
};

// Relative reduction of each error type's per-reference-word rate. A type
// with zero base count is left undefined.
ErrorTypeRates error_type_rates(const ErrorCounts& base, const ErrorCounts& next);

struct ScoredUtterance {
  std::string id;
  std::string domain;  // empty when untagged
  std::string ref;
  std::string hyp;
};

struct MetricReport {
  ErrorCounts counts;
  std::optional<double> wer;
  double ser = 0.0;
  std::map<std::string, ErrorCounts> per_domain;
  std::vector<Alignment> alignments;  // parallel to the input

  nlohmann::json to_json() const;
};

// Aligns every utterance (in parallel when asked) and aggregates in input
// order, so the result does not depend on the execution policy.
MetricReport score(std::span<const ScoredUtterance> utts, kernels::Exec exec = kernels::Exec::serial);

// Human-readable REF/HYP/EVAL rows for one alignment.
std::string format_alignment(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                             const Alignment& a);

}  // namespace ohmpipe
