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

// Dialogue mining: time-window context gathering around a seed utterance,
// text-similarity reformulation detection, fixed-ratio reformulation
// up-sampling, and weighted stream mixing.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ohmpipe/error.hpp"
#include "ohmpipe/ingest.hpp"

namespace ohmpipe {

struct WindowConfig {
  double initial_window_s = 90.0;
  double shrink_factor = 0.5;
  double min_window_s = 15.0;
  std::size_t max_utterances = 5;
};

void validate(const WindowConfig& cfg);

enum class Combine { any, all };

struct SimilarityConfig {
  double cosine_threshold = 0.6;
  double edit_sim_threshold = 0.7;
  Combine combine = Combine::any;
  std::size_t ngram_order = 3;
  // Also test contexts before the seed.
  bool include_past = false;
};

void validate(const SimilarityConfig& cfg);

struct SimilarityScore {
  double cosine = 0.0;
  double edit_sim = 0.0;
};

struct ContextScore {
  std::string id;
  SimilarityScore score;
  bool flagged = false;
};

struct Dialogue {
  Sample seed;
  std::vector<Sample> past;    // ascending timestamp
  std::vector<Sample> future;  // ascending timestamp
  double window_s = 0.0;
  std::vector<std::string> assistant_past;
  std::vector<std::string> assistant_future;
  bool has_reformulation = false;
  std::vector<ContextScore> scores;  // filled by detect_reformulations

  std::size_t context_size() const noexcept { return past.size() + future.size(); }
};

// Gathers every pool utterance reachable from the seed through gaps of at
// most w seconds, shrinking w geometrically (clamped at min_window_s) while
// more than max_utterances are gathered. The pool must be sorted by
// timestamp; an entry with the seed's id is the seed itself.
Dialogue build_dialogue(const Sample& seed, std::span<const Sample> pool, const WindowConfig& cfg);

// Lowercase, trim, collapse runs of whitespace to one space.
std::string normalize_text(std::string_view text);

// cosine: character n-gram count vectors of the normalized strings.
// edit_sim: 1 - token Levenshtein / max token count, 1 for two empty inputs.
SimilarityScore text_similarity(std::string_view a, std::string_view b, const SimilarityConfig& cfg);

bool is_reformulation(const SimilarityScore& s, const SimilarityConfig& cfg);

// Scores the seed against its future contexts (and past ones when
// include_past is set), flagging each match and the dialogue. Idempotent.
Dialogue detect_reformulations(Dialogue d, const SimilarityConfig& cfg);

// Nested record: structure references sample ids, "turns" carries the text
// and timing of every referenced sample.
nlohmann::json dialogue_to_json(const Dialogue& d);
Dialogue dialogue_from_json(const nlohmann::json& j);

template <class T>
using Source = std::function<std::optional<T>()>;

template <class T>
Source<T> from_vector(std::vector<T> items) {
  return [items = std::move(items), i = std::size_t{0}]() mutable -> std::optional<T> {
    if (i >= items.size()) return std::nullopt;
    return std::move(items[i++]);
  };
}

// Interleaves one reformulation item after every k standard items. The
// standard stream drives termination; the reformulation stream is replayed
// from the start whenever it runs dry.
template <class T>
class ReformUpsampler {
 public:
  ReformUpsampler(Source<T> standard, Source<T> reform, std::size_t k)
      : standard_(std::move(standard)), reform_(std::move(reform)), k_(k) {
    if (k_ == 0) throw Error("mining.invalid_ratio", "up-sampling ratio must be >= 1");
  }

  std::optional<T> next() {
    if (since_reform_ == k_) {
      since_reform_ = 0;
      ++reform_emitted_;
      return next_reform();
    }
    auto s = standard_();
    if (!s) return std::nullopt;
    ++since_reform_;
    ++standard_emitted_;
    return s;
  }

  std::size_t wraparounds() const noexcept { return wraps_; }
  std::size_t reform_emitted() const noexcept { return reform_emitted_; }
  std::size_t standard_emitted() const noexcept { return standard_emitted_; }

 private:
  T next_reform() {
    if (!reform_done_) {
      if (auto r = reform_()) {
        cache_.push_back(*r);
        return std::move(*r);
      }
      reform_done_ = true;
    }
    if (cache_.empty()) throw Error("mining.reform_exhausted", "reformulation stream is empty, ratio cannot be met");
    if (replay_ == 0) ++wraps_;
    T out = cache_[replay_];
    replay_ = (replay_ + 1) % cache_.size();
    return out;
  }

  Source<T> standard_;
  Source<T> reform_;
  std::size_t k_;
  std::size_t since_reform_ = 0;
  bool reform_done_ = false;
  std::vector<T> cache_;
  std::size_t replay_ = 0;
  std::size_t wraps_ = 0;
  std::size_t reform_emitted_ = 0;
  std::size_t standard_emitted_ = 0;
};

template <class T>
std::vector<T> upsample_reformulations(std::vector<T> standard, std::vector<T> reform, std::size_t k,
                                       std::size_t* wraparounds = nullptr) {
  ReformUpsampler<T> up(from_vector(std::move(standard)), from_vector(std::move(reform)), k);
  std::vector<T> out;
  while (auto d = up.next()) out.push_back(std::move(*d));
  if (wraparounds != nullptr) *wraparounds = up.wraparounds();
  return out;
}

// Draws each item from stream i with probability weight_i / sum(weights).
// An exhausted stream leaves the draw and the remaining weights renormalize;
// the mix ends when every positively weighted stream is exhausted.
template <class T>
class StreamMixer {
 public:
  StreamMixer(std::vector<std::pair<Source<T>, double>> streams, std::uint64_t seed)
      : rng_(make_rng(seed, "mining/mix")) {
    bool any_positive = false;
    for (auto& [src, w] : streams) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error("mining.invalid_spec", "mix weights must be finite and >= 0");
      any_positive = any_positive || w > 0.0;
      sources_.push_back(std::move(src));
      weights_.push_back(w);
    }
    if (!any_positive) throw Error("mining.invalid_spec", "at least one mix weight must be positive");
    counts_.assign(sources_.size(), 0);
    live_.assign(sources_.size(), true);
  }

  std::optional<T> next() {
    for (;;) {
      double total = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (live_[i]) total += weights_[i];
      }
      if (!(total > 0.0)) return std::nullopt;
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng_);
      std::size_t pick = weights_.size();
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (!live_[i] || weights_[i] <= 0.0) continue;
        pick = i;
        if (r < weights_[i]) break;
        r -= weights_[i];
      }
      if (auto item = sources_[pick]()) {
        ++counts_[pick];
        return item;
      }
      live_[pick] = false;
      exhausted_.push_back(pick);
    }
  }

  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  // Stream indices in the order they ran dry.
  const std::vector<std::size_t>& exhausted() const noexcept { return exhausted_; }

 private:
  std::vector<Source<T>> sources_;
  std::vector<double> weights_;
  std::vector<bool> live_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::size_t> exhausted_;
  Rng rng_;
};

}  // namespace ohmpipe
