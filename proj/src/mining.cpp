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

#include "ohmpipe/mining.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "ohmpipe/metrics.hpp"

namespace ohmpipe {

using nlohmann::json;

void validate(const WindowConfig& cfg) {
  if (!(cfg.min_window_s > 0.0) || !(cfg.initial_window_s >= cfg.min_window_s) || !std::isfinite(cfg.initial_window_s)) {
    throw Error("mining.invalid_config", "window bounds must satisfy initial >= min > 0");
  }
  if (!(cfg.shrink_factor > 0.0 && cfg.shrink_factor < 1.0)) {
    throw Error("mining.invalid_config", "shrink_factor must be in (0, 1)");
  }
  if (cfg.max_utterances == 0) throw Error("mining.invalid_config", "max_utterances must be >= 1");
}

void validate(const SimilarityConfig& cfg) {
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(cfg.cosine_threshold) || !unit(cfg.edit_sim_threshold)) {
    throw Error("mining.invalid_config", "similarity thresholds must be in [0, 1]");
  }
  if (cfg.ngram_order == 0) throw Error("mining.invalid_config", "ngram_order must be >= 1");
}

Dialogue build_dialogue(const Sample& seed, std::span<const Sample> pool, const WindowConfig& cfg) {
  validate(cfg);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    if (pool[i].timestamp_s < pool[i - 1].timestamp_s) {
      throw Error("mining.unsorted_pool", "pool is not sorted by timestamp at index " + std::to_string(i));
    }
  }

  // Split point: the seed's own pool entry, else the first entry at or after
  // the seed's time.
  std::size_t split = pool.size();
  bool seed_in_pool = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].id == seed.id) {
      split = i;
      seed_in_pool = true;
      break;
    }
  }
  if (!seed_in_pool) {
    split = static_cast<std::size_t>(
        std::lower_bound(pool.begin(), pool.end(), seed.timestamp_s,
                         [](const Sample& s, double t) { return s.timestamp_s < t; }) -
        pool.begin());
  }
  const std::size_t right_begin = seed_in_pool ? split + 1 : split;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  double w = cfg.initial_window_s;
  for (;;) {
    left.clear();
    right.clear();
    double edge = seed.timestamp_s;
    for (std::size_t i = split; i-- > 0;) {
      if (pool[i].id == seed.id) continue;
      if (edge - pool[i].timestamp_s > w) break;
      left.push_back(i);
      edge = pool[i].timestamp_s;
    }
    edge = seed.timestamp_s;
    for (std::size_t i = right_begin; i < pool.size(); ++i) {
      if (pool[i].id == seed.id) continue;
      if (pool[i].timestamp_s - edge > w) break;
      right.push_back(i);
      edge = pool[i].timestamp_s;
    }
    if (left.size() + right.size() <= cfg.max_utterances || w <= cfg.min_window_s) break;
    w = std::max(w * cfg.shrink_factor, cfg.min_window_s);
  }

  Dialogue d;
  d.seed = seed;
  d.window_s = w;
  std::unordered_set<std::string> ids{seed.id};
  std::reverse(left.begin(), left.end());
  for (std::size_t i : left) {
    if (!ids.insert(pool[i].id).second) continue;
    d.past.push_back(pool[i]);
    if (pool[i].assistant_text) d.assistant_past.push_back(*pool[i].assistant_text);
  }
  if (seed.assistant_text) d.assistant_future.push_back(*seed.assistant_text);
  for (std::size_t i : right) {
    if (!ids.insert(pool[i].id).second) continue;
    d.future.push_back(pool[i]);
    if (pool[i].assistant_text) d.assistant_future.push_back(*pool[i].assistant_text);
  }
  return d;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

std::unordered_map<std::string_view, double> ngram_counts(std::string_view s, std::size_t n) {
  std::unordered_map<std::string_view, double> counts;
  if (s.empty()) return counts;
  if (s.size() < n) {
    counts[s] += 1.0;
    return counts;
  }
  for (std::size_t i = 0; i + n <= s.size(); ++i) counts[s.substr(i, n)] += 1.0;
  return counts;
}

double ngram_cosine(std::string_view a, std::string_view b, std::size_t n) {
  if (a.empty() && b.empty()) return 1.0;
  const auto ca = ngram_counts(a, n);
  const auto cb = ngram_counts(b, n);
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [g, x] : ca) {
    na += x * x;
    if (auto it = cb.find(g); it != cb.end()) dot += x * it->second;
  }
  for (const auto& [_, y] : cb) nb += y * y;
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

}  // namespace

SimilarityScore text_similarity(std::string_view a, std::string_view b, const SimilarityConfig& cfg) {
  const std::string na = normalize_text(a);
  const std::string nb = normalize_text(b);
  SimilarityScore s;
  s.cosine = ngram_cosine(na, nb, cfg.ngram_order);
  const auto ta = normalize_tokens(na);
  const auto tb = normalize_tokens(nb);
  const std::size_t longest = std::max(ta.size(), tb.size());
  s.edit_sim = longest == 0 ? 1.0
                            : 1.0 - static_cast<double>(edit_distance(ta, tb)) / static_cast<double>(longest);
  return s;
}

bool is_reformulation(const SimilarityScore& s, const SimilarityConfig& cfg) {
  const bool cos_hit = s.cosine >= cfg.cosine_threshold;
  const bool edit_hit = s.edit_sim >= cfg.edit_sim_threshold;
  return cfg.combine == Combine::any ? (cos_hit || edit_hit) : (cos_hit && edit_hit);
}

Dialogue detect_reformulations(Dialogue d, const SimilarityConfig& cfg) {
  validate(cfg);
  d.scores.clear();
  d.has_reformulation = false;
  auto visit = [&](std::vector<Sample>& turns) {
    for (auto& c : turns) {
      ContextScore cs{c.id, text_similarity(d.seed.text, c.text, cfg), false};
      cs.flagged = is_reformulation(cs.score, cfg);
      c.is_reformulation = cs.flagged;
      d.has_reformulation = d.has_reformulation || cs.flagged;
      d.scores.push_back(std::move(cs));
    }
  };
  if (cfg.include_past) visit(d.past);
  visit(d.future);
  return d;
}

json dialogue_to_json(const Dialogue& d) {
  json turns = json::object();
  auto add_turn = [&](const Sample& s) {
    json t{{"text", s.text}, {"timestamp_s", s.timestamp_s}, {"turn_index", s.turn_index}};
    if (s.domain) t["domain"] = *s.domain;
    if (s.is_reformulation) t["is_reformulation"] = *s.is_reformulation;
    turns[s.id] = std::move(t);
  };
  json past = json::array();
  json future = json::array();
  add_turn(d.seed);
  for (const auto& s : d.past) {
    past.push_back(s.id);
    add_turn(s);
  }
  for (const auto& s : d.future) {
    future.push_back(s.id);
    add_turn(s);
  }
  json j{{"seed_id", d.seed.id},
         {"dialogue_id", d.seed.dialogue_id},
         {"past_ids", std::move(past)},
         {"future_ids", std::move(future)},
         {"window_s", d.window_s},
         {"assistant_past", d.assistant_past},
         {"assistant_future", d.assistant_future},
         {"has_reformulation", d.has_reformulation},
         {"turns", std::move(turns)}};
  if (!d.scores.empty()) {
    json scores = json::array();
    for (const auto& s : d.scores) {
      scores.push_back({{"id", s.id}, {"cosine", s.score.cosine}, {"edit_sim", s.score.edit_sim}, {"flagged", s.flagged}});
    }
    j["similarities"] = std::move(scores);
  }
  return j;
}

Dialogue dialogue_from_json(const json& j) {
  try {
    const json& turns = j.at("turns");
    const std::string dialogue_id = j.value("dialogue_id", std::string());
    auto turn = [&](const std::string& id) {
      const json& t = turns.at(id);
      Sample s;
      s.id = id;
      s.dialogue_id = dialogue_id;
      s.text = t.at("text").get<std::string>();
      s.timestamp_s = t.at("timestamp_s").get<double>();
      s.turn_index = t.value("turn_index", 0u);
      if (t.contains("domain")) s.domain = t.at("domain").get<std::string>();
      if (t.contains("is_reformulation")) s.is_reformulation = t.at("is_reformulation").get<bool>();
      return s;
    };
    Dialogue d;
    d.seed = turn(j.at("seed_id").get<std::string>());
    for (const auto& id : j.at("past_ids")) d.past.push_back(turn(id.get<std::string>()));
    for (const auto& id : j.at("future_ids")) d.future.push_back(turn(id.get<std::string>()));
    d.window_s = j.at("window_s").get<double>();
    d.assistant_past = j.value("assistant_past", std::vector<std::string>{});
    d.assistant_future = j.value("assistant_future", std::vector<std::string>{});
    d.has_reformulation = j.value("has_reformulation", false);
    if (j.contains("similarities")) {
      for (const auto& s : j.at("similarities")) {
        d.scores.push_back({s.at("id").get<std::string>(),
                            {s.at("cosine").get<double>(), s.at("edit_sim").get<double>()},
                            s.at("flagged").get<bool>()});
      }
    }
    return d;
  } catch (const json::exception& e) {
    throw Error("mining.malformed_dialogue", e.what());
  }
}

}  // namespace ohmpipe
