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

#include "ohmpipe/config.hpp"

#include <cstdio>
#include <fstream>

namespace ohmpipe {

using nlohmann::json;

json default_config_json() {
  return {{"seed", 0},
          {"threads", 0},
          {"log_level", "info"},
          {"ohm",
           {{"dim", nullptr},
            {"window", 4096},
            {"clusters", 32},
            {"refit", 10000},
            {"batch", 16},
            {"capacity", nullptr},
            {"flush", "emit"},
            {"max_leaves", 256},
            {"threshold", 0.25}}},
          {"mining", {{"window", 90.0}, {"shrink", 0.5}, {"min_window", 15.0}, {"max_utts", 5}, {"upsample", 5}}},
          {"similarity", {{"cos", 0.6}, {"edit", 0.7}, {"combine", "any"}, {"ngram", 3}, {"include_past", false}}},
          {"contrastive", {{"tau", 0.07}, {"direction", "symmetric"}}},
          {"synth", {{"clusters", 32}, {"dim", 64}, {"per_cluster", 2000}, {"spread", 1.0}, {"scale", 20.0}}}};
}

namespace {

void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw Error("config.invalid", where.empty() ? "config must be a JSON object" : "'" + where + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw Error("config.unknown_key", "unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, path);
    } else {
      slot = value;
    }
  }
}

template <class T>
T get(const json& j, const char* section, const char* key) {
  const json& v = section ? j.at(section).at(key) : j.at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error("config.invalid", std::string("bad value for '") + (section ? std::string(section) + "." : "") + key + "'");
  }
}

std::size_t positive(const json& j, const char* section, const char* key) {
  const json& v = j.at(section).at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
    throw Error("config.invalid", std::string("'") + section + "." + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

RunConfig resolve_config(const std::optional<json>& file, const json& flags, const std::optional<std::string>& env_seed) {
  json doc = default_config_json();
  bool seed_set = false;
  if (file) {
    overlay(doc, *file, "");
    seed_set = file->contains("seed");
  }
  if (!flags.is_null()) {
    overlay(doc, flags, "");
    seed_set = seed_set || flags.contains("seed");
  }
  if (!seed_set && env_seed) {
    try {
      doc["seed"] = std::stoull(*env_seed);
    } catch (const std::exception&) {
      throw Error("config.invalid", "OHMPIPE_SEED must be an unsigned integer");
    }
  }

  RunConfig cfg;
  cfg.seed = get<std::uint64_t>(doc, nullptr, "seed");
  cfg.threads = get<int>(doc, nullptr, "threads");
  cfg.log_level = get<std::string>(doc, nullptr, "log_level");

  const json& o = doc.at("ohm");
  if (!o.at("dim").is_null()) cfg.ohm.dim = positive(doc, "ohm", "dim");
  cfg.ohm.update_window_size = positive(doc, "ohm", "window");
  cfg.ohm.n_clusters = positive(doc, "ohm", "clusters");
  cfg.ohm.refit_interval = positive(doc, "ohm", "refit");
  cfg.ohm.batch_size = positive(doc, "ohm", "batch");
  cfg.ohm.reservoir_capacity = o.at("capacity").is_null() ? 4 * cfg.ohm.batch_size : positive(doc, "ohm", "capacity");
  const auto flush = get<std::string>(doc, "ohm", "flush");
  if (flush == "emit") {
    cfg.ohm.flush_policy = FlushPolicy::emit_partial;
  } else if (flush == "drop") {
    cfg.ohm.flush_policy = FlushPolicy::drop_partial;
  } else {
    throw Error("config.invalid", "'ohm.flush' must be 'emit' or 'drop'");
  }
  cfg.ohm.max_leaves = positive(doc, "ohm", "max_leaves");
  cfg.ohm.threshold = get<double>(doc, "ohm", "threshold");
  cfg.ohm.rng_seed = cfg.seed;
  if (cfg.ohm.reservoir_capacity < cfg.ohm.batch_size) {
    throw Error("config.invalid", "'ohm.capacity' must be >= 'ohm.batch'");
  }

  cfg.window.initial_window_s = get<double>(doc, "mining", "window");
  cfg.window.shrink_factor = get<double>(doc, "mining", "shrink");
  cfg.window.min_window_s = get<double>(doc, "mining", "min_window");
  cfg.window.max_utterances = positive(doc, "mining", "max_utts");
  cfg.upsample_k = positive(doc, "mining", "upsample");
  validate(cfg.window);

  cfg.similarity.cosine_threshold = get<double>(doc, "similarity", "cos");
  cfg.similarity.edit_sim_threshold = get<double>(doc, "similarity", "edit");
  const auto combine = get<std::string>(doc, "similarity", "combine");
  if (combine == "any") {
    cfg.similarity.combine = Combine::any;
  } else if (combine == "all") {
    cfg.similarity.combine = Combine::all;
  } else {
    throw Error("config.invalid", "'similarity.combine' must be 'any' or 'all'");
  }
  cfg.similarity.ngram_order = positive(doc, "similarity", "ngram");
  cfg.similarity.include_past = get<bool>(doc, "similarity", "include_past");
  validate(cfg.similarity);

  cfg.contrastive.temperature = get<double>(doc, "contrastive", "tau");
  const auto dir = get<std::string>(doc, "contrastive", "direction");
  if (dir == "symmetric") {
    cfg.contrastive.direction = Direction::symmetric;
  } else if (dir == "anchor_to_positive") {
    cfg.contrastive.direction = Direction::anchor_to_positive;
  } else {
    throw Error("config.invalid", "'contrastive.direction' must be 'symmetric' or 'anchor_to_positive'");
  }
  validate(cfg.contrastive);

  cfg.synth.n_clusters = positive(doc, "synth", "clusters");
  cfg.synth.dim = positive(doc, "synth", "dim");
  cfg.synth.samples_per_cluster = positive(doc, "synth", "per_cluster");
  cfg.synth.cluster_spread = get<double>(doc, "synth", "spread");
  cfg.synth.centroid_scale = get<double>(doc, "synth", "scale");
  cfg.synth.rng_seed = cfg.seed;
  validate(cfg.synth);
  return cfg;
}

json to_json(const RunConfig& c) {
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"log_level", c.log_level},
          {"ohm",
           {{"dim", c.ohm.dim == 0 ? json(nullptr) : json(c.ohm.dim)},
            {"window", c.ohm.update_window_size},
            {"clusters", c.ohm.n_clusters},
            {"refit", c.ohm.refit_interval},
            {"batch", c.ohm.batch_size},
            {"capacity", c.ohm.reservoir_capacity},
            {"flush", c.ohm.flush_policy == FlushPolicy::emit_partial ? "emit" : "drop"},
            {"max_leaves", c.ohm.max_leaves},
            {"threshold", c.ohm.threshold}}},
          {"mining",
           {{"window", c.window.initial_window_s},
            {"shrink", c.window.shrink_factor},
            {"min_window", c.window.min_window_s},
            {"max_utts", c.window.max_utterances},
            {"upsample", c.upsample_k}}},
          {"similarity",
           {{"cos", c.similarity.cosine_threshold},
            {"edit", c.similarity.edit_sim_threshold},
            {"combine", c.similarity.combine == Combine::any ? "any" : "all"},
            {"ngram", c.similarity.ngram_order},
            {"include_past", c.similarity.include_past}}},
          {"contrastive",
           {{"tau", c.contrastive.temperature},
            {"direction", c.contrastive.direction == Direction::symmetric ? "symmetric" : "anchor_to_positive"}}},
          {"synth",
           {{"clusters", c.synth.n_clusters},
            {"dim", c.synth.dim},
            {"per_cluster", c.synth.samples_per_cluster},
            {"spread", c.synth.cluster_spread},
            {"scale", c.synth.centroid_scale}}}};
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io.open_failed", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config.parse", "'" + path + "': " + e.what());
  }
}

MixFileSpec parse_mix_spec(const json& j) {
  if (!j.is_object()) throw Error("config.invalid", "mix spec must be a JSON object");
  MixFileSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "streams") {
      if (!value.is_array() || value.empty()) throw Error("config.invalid", "'streams' must be a non-empty array");
      for (const auto& s : value) {
        if (!s.is_object()) throw Error("config.invalid", "each stream must be an object");
        MixStreamSpec ms;
        for (const auto& [k, v] : s.items()) {
          if (k == "path" && v.is_string()) {
            ms.path = v.get<std::string>();
          } else if (k == "weight" && v.is_number()) {
            ms.weight = v.get<double>();
          } else {
            throw Error("config.unknown_key", "unknown or mistyped stream key '" + k + "'");
          }
        }
        if (ms.path.empty()) throw Error("config.invalid", "stream needs a 'path'");
        spec.streams.push_back(std::move(ms));
      }
    } else if (key == "limit" && value.is_number_unsigned()) {
      spec.limit = value.get<std::uint64_t>();
    } else if (key == "seed" && value.is_number_unsigned()) {
      spec.seed = value.get<std::uint64_t>();
    } else {
      throw Error("config.unknown_key", "unknown or mistyped mix spec key '" + key + "'");
    }
  }
  if (spec.streams.empty()) throw Error("config.invalid", "mix spec needs 'streams'");
  return spec;
}

}  // namespace ohmpipe
