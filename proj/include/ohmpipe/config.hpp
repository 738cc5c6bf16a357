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

// Run configuration for the ohmpipe CLI.
//
// Configuration is a JSON document with the sections below. Values resolve
// in layers: built-in defaults, then the config file, then command-line
// flags. Unknown keys are rejected at every layer. The seed falls back to
// the OHMPIPE_SEED environment variable when neither the file nor a flag
// sets it.
//
//   {
//     "seed": 0, "threads": 0, "log_level": "info",
//     "ohm": {"dim": null, "window": 4096, "clusters": 32, "refit": 10000,
//             "batch": 16, "capacity": null, "flush": "emit",
//             "max_leaves": 256, "threshold": 0.25},
//     "mining": {"window": 90, "shrink": 0.5, "min_window": 15,
//                "max_utts": 5, "upsample": 5},
//     "similarity": {"cos": 0.6, "edit": 0.7, "combine": "any", "ngram": 3,
//                    "include_past": false},
//     "contrastive": {"tau": 0.07, "direction": "symmetric"},
//     "synth": {"clusters": 32, "dim": 64, "per_cluster": 2000,
//               "spread": 1.0, "scale": 20.0}
//   }
//
// A null capacity resolves to 4 * batch.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ohmpipe/contrastive.hpp"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/mining.hpp"
#include "ohmpipe/pipeline.hpp"

namespace ohmpipe {

struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string log_level = "info";
  OhmConfig ohm;  // ohm.dim == 0 means "not given"
  WindowConfig window;
  std::size_t upsample_k = 5;
  SimilarityConfig similarity;
  ContrastiveConfig contrastive;
  SyntheticSpec synth;
};

nlohmann::json default_config_json();

// file: parsed config file, if any. flags: overrides in the same shape.
// env_seed: value of OHMPIPE_SEED, if set.
RunConfig resolve_config(const std::optional<nlohmann::json>& file, const nlohmann::json& flags,
                         const std::optional<std::string>& env_seed);

nlohmann::json to_json(const RunConfig& cfg);

// FNV-1a of the canonical dump of to_json(cfg), as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

// Reads a JSON file, mapping open and parse failures to config.* errors.
nlohmann::json load_json_file(const std::string& path);

struct MixStreamSpec {
  std::string path;
  double weight = 0.0;
};

struct MixFileSpec {
  std::vector<MixStreamSpec> streams;
  std::optional<std::uint64_t> limit;
  std::optional<std::uint64_t> seed;
};

// {"streams": [{"path": ..., "weight": ...}, ...], "limit": N, "seed": N}
MixFileSpec parse_mix_spec(const nlohmann::json& j);

}  // namespace ohmpipe
