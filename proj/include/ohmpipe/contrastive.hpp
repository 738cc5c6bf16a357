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

// Past/future contrastive loss evaluated on fixed embeddings, and the batch
// hardness measurements built on it. Nothing here computes gradients.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ohmpipe/kernels.hpp"
#include "ohmpipe/pipeline.hpp"

namespace ohmpipe {

enum class Direction { anchor_to_positive, symmetric };

struct ContrastiveConfig {
  double temperature = 0.07;
  Direction direction = Direction::symmetric;
};

void validate(const ContrastiveConfig& cfg);

struct ContrastiveItem {
  Vec anchor;
  Vec positive;
  std::string dialogue_id;
};

// Mean over items of -log softmax(cos(anchor_i, positive_i) / tau) where the
// softmax runs over positive_i and every positive_j from another dialogue.
// Symmetric mode averages this with the positive-to-anchor direction.
double pfclc_loss(std::span<const ContrastiveItem> items, const ContrastiveConfig& cfg);

struct HardnessReport {
  double mean_negative_sim = 0.0;
  std::size_t negative_pairs = 0;
  std::optional<double> loss;  // needs >= 2 members with context embeddings
  bool defined() const noexcept { return negative_pairs > 0; }
};

HardnessReport batch_hardness(const Batch& batch, const ContrastiveConfig& cfg);
std::vector<HardnessReport> batch_hardness(std::span<const Batch> batches, const ContrastiveConfig& cfg,
                                           kernels::Exec exec = kernels::Exec::serial);

struct StrategySummary {
  std::vector<HardnessReport> rows;
  std::vector<std::size_t> cluster_labels;
  double mean_sim = 0.0;
  double mean_loss = 0.0;
  std::size_t loss_rows = 0;
};

struct ComparisonReport {
  StrategySummary ohm;
  StrategySummary uniform;
  double p_loss = 1.0;  // one-sided Mann-Whitney, ohm > uniform
  double p_sim = 1.0;
  PipelineReport pipeline;

  nlohmann::json to_json(bool with_rows = true) const;
};

StrategySummary summarize(std::span<const Batch> batches, const ContrastiveConfig& cfg, kernels::Exec exec);

// Batches `input` with the Ohm pipeline and with a seeded uniform shuffle
// (same batch size), scores every full batch of each, and tests whether Ohm
// batches are harder. Both strategies must yield at least n_batches full
// batches.
ComparisonReport compare_batching(const std::vector<Sample>& input, const OhmConfig& config,
                                  const ContrastiveConfig& cfg, std::size_t n_batches,
                                  kernels::Exec exec = kernels::Exec::serial);

}  // namespace ohmpipe
