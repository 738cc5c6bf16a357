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

// Online hard-negative mining pipeline.
//
// Each sample passes through three stages:
//   1. update_clusters: its normalized embedding enters a rolling buffer; when
//      the buffer is full and the model is unfitted or the refit cadence hits,
//      the buffer is partially fit into a new cluster snapshot.
//   2. generate_labels: the current snapshot assigns a cluster label.
//   3. reservoir_offer: the sample joins that cluster's reservoir; once the
//      reservoir holds batch_size items a batch is drawn and emitted.
//
// Before the first fit every label is 0, so the pipeline degrades to plain
// sequential batching.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ohmpipe/clustering.hpp"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/reservoir.hpp"

namespace ohmpipe {

enum class FlushPolicy { emit_partial, drop_partial };

struct OhmConfig {
  std::size_t dim = 0;
  std::size_t update_window_size = 4096;
  std::size_t n_clusters = 32;
  std::size_t refit_interval = 10000;
  std::size_t batch_size = 16;
  std::size_t reservoir_capacity = 64;
  FlushPolicy flush_policy = FlushPolicy::emit_partial;
  std::uint64_t rng_seed = 0;
  // Clustering knobs.
  std::size_t max_leaves = 256;
  double threshold = 0.25;
  kernels::Exec exec = kernels::Exec::serial;
};

void validate(const OhmConfig& cfg);
ClusterConfig cluster_config(const OhmConfig& cfg);

struct Batch {
  std::vector<Sample> samples;
  std::size_t cluster_label = 0;
  std::uint64_t model_version = 0;  // snapshot version at emission
  std::uint64_t emitted_at = 0;     // samples_seen at emission
  // Snapshot version each member was labeled under, parallel to samples.
  std::vector<std::uint64_t> label_versions;
  bool partial = false;  // flushed short at end of stream
};

nlohmann::json batch_to_json(const Batch& b, bool full_samples);

struct PipelineReport {
  std::uint64_t samples_seen = 0;     // everything offered to push()
  std::uint64_t samples_invalid = 0;  // skipped for bad dimension
  std::uint64_t samples_emitted = 0;
  std::uint64_t samples_displaced = 0;  // lost to reservoir displacement
  std::uint64_t samples_flush_dropped = 0;
  std::uint64_t batches_emitted = 0;
  std::uint64_t partial_batches = 0;
  std::uint64_t fits_performed = 0;
  std::uint64_t peak_retained = 0;
  std::uint64_t model_version = 0;
  std::size_t effective_clusters = 0;
  std::vector<std::uint64_t> per_cluster_batches;
  std::vector<std::string> errors;  // first few per-sample error messages

  std::uint64_t samples_dropped() const noexcept {
    return samples_invalid + samples_displaced + samples_flush_dropped;
  }

  nlohmann::json to_json() const;
};

class OhmPipeline {
 public:
  explicit OhmPipeline(const OhmConfig& cfg);

  // Runs all three stages for one sample. Samples with the wrong embedding
  // width are skipped and counted, never thrown.
  std::optional<Batch> push(Sample s);
  // End of stream: applies the flush policy to every non-empty reservoir.
  std::vector<Batch> finish();

  // Individual stages, exposed for testing. update_clusters throws on a
  // dimension mismatch.
  void update_clusters(const Sample& s);
  std::size_t generate_labels(const Sample& s) const;
  std::optional<Batch> reservoir_offer(Sample s, std::size_t label);

  const OhmConfig& config() const noexcept { return cfg_; }
  const ClusterSnapshot& snapshot() const noexcept { return model_; }
  const PipelineReport& report() const noexcept { return report_; }
  std::size_t buffer_size() const noexcept { return buffer_count_; }
  std::uint64_t valid_seen() const noexcept { return valid_seen_; }
  std::size_t retained() const noexcept;
  // Buffer contents, oldest first.
  Matrix buffer() const;

 private:
  struct Entry {
    Sample sample;
    std::size_t label;
    std::uint64_t version;
  };

  void note_retained();

  OhmConfig cfg_;
  ClusterSnapshot model_;
  Matrix ring_;
  std::size_t ring_head_ = 0;  // next write slot
  std::size_t buffer_count_ = 0;
  std::uint64_t valid_seen_ = 0;
  std::vector<Reservoir<Entry>> reservoirs_;
  std::size_t reservoir_items_ = 0;
  Rng offer_rng_;
  Rng draw_rng_;
  PipelineReport report_;
};

using SampleSource = std::function<std::optional<Sample>()>;
using BatchSink = std::function<void(Batch&&)>;

SampleSource vector_source(const std::vector<Sample>& samples);

// Streams `input` through a fresh pipeline, handing batches to `sink` in
// emission order.
PipelineReport run_pipeline(const SampleSource& input, const OhmConfig& cfg, const BatchSink& sink);

// Baseline: seeded shuffle of `samples`, cut into consecutive batches of
// batch_size (a short tail is dropped).
std::vector<Batch> uniform_batches(std::vector<Sample> samples, std::size_t batch_size, std::uint64_t seed);

}  // namespace ohmpipe
