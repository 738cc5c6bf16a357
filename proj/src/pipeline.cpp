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

#include "ohmpipe/pipeline.hpp"

#include <algorithm>
#include <numeric>

namespace ohmpipe {

using nlohmann::json;

namespace {
constexpr std::size_t kMaxErrorMessages = 16;
}

void validate(const OhmConfig& cfg) {
  if (cfg.dim == 0) throw Error("config.missing_dim", "embedding dimension is required");
  if (cfg.update_window_size == 0 || cfg.n_clusters == 0 || cfg.refit_interval == 0 || cfg.batch_size == 0) {
    throw Error("ohm.invalid_config", "window, clusters, refit interval and batch size must be positive");
  }
  if (cfg.reservoir_capacity < cfg.batch_size) {
    throw Error("ohm.invalid_config", "reservoir_capacity must be >= batch_size");
  }
  validate(cluster_config(cfg));
}

ClusterConfig cluster_config(const OhmConfig& cfg) {
  ClusterConfig c;
  c.n_clusters = cfg.n_clusters;
  c.max_leaves = cfg.max_leaves;
  c.threshold = cfg.threshold;
  c.rng_seed = cfg.rng_seed;
  c.exec = cfg.exec;
  return c;
}

json batch_to_json(const Batch& b, bool full_samples) {
  json ids = json::array();
  for (const auto& s : b.samples) ids.push_back(s.id);
  json j{{"cluster_label", b.cluster_label}, {"model_version", b.model_version}, {"sample_ids", std::move(ids)}};
  if (b.partial) j["partial"] = true;
  if (full_samples) {
    json samples = json::array();
    for (const auto& s : b.samples) samples.push_back(sample_to_json(s));
    j["samples"] = std::move(samples);
  }
  return j;
}

json PipelineReport::to_json() const {
  return {{"samples_seen", samples_seen},
          {"samples_invalid", samples_invalid},
          {"samples_emitted", samples_emitted},
          {"samples_displaced", samples_displaced},
          {"samples_flush_dropped", samples_flush_dropped},
          {"samples_dropped", samples_dropped()},
          {"batches_emitted", batches_emitted},
          {"partial_batches", partial_batches},
          {"fits_performed", fits_performed},
          {"peak_retained", peak_retained},
          {"model_version", model_version},
          {"effective_clusters", effective_clusters},
          {"per_cluster_batches", per_cluster_batches},
          {"errors", errors}};
}

OhmPipeline::OhmPipeline(const OhmConfig& cfg)
    : cfg_(cfg),
      offer_rng_(make_rng(cfg.rng_seed, "ohm/reservoir")),
      draw_rng_(make_rng(cfg.rng_seed, "ohm/batch")) {
  validate(cfg_);
  model_ = std::make_shared<const ClusterModel>(cfg_.dim, cluster_config(cfg_));
  ring_ = Matrix(cfg_.update_window_size, cfg_.dim);
  reservoirs_.reserve(cfg_.n_clusters);
  for (std::size_t c = 0; c < cfg_.n_clusters; ++c) reservoirs_.emplace_back(cfg_.reservoir_capacity);
  report_.per_cluster_batches.assign(cfg_.n_clusters, 0);
}

std::size_t OhmPipeline::retained() const noexcept { return buffer_count_ + reservoir_items_; }

void OhmPipeline::note_retained() {
  report_.peak_retained = std::max<std::uint64_t>(report_.peak_retained, retained());
}

Matrix OhmPipeline::buffer() const {
  Matrix out(0, cfg_.dim);
  const std::size_t cap = cfg_.update_window_size;
  const std::size_t start = (ring_head_ + cap - buffer_count_) % cap;
  for (std::size_t i = 0; i < buffer_count_; ++i) out.append_row(ring_.row((start + i) % cap));
  return out;
}

void OhmPipeline::update_clusters(const Sample& s) {
  if (s.embedding.size() != cfg_.dim) {
    throw Error("ohm.dimension_mismatch", "sample '" + s.id + "' has " + std::to_string(s.embedding.size()) +
                                              " values, pipeline expects " + std::to_string(cfg_.dim));
  }
  auto slot = ring_.row(ring_head_);
  std::copy(s.embedding.begin(), s.embedding.end(), slot.begin());
  l2_normalize_inplace(slot);
  ring_head_ = (ring_head_ + 1) % cfg_.update_window_size;
  buffer_count_ = std::min(buffer_count_ + 1, cfg_.update_window_size);
  ++valid_seen_;

  if (buffer_count_ >= cfg_.update_window_size &&
      (!model_->fitted() || valid_seen_ % cfg_.refit_interval == 0)) {
    // Synchronous refit keeps labels a pure function of (input, seed); the
    // previous snapshot stays valid for anyone still holding it.
    model_ = std::make_shared<const ClusterModel>(model_->partial_fit(buffer()));
    ++report_.fits_performed;
    report_.model_version = model_->version();
    report_.effective_clusters = model_->effective_clusters();
  }
}

std::size_t OhmPipeline::generate_labels(const Sample& s) const { return model_->predict(s.embedding); }

std::optional<Batch> OhmPipeline::reservoir_offer(Sample s, std::size_t label) {
  if (label >= reservoirs_.size()) throw Error("ohm.invalid_label", "label " + std::to_string(label) + " out of range");
  auto& res = reservoirs_[label];
  const std::uint64_t version = model_->version();
  auto lost = res.offer(Entry{std::move(s), label, version}, offer_rng_);
  if (lost) {
    ++report_.samples_displaced;
  } else {
    ++reservoir_items_;
  }
  note_retained();
  if (res.size() < cfg_.batch_size) return std::nullopt;

  Batch b;
  b.cluster_label = label;
  b.model_version = version;
  b.emitted_at = report_.samples_seen;
  for (auto& e : res.take(cfg_.batch_size, draw_rng_)) {
    b.samples.push_back(std::move(e.sample));
    b.label_versions.push_back(e.version);
  }
  reservoir_items_ -= cfg_.batch_size;
  ++report_.batches_emitted;
  report_.samples_emitted += b.samples.size();
  ++report_.per_cluster_batches[label];
  return b;
}

std::optional<Batch> OhmPipeline::push(Sample s) {
  ++report_.samples_seen;
  try {
    update_clusters(s);
  } catch (const Error& e) {
    ++report_.samples_invalid;
    if (report_.errors.size() < kMaxErrorMessages) report_.errors.emplace_back(e.what());
    return std::nullopt;
  }
  const std::size_t label = generate_labels(s);
  return reservoir_offer(std::move(s), label);
}

std::vector<Batch> OhmPipeline::finish() {
  std::vector<Batch> out;
  for (std::size_t c = 0; c < reservoirs_.size(); ++c) {
    auto& res = reservoirs_[c];
    if (res.size() == 0) continue;
    auto items = res.drain();
    reservoir_items_ -= items.size();
    if (cfg_.flush_policy == FlushPolicy::drop_partial) {
      report_.samples_flush_dropped += items.size();
      continue;
    }
    Batch b;
    b.cluster_label = c;
    b.model_version = model_->version();
    b.emitted_at = report_.samples_seen;
    b.partial = true;
    for (auto& e : items) {
      b.samples.push_back(std::move(e.sample));
      b.label_versions.push_back(e.version);
    }
    ++report_.batches_emitted;
    ++report_.partial_batches;
    report_.samples_emitted += b.samples.size();
    ++report_.per_cluster_batches[c];
    out.push_back(std::move(b));
  }
  return out;
}

SampleSource vector_source(const std::vector<Sample>& samples) {
  return [&samples, i = std::size_t{0}]() mutable -> std::optional<Sample> {
    if (i >= samples.size()) return std::nullopt;
    return samples[i++];
  };
}

PipelineReport run_pipeline(const SampleSource& input, const OhmConfig& cfg, const BatchSink& sink) {
  OhmPipeline pipe(cfg);
  while (auto s = input()) {
    if (auto b = pipe.push(std::move(*s))) sink(std::move(*b));
  }
  for (auto& b : pipe.finish()) sink(std::move(b));
  return pipe.report();
}

std::vector<Batch> uniform_batches(std::vector<Sample> samples, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw Error("ohm.invalid_config", "batch_size must be positive");
  Rng rng = make_rng(seed, "uniform/shuffle");
  std::shuffle(samples.begin(), samples.end(), rng);
  std::vector<Batch> out;
  out.reserve(samples.size() / batch_size);
  for (std::size_t start = 0; start + batch_size <= samples.size(); start += batch_size) {
    Batch b;
    b.emitted_at = start + batch_size;
    b.samples.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(start)),
                     std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(start + batch_size)));
    b.label_versions.assign(batch_size, 0);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace ohmpipe
