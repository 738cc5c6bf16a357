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

#include "ohmpipe/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ohmpipe/ingest.hpp"
#include "ohmpipe/stats.hpp"

namespace ohmpipe {

using nlohmann::json;

void validate(const ContrastiveConfig& cfg) {
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw Error("contrastive.invalid_config", "temperature must be positive and finite");
  }
}

namespace {

// -log softmax of entry `self` over logits[j] for j in candidates.
double cross_entropy(std::span<const double> logits, std::span<const std::size_t> candidates, std::size_t self) {
  double hi = logits[self];
  for (std::size_t j : candidates) hi = std::max(hi, logits[j]);
  double sum = 0.0;
  for (std::size_t j : candidates) sum += std::exp(logits[j] - hi);
  return hi + std::log(sum) - logits[self];
}

}  // namespace

double pfclc_loss(std::span<const ContrastiveItem> items, const ContrastiveConfig& cfg) {
  validate(cfg);
  const std::size_t n = items.size();
  if (n < 2) throw Error("contrastive.too_few_items", "contrastive loss needs at least two items");
  const std::size_t dim = items[0].anchor.size();
  for (const auto& it : items) {
    if (it.anchor.size() != dim || it.positive.size() != dim) {
      throw Error("contrastive.dimension_mismatch", "anchor and positive widths differ");
    }
  }

  // sim[i*n + j] = cos(anchor_i, positive_j)
  std::vector<double> sim(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sim[i * n + j] = kernels::cosine(items[i].anchor, items[j].positive);
  }

  const double inv_tau = 1.0 / cfg.temperature;
  std::vector<std::size_t> cand;
  std::vector<double> logits(n);
  double forward = 0.0;
  double backward = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || items[j].dialogue_id != items[i].dialogue_id) cand.push_back(j);
    }
    for (std::size_t j = 0; j < n; ++j) logits[j] = sim[i * n + j] * inv_tau;
    forward += cross_entropy(logits, cand, i);
    if (cfg.direction == Direction::symmetric) {
      for (std::size_t j = 0; j < n; ++j) logits[j] = sim[j * n + i] * inv_tau;
      backward += cross_entropy(logits, cand, i);
    }
  }
  const double dn = static_cast<double>(n);
  if (cfg.direction == Direction::symmetric) return 0.5 * (forward / dn + backward / dn);
  return forward / dn;
}

namespace {

std::optional<double> batch_loss(const Batch& batch, const ContrastiveConfig& cfg) {
  std::vector<ContrastiveItem> items;
  for (const auto& s : batch.samples) {
    if (s.context_embedding) items.push_back({s.embedding, *s.context_embedding, s.dialogue_id});
  }
  if (items.size() < 2) return std::nullopt;
  return pfclc_loss(items, cfg);
}

struct Flattened {
  Matrix rows;
  std::vector<std::uint32_t> groups;
  std::vector<kernels::BatchSpan> spans;
};

Flattened flatten(std::span<const Batch> batches) {
  Flattened f;
  std::unordered_map<std::string, std::uint32_t> ids;
  std::size_t dim = 0;
  for (const auto& b : batches) {
    if (!b.samples.empty()) {
      dim = b.samples.front().embedding.size();
      break;
    }
  }
  f.rows = Matrix(0, dim);
  for (const auto& b : batches) {
    f.spans.push_back({f.rows.rows(), b.samples.size()});
    for (const auto& s : b.samples) {
      if (s.embedding.size() != dim) throw Error("contrastive.dimension_mismatch", "batch embeddings differ in width");
      Vec unit = s.embedding;
      l2_normalize_inplace(unit);
      f.rows.append_row(unit);
      auto [it, _] = ids.try_emplace(s.dialogue_id, static_cast<std::uint32_t>(ids.size()));
      f.groups.push_back(it->second);
    }
  }
  return f;
}

}  // namespace

std::vector<HardnessReport> batch_hardness(std::span<const Batch> batches, const ContrastiveConfig& cfg,
                                           kernels::Exec exec) {
  validate(cfg);
  const Flattened f = flatten(batches);
  std::vector<kernels::CrossCosine> sims(batches.size());
  kernels::batch_cross_cosine(f.rows, f.groups, f.spans, sims, exec);

  std::vector<HardnessReport> out(batches.size());
  const auto n = static_cast<std::int64_t>(batches.size());
  auto fill = [&](std::int64_t b) {
    out[b].mean_negative_sim = sims[b].mean;
    out[b].negative_pairs = sims[b].pairs;
    if (sims[b].pairs > 0) out[b].loss = batch_loss(batches[b], cfg);
  };
  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t b = 0; b < n; ++b) fill(b);
  } else {
    for (std::int64_t b = 0; b < n; ++b) fill(b);
  }
  return out;
}

HardnessReport batch_hardness(const Batch& batch, const ContrastiveConfig& cfg) {
  return batch_hardness(std::span<const Batch>(&batch, 1), cfg).front();
}

StrategySummary summarize(std::span<const Batch> batches, const ContrastiveConfig& cfg, kernels::Exec exec) {
  StrategySummary s;
  s.rows = batch_hardness(batches, cfg, exec);
  std::vector<double> sims;
  std::vector<double> losses;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    s.cluster_labels.push_back(batches[i].cluster_label);
    if (!s.rows[i].defined()) continue;
    sims.push_back(s.rows[i].mean_negative_sim);
    if (s.rows[i].loss) losses.push_back(*s.rows[i].loss);
  }
  s.mean_sim = stats::mean(sims);
  s.mean_loss = stats::mean(losses);
  s.loss_rows = losses.size();
  return s;
}

namespace {

std::vector<double> column(const StrategySummary& s, bool loss) {
  std::vector<double> out;
  for (const auto& r : s.rows) {
    if (!r.defined()) continue;
    if (loss) {
      if (r.loss) out.push_back(*r.loss);
    } else {
      out.push_back(r.mean_negative_sim);
    }
  }
  return out;
}

}  // namespace

ComparisonReport compare_batching(const std::vector<Sample>& input, const OhmConfig& config,
                                  const ContrastiveConfig& cfg, std::size_t n_batches, kernels::Exec exec) {
  validate(cfg);
  validate(config);
  const std::size_t needed = n_batches * config.batch_size;
  if (input.size() < needed) {
    throw Error("contrastive.insufficient_input", "need at least " + std::to_string(needed) + " samples for " +
                                                      std::to_string(n_batches) + " batches, got " +
                                                      std::to_string(input.size()));
  }

  std::vector<Batch> ohm_batches;
  ComparisonReport rep;
  rep.pipeline = run_pipeline(vector_source(input), config, [&](Batch&& b) {
    if (!b.partial) ohm_batches.push_back(std::move(b));
  });
  if (ohm_batches.size() < n_batches) {
    throw Error("contrastive.insufficient_input", "Ohm produced " + std::to_string(ohm_batches.size()) +
                                                      " full batches, " + std::to_string(n_batches) + " required");
  }
  std::vector<Batch> uni = uniform_batches(input, config.batch_size, config.rng_seed);

  rep.ohm = summarize(ohm_batches, cfg, exec);
  rep.uniform = summarize(uni, cfg, exec);

  const auto ohm_loss = column(rep.ohm, true);
  const auto uni_loss = column(rep.uniform, true);
  if (!ohm_loss.empty() && !uni_loss.empty()) rep.p_loss = stats::mann_whitney_greater(ohm_loss, uni_loss).p_greater;
  const auto ohm_sim = column(rep.ohm, false);
  const auto uni_sim = column(rep.uniform, false);
  if (!ohm_sim.empty() && !uni_sim.empty()) rep.p_sim = stats::mann_whitney_greater(ohm_sim, uni_sim).p_greater;
  return rep;
}

json ComparisonReport::to_json(bool with_rows) const {
  auto strategy = [&](const StrategySummary& s, const char* name) {
    json j{{"strategy", name},
           {"batches", s.rows.size()},
           {"mean_negative_sim", s.mean_sim},
           {"mean_loss", s.mean_loss},
           {"loss_batches", s.loss_rows}};
    if (with_rows) {
      json rows = json::array();
      for (std::size_t i = 0; i < s.rows.size(); ++i) {
        const auto& r = s.rows[i];
        rows.push_back({{"index", i},
                        {"cluster_label", s.cluster_labels[i]},
                        {"mean_negative_sim", r.mean_negative_sim},
                        {"negative_pairs", r.negative_pairs},
                        {"loss", r.loss ? json(*r.loss) : json(nullptr)}});
      }
      j["rows"] = std::move(rows);
    }
    return j;
  };
  return {{"ohm", strategy(ohm, "ohm")},
          {"uniform", strategy(uniform, "uniform")},
          {"p_value_loss", p_loss},
          {"p_value_sim", p_sim},
          {"pipeline", pipeline.to_json()}};
}

}  // namespace ohmpipe
