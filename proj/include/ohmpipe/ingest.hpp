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

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "ohmpipe/error.hpp"
#include "ohmpipe/kernels.hpp"

namespace ohmpipe {

// One utterance turn. Immutable once it enters a pipeline.
struct Sample {
  std::string id;
  std::string dialogue_id;
  std::uint32_t turn_index = 0;
  double timestamp_s = 0.0;
  std::string text;
  Vec embedding;
  std::optional<std::string> domain;
  std::optional<bool> is_reformulation;
  std::optional<std::string> assistant_text;
  // Embedding of a same-dialogue context turn, used as the positive when
  // scoring batches with the contrastive evaluator.
  std::optional<Vec> context_embedding;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class ParseMode { strict, lenient };

// Decodes one record. expected_dim == 0 accepts any embedding width.
Sample sample_from_json(const nlohmann::json& record, std::size_t expected_dim, std::size_t line = 0);
// Same contract as sample_from_json, parsing one JSONL line directly. This is
// the fast path used by SampleReader.
Sample sample_from_line(std::string_view text, std::size_t expected_dim, std::size_t line = 0);

nlohmann::json sample_to_json(const Sample& s);
// Single-line record, no trailing newline.
std::string sample_to_record(const Sample& s);

// Lazy newline-delimited reader. Holds one line at a time.
//
// In strict mode the first bad record throws ParseError. In lenient mode bad
// records are skipped and counted; the first few messages are kept for the
// run report.
class SampleReader {
 public:
  // expected_dim == 0 infers the width from the first valid record.
  SampleReader(std::istream& in, std::size_t expected_dim, ParseMode mode);

  std::optional<Sample> next();

  std::size_t dim() const noexcept { return dim_; }
  std::size_t lines_read() const noexcept { return line_; }
  std::size_t records_read() const noexcept { return records_; }
  std::size_t skipped() const noexcept { return skipped_; }
  const std::vector<std::string>& skip_messages() const noexcept { return messages_; }

 private:
  std::istream* in_;
  std::size_t dim_;
  ParseMode mode_;
  std::string buf_;
  std::size_t line_ = 0;
  std::size_t records_ = 0;
  std::size_t skipped_ = 0;
  std::vector<std::string> messages_;
};

// Reads every record of a file. Throws Error{"io.open_failed"} naming the path.
std::vector<Sample> read_samples(const std::string& path, std::size_t expected_dim, ParseMode mode);

struct Normalized {
  Vec v;
  bool zero = false;  // input had zero norm and was passed through
};

// Unit-norm copy. Zero vectors pass through flagged; non-finite input throws.
Normalized l2_normalize(std::span<const double> v);
// In-place form; returns false for the zero-norm pass-through.
bool l2_normalize_inplace(std::span<double> v);

struct SyntheticSpec {
  std::size_t n_clusters = 32;
  std::size_t dim = 64;
  std::size_t samples_per_cluster = 2000;
  double cluster_spread = 1.0;
  double centroid_scale = 20.0;
  std::uint64_t rng_seed = 0;
  // Attach a same-cluster context embedding to each sample.
  bool with_context = true;
  // Emit in a seeded random order instead of cluster-major order.
  bool shuffle = true;
};

void validate(const SyntheticSpec& spec);

// Gaussian mixture stream. The ground-truth cluster of each sample is stored
// in its domain as "cluster-<c>". Output is a pure function of the spec.
class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(const SyntheticSpec& spec);

  std::optional<Sample> next();

  std::size_t size() const noexcept { return order_.size(); }
  const Matrix& centroids() const noexcept { return centroids_; }

  static std::size_t cluster_of(const Sample& s);

 private:
  SyntheticSpec spec_;
  Matrix centroids_;
  std::vector<std::uint32_t> order_;
  std::size_t pos_ = 0;
};

std::vector<Sample> generate_synthetic(const SyntheticSpec& spec);

}  // namespace ohmpipe
