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

#include "ohmpipe/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>

namespace ohmpipe {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxSkipMessages = 16;

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw ParseError("ingest.malformed", line, what);
}

// Thin views over the two JSON DOMs so one decoder validates both. The
// streaming reader uses RapidJSON for speed; everything else uses nlohmann.
class NlohmannNode {
 public:
  explicit NlohmannNode(const json& j) : j_(&j) {}
  bool is_object() const { return j_->is_object(); }
  bool is_array() const { return j_->is_array(); }
  bool is_string() const { return j_->is_string(); }
  bool is_number() const { return j_->is_number(); }
  bool is_int() const { return j_->is_number_integer(); }
  bool is_bool() const { return j_->is_boolean(); }
  bool is_null() const { return j_->is_null(); }
  std::string str() const { return j_->get<std::string>(); }
  double dbl() const { return j_->get<double>(); }
  std::int64_t i64() const { return j_->get<std::int64_t>(); }
  bool boolean() const { return j_->get<bool>(); }
  std::size_t size() const { return j_->size(); }
  std::optional<NlohmannNode> find(const char* key) const {
    auto it = j_->find(key);
    if (it == j_->end()) return std::nullopt;
    return NlohmannNode(*it);
  }
  template <class F>
  void each(F&& f) const {
    for (const auto& x : *j_) f(NlohmannNode(x));
  }

 private:
  const json* j_;
};

class RapidNode {
 public:
  explicit RapidNode(const rapidjson::Value& v) : v_(&v) {}
  bool is_object() const { return v_->IsObject(); }
  bool is_array() const { return v_->IsArray(); }
  bool is_string() const { return v_->IsString(); }
  bool is_number() const { return v_->IsNumber(); }
  bool is_int() const { return v_->IsInt64() || v_->IsUint64(); }
  bool is_bool() const { return v_->IsBool(); }
  bool is_null() const { return v_->IsNull(); }
  std::string str() const { return {v_->GetString(), v_->GetStringLength()}; }
  double dbl() const { return v_->GetDouble(); }
  std::int64_t i64() const { return v_->IsInt64() ? v_->GetInt64() : static_cast<std::int64_t>(v_->GetUint64()); }
  bool boolean() const { return v_->GetBool(); }
  std::size_t size() const { return v_->Size(); }
  std::optional<RapidNode> find(const char* key) const {
    auto it = v_->FindMember(key);
    if (it == v_->MemberEnd()) return std::nullopt;
    return RapidNode(it->value);
  }
  template <class F>
  void each(F&& f) const {
    for (const auto& x : v_->GetArray()) f(RapidNode(x));
  }

 private:
  const rapidjson::Value* v_;
};

template <class Node>
Node require(const Node& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (!it) malformed(line, std::string("missing key '") + key + "'");
  return *it;
}

template <class Node>
Vec read_vector(const Node& arr, const char* key, std::size_t line) {
  if (!arr.is_array()) malformed(line, std::string("'") + key + "' must be an array");
  Vec v;
  v.reserve(arr.size());
  arr.each([&](const Node& x) {
    if (!x.is_number()) malformed(line, std::string("'") + key + "' must contain only numbers");
    const double d = x.dbl();
    if (!std::isfinite(d)) malformed(line, std::string("'") + key + "' has a non-finite value");
    v.push_back(d);
  });
  return v;
}

template <class Node>
std::optional<Node> optional_field(const Node& rec, const char* key) {
  auto it = rec.find(key);
  if (it && it->is_null()) return std::nullopt;
  return it;
}

template <class Node>
Sample decode(const Node& rec, std::size_t expected_dim, std::size_t line) {
  if (!rec.is_object()) malformed(line, "record is not a JSON object");
  Sample s;
  const Node id = require(rec, "id", line);
  const Node did = require(rec, "dialogue_id", line);
  const Node turn = require(rec, "turn_index", line);
  const Node ts = require(rec, "timestamp_s", line);
  const Node text = require(rec, "text", line);
  const Node emb = require(rec, "embedding", line);
  if (!id.is_string() || !did.is_string() || !text.is_string()) malformed(line, "id, dialogue_id and text must be strings");
  if (!turn.is_int() || turn.i64() < 0) malformed(line, "turn_index must be a non-negative integer");
  if (!ts.is_number()) malformed(line, "timestamp_s must be a number");
  s.id = id.str();
  s.dialogue_id = did.str();
  s.turn_index = static_cast<std::uint32_t>(turn.i64());
  s.timestamp_s = ts.dbl();
  if (!std::isfinite(s.timestamp_s) || s.timestamp_s < 0.0) malformed(line, "timestamp_s must be finite and non-negative");
  s.text = text.str();
  s.embedding = read_vector(emb, "embedding", line);
  if (expected_dim != 0 && s.embedding.size() != expected_dim) {
    throw ParseError("ingest.dimension_mismatch", line,
                     "embedding has " + std::to_string(s.embedding.size()) + " values, expected " +
                         std::to_string(expected_dim));
  }
  if (auto it = optional_field(rec, "domain")) {
    if (!it->is_string()) malformed(line, "domain must be a string");
    s.domain = it->str();
  }
  if (auto it = optional_field(rec, "is_reformulation")) {
    if (!it->is_bool()) malformed(line, "is_reformulation must be a boolean");
    s.is_reformulation = it->boolean();
  }
  if (auto it = optional_field(rec, "assistant_text")) {
    if (!it->is_string()) malformed(line, "assistant_text must be a string");
    s.assistant_text = it->str();
  }
  if (auto it = optional_field(rec, "context_embedding")) {
    s.context_embedding = read_vector(*it, "context_embedding", line);
    if (s.context_embedding->size() != s.embedding.size()) {
      throw ParseError("ingest.dimension_mismatch", line, "context_embedding width differs from embedding");
    }
  }
  return s;
}

}  // namespace

Sample sample_from_json(const json& rec, std::size_t expected_dim, std::size_t line) {
  return decode(NlohmannNode(rec), expected_dim, line);
}

Sample sample_from_line(std::string_view text, std::size_t expected_dim, std::size_t line) {
  rapidjson::Document doc;
  doc.Parse<rapidjson::kParseFullPrecisionFlag>(text.data(), text.size());
  if (doc.HasParseError()) {
    malformed(line, std::string("invalid JSON at offset ") + std::to_string(doc.GetErrorOffset()) + ": " +
                        rapidjson::GetParseError_En(doc.GetParseError()));
  }
  return decode(RapidNode(doc), expected_dim, line);
}

json sample_to_json(const Sample& s) {
  json j{{"id", s.id},
         {"dialogue_id", s.dialogue_id},
         {"turn_index", s.turn_index},
         {"timestamp_s", s.timestamp_s},
         {"text", s.text},
         {"embedding", s.embedding}};
  if (s.domain) j["domain"] = *s.domain;
  if (s.is_reformulation) j["is_reformulation"] = *s.is_reformulation;
  if (s.assistant_text) j["assistant_text"] = *s.assistant_text;
  if (s.context_embedding) j["context_embedding"] = *s.context_embedding;
  return j;
}

std::string sample_to_record(const Sample& s) { return sample_to_json(s).dump(); }

SampleReader::SampleReader(std::istream& in, std::size_t expected_dim, ParseMode mode)
    : in_(&in), dim_(expected_dim), mode_(mode) {}

std::optional<Sample> SampleReader::next() {
  while (std::getline(*in_, buf_)) {
    ++line_;
    if (std::all_of(buf_.begin(), buf_.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      Sample s = sample_from_line(buf_, dim_, line_);
      if (dim_ == 0) dim_ = s.embedding.size();
      ++records_;
      return s;
    } catch (const ParseError& e) {
      if (mode_ == ParseMode::strict) throw;
      ++skipped_;
      if (messages_.size() < kMaxSkipMessages) messages_.push_back(e.what());
    }
  }
  return std::nullopt;
}

std::vector<Sample> read_samples(const std::string& path, std::size_t expected_dim, ParseMode mode) {
  std::ifstream in(path);
  if (!in) throw Error("io.open_failed", "cannot open '" + path + "'");
  SampleReader reader(in, expected_dim, mode);
  std::vector<Sample> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

Normalized l2_normalize(std::span<const double> v) {
  Normalized out{Vec(v.begin(), v.end()), false};
  out.zero = !l2_normalize_inplace(out.v);
  return out;
}

bool l2_normalize_inplace(std::span<double> v) {
  double n2 = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error("ingest.non_finite", "cannot normalize a non-finite vector");
    n2 += x * x;
  }
  if (n2 == 0.0) return false;
  const double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return true;
}

void validate(const SyntheticSpec& spec) {
  if (spec.n_clusters == 0 || spec.dim == 0 || spec.samples_per_cluster == 0) {
    throw Error("ingest.invalid_spec", "n_clusters, dim and samples_per_cluster must be positive");
  }
  if (!std::isfinite(spec.cluster_spread) || spec.cluster_spread < 0.0) {
    throw Error("ingest.invalid_spec", "cluster_spread must be finite and >= 0");
  }
  if (!std::isfinite(spec.centroid_scale) || spec.centroid_scale <= 0.0) {
    throw Error("ingest.invalid_spec", "centroid_scale must be finite and > 0");
  }
  if (spec.n_clusters * spec.samples_per_cluster > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("ingest.invalid_spec", "too many samples");
  }
}

SyntheticGenerator::SyntheticGenerator(const SyntheticSpec& spec) : spec_(spec) {
  validate(spec);
  centroids_ = Matrix(spec.n_clusters, spec.dim);
  Rng rng = make_rng(spec.rng_seed, "synth/centroids");
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    for (double& x : centroids_.row(c)) x = spec.centroid_scale * gauss(rng);
  }
  order_.resize(spec.n_clusters * spec.samples_per_cluster);
  std::iota(order_.begin(), order_.end(), 0u);
  if (spec.shuffle) {
    Rng order_rng = make_rng(spec.rng_seed, "synth/order");
    std::shuffle(order_.begin(), order_.end(), order_rng);
  }
}

std::optional<Sample> SyntheticGenerator::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  const std::size_t position = pos_++;
  const std::uint32_t idx = order_[position];
  const std::size_t c = idx / spec_.samples_per_cluster;
  const std::size_t i = idx % spec_.samples_per_cluster;

  // Each sample draws from its own stream so output does not depend on order.
  Rng rng(spec_.rng_seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(idx) + 1)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw = [&] {
    Vec v(centroids_.row(c).begin(), centroids_.row(c).end());
    if (spec_.cluster_spread > 0.0) {
      for (double& x : v) x += spec_.cluster_spread * gauss(rng);
    }
    return v;
  };

  Sample s;
  s.id = "syn-" + std::to_string(c) + "-" + std::to_string(i);
  s.dialogue_id = "dlg-" + std::to_string(c) + "-" + std::to_string(i);
  s.turn_index = 0;
  s.timestamp_s = static_cast<double>(position);
  s.text = "cluster " + std::to_string(c) + " utterance " + std::to_string(i);
  s.embedding = draw();
  s.domain = "cluster-" + std::to_string(c);
  if (spec_.with_context) s.context_embedding = draw();
  return s;
}

std::size_t SyntheticGenerator::cluster_of(const Sample& s) {
  if (!s.domain || s.domain->rfind("cluster-", 0) != 0) {
    throw Error("ingest.invalid_spec", "sample '" + s.id + "' carries no synthetic cluster tag");
  }
  return static_cast<std::size_t>(std::stoul(s.domain->substr(8)));
}

std::vector<Sample> generate_synthetic(const SyntheticSpec& spec) {
  SyntheticGenerator gen(spec);
  std::vector<Sample> out;
  out.reserve(gen.size());
  while (auto s = gen.next()) out.push_back(std::move(*s));
  return out;
}

}  // namespace ohmpipe
