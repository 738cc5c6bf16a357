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

// Incremental BIRCH-style clustering with a flat, bounded leaf list.
//
// Vectors are absorbed into cluster-feature (CF) leaves under a radius
// threshold. When the leaf count exceeds max_leaves the threshold grows and
// the leaves are re-inserted into a fresh list. A weighted k-means over the
// leaf centroids then produces the K global centroids used for labeling.
//
// ClusterModel is an immutable snapshot: partial_fit returns a new model and
// leaves the receiver untouched, so readers can keep predicting on an older
// snapshot while a refit is in flight.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ohmpipe/error.hpp"
#include "ohmpipe/kernels.hpp"

namespace ohmpipe {

struct ClusterFeature {
  std::size_t n = 0;
  Vec ls;           // linear sum
  double ss = 0.0;  // sum of squared norms

  explicit ClusterFeature(std::size_t dim = 0) : ls(dim, 0.0) {}

  void absorb(std::span<const double> x);
  void merge(const ClusterFeature& other);

  Vec centroid() const;
  // Mean squared distance to the centroid, clamped at 0.
  double radius_sq() const;
  // radius_sq() of this CF after absorbing `other`, without mutating.
  double merged_radius_sq(const ClusterFeature& other) const;
  double merged_radius_sq(std::span<const double> x) const;

  friend bool operator==(const ClusterFeature&, const ClusterFeature&) = default;
};

struct ClusterConfig {
  std::size_t n_clusters = 32;
  std::size_t max_leaves = 256;
  double threshold = 0.25;
  double growth_factor = 1.5;
  std::size_t kmeans_iterations = 10;
  std::uint64_t rng_seed = 0;
  kernels::Exec exec = kernels::Exec::serial;
};

void validate(const ClusterConfig& cfg);

class ClusterModel {
 public:
  ClusterModel(std::size_t dim, ClusterConfig cfg);

  // New snapshot with `buffer` absorbed and the global centroids recomputed.
  ClusterModel partial_fit(std::span<const Vec> buffer) const;
  ClusterModel partial_fit(const Matrix& buffer) const;

  // Nearest centroid to l2_normalize(v); lowest label wins ties. An unfitted
  // model labels everything 0.
  std::size_t predict(std::span<const double> v) const;
  // Bulk predict over already-normalized rows.
  std::vector<std::size_t> predict_normalized(const Matrix& unit_rows) const;

  std::size_t dim() const noexcept { return dim_; }
  const ClusterConfig& config() const noexcept { return cfg_; }
  const std::vector<ClusterFeature>& leaves() const noexcept { return leaves_; }
  const Matrix& centroids() const noexcept { return centroids_; }
  double threshold() const noexcept { return threshold_; }
  bool fitted() const noexcept { return fitted_; }
  std::uint64_t version() const noexcept { return version_; }
  // Number of distinct global centroids; below K when the leaves could not
  // support K clusters (the remaining rows are duplicates).
  std::size_t effective_clusters() const noexcept { return effective_; }
  bool has_duplicate_centroids() const noexcept { return effective_ < cfg_.n_clusters && fitted_; }
  std::size_t total_absorbed() const noexcept;

  nlohmann::json to_json() const;
  static ClusterModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static ClusterModel load(const std::string& path);

 private:
  void check_dim(std::size_t n) const;
  void insert(std::span<const double> x);
  void insert_cf(const ClusterFeature& cf);
  void rebuild();
  void global_step();

  std::size_t dim_;
  ClusterConfig cfg_;
  std::vector<ClusterFeature> leaves_;
  Matrix leaf_centroids_;  // cached centroids of leaves_, same order
  Matrix centroids_;
  double threshold_;
  bool fitted_ = false;
  std::uint64_t version_ = 0;
  std::size_t effective_ = 0;
};

using ClusterSnapshot = std::shared_ptr<const ClusterModel>;

// Weighted k-means over `points` (k-means++ seeding, fixed iteration count,
// empty clusters reseeded to the point farthest from its nearest surviving
// centroid). Returns k centroid rows; when there are fewer than k distinct
// points the surplus rows repeat existing ones. `distinct` receives the
// number of distinct rows.
Matrix weighted_kmeans(const Matrix& points, std::span<const double> weights, std::size_t k,
                       std::size_t iterations, Rng& rng, std::size_t* distinct = nullptr,
                       kernels::Exec exec = kernels::Exec::serial);

struct AriResult {
  double value = 0.0;
  bool degenerate = false;  // truth had a single class
};

// Adjusted Rand index by pair counting.
AriResult adjusted_rand_index(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

struct LabeledVector {
  Vec embedding;
  std::size_t label = 0;
};

AriResult model_quality(const ClusterModel& model, std::span<const LabeledVector> labeled);

}  // namespace ohmpipe
