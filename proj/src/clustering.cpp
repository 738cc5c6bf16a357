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

#include "ohmpipe/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "ohmpipe/error.hpp"
#include "ohmpipe/ingest.hpp"

namespace ohmpipe {

using nlohmann::json;

void ClusterFeature::absorb(std::span<const double> x) {
  ++n;
  for (std::size_t i = 0; i < ls.size(); ++i) ls[i] += x[i];
  ss += kernels::squared_norm(x);
}

void ClusterFeature::merge(const ClusterFeature& other) {
  n += other.n;
  for (std::size_t i = 0; i < ls.size(); ++i) ls[i] += other.ls[i];
  ss += other.ss;
}

Vec ClusterFeature::centroid() const {
  Vec c(ls.size(), 0.0);
  if (n == 0) return c;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < ls.size(); ++i) c[i] = ls[i] * inv;
  return c;
}

double ClusterFeature::radius_sq() const {
  if (n == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  return std::max(0.0, ss * inv - kernels::squared_norm(ls) * inv * inv);
}

double ClusterFeature::merged_radius_sq(const ClusterFeature& other) const {
  const double total = static_cast<double>(n + other.n);
  if (total == 0.0) return 0.0;
  double ls2 = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const double s = ls[i] + other.ls[i];
    ls2 += s * s;
  }
  return std::max(0.0, (ss + other.ss) / total - ls2 / (total * total));
}

double ClusterFeature::merged_radius_sq(std::span<const double> x) const {
  const double total = static_cast<double>(n + 1);
  double ls2 = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const double s = ls[i] + x[i];
    ls2 += s * s;
  }
  return std::max(0.0, (ss + kernels::squared_norm(x)) / total - ls2 / (total * total));
}

void validate(const ClusterConfig& cfg) {
  if (cfg.n_clusters == 0) throw Error("clustering.invalid_config", "n_clusters must be positive");
  if (cfg.max_leaves == 0) throw Error("clustering.invalid_config", "max_leaves must be positive");
  if (!(cfg.threshold > 0.0) || !std::isfinite(cfg.threshold)) {
    throw Error("clustering.invalid_config", "threshold must be a positive finite number");
  }
  if (!(cfg.growth_factor > 1.0) || !std::isfinite(cfg.growth_factor)) {
    throw Error("clustering.invalid_config", "growth_factor must be > 1");
  }
}

ClusterModel::ClusterModel(std::size_t dim, ClusterConfig cfg)
    : dim_(dim), cfg_(cfg), leaf_centroids_(0, dim), threshold_(cfg.threshold) {
  if (dim == 0) throw Error("clustering.invalid_config", "dimension must be positive");
  validate(cfg_);
}

void ClusterModel::check_dim(std::size_t n) const {
  if (n != dim_) {
    throw Error("clustering.dimension_mismatch",
                "vector has " + std::to_string(n) + " values, model expects " + std::to_string(dim_));
  }
}

std::size_t ClusterModel::total_absorbed() const noexcept {
  std::size_t total = 0;
  for (const auto& cf : leaves_) total += cf.n;
  return total;
}

void ClusterModel::insert(std::span<const double> x) {
  const double limit = threshold_ * threshold_;
  if (!leaves_.empty()) {
    const std::size_t best = kernels::nearest_row(leaf_centroids_, x);
    if (leaves_[best].merged_radius_sq(x) <= limit) {
      leaves_[best].absorb(x);
      const Vec c = leaves_[best].centroid();
      std::copy(c.begin(), c.end(), leaf_centroids_.row(best).begin());
      return;
    }
  }
  ClusterFeature cf(dim_);
  cf.absorb(x);
  leaves_.push_back(std::move(cf));
  leaf_centroids_.append_row(x);
  if (leaves_.size() > cfg_.max_leaves) rebuild();
}

void ClusterModel::insert_cf(const ClusterFeature& cf) {
  const double limit = threshold_ * threshold_;
  const Vec c = cf.centroid();
  if (!leaves_.empty()) {
    const std::size_t best = kernels::nearest_row(leaf_centroids_, c);
    if (leaves_[best].merged_radius_sq(cf) <= limit) {
      leaves_[best].merge(cf);
      const Vec merged = leaves_[best].centroid();
      std::copy(merged.begin(), merged.end(), leaf_centroids_.row(best).begin());
      return;
    }
  }
  leaves_.push_back(cf);
  leaf_centroids_.append_row(c);
}

void ClusterModel::rebuild() {
  while (leaves_.size() > cfg_.max_leaves) {
    threshold_ *= cfg_.growth_factor;
    std::vector<ClusterFeature> old = std::move(leaves_);
    leaves_.clear();
    leaf_centroids_ = Matrix(0, dim_);
    for (const auto& cf : old) insert_cf(cf);
  }
}

void ClusterModel::global_step() {
  std::vector<double> weights(leaves_.size());
  for (std::size_t i = 0; i < leaves_.size(); ++i) weights[i] = static_cast<double>(leaves_[i].n);
  Rng rng = make_rng(cfg_.rng_seed, "clustering/kmeans/" + std::to_string(version_));
  centroids_ = weighted_kmeans(leaf_centroids_, weights, cfg_.n_clusters, cfg_.kmeans_iterations, rng, &effective_,
                               cfg_.exec);
}

ClusterModel ClusterModel::partial_fit(std::span<const Vec> buffer) const {
  if (buffer.empty()) throw Error("clustering.empty_buffer", "partial_fit needs at least one vector");
  for (const auto& v : buffer) check_dim(v.size());
  ClusterModel next = *this;
  for (const auto& v : buffer) next.insert(v);
  ++next.version_;
  next.global_step();
  next.fitted_ = true;
  return next;
}

ClusterModel ClusterModel::partial_fit(const Matrix& buffer) const {
  if (buffer.rows() == 0) throw Error("clustering.empty_buffer", "partial_fit needs at least one vector");
  check_dim(buffer.cols());
  ClusterModel next = *this;
  for (std::size_t i = 0; i < buffer.rows(); ++i) next.insert(buffer.row(i));
  ++next.version_;
  next.global_step();
  next.fitted_ = true;
  return next;
}

std::size_t ClusterModel::predict(std::span<const double> v) const {
  check_dim(v.size());
  Normalized unit = l2_normalize(v);
  if (!fitted_) return 0;
  return kernels::nearest_row(centroids_, unit.v);
}

std::vector<std::size_t> ClusterModel::predict_normalized(const Matrix& unit_rows) const {
  std::vector<std::size_t> labels(unit_rows.rows(), 0);
  if (unit_rows.rows() == 0) return labels;
  check_dim(unit_rows.cols());
  if (!fitted_) return labels;
  kernels::nearest_center(unit_rows, centroids_, labels, {}, cfg_.exec);
  return labels;
}

json ClusterModel::to_json() const {
  json leaves = json::array();
  for (const auto& cf : leaves_) leaves.push_back({{"n", cf.n}, {"ls", cf.ls}, {"ss", cf.ss}});
  json cents = json::array();
  for (std::size_t r = 0; r < centroids_.rows(); ++r) {
    cents.push_back(Vec(centroids_.row(r).begin(), centroids_.row(r).end()));
  }
  return {{"format", "ohmpipe.cluster_model"},
          {"format_version", 1},
          {"dim", dim_},
          {"config",
           {{"n_clusters", cfg_.n_clusters},
            {"max_leaves", cfg_.max_leaves},
            {"threshold", cfg_.threshold},
            {"growth_factor", cfg_.growth_factor},
            {"kmeans_iterations", cfg_.kmeans_iterations},
            {"rng_seed", cfg_.rng_seed}}},
          {"threshold", threshold_},
          {"fitted", fitted_},
          {"version", version_},
          {"effective_clusters", effective_},
          {"centroids", std::move(cents)},
          {"leaves", std::move(leaves)}};
}

ClusterModel ClusterModel::from_json(const json& j) {
  try {
    if (j.at("format") != "ohmpipe.cluster_model" || j.at("format_version") != 1) {
      throw Error("clustering.bad_snapshot", "unsupported snapshot format");
    }
    const json& c = j.at("config");
    ClusterConfig cfg;
    cfg.n_clusters = c.at("n_clusters").get<std::size_t>();
    cfg.max_leaves = c.at("max_leaves").get<std::size_t>();
    cfg.threshold = c.at("threshold").get<double>();
    cfg.growth_factor = c.at("growth_factor").get<double>();
    cfg.kmeans_iterations = c.at("kmeans_iterations").get<std::size_t>();
    cfg.rng_seed = c.at("rng_seed").get<std::uint64_t>();
    ClusterModel m(j.at("dim").get<std::size_t>(), cfg);
    m.threshold_ = j.at("threshold").get<double>();
    m.fitted_ = j.at("fitted").get<bool>();
    m.version_ = j.at("version").get<std::uint64_t>();
    m.effective_ = j.at("effective_clusters").get<std::size_t>();
    m.centroids_ = Matrix(0, m.dim_);
    for (const auto& row : j.at("centroids")) {
      const Vec v = row.get<Vec>();
      m.check_dim(v.size());
      m.centroids_.append_row(v);
    }
    if (m.fitted_ && m.centroids_.rows() != cfg.n_clusters) {
      throw Error("clustering.bad_snapshot", "fitted snapshot must carry exactly n_clusters centroids");
    }
    for (const auto& leaf : j.at("leaves")) {
      ClusterFeature cf(m.dim_);
      cf.n = leaf.at("n").get<std::size_t>();
      cf.ls = leaf.at("ls").get<Vec>();
      cf.ss = leaf.at("ss").get<double>();
      m.check_dim(cf.ls.size());
      m.leaf_centroids_.append_row(cf.centroid());
      m.leaves_.push_back(std::move(cf));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error("clustering.bad_snapshot", e.what());
  }
}

void ClusterModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("io.open_failed", "cannot write '" + path + "'");
  out << to_json().dump() << '\n';
}

ClusterModel ClusterModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io.open_failed", "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("clustering.bad_snapshot", e.what());
  }
  return from_json(j);
}

namespace {

std::size_t sample_weighted(std::span<const double> w, double total, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, total);
  double r = u(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    if (r < w[i]) return i;
    r -= w[i];
  }
  // Rounding fell off the end; take the last positive entry.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace

Matrix weighted_kmeans(const Matrix& points, std::span<const double> weights, std::size_t k, std::size_t iterations,
                       Rng& rng, std::size_t* distinct, kernels::Exec exec) {
  const std::size_t m = points.rows();
  const std::size_t dim = points.cols();
  if (m == 0 || k == 0) throw Error("clustering.empty_buffer", "k-means needs points and k > 0");

  double total_w = 0.0;
  for (double w : weights) total_w += w;
  std::vector<double> w(weights.begin(), weights.end());
  if (total_w <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0);
    total_w = static_cast<double>(m);
  }

  // k-means++ seeding on weight * D^2.
  Matrix centers(0, dim);
  centers.append_row(points.row(sample_weighted(w, total_w, rng)));
  std::vector<double> d2(m);
  for (std::size_t i = 0; i < m; ++i) d2[i] = kernels::squared_distance(points.row(i), centers.row(0));
  std::size_t seeded = 1;
  std::vector<double> score(m);
  while (centers.rows() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      score[i] = w[i] * d2[i];
      total += score[i];
    }
    if (!(total > 0.0)) break;
    const std::size_t pick = sample_weighted(score, total, rng);
    centers.append_row(points.row(pick));
    ++seeded;
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], kernels::squared_distance(points.row(i), centers.row(centers.rows() - 1)));
    }
  }
  // Fewer distinct points than k: pad with repeats of the seeded rows.
  for (std::size_t r = 0; centers.rows() < k; ++r) {
    const Vec copy(centers.row(r % seeded).begin(), centers.row(r % seeded).end());
    centers.append_row(copy);
  }

  std::vector<std::size_t> labels(m);
  std::vector<double> mass(k);
  Matrix sums(k, dim);
  for (std::size_t it = 0; it < iterations; ++it) {
    kernels::nearest_center(points, centers, labels, {}, exec);
    sums = Matrix(k, dim);
    std::fill(mass.begin(), mass.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      auto acc = sums.row(labels[i]);
      const auto p = points.row(i);
      for (std::size_t d = 0; d < dim; ++d) acc[d] += w[i] * p[d];
      mass[labels[i]] += w[i];
    }
    std::vector<bool> alive(k);
    for (std::size_t c = 0; c < k; ++c) {
      alive[c] = mass[c] > 0.0;
      if (!alive[c]) continue;
      auto dst = centers.row(c);
      const auto src = sums.row(c);
      for (std::size_t d = 0; d < dim; ++d) dst[d] = src[d] / mass[c];
    }
    // Empty-cluster repair: move each empty centroid onto the point farthest
    // from its nearest surviving centroid.
    for (std::size_t c = 0; c < k; ++c) {
      if (alive[c]) continue;
      double best = 0.0;
      std::size_t far = m;
      for (std::size_t i = 0; i < m; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < k; ++o) {
          if (!alive[o]) continue;
          nearest = std::min(nearest, kernels::squared_distance(points.row(i), centers.row(o)));
        }
        if (nearest > best) {
          best = nearest;
          far = i;
        }
      }
      if (far < m) {
        std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
        alive[c] = true;
      }
    }
  }

  if (distinct != nullptr) {
    std::size_t count = 0;
    for (std::size_t c = 0; c < k; ++c) {
      bool dup = false;
      for (std::size_t o = 0; o < c && !dup; ++o) dup = kernels::squared_distance(centers.row(c), centers.row(o)) == 0.0;
      if (!dup) ++count;
    }
    *distinct = count;
  }
  return centers;
}

AriResult adjusted_rand_index(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size() || truth.empty()) {
    throw Error("clustering.invalid_input", "ARI needs two non-empty label lists of equal length");
  }
  std::map<std::pair<std::size_t, std::size_t>, double> table;
  std::map<std::size_t, double> rows;
  std::map<std::size_t, double> cols;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    table[{truth[i], predicted[i]}] += 1.0;
    rows[truth[i]] += 1.0;
    cols[predicted[i]] += 1.0;
  }
  if (rows.size() == 1) return {cols.size() == 1 ? 1.0 : 0.0, true};

  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [_, n] : table) index += pairs(n);
  double sum_rows = 0.0;
  for (const auto& [_, n] : rows) sum_rows += pairs(n);
  double sum_cols = 0.0;
  for (const auto& [_, n] : cols) sum_cols += pairs(n);
  const double expected = sum_rows * sum_cols / pairs(static_cast<double>(truth.size()));
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return {1.0, false};
  return {(index - expected) / (max_index - expected), false};
}

AriResult model_quality(const ClusterModel& model, std::span<const LabeledVector> labeled) {
  if (labeled.empty()) throw Error("clustering.invalid_input", "model_quality needs labeled vectors");
  std::vector<std::size_t> truth;
  std::vector<std::size_t> predicted;
  truth.reserve(labeled.size());
  predicted.reserve(labeled.size());
  for (const auto& lv : labeled) {
    truth.push_back(lv.label);
    predicted.push_back(model.predict(lv.embedding));
  }
  return adjusted_rand_index(truth, predicted);
}

}  // namespace ohmpipe
