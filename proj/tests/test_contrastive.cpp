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


#include <cmath>
#include <random>

#include "doctest.h"
#include "ohmpipe/contrastive.hpp"
#include "oracles.hpp"

using namespace ohmpipe;

namespace {

Sample member(const std::string& id, Vec emb, std::optional<Vec> ctx = std::nullopt) {
  Sample s;
  s.id = id;
  s.dialogue_id = "d-" + id;
  s.embedding = std::move(emb);
  s.context_embedding = std::move(ctx);
  return s;
}

std::vector<ContrastiveItem> random_items(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<ContrastiveItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    ContrastiveItem it;
    it.anchor.resize(dim);
    it.positive.resize(dim);
    for (auto& x : it.anchor) x = g(rng);
    for (std::size_t k = 0; k < dim; ++k) it.positive[k] = it.anchor[k] + 0.5 * g(rng);
    it.dialogue_id = "d" + std::to_string(i % (n / 2 + 1));
    out.push_back(std::move(it));
  }
  return out;
}

}  // namespace

TEST_SUITE("contrastive") {
  TEST_CASE("all-equal batch gives ln N") {
    for (std::size_t n : {2u, 4u, 16u}) {
      std::vector<ContrastiveItem> items;
      for (std::size_t i = 0; i < n; ++i) items.push_back({{0.3, -1.2, 2.0}, {0.3, -1.2, 2.0}, std::to_string(i)});
      CHECK(pfclc_loss(items, ContrastiveConfig{}) == doctest::Approx(std::log(double(n))).epsilon(1e-12));
    }
  }

  TEST_CASE("two orthogonal pairs at unit temperature") {
    const std::vector<ContrastiveItem> items{{{1, 0}, {1, 0}, "a"}, {{0, 1}, {0, 1}, "b"}};
    ContrastiveConfig cfg;
    cfg.temperature = 1.0;
    const double want = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
    CHECK(pfclc_loss(items, cfg) == doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(0.3133).epsilon(1e-4));
  }

  TEST_CASE("matches the naive formula in both directions") {
    const auto items = random_items(9, 5, 3);
    std::vector<std::vector<double>> a, p;
    std::vector<std::string> g;
    for (const auto& it : items) {
      a.push_back(it.anchor);
      p.push_back(it.positive);
      g.push_back(it.dialogue_id);
    }
    ContrastiveConfig cfg;
    cfg.temperature = 0.5;
    cfg.direction = Direction::anchor_to_positive;
    const double fwd = oracle::info_nce_naive(a, p, g, 0.5);
    CHECK(pfclc_loss(items, cfg) == doctest::Approx(fwd).epsilon(1e-10));
    cfg.direction = Direction::symmetric;
    const double bwd = oracle::info_nce_naive(p, a, g, 0.5);
    CHECK(pfclc_loss(items, cfg) == doctest::Approx(0.5 * (fwd + bwd)).epsilon(1e-10));
  }

  TEST_CASE("mismatched positives raise the loss") {
    // Eight dialogues at well-separated directions.
    std::vector<ContrastiveItem> good;
    for (int i = 0; i < 8; ++i) {
      Vec v(8, 0.0);
      v[i] = 1.0;
      Vec w = v;
      w[(i + 1) % 8] = 0.1;
      good.push_back({v, w, std::to_string(i)});
    }
    auto bad = good;
    for (int i = 0; i < 8; ++i) bad[i].positive = good[(i + 3) % 8].positive;
    CHECK(pfclc_loss(bad, ContrastiveConfig{}) > pfclc_loss(good, ContrastiveConfig{}));
  }

  TEST_CASE("loss is invariant to common rescaling") {
    const auto items = random_items(12, 6, 8);
    const double base = pfclc_loss(items, ContrastiveConfig{});
    for (double k : {0.1, 10.0}) {
      auto scaled = items;
      for (auto& it : scaled) {
        for (auto& x : it.anchor) x *= k;
        for (auto& x : it.positive) x *= k;
      }
      CHECK(std::abs(pfclc_loss(scaled, ContrastiveConfig{}) - base) < 1e-7);
    }
  }

  TEST_CASE("errors") {
    const std::vector<ContrastiveItem> one{{{1, 0}, {1, 0}, "a"}};
    CHECK_THROWS_AS(pfclc_loss(one, ContrastiveConfig{}), Error);
    const std::vector<ContrastiveItem> ragged{{{1, 0}, {1, 0}, "a"}, {{1, 0, 0}, {1, 0, 0}, "b"}};
    CHECK_THROWS_AS(pfclc_loss(ragged, ContrastiveConfig{}), Error);
    ContrastiveConfig bad;
    bad.temperature = 0.0;
    CHECK_THROWS_AS(validate(bad), Error);
  }

  TEST_CASE("hardness bounds") {
    Batch ortho;
    for (int i = 0; i < 4; ++i) {
      Vec v(4, 0.0);
      v[i] = 2.0;
      ortho.samples.push_back(member(std::to_string(i), v));
    }
    auto h = batch_hardness(ortho, ContrastiveConfig{});
    CHECK(h.mean_negative_sim == doctest::Approx(0.0));
    CHECK(h.negative_pairs == 6);
    CHECK_FALSE(h.loss);

    Batch same;
    for (int i = 0; i < 4; ++i) same.samples.push_back(member(std::to_string(i), {1, 1}, Vec{1, 1}));
    h = batch_hardness(same, ContrastiveConfig{});
    CHECK(h.mean_negative_sim == doctest::Approx(1.0));
    REQUIRE(h.loss);
    CHECK(*h.loss == doctest::Approx(std::log(4.0)));
  }

  TEST_CASE("single-dialogue batch has undefined hardness") {
    Batch b;
    for (int i = 0; i < 3; ++i) {
      auto s = member(std::to_string(i), {1, double(i)});
      s.dialogue_id = "same";
      b.samples.push_back(s);
    }
    const auto h = batch_hardness(b, ContrastiveConfig{});
    CHECK_FALSE(h.defined());
    CHECK_FALSE(h.loss);
  }

  TEST_CASE("single-cluster batch is harder than a mixed one") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.1);
    Batch pure, mixed;
    std::vector<std::vector<double>> pr, mr;
    std::vector<std::string> pg, mg;
    for (int i = 0; i < 8; ++i) {
      Vec a{1.0 + g(rng), g(rng)};
      Vec b{g(rng), 1.0 + g(rng)};
      pure.samples.push_back(member("p" + std::to_string(i), a));
      pr.push_back(a);
      pg.push_back("d-p" + std::to_string(i));
      const Vec& m = (i % 2 == 0) ? a : b;
      mixed.samples.push_back(member("m" + std::to_string(i), m));
      mr.push_back(m);
      mg.push_back("d-m" + std::to_string(i));
    }
    const double hp = batch_hardness(pure, ContrastiveConfig{}).mean_negative_sim;
    const double hm = batch_hardness(mixed, ContrastiveConfig{}).mean_negative_sim;
    CHECK(hp == doctest::Approx(oracle::mean_cross_cosine(pr, pg)).epsilon(1e-12));
    CHECK(hm == doctest::Approx(oracle::mean_cross_cosine(mr, mg)).epsilon(1e-12));
    CHECK(hp > hm);
  }

  TEST_CASE("serial and parallel hardness agree") {
    SyntheticSpec spec;
    spec.n_clusters = 4;
    spec.dim = 8;
    spec.samples_per_cluster = 64;
    const auto batches = uniform_batches(generate_synthetic(spec), 16, 0);
    const auto a = batch_hardness(batches, ContrastiveConfig{}, kernels::Exec::serial);
    const auto b = batch_hardness(batches, ContrastiveConfig{}, kernels::Exec::parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].mean_negative_sim == b[i].mean_negative_sim);
      CHECK(a[i].loss == b[i].loss);
    }
  }

  TEST_CASE("comparison on clustered data favors Ohm") {
    SyntheticSpec spec;
    spec.n_clusters = 8;
    spec.dim = 16;
    spec.samples_per_cluster = 300;
    spec.centroid_scale = 20.0;
    OhmConfig cfg;
    cfg.dim = 16;
    cfg.n_clusters = 8;
    cfg.update_window_size = 256;
    cfg.refit_interval = 1000;
    const auto rep = compare_batching(generate_synthetic(spec), cfg, ContrastiveConfig{}, 50);
    CHECK(rep.ohm.mean_sim > rep.uniform.mean_sim);
    CHECK(rep.ohm.mean_loss > rep.uniform.mean_loss);
    CHECK(rep.p_sim < 0.01);
    CHECK(rep.p_loss < 0.01);
    CHECK(rep.to_json(false).contains("p_value_loss"));
  }

  TEST_CASE("single-cluster data shows no difference") {
    SyntheticSpec spec;
    spec.n_clusters = 1;
    spec.dim = 16;
    spec.samples_per_cluster = 3200;
    OhmConfig cfg;
    cfg.dim = 16;
    cfg.n_clusters = 8;
    cfg.update_window_size = 256;
    cfg.refit_interval = 1000;
    const auto rep = compare_batching(generate_synthetic(spec), cfg, ContrastiveConfig{}, 100);
    CHECK(rep.p_sim > 0.05);
    CHECK(rep.p_loss > 0.05);
  }

  TEST_CASE("insufficient input names the count") {
    SyntheticSpec spec;
    spec.n_clusters = 2;
    spec.dim = 4;
    spec.samples_per_cluster = 10;
    OhmConfig cfg;
    cfg.dim = 4;
    try {
      compare_batching(generate_synthetic(spec), cfg, ContrastiveConfig{}, 100);
      FAIL("expected insufficient input");
    } catch (const Error& e) {
      CHECK(e.code() == "contrastive.insufficient_input");
      CHECK(std::string(e.what()).find("1600") != std::string::npos);
    }
  }
}
