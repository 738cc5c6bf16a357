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


#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "ohmpipe/pipeline.hpp"
#include "ohmpipe/reservoir.hpp"

using namespace ohmpipe;

namespace {

Sample make(const std::string& id, Vec emb) {
  Sample s;
  s.id = id;
  s.dialogue_id = "d-" + id;
  s.text = id;
  s.embedding = std::move(emb);
  return s;
}

// Points near direction a (label "A") or b (label "B") on the unit circle.
std::vector<Sample> separated_stream(std::size_t per_side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.01);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < per_side; ++i) {
    out.push_back(make("A" + std::to_string(i), {1.0 + g(rng), g(rng)}));
    out.push_back(make("B" + std::to_string(i), {g(rng), 1.0 + g(rng)}));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

OhmConfig small(std::size_t window, std::size_t refit, std::size_t clusters = 2, std::size_t batch = 2) {
  OhmConfig c;
  c.dim = 2;
  c.update_window_size = window;
  c.refit_interval = refit;
  c.n_clusters = clusters;
  c.batch_size = batch;
  c.reservoir_capacity = 4 * batch;
  return c;
}

}  // namespace

TEST_SUITE("reservoir") {
  TEST_CASE("below capacity nothing is discarded") {
    Reservoir<int> r(4);
    Rng rng(1);
    for (int i = 0; i < 4; ++i) CHECK_FALSE(r.offer(i, rng));
    CHECK(r.items() == std::vector<int>{0, 1, 2, 3});
    CHECK(r.seen() == 4);
  }

  TEST_CASE("full reservoir returns exactly one lost item per offer") {
    Reservoir<int> r(3);
    Rng rng(2);
    std::multiset<int> lost;
    for (int i = 0; i < 100; ++i) {
      if (auto x = r.offer(i, rng)) lost.insert(*x);
    }
    CHECK(r.size() == 3);
    CHECK(lost.size() == 97);
    std::multiset<int> all(lost);
    all.insert(r.items().begin(), r.items().end());
    CHECK(all.size() == 100);
    CHECK(std::set<int>(all.begin(), all.end()).size() == 100);
  }

  TEST_CASE("take draws without replacement") {
    Reservoir<int> r(10);
    Rng rng(3);
    for (int i = 0; i < 10; ++i) r.offer(i, rng);
    auto got = r.take(6, rng);
    CHECK(got.size() == 6);
    CHECK(r.size() == 4);
    std::set<int> u(got.begin(), got.end());
    u.insert(r.items().begin(), r.items().end());
    CHECK(u.size() == 10);
    CHECK(r.drain().size() == 4);
    CHECK(r.size() == 0);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("no fit below the window") {
    OhmPipeline p(small(4, 4));
    for (int i = 0; i < 3; ++i) p.update_clusters(make(std::to_string(i), {1.0, double(i)}));
    CHECK_FALSE(p.snapshot()->fitted());
    CHECK(p.buffer_size() == 3);
    CHECK(p.report().fits_performed == 0);
  }

  TEST_CASE("first fit lands exactly when the window fills") {
    OhmPipeline p(small(4, 4));
    for (int i = 0; i < 4; ++i) {
      p.update_clusters(make(std::to_string(i), {1.0, double(i)}));
      CHECK(p.snapshot()->fitted() == (i == 3));
    }
    CHECK(p.snapshot()->version() == 1);
    CHECK(p.report().fits_performed == 1);
  }

  TEST_CASE("refit cadence: first fill plus periodic") {
    OhmConfig cfg = small(4096, 10000, 4, 16);
    OhmPipeline p(cfg);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    std::vector<std::uint64_t> fit_at;
    for (std::size_t i = 1; i <= 20001; ++i) {
      const auto before = p.report().fits_performed;
      p.update_clusters(make(std::to_string(i), {g(rng), g(rng)}));
      if (p.report().fits_performed != before) fit_at.push_back(i);
    }
    CHECK(fit_at == std::vector<std::uint64_t>{4096, 10000, 20000});
    CHECK(p.buffer_size() == 4096);
  }

  TEST_CASE("buffer keeps the most recent window in order") {
    OhmPipeline p(small(3, 100));
    for (int i = 1; i <= 5; ++i) p.update_clusters(make(std::to_string(i), {double(i), 0.0}));
    const Matrix b = p.buffer();
    REQUIRE(b.rows() == 3);
    // Stored normalized, so every row is (1, 0); the ring order is checked via count.
    for (std::size_t r = 0; r < 3; ++r) CHECK(b.row(r)[0] == doctest::Approx(1.0));
    CHECK(p.valid_seen() == 5);
  }

  TEST_CASE("labels: unfitted zero, fitted nearest blob, pure under a version") {
    OhmPipeline p(small(8, 1000));
    const Sample a = make("a", {1.0, 0.02});
    CHECK(p.generate_labels(a) == 0);
    CHECK(p.generate_labels(make("b", {0.0, 1.0})) == 0);
    for (const auto& s : separated_stream(4, 9)) p.update_clusters(s);
    REQUIRE(p.snapshot()->fitted());
    const std::size_t la = p.generate_labels(a);
    const std::size_t lb = p.generate_labels(make("b", {0.01, 1.0}));
    CHECK(la != lb);
    CHECK(la == p.snapshot()->predict(Vec{1.0, 0.0}));
    CHECK(p.generate_labels(a) == la);
  }

  TEST_CASE("two offers to an empty reservoir emit a batch of both") {
    OhmConfig cfg = small(100, 100, 2, 2);
    cfg.reservoir_capacity = 8;
    cfg.rng_seed = 5;
    auto run = [&] {
      OhmPipeline p(cfg);
      CHECK_FALSE(p.reservoir_offer(make("s1", {1, 0}), 0));
      auto b = p.reservoir_offer(make("s2", {1, 0}), 0);
      REQUIRE(b);
      return *b;
    };
    const Batch b1 = run();
    std::set<std::string> ids{b1.samples[0].id, b1.samples[1].id};
    CHECK(ids == std::set<std::string>{"s1", "s2"});
    const Batch b2 = run();
    CHECK(b1.samples == b2.samples);
  }

  TEST_CASE("separated stream under a fitted model yields single-cluster batches") {
    OhmConfig cfg = small(8, 1000000, 2, 16);
    OhmPipeline p(cfg);
    for (const auto& s : separated_stream(4, 1)) p.update_clusters(s);
    REQUIRE(p.snapshot()->fitted());
    std::vector<Batch> batches;
    for (auto& s : separated_stream(32, 2)) {
      if (auto b = p.push(std::move(s))) batches.push_back(std::move(*b));
    }
    CHECK(p.finish().empty());
    CHECK(batches.size() == 4);
    for (const auto& b : batches) {
      const char side = b.samples.front().id[0];
      for (const auto& s : b.samples) CHECK(s.id[0] == side);
      CHECK(b.samples.size() == 16);
    }
  }

  TEST_CASE("empty input gives an all-zero report") {
    std::vector<Sample> none;
    std::size_t n = 0;
    const auto rep = run_pipeline(vector_source(none), small(4, 4), [&](Batch&&) { ++n; });
    CHECK(n == 0);
    CHECK(rep.samples_seen == 0);
    CHECK(rep.batches_emitted == 0);
    CHECK(rep.samples_dropped() == 0);
    CHECK(rep.fits_performed == 0);
    CHECK(rep.peak_retained == 0);
  }

  TEST_CASE("conservation with invalid samples and both flush policies") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    std::vector<Sample> in;
    for (int i = 0; i < 1000; ++i) {
      Vec v = (i % 97 == 0) ? Vec{1.0} : Vec{g(rng), g(rng)};
      in.push_back(make(std::to_string(i), v));
    }
    for (auto policy : {FlushPolicy::emit_partial, FlushPolicy::drop_partial}) {
      OhmConfig cfg = small(64, 200, 4, 16);
      cfg.flush_policy = policy;
      std::size_t total = 0;
      std::set<std::string> ids;
      const auto rep = run_pipeline(vector_source(in), cfg, [&](Batch&& b) {
        total += b.samples.size();
        for (const auto& s : b.samples) ids.insert(s.id);
        if (!b.partial) CHECK(b.samples.size() == 16);
      });
      CHECK(rep.samples_seen == 1000);
      CHECK(rep.samples_invalid == 11);
      CHECK(total + rep.samples_dropped() == 1000);
      CHECK(ids.size() == total);
      CHECK(rep.samples_emitted == total);
      CHECK(rep.peak_retained <= 64 + 4 * 64);
      if (policy == FlushPolicy::drop_partial) {
        CHECK(rep.partial_batches == 0);
      } else {
        CHECK(rep.samples_flush_dropped == 0);
      }
    }
  }

  TEST_CASE("batch members share the label they were assigned") {
    OhmConfig cfg = small(16, 50, 2, 4);
    OhmPipeline p(cfg);
    std::vector<std::pair<Batch, ClusterSnapshot>> seen;
    for (auto& s : separated_stream(200, 3)) {
      auto b = p.push(std::move(s));
      if (b) seen.emplace_back(std::move(*b), p.snapshot());
    }
    for (const auto& [b, snap] : seen) {
      for (std::size_t i = 0; i < b.samples.size(); ++i) {
        if (b.label_versions[i] == snap->version()) CHECK(snap->predict(b.samples[i].embedding) == b.cluster_label);
      }
    }
  }

  TEST_CASE("identical input and seed reproduce the batch sequence") {
    const auto in = separated_stream(300, 4);
    auto collect = [&] {
      std::vector<std::vector<std::string>> ids;
      run_pipeline(vector_source(in), small(32, 100, 2, 8), [&](Batch&& b) {
        std::vector<std::string> v;
        for (const auto& s : b.samples) v.push_back(s.id);
        ids.push_back(v);
      });
      return ids;
    };
    CHECK(collect() == collect());
  }

  TEST_CASE("config validation") {
    OhmConfig cfg = small(4, 4);
    cfg.dim = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = small(4, 4);
    cfg.reservoir_capacity = 1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = small(4, 4);
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }

  TEST_CASE("uniform batches drop the tail and are seed-stable") {
    std::vector<Sample> in;
    for (int i = 0; i < 35; ++i) in.push_back(make(std::to_string(i), {1, 0}));
    const auto a = uniform_batches(in, 8, 1);
    CHECK(a.size() == 4);
    const auto b = uniform_batches(in, 8, 1);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].samples == b[i].samples);
  }

  TEST_CASE("batch records") {
    Batch b;
    b.cluster_label = 3;
    b.model_version = 2;
    b.samples.push_back(make("x", {1, 0}));
    auto j = batch_to_json(b, false);
    CHECK(j["sample_ids"] == nlohmann::json::array({"x"}));
    CHECK_FALSE(j.contains("samples"));
    CHECK_FALSE(j.contains("partial"));
    b.partial = true;
    j = batch_to_json(b, true);
    CHECK(j["partial"] == true);
    CHECK(j["samples"][0]["id"] == "x");
  }
}
