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


#include <random>

#include "doctest.h"
#include "ohmpipe/ingest.hpp"
#include "ohmpipe/kernels.hpp"
#include "oracles.hpp"

using namespace ohmpipe;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool unit) {
  std::normal_distribution<double> g;
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    Vec v(cols);
    for (auto& x : v) x = g(rng);
    if (unit) l2_normalize_inplace(v);
    m.append_row(v);
  }
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("cosine edge cases") {
    CHECK(kernels::cosine(Vec{1, 0}, Vec{0, 1}) == 0.0);
    CHECK(kernels::cosine(Vec{2, 0}, Vec{5, 0}) == 1.0);
    CHECK(kernels::cosine(Vec{2, 0}, Vec{-5, 0}) == -1.0);
    CHECK(kernels::cosine(Vec{0, 0}, Vec{1, 0}) == 0.0);
  }

  TEST_CASE("nearest_row breaks ties toward the lowest index") {
    Matrix c;
    c.append_row(Vec{1, 0});
    c.append_row(Vec{-1, 0});
    c.append_row(Vec{1, 0});
    double d = -1;
    CHECK(kernels::nearest_row(c, Vec{0, 1}, &d) == 0);
    CHECK(d == doctest::Approx(2.0));
    CHECK(kernels::nearest_row(c, Vec{0.9, 0}) == 0);
    CHECK(kernels::nearest_row(c, Vec{-0.9, 0}) == 1);
  }

  TEST_CASE("matrix rejects ragged rows") {
    Matrix m;
    m.append_row(Vec{1, 2});
    CHECK_THROWS(m.append_row(Vec{1}));
    CHECK(m.rows() == 1);
    CHECK(m.cols() == 2);
  }

  TEST_CASE("serial and parallel nearest_center agree") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
      const Matrix pts = random_matrix(997, 16, rng, false);
      const Matrix ctr = random_matrix(1 + t * 7, 16, rng, false);
      std::vector<std::size_t> a(pts.rows()), b(pts.rows());
      std::vector<double> da(pts.rows()), db(pts.rows());
      kernels::nearest_center(pts, ctr, a, da, kernels::Exec::serial);
      kernels::nearest_center(pts, ctr, b, db, kernels::Exec::parallel);
      CHECK(a == b);
      CHECK(da == db);
    }
  }

  TEST_CASE("batch_cross_cosine matches a brute-force oracle in both modes") {
    std::mt19937_64 rng(9);
    const Matrix rows = random_matrix(160, 8, rng, true);
    std::vector<std::uint32_t> groups(rows.rows());
    std::uniform_int_distribution<std::uint32_t> g(0, 60);
    for (auto& x : groups) x = g(rng);
    std::vector<kernels::BatchSpan> spans;
    for (std::size_t off = 0; off < rows.rows(); off += 16) spans.push_back({off, 16});
    spans.push_back({0, 1});  // no pairs

    std::vector<kernels::CrossCosine> s(spans.size()), p(spans.size());
    kernels::batch_cross_cosine(rows, groups, spans, s, kernels::Exec::serial);
    kernels::batch_cross_cosine(rows, groups, spans, p, kernels::Exec::parallel);
    for (std::size_t b = 0; b < spans.size(); ++b) {
      CHECK(s[b].mean == p[b].mean);
      CHECK(s[b].pairs == p[b].pairs);
      std::vector<std::vector<double>> r;
      std::vector<std::string> gr;
      for (std::size_t i = spans[b].offset; i < spans[b].offset + spans[b].size; ++i) {
        r.emplace_back(rows.row(i).begin(), rows.row(i).end());
        gr.push_back(std::to_string(groups[i]));
      }
      CHECK(s[b].mean == doctest::Approx(oracle::mean_cross_cosine(r, gr)).epsilon(1e-12));
    }
    CHECK(s.back().pairs == 0);
  }

  TEST_CASE("thread cap is accepted") {
    kernels::set_max_threads(1);
    kernels::set_max_threads(0);
  }
}
