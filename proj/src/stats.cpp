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

#include "ohmpipe/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "ohmpipe/error.hpp"

namespace ohmpipe::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

MannWhitney mann_whitney_greater(std::span<const double> first, std::span<const double> second) {
  const std::size_t n1 = first.size();
  const std::size_t n2 = second.size();
  if (n1 == 0 || n2 == 0) throw Error("stats.empty_sample", "Mann-Whitney needs two non-empty samples");

  struct Obs {
    double v;
    bool first;
  };
  std::vector<Obs> all;
  all.reserve(n1 + n2);
  for (double v : first) all.push_back({v, true});
  for (double v : second) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Obs& a, const Obs& b) { return a.v < b.v; });

  const double n = static_cast<double>(n1 + n2);
  double rank_sum = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double t = static_cast<double>(j - i);
    const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].first) rank_sum += mid;
    }
    tie_term += t * t * t - t;
    i = j;
  }

  MannWhitney out;
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  out.u = rank_sum - a * (a + 1.0) / 2.0;
  const double mu = a * b / 2.0;
  const double var = a * b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    out.p_greater = 1.0;
    return out;
  }
  out.z = (out.u - mu - 0.5) / std::sqrt(var);
  out.p_greater = 0.5 * std::erfc(out.z / std::sqrt(2.0));
  return out;
}

double chi_square_uniform(std::span<const double> observed) {
  if (observed.empty()) throw Error("stats.empty_sample", "chi-square needs at least one cell");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  const double expected = total / static_cast<double>(observed.size());
  double stat = 0.0;
  for (double o : observed) stat += (o - expected) * (o - expected) / expected;
  return stat;
}

double chi_square_sf(double stat, double dof) { return boost::math::gamma_q(dof / 2.0, stat / 2.0); }

}  // namespace ohmpipe::stats
