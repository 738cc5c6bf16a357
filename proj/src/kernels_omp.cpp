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

#include <omp.h>

#include "kernels_detail.hpp"

namespace ohmpipe::kernels {

namespace omp {

void nearest_center(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> dist2) {
  const auto n = static_cast<std::int64_t>(points.rows());
  const bool want_dist = !dist2.empty();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double d = 0.0;
    labels[i] = nearest_row(centers, points.row(i), &d);
    if (want_dist) dist2[i] = d;
  }
}

void batch_cross_cosine(const Matrix& unit_rows, std::span<const std::uint32_t> groups,
                        std::span<const BatchSpan> batches, std::span<CrossCosine> out) {
  const auto n = static_cast<std::int64_t>(batches.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t b = 0; b < n; ++b) out[b] = detail::cross_cosine_one(unit_rows, groups, batches[b]);
}

}  // namespace omp

void set_max_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace ohmpipe::kernels
