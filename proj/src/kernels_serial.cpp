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

#include <limits>
#include <stdexcept>

#include "kernels_detail.hpp"

namespace ohmpipe {

void Matrix::append_row(std::span<const double> v) {
  if (rows_ == 0 && cols_ == 0) cols_ = v.size();
  if (v.size() != cols_) throw std::invalid_argument("Matrix::append_row: width mismatch");
  data_.insert(data_.end(), v.begin(), v.end());
  ++rows_;
}

namespace kernels {

std::size_t nearest_row(const Matrix& centers, std::span<const double> point, double* dist2) noexcept {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(centers.row(c), point);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2 != nullptr) *dist2 = best_d;
  return best;
}

namespace detail {

CrossCosine cross_cosine_one(const Matrix& unit_rows, std::span<const std::uint32_t> groups, BatchSpan b) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = b.offset; i < b.offset + b.size; ++i) {
    for (std::size_t j = i + 1; j < b.offset + b.size; ++j) {
      if (groups[i] == groups[j]) continue;
      sum += dot(unit_rows.row(i), unit_rows.row(j));
      ++pairs;
    }
  }
  return {pairs == 0 ? 0.0 : sum / static_cast<double>(pairs), pairs};
}

}  // namespace detail

namespace serial {

void nearest_center(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> dist2) {
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double d = 0.0;
    labels[i] = nearest_row(centers, points.row(i), &d);
    if (!dist2.empty()) dist2[i] = d;
  }
}

void batch_cross_cosine(const Matrix& unit_rows, std::span<const std::uint32_t> groups,
                        std::span<const BatchSpan> batches, std::span<CrossCosine> out) {
  for (std::size_t b = 0; b < batches.size(); ++b) out[b] = detail::cross_cosine_one(unit_rows, groups, batches[b]);
}

}  // namespace serial
}  // namespace kernels
}  // namespace ohmpipe
