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

// Dense numeric kernels shared by clustering and the batch evaluator.
//
// Each data-parallel kernel has a serial reference in `serial::` and an
// OpenMP version in `omp::`. The two must produce bit-identical results:
// the parallel versions only split independent rows/batches across threads
// and never reorder a floating point reduction. Tests compare them directly.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ohmpipe {

using Vec = std::vector<double>;

// Row-major dense matrix. Rows are contiguous spans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }

  void append_row(std::span<const double> v);

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace kernels {

enum class Exec { serial, parallel };

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) noexcept { return dot(a, a); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Cosine similarity; 0 when either side has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  const double na = squared_norm(a);
  const double nb = squared_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot(a, b) / std::sqrt(na * nb);
  return std::fmin(1.0, std::fmax(-1.0, c));
}

// Index of the nearest center for one point. Ties go to the lowest index.
std::size_t nearest_row(const Matrix& centers, std::span<const double> point, double* dist2 = nullptr) noexcept;

// One contiguous batch of rows inside a matrix plus a group id per row.
// Pairs inside the same group are excluded from cross-group statistics.
struct BatchSpan {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct CrossCosine {
  double mean = 0.0;
  std::size_t pairs = 0;
};

namespace serial {

void nearest_center(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> dist2);

// Mean cosine over all cross-group pairs of each batch. Rows of `unit_rows`
// must already be l2-normalized (zero rows allowed, they contribute 0).
void batch_cross_cosine(const Matrix& unit_rows, std::span<const std::uint32_t> groups,
                        std::span<const BatchSpan> batches, std::span<CrossCosine> out);

}  // namespace serial

namespace omp {

void nearest_center(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                    std::span<double> dist2);

void batch_cross_cosine(const Matrix& unit_rows, std::span<const std::uint32_t> groups,
                        std::span<const BatchSpan> batches, std::span<CrossCosine> out);

}  // namespace omp

inline void nearest_center(const Matrix& points, const Matrix& centers, std::span<std::size_t> labels,
                           std::span<double> dist2, Exec exec) {
  if (exec == Exec::parallel) {
    omp::nearest_center(points, centers, labels, dist2);
  } else {
    serial::nearest_center(points, centers, labels, dist2);
  }
}

inline void batch_cross_cosine(const Matrix& unit_rows, std::span<const std::uint32_t> groups,
                               std::span<const BatchSpan> batches, std::span<CrossCosine> out, Exec exec) {
  if (exec == Exec::parallel) {
    omp::batch_cross_cosine(unit_rows, groups, batches, out);
  } else {
    serial::batch_cross_cosine(unit_rows, groups, batches, out);
  }
}

// Caps OpenMP worker threads for the rest of the process. 0 leaves the runtime default.
void set_max_threads(int threads);

}  // namespace kernels
}  // namespace ohmpipe
