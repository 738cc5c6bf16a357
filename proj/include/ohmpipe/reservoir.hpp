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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "ohmpipe/error.hpp"

namespace ohmpipe {

// Fixed-capacity uniform sample of an unbounded stream (Vitter's Algorithm R),
// plus uniform batch extraction without replacement.
template <class T>
class Reservoir {
 public:
  explicit Reservoir(std::size_t capacity) : capacity_(capacity) { items_.reserve(capacity); }

  // Offers one item. Returns whatever left the reservoir as a result: the
  // displaced incumbent, the rejected newcomer, or nothing while below capacity.
  std::optional<T> offer(T item, Rng& rng) {
    ++seen_;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      return std::nullopt;
    }
    std::uniform_int_distribution<std::uint64_t> pick(0, seen_ - 1);
    const std::uint64_t j = pick(rng);
    if (j < capacity_) {
      std::optional<T> out(std::move(items_[j]));
      items_[j] = std::move(item);
      return out;
    }
    return std::optional<T>(std::move(item));
  }

  // Removes and returns n items drawn uniformly without replacement, in draw
  // order. Requires n <= size().
  std::vector<T> take(std::size_t n, Rng& rng) {
    std::vector<T> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, items_.size() - 1);
      std::swap(items_[i], items_[pick(rng)]);
      out.push_back(std::move(items_[i]));
    }
    items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }

  std::vector<T> drain() {
    std::vector<T> out = std::move(items_);
    items_.clear();
    return out;
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t seen() const noexcept { return seen_; }
  const std::vector<T>& items() const noexcept { return items_; }

 private:
  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<T> items_;
};

}  // namespace ohmpipe
