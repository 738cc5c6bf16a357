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

#include "ohmpipe/kernels.hpp"

namespace ohmpipe::kernels::detail {

// Per-batch body shared by the serial and OpenMP drivers.
CrossCosine cross_cosine_one(const Matrix& unit_rows, std::span<const std::uint32_t> groups, BatchSpan b);

}  // namespace ohmpipe::kernels::detail
