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
#include <span>

namespace ohmpipe::stats {

double mean(std::span<const double> xs);

struct MannWhitney {
  double u = 0.0;        // U statistic of the first sample
  double z = 0.0;        // normal approximation, continuity corrected
  double p_greater = 1;  // one-sided p for "first sample tends to be larger"
};

// Mann-Whitney U with mid-ranks and tie-corrected variance.
MannWhitney mann_whitney_greater(std::span<const double> first, std::span<const double> second);

// Pearson chi-square statistic of observed counts against equal expected counts.
double chi_square_uniform(std::span<const double> observed);
// Upper tail P(X >= stat) of a chi-square with `dof` degrees of freedom.
double chi_square_sf(double stat, double dof);

}  // namespace ohmpipe::stats
