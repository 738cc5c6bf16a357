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
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ohmpipe {

// All library failures derive from Error. code() is a module-qualified
// category such as "ingest.dimension_mismatch" that the CLI reports verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message);

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Record-level parse failure. line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::string code, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// 64-bit FNV-1a. Used for config hashes and rng stream derivation, so its
// output must not change between releases.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

using Rng = std::mt19937_64;

// Independent generator for one component of a seeded run. Components with
// different names never share a stream.
Rng make_rng(std::uint64_t seed, std::string_view component);

}  // namespace ohmpipe
