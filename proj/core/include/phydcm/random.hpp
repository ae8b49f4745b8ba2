// Copyright 2026 The PhyDCM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

namespace phydcm {

/// SplitMix64 stream. Fixture weights and augmentation draws are defined in
/// terms of this exact generator so they are reproducible bit-for-bit.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Top 24 bits of the next draw mapped to [0, 1).
  double next_unit() noexcept { return unit_from_bits(next()); }

  static constexpr double unit_from_bits(std::uint64_t draw) noexcept {
    return static_cast<double>(draw >> 40) / 16777216.0;
  }

 private:
  std::uint64_t state_;
};

}  // namespace phydcm
