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
#include <filesystem>
#include <span>
#include <vector>

#include "phydcm/nnet.hpp"

namespace phydcm::nnet {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// PDCM v1 layout, all little endian:
///   "PDCM" | u32 version | u32 tensor_count |
///   per tensor: u16 name_len | name | u8 ndim | ndim x u32 dims | f32 data
std::vector<std::uint8_t> encode_weights(const WeightTable& weights);
WeightTable decode_weights(std::span<const std::uint8_t> bytes);

WeightTable load_weights(const std::filesystem::path& path);
void save_weights(const WeightTable& weights, const std::filesystem::path& path);

}  // namespace phydcm::nnet
