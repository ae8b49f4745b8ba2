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

#include "phydcm/image.hpp"

namespace phydcm::pgm {

/// Binary (P5) grayscale image. Samples are stored widened to 16 bits.
struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> pixels;
};

bool looks_like_pgm(std::span<const std::uint8_t> bytes) noexcept;

PgmImage parse_pgm(std::span<const std::uint8_t> bytes);
PgmImage read_pgm(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_pgm(const PgmImage& image);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

Image2D to_image(const PgmImage& image);

/// 8-bit PGM from row-major bytes.
PgmImage from_bytes(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels);

}  // namespace phydcm::pgm
