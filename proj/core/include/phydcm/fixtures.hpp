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
#include <vector>

#include "phydcm/dicom.hpp"

namespace phydcm::fixtures {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;
inline constexpr std::size_t kSeriesSlices = 3;
inline constexpr std::size_t kImageSize = 64;
inline constexpr double kRescaleSlope = 2.0;
inline constexpr double kRescaleIntercept = 10.0;

/// Where generate() put everything.
struct FixtureLayout {
  std::filesystem::path root;
  std::filesystem::path models_dir;   ///< mri_model.pdcm + mri_labels.json
  std::filesystem::path data_dir;     ///< one study per subdirectory
  std::filesystem::path series_dir;   ///< data_dir/fixture_series
  std::vector<std::filesystem::path> series_files;  ///< in write order
  std::filesystem::path slice_dicom;  ///< the file holding the lowest slice
  std::filesystem::path pgm_path;     ///< rescaled pixels of slice_dicom
  std::filesystem::path dataset_dir;  ///< <class>/sample.pgm for every class
};

/// Deterministic 16-bit phantom: elliptical head, a bright lesion whose
/// placement depends on `variant`, and SplitMix64 texture. Values < 4096.
std::vector<std::uint16_t> synth_image(std::uint64_t seed, std::size_t rows, std::size_t cols,
                                       int variant);

/// Geometry of fixture slice k (axial, 1 mm apart, 0.5 mm pixels).
dicom::SliceGeometry slice_geometry(std::size_t k);

/// Writes the full fixture tree under `out`. Same seed, same bytes.
FixtureLayout generate(const std::filesystem::path& out, std::uint64_t seed = kDefaultSeed);

}  // namespace phydcm::fixtures
