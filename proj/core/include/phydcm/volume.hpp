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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "phydcm/dicom.hpp"
#include "phydcm/image.hpp"

namespace phydcm::volume {

using Vec3 = std::array<double, 3>;

/// Position-ordered voxel grid, voxels laid out [z][y][x].
struct Volume {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;
  std::vector<double> voxels;
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};
  Vec3 row_dir{1.0, 0.0, 0.0};
  Vec3 col_dir{0.0, 1.0, 0.0};
  Vec3 normal{0.0, 0.0, 1.0};

  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return voxels[(z * ny + y) * nx + x];
  }

  friend bool operator==(const Volume&, const Volume&) = default;
};

/// Slice ordering for a series, computed from geometry alone.
struct SeriesPlan {
  std::vector<std::size_t> order;  ///< input indices in ascending projection
  double slice_gap = 1.0;          ///< median adjacent projection gap
};

/// Validates that the geometries describe one consistent stack and sorts
/// them along row_dir x col_dir. Throws InconsistentSeries or
/// DuplicatePosition.
SeriesPlan plan_series(std::span<const dicom::SliceGeometry> geometries);

Volume assemble_volume(std::span<const dicom::PixelSlice> slices);

/// Reads every DICOM file directly inside `dir` and assembles them.
Volume load_series(const std::filesystem::path& dir);

/// DICOM files directly inside `dir` (by content, not extension), sorted by name.
std::vector<std::filesystem::path> list_dicom_files(const std::filesystem::path& dir);

enum class Plane { Axial, Coronal, Sagittal };

std::string_view plane_name(Plane plane) noexcept;
std::optional<Plane> plane_from_name(std::string_view name) noexcept;

/// Number of slices along the plane's normal axis.
std::size_t plane_extent(const Volume& v, Plane plane) noexcept;

/// Axial rows=y cols=x; coronal rows=z cols=x; sagittal rows=z cols=y.
Image2D extract_slice(const Volume& v, Plane plane, std::size_t index);

struct CrosshairPoint {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t z = 0;
  friend bool operator==(const CrosshairPoint&, const CrosshairPoint&) = default;
};

struct PlaneCoord {
  std::size_t index = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const PlaneCoord&, const PlaneCoord&) = default;
};

struct CrosshairMapping {
  PlaneCoord axial;
  PlaneCoord coronal;
  PlaneCoord sagittal;
};

CrosshairMapping map_crosshair(const CrosshairPoint& p, const Volume& v);

/// Inverse of one component of map_crosshair.
CrosshairPoint crosshair_from_plane(Plane plane, const PlaneCoord& coord) noexcept;

struct WindowLevel {
  double window = 1.0;
  double level = 0.0;
};

/// Window spanning the full voxel range; width 1 when the volume is constant.
WindowLevel full_range_window(std::span<const double> values);

/// clamp(round(255 (v - (level - window/2)) / window), 0, 255). Throws
/// BadWindow for window <= 0.
std::vector<std::uint8_t> render_window(const Image2D& slice, double window, double level);

}  // namespace phydcm::volume
