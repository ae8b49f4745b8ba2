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

#include "phydcm/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phydcm/error.hpp"
#include "phydcm/format.hpp"
#include "io_util.hpp"

namespace phydcm::volume {
namespace {

constexpr double kOrientationTolerance = 1e-3;
constexpr double kSpacingTolerance = 1e-6;
constexpr double kDuplicateTolerance = 1e-6;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool close(const Vec3& a, const Vec3& b, double tol) {
  for (int i = 0; i < 3; ++i)
    if (std::fabs(a[i] - b[i]) > tol) return false;
  return true;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

SeriesPlan plan_series(std::span<const dicom::SliceGeometry> geometries) {
  if (geometries.empty()) throw Error(ErrorCode::InconsistentSeries, "series has no slices");
  const auto& ref = geometries.front();
  for (std::size_t i = 0; i < geometries.size(); ++i) {
    const auto& g = geometries[i];
    g.validate();
    if (g.rows != ref.rows || g.cols != ref.cols)
      throw Error(ErrorCode::InconsistentSeries,
                  "slice " + std::to_string(i) + " has a different matrix size");
    if (!close(g.row_dir, ref.row_dir, kOrientationTolerance) ||
        !close(g.col_dir, ref.col_dir, kOrientationTolerance))
      throw Error(ErrorCode::InconsistentSeries,
                  "slice " + std::to_string(i) + " has a different orientation");
    if (std::fabs(g.pixel_spacing[0] - ref.pixel_spacing[0]) > kSpacingTolerance ||
        std::fabs(g.pixel_spacing[1] - ref.pixel_spacing[1]) > kSpacingTolerance)
      throw Error(ErrorCode::InconsistentSeries,
                  "slice " + std::to_string(i) + " has a different pixel spacing");
  }

  const Vec3 normal = ref.normal();
  std::vector<double> projection(geometries.size());
  for (std::size_t i = 0; i < geometries.size(); ++i)
    projection[i] = dot(geometries[i].position, normal);

  SeriesPlan plan;
  plan.order.resize(geometries.size());
  std::iota(plan.order.begin(), plan.order.end(), std::size_t{0});
  std::sort(plan.order.begin(), plan.order.end(),
            [&](std::size_t a, std::size_t b) { return projection[a] < projection[b]; });

  std::vector<double> gaps;
  for (std::size_t k = 1; k < plan.order.size(); ++k) {
    double gap = projection[plan.order[k]] - projection[plan.order[k - 1]];
    if (gap < kDuplicateTolerance)
      throw Error(ErrorCode::DuplicatePosition,
                  "slices " + std::to_string(plan.order[k - 1]) + " and " +
                      std::to_string(plan.order[k]) + " share a position");
    gaps.push_back(gap);
  }
  plan.slice_gap = gaps.empty() ? 1.0 : median(std::move(gaps));
  return plan;
}

Volume assemble_volume(std::span<const dicom::PixelSlice> slices) {
  std::vector<dicom::SliceGeometry> geometries;
  geometries.reserve(slices.size());
  for (const auto& s : slices) {
    if (s.pixels.rows != s.geometry.rows || s.pixels.cols != s.geometry.cols)
      throw Error(ErrorCode::InconsistentSeries, "pixel array does not match its geometry");
    geometries.push_back(s.geometry);
  }
  const SeriesPlan plan = plan_series(geometries);
  const auto& first = slices[plan.order.front()].geometry;

  Volume v;
  v.nx = first.cols;
  v.ny = first.rows;
  v.nz = slices.size();
  v.spacing = {first.pixel_spacing[1], first.pixel_spacing[0], plan.slice_gap};
  v.origin = first.position;
  v.row_dir = first.row_dir;
  v.col_dir = first.col_dir;
  v.normal = first.normal();
  v.voxels.reserve(v.nx * v.ny * v.nz);
  for (std::size_t idx : plan.order) {
    const auto& data = slices[idx].pixels.data;
    v.voxels.insert(v.voxels.end(), data.begin(), data.end());
  }
  return v;
}

std::vector<std::filesystem::path> list_dicom_files(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw Error(ErrorCode::DirNotFound, "series directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    // The headerless check needs the whole stream; the magic needs 132 bytes.
    if (dicom::looks_like_dicom(detail::read_file(entry.path(), 132)) ||
        dicom::looks_like_dicom(detail::read_file(entry.path())))
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Volume load_series(const std::filesystem::path& dir) {
  const auto files = list_dicom_files(dir);
  if (files.empty())
    throw Error(ErrorCode::InconsistentSeries, "no DICOM files in " + dir.string());
  std::vector<dicom::PixelSlice> slices;
  slices.reserve(files.size());
  for (const auto& f : files) slices.push_back(dicom::extract_pixels(dicom::read_dicom_file(f)));
  return assemble_volume(slices);
}

std::string_view plane_name(Plane plane) noexcept {
  switch (plane) {
    case Plane::Axial: return "axial";
    case Plane::Coronal: return "coronal";
    case Plane::Sagittal: return "sagittal";
  }
  return "axial";
}

std::optional<Plane> plane_from_name(std::string_view name) noexcept {
  if (name == "axial") return Plane::Axial;
  if (name == "coronal") return Plane::Coronal;
  if (name == "sagittal") return Plane::Sagittal;
  return std::nullopt;
}

std::size_t plane_extent(const Volume& v, Plane plane) noexcept {
  switch (plane) {
    case Plane::Axial: return v.nz;
    case Plane::Coronal: return v.ny;
    case Plane::Sagittal: return v.nx;
  }
  return 0;
}

Image2D extract_slice(const Volume& v, Plane plane, std::size_t index) {
  const std::size_t extent = plane_extent(v, plane);
  if (index >= extent)
    throw Error(ErrorCode::IndexOutOfRange, std::string(plane_name(plane)) + " index " +
                                                std::to_string(index) + " outside [0, " +
                                                std::to_string(extent) + ")");
  Image2D out;
  switch (plane) {
    case Plane::Axial: {
      out = Image2D(v.ny, v.nx);
      auto first = v.voxels.begin() + static_cast<std::ptrdiff_t>(index * v.ny * v.nx);
      std::copy(first, first + static_cast<std::ptrdiff_t>(v.ny * v.nx), out.data.begin());
      break;
    }
    case Plane::Coronal:
      out = Image2D(v.nz, v.nx);
      for (std::size_t z = 0; z < v.nz; ++z)
        for (std::size_t x = 0; x < v.nx; ++x) out.at(z, x) = v.at(x, index, z);
      break;
    case Plane::Sagittal:
      out = Image2D(v.nz, v.ny);
      for (std::size_t z = 0; z < v.nz; ++z)
        for (std::size_t y = 0; y < v.ny; ++y) out.at(z, y) = v.at(index, y, z);
      break;
  }
  return out;
}

CrosshairMapping map_crosshair(const CrosshairPoint& p, const Volume& v) {
  if (p.x >= v.nx || p.y >= v.ny || p.z >= v.nz)
    throw Error(ErrorCode::IndexOutOfRange, "crosshair point outside the volume");
  return {{p.z, p.y, p.x}, {p.y, p.z, p.x}, {p.x, p.z, p.y}};
}

CrosshairPoint crosshair_from_plane(Plane plane, const PlaneCoord& c) noexcept {
  switch (plane) {
    case Plane::Axial: return {c.col, c.row, c.index};
    case Plane::Coronal: return {c.col, c.index, c.row};
    case Plane::Sagittal: return {c.index, c.col, c.row};
  }
  return {};
}

WindowLevel full_range_window(std::span<const double> values) {
  if (values.empty()) return {};
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi == *lo) return {1.0, *lo};
  return {*hi - *lo, 0.5 * (*hi + *lo)};
}

std::vector<std::uint8_t> render_window(const Image2D& slice, double window, double level) {
  if (!(window > 0.0)) throw Error(ErrorCode::BadWindow, "window must be positive");
  const double low = level - window / 2.0;
  std::vector<std::uint8_t> out(slice.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double scaled = round_half_away(255.0 * (slice.data[i] - low) / window);
    if (!(scaled > 0.0)) scaled = 0.0;  // also maps NaN to 0
    out[i] = static_cast<std::uint8_t>(std::min(scaled, 255.0));
  }
  return out;
}

}  // namespace phydcm::volume
