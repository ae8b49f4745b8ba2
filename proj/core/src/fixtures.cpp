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

#include "phydcm/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "io_util.hpp"
#include "phydcm/error.hpp"
#include "phydcm/pgm.hpp"
#include "phydcm/random.hpp"
#include "phydcm/registry.hpp"
#include "phydcm/weights.hpp"

namespace phydcm::fixtures {

std::vector<std::uint16_t> synth_image(std::uint64_t seed, std::size_t rows, std::size_t cols,
                                       int variant) {
  SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(variant + 1)));
  std::vector<std::uint16_t> out(rows * cols);
  const double cy = (static_cast<double>(rows) - 1.0) / 2.0;
  const double cx = (static_cast<double>(cols) - 1.0) / 2.0;
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(variant % 8) / 8.0;
  const double ly = cy + 0.35 * cy * std::sin(angle);
  const double lx = cx + 0.35 * cx * std::cos(angle);
  const double lesion_r = 0.12 * static_cast<double>(std::min(rows, cols)) * (1.0 + 0.25 * (variant % 3));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double ny = (static_cast<double>(r) - cy) / (0.45 * static_cast<double>(rows));
      const double nx = (static_cast<double>(c) - cx) / (0.38 * static_cast<double>(cols));
      double v = 40.0;
      if (nx * nx + ny * ny <= 1.0) v = 900.0 + 300.0 * (1.0 - (nx * nx + ny * ny));
      const double dy = static_cast<double>(r) - ly, dx = static_cast<double>(c) - lx;
      if (dy * dy + dx * dx <= lesion_r * lesion_r) v += 1800.0;
      v += 120.0 * rng.next_unit();
      out[r * cols + c] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 4095.0));
    }
  }
  return out;
}

dicom::SliceGeometry slice_geometry(std::size_t k) {
  dicom::SliceGeometry g;
  g.rows = kImageSize;
  g.cols = kImageSize;
  g.position = {-16.0, -16.0, static_cast<double>(k)};
  g.pixel_spacing = {0.5, 0.5};
  g.rescale_slope = kRescaleSlope;
  g.rescale_intercept = kRescaleIntercept;
  return g;
}

FixtureLayout generate(const std::filesystem::path& out, std::uint64_t seed) {
  namespace fs = std::filesystem;
  FixtureLayout layout;
  layout.root = out;
  layout.models_dir = out / "models";
  layout.data_dir = out / "data";
  layout.series_dir = layout.data_dir / "fixture_series";
  layout.pgm_path = out / "fixture.pgm";
  layout.dataset_dir = out / "dataset";
  std::error_code ec;
  for (const auto& d : {layout.models_dir, layout.series_dir, layout.dataset_dir}) {
    fs::create_directories(d, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + d.string());
  }

  nnet::save_weights(nnet::gen_fixture_weights(seed), layout.models_dir / "mri_model.pdcm");
  detail::write_file(layout.models_dir / "mri_labels.json",
                     registry::label_map_json({registry::kMriClasses}));

  // Files are named in reverse position order so readers must sort by geometry.
  dicom::FixtureMetadata meta;
  meta.patient_id = "FX-0001";
  meta.patient_name = "Fixture^Patient";
  std::vector<std::uint16_t> lowest_slice;
  for (std::size_t i = 0; i < kSeriesSlices; ++i) {
    const std::size_t k = kSeriesSlices - 1 - i;
    const auto pixels = synth_image(seed, kImageSize, kImageSize, static_cast<int>(k));
    meta.instance_number = static_cast<std::int64_t>(k + 1);
    char name[32];
    std::snprintf(name, sizeof(name), "slice_%03zu.dcm", i);
    const fs::path path = layout.series_dir / name;
    dicom::write_fixture_dicom(slice_geometry(k), pixels, path, meta);
    layout.series_files.push_back(path);
    if (k == 0) {
      layout.slice_dicom = path;
      lowest_slice = pixels;
    }
  }

  pgm::PgmImage img;
  img.width = kImageSize;
  img.height = kImageSize;
  img.pixels.resize(lowest_slice.size());
  std::uint32_t maxval = 1;
  for (std::size_t i = 0; i < lowest_slice.size(); ++i) {
    const double v = kRescaleSlope * lowest_slice[i] + kRescaleIntercept;
    img.pixels[i] = static_cast<std::uint16_t>(v);
    maxval = std::max<std::uint32_t>(maxval, img.pixels[i]);
  }
  img.maxval = maxval;
  pgm::write_pgm(layout.pgm_path, img);

  for (std::size_t c = 0; c < registry::kMriClasses.size(); ++c) {
    const fs::path dir = layout.dataset_dir / registry::kMriClasses[c];
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
    const auto pixels = synth_image(seed + 1 + c, kImageSize, kImageSize, static_cast<int>(2 * c + 1));
    pgm::PgmImage sample;
    sample.width = kImageSize;
    sample.height = kImageSize;
    sample.maxval = 255;
    sample.pixels.resize(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i)
      sample.pixels[i] = static_cast<std::uint16_t>(pixels[i] >> 4);
    pgm::write_pgm(dir / "sample.pgm", sample);
  }
  return layout;
}

}  // namespace phydcm::fixtures
