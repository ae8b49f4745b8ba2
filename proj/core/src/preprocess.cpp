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

#include "phydcm/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "phydcm/error.hpp"
#include "phydcm/random.hpp"

namespace phydcm::preprocess {
namespace {

double lerp(double a, double b, double t) { return a + t * (b - a); }

void check_image(const Image2D& img) {
  if (img.rows == 0 || img.cols == 0 || img.data.size() != img.rows * img.cols)
    throw Error(ErrorCode::BadImage, "image is empty or malformed");
}

// Bilinear sample; neighbors outside the image contribute zero.
double sample_zero_padded(const Image2D& img, double y, double x) {
  const double fy0 = std::floor(y), fx0 = std::floor(x);
  const auto y0 = static_cast<long long>(fy0), x0 = static_cast<long long>(fx0);
  const double ty = y - fy0, tx = x - fx0;
  auto px = [&](long long r, long long c) {
    if (r < 0 || c < 0 || r >= static_cast<long long>(img.rows) ||
        c >= static_cast<long long>(img.cols))
      return 0.0;
    return img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  const double top = lerp(px(y0, x0), px(y0, x0 + 1), tx);
  const double bottom = lerp(px(y0 + 1, x0), px(y0 + 1, x0 + 1), tx);
  return lerp(top, bottom, ty);
}

}  // namespace

void AugmentSpec::validate() const {
  if (!(max_rotation_deg >= 0.0))
    throw Error(ErrorCode::BadSize, "max_rotation_deg must be non-negative");
  if (!(max_zoom_delta >= 0.0 && max_zoom_delta < 1.0))
    throw Error(ErrorCode::BadSize, "max_zoom_delta must lie in [0, 1)");
}

Image2D normalize_intensity(const Image2D& img) {
  check_image(img);
  for (double v : img.data)
    if (!std::isfinite(v)) throw Error(ErrorCode::BadImage, "image contains non-finite values");
  auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it, hi = *hi_it;
  Image2D out(img.rows, img.cols, 0.0);
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = (img.data[i] - lo) / range;
  return out;
}

Image2D resize_bilinear(const Image2D& img, std::size_t out_h, std::size_t out_w) {
  check_image(img);
  if (out_h < 1 || out_w < 1) throw Error(ErrorCode::BadSize, "output size must be at least 1x1");

  struct Tap {
    std::size_t i0, i1;
    double t;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double max_coord = static_cast<double>(in - 1);
    for (std::size_t d = 0; d < out; ++d) {
      double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, max_coord);
      const auto i0 = static_cast<std::size_t>(std::floor(s));
      result[d] = {i0, std::min(i0 + 1, in - 1), s - static_cast<double>(i0)};
    }
    return result;
  };
  const auto ys = taps(img.rows, out_h);
  const auto xs = taps(img.cols, out_w);

  Image2D out(out_h, out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const Tap& ty = ys[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const Tap& tx = xs[c];
      const double top = lerp(img.at(ty.i0, tx.i0), img.at(ty.i0, tx.i1), tx.t);
      const double bottom = lerp(img.at(ty.i1, tx.i0), img.at(ty.i1, tx.i1), tx.t);
      out.at(r, c) = lerp(top, bottom, ty.t);
    }
  }
  return out;
}

AugmentParams draw_augment_params(const AugmentSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  AugmentParams p;
  p.rotation_deg = (2.0 * rng.next_unit() - 1.0) * spec.max_rotation_deg;
  const double flip_draw = rng.next_unit();
  p.flip = spec.h_flip && flip_draw >= 0.5;
  p.zoom = 1.0 + (2.0 * rng.next_unit() - 1.0) * spec.max_zoom_delta;
  return p;
}

Image2D apply_augment(const Image2D& img, const AugmentParams& params) {
  check_image(img);
  if (!(params.zoom > 0.0)) throw Error(ErrorCode::BadSize, "zoom must be positive");
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cy = (static_cast<double>(img.rows) - 1.0) / 2.0;
  const double cx = (static_cast<double>(img.cols) - 1.0) / 2.0;

  Image2D warped(img.rows, img.cols);
  for (std::size_t r = 0; r < img.rows; ++r) {
    for (std::size_t c = 0; c < img.cols; ++c) {
      // Inverse map: undo the rotation, then the zoom.
      const double dx = static_cast<double>(c) - cx;
      const double dy = static_cast<double>(r) - cy;
      const double sx = (cos_t * dx + sin_t * dy) / params.zoom + cx;
      const double sy = (-sin_t * dx + cos_t * dy) / params.zoom + cy;
      warped.at(r, c) = sample_zero_padded(img, sy, sx);
    }
  }
  if (!params.flip) return warped;

  Image2D flipped(img.rows, img.cols);
  for (std::size_t r = 0; r < img.rows; ++r)
    for (std::size_t c = 0; c < img.cols; ++c) flipped.at(r, c) = warped.at(r, img.cols - 1 - c);
  return flipped;
}

Image2D augment(const Image2D& img, const AugmentSpec& spec) {
  return apply_augment(img, draw_augment_params(spec));
}

ImageTensor to_model_input(const Image2D& img, const PreprocessConfig& cfg) {
  if (cfg.target_height < 1 || cfg.target_width < 1)
    throw Error(ErrorCode::BadSize, "target size must be positive");
  Image2D work = cfg.normalize ? normalize_intensity(img) : img;
  work = resize_bilinear(work, cfg.target_height, cfg.target_width);
  if (cfg.augment) work = augment(work, *cfg.augment);

  ImageTensor t;
  t.channels = 1;
  t.height = work.rows;
  t.width = work.cols;
  t.data.resize(work.data.size());
  for (std::size_t i = 0; i < work.data.size(); ++i) t.data[i] = static_cast<float>(work.data[i]);
  return t;
}

}  // namespace phydcm::preprocess
