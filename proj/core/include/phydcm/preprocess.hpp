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
#include <optional>
#include <vector>

#include "phydcm/image.hpp"

namespace phydcm::preprocess {

inline constexpr std::size_t kModelInputSize = 224;

/// Channel-major [c][h][w] float tensor fed to the classifier.
struct ImageTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;
};

struct AugmentSpec {
  double max_rotation_deg = 10.0;
  bool h_flip = true;  ///< whether a flip may be drawn at all
  double max_zoom_delta = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One concrete draw of augmentation parameters.
struct AugmentParams {
  double rotation_deg = 0.0;
  bool flip = false;
  double zoom = 1.0;
};

struct PreprocessConfig {
  std::size_t target_height = kModelInputSize;
  std::size_t target_width = kModelInputSize;
  bool normalize = true;
  std::optional<AugmentSpec> augment;
};

/// Min-max rescale to [0, 1]; a constant image maps to zeros.
Image2D normalize_intensity(const Image2D& img);

/// Bilinear resize with half-pixel centers and clamped edges.
Image2D resize_bilinear(const Image2D& img, std::size_t out_h, std::size_t out_w);

/// Draws rotation, flip and zoom (in that order) from SplitMix64(spec.seed).
AugmentParams draw_augment_params(const AugmentSpec& spec);

/// Zoom, then rotation about the image center (bilinear, zero outside),
/// then an optional horizontal flip.
Image2D apply_augment(const Image2D& img, const AugmentParams& params);

Image2D augment(const Image2D& img, const AugmentSpec& spec);

/// normalize -> resize -> optional augment -> [1][h][w] float tensor.
ImageTensor to_model_input(const Image2D& img, const PreprocessConfig& cfg = {});

}  // namespace phydcm::preprocess
