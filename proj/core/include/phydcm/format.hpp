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

#include <string>

namespace phydcm {

/// Round half away from zero. The single rounding rule used for every
/// displayed or quantized value in the library.
double round_half_away(double value) noexcept;

/// Formats value with exactly `decimals` fractional digits. Rounding is
/// half-away-from-zero applied to the shortest decimal representation that
/// round-trips the double, so 0.8039215 formats as "0.803922" at 6 places.
std::string format_fixed(double value, int decimals);

/// Percentage display used by the cross-dataset summary: integral values
/// print without decimals ("100"), everything else with two ("92.30").
std::string format_percent_compact(double percent);

}  // namespace phydcm
