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

#include "phydcm/format.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace phydcm {

double round_half_away(double value) noexcept { return std::round(value); }

std::string format_fixed(double value, int decimals) {
  if (decimals < 0) throw std::invalid_argument("format_fixed: negative decimals");
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");

  char buf[400];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), std::fabs(value),
                                 std::chars_format::fixed);
  if (ec != std::errc{}) throw std::runtime_error("format_fixed: to_chars failed");
  std::string text(buf, end);

  auto dot = text.find('.');
  std::string int_part = text.substr(0, dot);
  std::string frac_part = dot == std::string::npos ? "" : text.substr(dot + 1);

  bool round_up = frac_part.size() > static_cast<std::size_t>(decimals) &&
                  frac_part[static_cast<std::size_t>(decimals)] >= '5';
  frac_part.resize(static_cast<std::size_t>(decimals), '0');

  // Carry propagates through the fraction then the integer part.
  std::string digits = int_part + frac_part;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    for (; i >= 0; --i) {
      if (digits[static_cast<std::size_t>(i)] == '9') {
        digits[static_cast<std::size_t>(i)] = '0';
      } else {
        ++digits[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) digits.insert(digits.begin(), '1');
  }

  std::size_t int_len = digits.size() - static_cast<std::size_t>(decimals);
  std::string out = digits.substr(0, int_len);
  if (decimals > 0) out += "." + digits.substr(int_len);

  bool is_zero = out.find_first_not_of("0.") == std::string::npos;
  if (std::signbit(value) && !is_zero) out.insert(out.begin(), '-');
  return out;
}

std::string format_percent_compact(double percent) {
  std::string s = format_fixed(percent, 2);
  if (s.size() > 3 && s.compare(s.size() - 3, 3, ".00") == 0) s.resize(s.size() - 3);
  return s;
}

}  // namespace phydcm
