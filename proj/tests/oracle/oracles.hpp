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

// Reference implementations used as test oracles. Nothing here includes the
// library: every routine works on plain double vectors, straight from the
// defining formulas.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

struct Conv {
  Vec out;
  std::size_t h = 0;
  std::size_t w = 0;
};

/// in [c_in][h][w], weight [c_out][c_in][3][3], bias [c_out].
Conv conv3x3(const Vec& in, std::size_t c_in, std::size_t h, std::size_t w, const Vec& weight,
             const Vec& bias, std::size_t c_out, int stride, int pad);

/// x [n][in] times w [in][out] plus b.
Vec dense(const Vec& x, std::size_t n, std::size_t in, const Vec& w, const Vec& b, std::size_t out);

Vec layer_norm(const Vec& x, std::size_t n, std::size_t d, const Vec& g, const Vec& b, double eps);

double gelu(double x);

Vec softmax(const Vec& logits);

struct Attention {
  Vec out;  ///< [n][d]
  Vec a;    ///< [n][n]
};

Attention attention(const Vec& x, std::size_t n, std::size_t d, const Vec& qw, const Vec& qb,
                    const Vec& kw, const Vec& kb, const Vec& vw, const Vec& vb, const Vec& ow,
                    const Vec& ob);

/// Parameter values by name, row-major.
using Params = std::function<Vec(const std::string&)>;

/// Whole classifier on a 224x224 single-channel image, all in double.
Vec forward(const Vec& image, const Params& params);

std::uint64_t splitmix64(std::uint64_t& state);

/// Half-pixel-center bilinear resize with clamped sample coordinates.
Vec resize(const Vec& img, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow);

std::vector<std::uint8_t> base64_decode(std::string_view text);

/// RFC 4180 records (CRLF or LF line ends).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace oracle
