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

#include "phydcm/pgm.hpp"

#include <cctype>
#include <string>

#include "io_util.hpp"
#include "phydcm/error.hpp"

namespace phydcm::pgm {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    std::uint64_t value = 0;
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_]) && pos_ - start < 10)
      value = value * 10 + (bytes_[pos_++] - '0');
    if (pos_ == start) throw Error(ErrorCode::BadImage, std::string("PGM header: bad ") + what);
    return value;
  }

  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw Error(ErrorCode::BadImage, "PGM header: missing separator before raster");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

bool looks_like_pgm(std::span<const std::uint8_t> bytes) noexcept {
  return bytes.size() >= 3 && bytes[0] == 'P' && bytes[1] == '5' && std::isspace(bytes[2]);
}

PgmImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (!looks_like_pgm(bytes)) throw Error(ErrorCode::UnknownFormat, "not a binary PGM (P5)");
  HeaderReader reader(bytes);
  reader.advance(2);
  PgmImage img;
  img.width = reader.number("width");
  img.height = reader.number("height");
  const auto maxval = reader.number("maxval");
  reader.single_whitespace();
  if (img.width == 0 || img.height == 0) throw Error(ErrorCode::BadImage, "PGM has zero size");
  if (maxval == 0 || maxval > 65535) throw Error(ErrorCode::BadImage, "PGM maxval out of range");
  img.maxval = static_cast<std::uint32_t>(maxval);

  const std::size_t bps = img.maxval < 256 ? 1 : 2;
  const std::size_t count = img.width * img.height;
  if (bytes.size() - reader.pos() < count * bps)
    throw Error(ErrorCode::TruncatedFile, "PGM raster is truncated");
  img.pixels.resize(count);
  const std::uint8_t* p = bytes.data() + reader.pos();
  for (std::size_t i = 0; i < count; ++i) {
    // 16-bit samples are big-endian.
    img.pixels[i] = bps == 1 ? p[i]
                             : static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]);
  }
  return img;
}

PgmImage read_pgm(const std::filesystem::path& path) { return parse_pgm(detail::read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const PgmImage& image) {
  if (image.pixels.size() != image.width * image.height)
    throw Error(ErrorCode::BadImage, "PGM pixel count does not match dimensions");
  if (image.maxval == 0 || image.maxval > 65535)
    throw Error(ErrorCode::BadImage, "PGM maxval out of range");
  const std::string header = "P5\n" + std::to_string(image.width) + " " +
                             std::to_string(image.height) + "\n" + std::to_string(image.maxval) +
                             "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const bool wide = image.maxval >= 256;
  out.reserve(out.size() + image.pixels.size() * (wide ? 2 : 1));
  for (auto v : image.pixels) {
    if (wide) {
      out.push_back(static_cast<std::uint8_t>(v >> 8));
      out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    } else {
      out.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  const auto bytes = encode_pgm(image);
  detail::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Image2D to_image(const PgmImage& image) {
  Image2D out(image.height, image.width);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) out.data[i] = image.pixels[i];
  return out;
}

PgmImage from_bytes(std::size_t width, std::size_t height, std::span<const std::uint8_t> pixels) {
  PgmImage img;
  img.width = width;
  img.height = height;
  img.maxval = 255;
  img.pixels.assign(pixels.begin(), pixels.end());
  return img;
}

}  // namespace phydcm::pgm
