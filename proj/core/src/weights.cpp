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

#include "phydcm/weights.hpp"

#include <bit>
#include <cstring>
#include <string_view>

#include "io_util.hpp"
#include "phydcm/error.hpp"

namespace phydcm::nnet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "PDCM codec assumes a little-endian host");

constexpr char kMagic[4] = {'P', 'D', 'C', 'M'};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  std::span<const std::uint8_t> take(std::size_t n, const std::string& what) {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::TruncatedFile, "weight file truncated in " + what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T read(const std::string& what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what).data(), sizeof(T));
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace

std::vector<std::uint8_t> encode_weights(const WeightTable& weights) {
  validate_weights(weights);
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append<std::uint32_t>(out, kWeightFormatVersion);
  append<std::uint32_t>(out, static_cast<std::uint32_t>(weights.size()));
  for (const auto& [name, tensor] : weights.entries()) {
    append<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(tensor.rank()));
    for (auto d : tensor.shape) append<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    const auto* raw = reinterpret_cast<const std::uint8_t*>(tensor.data.data());
    out.insert(out.end(), raw, raw + tensor.data.size() * sizeof(float));
  }
  return out;
}

WeightTable decode_weights(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "weight file magic is not PDCM");
  const auto version = in.read<std::uint32_t>("version");
  if (version != kWeightFormatVersion)
    throw Error(ErrorCode::BadVersion, "unsupported weight file version " + std::to_string(version));
  const auto count = in.read<std::uint32_t>("tensor count");

  const auto& spec = model_params();
  WeightTable table;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.read<std::uint16_t>("name length");
    auto name_bytes = in.take(name_len, "tensor name");
    std::string name(name_bytes.begin(), name_bytes.end());
    if (i >= spec.size())
      throw Error(ErrorCode::SchemaMismatch, name + ": unexpected extra tensor");
    if (name != spec[i].name)
      throw Error(ErrorCode::SchemaMismatch,
                  name + ": expected tensor '" + spec[i].name + "' at position " + std::to_string(i));

    const auto ndim = in.read<std::uint8_t>(name + " rank");
    Shape shape(ndim);
    for (auto& d : shape) d = in.read<std::uint32_t>(name + " dims");
    if (shape != spec[i].shape)
      throw Error(ErrorCode::SchemaMismatch,
                  name + ": shape " + shape_str(shape) + " does not match " + shape_str(spec[i].shape));

    Tensor t(shape);
    auto payload = in.take(t.data.size() * sizeof(float), name + " data");
    std::memcpy(t.data.data(), payload.data(), payload.size());
    table.add(std::move(name), std::move(t));
  }
  if (count < spec.size())
    throw Error(ErrorCode::SchemaMismatch, spec[count].name + ": missing from weight file");
  if (!in.done()) throw Error(ErrorCode::SchemaMismatch, "trailing bytes after last tensor");
  return table;
}

WeightTable load_weights(const std::filesystem::path& path) {
  return decode_weights(detail::read_file(path));
}

void save_weights(const WeightTable& weights, const std::filesystem::path& path) {
  const auto bytes = encode_weights(weights);
  detail::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace phydcm::nnet
