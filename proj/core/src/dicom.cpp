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

#include "phydcm/dicom.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "phydcm/error.hpp"

namespace phydcm::dicom {
namespace {

constexpr std::size_t kPreambleSize = 128;
constexpr std::size_t kMagicEnd = kPreambleSize + 4;
constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t pos) {
  return static_cast<std::uint16_t>(b[pos] | (b[pos + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t pos) {
  return static_cast<std::uint32_t>(b[pos]) |
         (static_cast<std::uint32_t>(b[pos + 1]) << 8) |
         (static_cast<std::uint32_t>(b[pos + 2]) << 16) |
         (static_cast<std::uint32_t>(b[pos + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

// VRs whose explicit encoding carries 2 reserved bytes and a 32-bit length.
bool is_long_form_code(std::string_view code) {
  static constexpr std::string_view kLong[] = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ",
                                               "SV", "UC", "UN", "UR", "UT", "UV"};
  return std::find(std::begin(kLong), std::end(kLong), code) != std::end(kLong);
}

bool is_long_form(VR vr) { return vr == VR::OB || vr == VR::OW || vr == VR::UN; }

bool magic_present(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kMagicEnd && std::memcmp(bytes.data() + kPreambleSize, "DICM", 4) == 0;
}

bool plausible_headerless(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) return false;
  std::uint16_t group = read_u16(bytes, 0);
  if (group != 0x0002 && group != 0x0008) return false;
  std::uint32_t len = read_u32(bytes, 4);
  return len != kUndefinedLength && 8ull + len <= bytes.size();
}

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  bool done() const { return pos_ >= bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint16_t peek_group() const { return read_u16(bytes_, pos_); }

  void require(std::size_t n, Tag tag) const {
    if (remaining() < n)
      fail(ErrorCode::TruncatedFile, "stream ends inside element " + tag.str());
  }

  // Returns nullopt for skipped sequences.
  std::optional<Element> next(bool explicit_vr) {
    Tag tag{};
    if (remaining() < 8) fail(ErrorCode::TruncatedFile, "stream ends inside an element header");
    tag.group = read_u16(bytes_, pos_);
    tag.element = read_u16(bytes_, pos_ + 2);
    if (tag.group == 0xFFFE)
      fail(ErrorCode::MalformedElement, "unexpected item delimiter " + tag.str());

    std::uint32_t len = 0;
    std::size_t header = 8;
    VR vr = VR::UN;
    bool sequence = false;
    if (explicit_vr) {
      char code_chars[2] = {static_cast<char>(bytes_[pos_ + 4]), static_cast<char>(bytes_[pos_ + 5])};
      std::string_view code(code_chars, 2);
      if (!std::isupper(static_cast<unsigned char>(code[0])) ||
          !std::isupper(static_cast<unsigned char>(code[1])))
        fail(ErrorCode::MalformedElement, "invalid VR bytes at " + tag.str());
      if (is_long_form_code(code)) {
        require(12, tag);
        len = read_u32(bytes_, pos_ + 8);
        header = 12;
      } else {
        len = read_u16(bytes_, pos_ + 6);
      }
      sequence = code == "SQ";
      vr = vr_from_code(code).value_or(VR::UN);
    } else {
      len = read_u32(bytes_, pos_ + 4);
      vr = dictionary_vr(tag);
    }

    if (len == kUndefinedLength)
      fail(ErrorCode::UnsupportedFeature, "undefined-length element " + tag.str());
    require(header + static_cast<std::size_t>(len), tag);

    std::size_t value_start = pos_ + header;
    pos_ = value_start + len;
    check_order(tag);
    if (sequence) return std::nullopt;
    auto first = bytes_.begin() + static_cast<std::ptrdiff_t>(value_start);
    return Element(tag, vr, std::vector<std::uint8_t>(first, first + len));
  }

 private:
  void check_order(Tag tag) {
    if (last_ && !(*last_ < tag))
      fail(ErrorCode::MalformedElement, "tag " + tag.str() + " is not in ascending order");
    last_ = tag;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  std::optional<Tag> last_;
};

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(' ');
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(' ');
  return std::string(s.substr(first, last - first + 1));
}

void encode_element(std::vector<std::uint8_t>& out, const Element& e, bool explicit_vr) {
  if (e.length() % 2 != 0)
    fail(ErrorCode::MalformedElement, "odd-length value for " + e.tag().str());
  put_u16(out, e.tag().group);
  put_u16(out, e.tag().element);
  if (!explicit_vr) {
    put_u32(out, e.length());
  } else {
    auto code = vr_name(e.vr());
    out.push_back(static_cast<std::uint8_t>(code[0]));
    out.push_back(static_cast<std::uint8_t>(code[1]));
    if (is_long_form(e.vr())) {
      put_u16(out, 0);
      put_u32(out, e.length());
    } else {
      if (e.length() > 0xFFFF)
        fail(ErrorCode::MalformedElement, "value too long for short-form VR at " + e.tag().str());
      put_u16(out, static_cast<std::uint16_t>(e.length()));
    }
  }
  out.insert(out.end(), e.raw().begin(), e.raw().end());
}

template <typename T>
std::string shortest(T value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

double parse_decimal(const std::string& text, Tag tag) {
  std::string_view sv = text;
  if (!sv.empty() && sv.front() == '+') sv.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), value);
  if (ec != std::errc{} || ptr != sv.data() + sv.size())
    fail(ErrorCode::MalformedElement, "non-numeric value '" + text + "' in " + tag.str());
  return value;
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

}  // namespace

std::string Tag::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "(%04X,%04X)", group, element);
  return buf;
}

std::string_view vr_name(VR vr) noexcept {
  static constexpr std::string_view kNames[] = {"UL", "US", "SS", "FL", "FD", "DS",
                                                "IS", "CS", "LO", "SH", "PN", "DA",
                                                "TM", "UI", "OB", "OW", "UN"};
  return kNames[static_cast<std::size_t>(vr)];
}

std::optional<VR> vr_from_code(std::string_view code) noexcept {
  for (std::uint8_t i = 0; i <= static_cast<std::uint8_t>(VR::UN); ++i) {
    if (vr_name(static_cast<VR>(i)) == code) return static_cast<VR>(i);
  }
  return std::nullopt;
}

bool is_string_vr(VR vr) noexcept {
  switch (vr) {
    case VR::DS: case VR::IS: case VR::CS: case VR::LO: case VR::SH:
    case VR::PN: case VR::DA: case VR::TM: case VR::UI:
      return true;
    default:
      return false;
  }
}

VR dictionary_vr(Tag tag) noexcept {
  struct Entry { Tag tag; VR vr; };
  static constexpr Entry kDictionary[] = {
      {tags::kFileMetaVersion, VR::OB},
      {tags::kMediaStorageSopClass, VR::UI},
      {tags::kMediaStorageSopInstance, VR::UI},
      {tags::kTransferSyntaxUid, VR::UI},
      {tags::kImplementationClassUid, VR::UI},
      {{0x0008, 0x0020}, VR::DA},
      {{0x0008, 0x0030}, VR::TM},
      {tags::kSopClassUid, VR::UI},
      {tags::kSopInstanceUid, VR::UI},
      {tags::kModality, VR::CS},
      {tags::kPatientName, VR::PN},
      {tags::kPatientId, VR::LO},
      {tags::kStudyInstanceUid, VR::UI},
      {tags::kSeriesInstanceUid, VR::UI},
      {tags::kInstanceNumber, VR::IS},
      {tags::kImagePositionPatient, VR::DS},
      {tags::kImageOrientationPatient, VR::DS},
      {tags::kSamplesPerPixel, VR::US},
      {tags::kPhotometricInterpretation, VR::CS},
      {tags::kRows, VR::US},
      {tags::kColumns, VR::US},
      {tags::kPixelSpacing, VR::DS},
      {tags::kBitsAllocated, VR::US},
      {tags::kBitsStored, VR::US},
      {tags::kHighBit, VR::US},
      {tags::kPixelRepresentation, VR::US},
      {tags::kWindowCenter, VR::DS},
      {tags::kWindowWidth, VR::DS},
      {tags::kRescaleIntercept, VR::DS},
      {tags::kRescaleSlope, VR::DS},
      {tags::kPixelData, VR::OW},
  };
  if (tag.element == 0x0000) return VR::UL;  // group length
  for (const auto& entry : kDictionary) {
    if (entry.tag == tag) return entry.vr;
  }
  return VR::UN;
}

std::string Element::as_string() const {
  std::string s(raw_.begin(), raw_.end());
  while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
  return s;
}

std::vector<std::string> Element::as_strings() const {
  std::vector<std::string> out;
  std::string s = as_string();
  std::size_t start = 0;
  while (true) {
    auto sep = s.find('\\', start);
    out.push_back(trim(std::string_view(s).substr(start, sep == std::string::npos ? sep : sep - start)));
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  return out;
}

std::vector<double> Element::as_numbers() const {
  std::vector<double> out;
  auto bytes = raw();
  auto each = [&](std::size_t width, auto decode) {
    if (bytes.size() % width != 0)
      fail(ErrorCode::MalformedElement, "value length of " + tag_.str() + " is not a multiple of " +
                                            std::to_string(width));
    for (std::size_t i = 0; i + width <= bytes.size(); i += width) out.push_back(decode(i));
  };
  switch (vr_) {
    case VR::US:
      each(2, [&](std::size_t i) { return static_cast<double>(read_u16(bytes, i)); });
      break;
    case VR::SS:
      each(2, [&](std::size_t i) {
        return static_cast<double>(static_cast<std::int16_t>(read_u16(bytes, i)));
      });
      break;
    case VR::UL:
      each(4, [&](std::size_t i) { return static_cast<double>(read_u32(bytes, i)); });
      break;
    case VR::FL:
      each(4, [&](std::size_t i) {
        std::uint32_t bits = read_u32(bytes, i);
        float f;
        std::memcpy(&f, &bits, sizeof(f));
        return static_cast<double>(f);
      });
      break;
    case VR::FD:
      each(8, [&](std::size_t i) {
        std::uint64_t bits = static_cast<std::uint64_t>(read_u32(bytes, i)) |
                             (static_cast<std::uint64_t>(read_u32(bytes, i + 4)) << 32);
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
      });
      break;
    case VR::DS:
    case VR::IS:
      if (raw_.empty()) break;
      for (const auto& s : as_strings()) out.push_back(parse_decimal(s, tag_));
      break;
    default:
      fail(ErrorCode::MalformedElement, "element " + tag_.str() + " with VR " +
                                            std::string(vr_name(vr_)) + " is not numeric");
  }
  return out;
}

Element make_string(Tag tag, VR vr, std::string_view value) {
  std::vector<std::uint8_t> raw(value.begin(), value.end());
  if (raw.size() % 2 != 0) raw.push_back(vr == VR::UI ? '\0' : ' ');
  return Element(tag, vr, std::move(raw));
}

Element make_u16(Tag tag, std::span<const std::uint16_t> values) {
  std::vector<std::uint8_t> raw;
  raw.reserve(values.size() * 2);
  for (auto v : values) put_u16(raw, v);
  return Element(tag, VR::US, std::move(raw));
}

Element make_u32(Tag tag, std::span<const std::uint32_t> values) {
  std::vector<std::uint8_t> raw;
  raw.reserve(values.size() * 4);
  for (auto v : values) put_u32(raw, v);
  return Element(tag, VR::UL, std::move(raw));
}

Element make_decimal(Tag tag, std::span<const double> values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += '\\';
    text += shortest(values[i]);
  }
  return make_string(tag, VR::DS, text);
}

Element make_integer_string(Tag tag, std::span<const std::int64_t> values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += '\\';
    text += shortest(values[i]);
  }
  return make_string(tag, VR::IS, text);
}

Element make_bytes(Tag tag, VR vr, std::vector<std::uint8_t> bytes) {
  if (bytes.size() % 2 != 0) bytes.push_back(0);
  return Element(tag, vr, std::move(bytes));
}

TransferSyntax transfer_syntax_from_uid(std::string_view uid) {
  while (!uid.empty() && (uid.back() == '\0' || uid.back() == ' ')) uid.remove_suffix(1);
  if (uid == kExplicitVRLittleEndianUid) return TransferSyntax::ExplicitVRLittleEndian;
  if (uid == kImplicitVRLittleEndianUid) return TransferSyntax::ImplicitVRLittleEndian;
  fail(ErrorCode::UnsupportedTransferSyntax,
       "unsupported transfer syntax '" + std::string(uid) + "'");
}

std::string_view transfer_syntax_uid(TransferSyntax ts) noexcept {
  return ts == TransferSyntax::ExplicitVRLittleEndian ? kExplicitVRLittleEndianUid
                                                      : kImplicitVRLittleEndianUid;
}

void DataSet::put(Element element) {
  Tag tag = element.tag();
  elements_.insert_or_assign(tag, std::move(element));
}

const Element* DataSet::find(Tag tag) const {
  auto it = elements_.find(tag);
  return it == elements_.end() ? nullptr : &it->second;
}

const Element& DataSet::at(Tag tag) const {
  if (const auto* e = find(tag)) return *e;
  fail(ErrorCode::MissingTag, "missing required tag " + tag.str());
}

std::optional<std::string> DataSet::string_value(Tag tag) const {
  if (const auto* e = find(tag)) return e->as_string();
  return std::nullopt;
}

std::optional<std::vector<double>> DataSet::numbers(Tag tag) const {
  if (const auto* e = find(tag)) return e->as_numbers();
  return std::nullopt;
}

std::optional<double> DataSet::number(Tag tag, std::size_t index) const {
  auto values = numbers(tag);
  if (!values || values->size() <= index) return std::nullopt;
  return (*values)[index];
}

bool looks_like_dicom(std::span<const std::uint8_t> bytes) noexcept {
  return magic_present(bytes) || plausible_headerless(bytes);
}

DataSet parse_dicom(std::span<const std::uint8_t> bytes) {
  bool has_preamble = false;
  if (magic_present(bytes)) {
    has_preamble = true;
  } else if (!plausible_headerless(bytes)) {
    if (bytes.size() < kMagicEnd)
      fail(ErrorCode::TruncatedFile, "input of " + std::to_string(bytes.size()) +
                                         " bytes is shorter than preamble and magic");
    fail(ErrorCode::BadMagic, "missing DICM magic at offset 128");
  }

  DataSet ds;
  Reader reader(bytes, has_preamble ? kMagicEnd : 0);
  TransferSyntax ts = TransferSyntax::ImplicitVRLittleEndian;
  if (has_preamble) {
    // The meta group is always explicit VR little endian.
    while (reader.remaining() >= 2 && reader.peek_group() == 0x0002) {
      if (auto e = reader.next(true)) ds.put(std::move(*e));
    }
    if (auto uid = ds.string_value(tags::kTransferSyntaxUid)) ts = transfer_syntax_from_uid(*uid);
  }
  ds.set_transfer_syntax(ts);

  bool explicit_vr = ts == TransferSyntax::ExplicitVRLittleEndian;
  while (!reader.done()) {
    if (auto e = reader.next(explicit_vr)) ds.put(std::move(*e));
  }
  return ds;
}

DataSet read_dicom_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "read error on " + path.string());
  return parse_dicom(bytes);
}

std::vector<std::uint8_t> serialize_dicom(const DataSet& ds, const SerializeOptions& options) {
  std::vector<std::uint8_t> out;
  if (options.headerless) {
    for (const auto& [tag, e] : ds) {
      if (tag.group == 0x0002) continue;
      encode_element(out, e, false);
    }
    return out;
  }

  out.assign(kPreambleSize, 0);
  out.insert(out.end(), {'D', 'I', 'C', 'M'});

  // Meta group with the transfer syntax inserted at its sorted slot.
  std::vector<std::uint8_t> meta;
  Element ts_element = make_string(tags::kTransferSyntaxUid, VR::UI,
                                   transfer_syntax_uid(ds.transfer_syntax()));
  bool ts_written = false;
  for (const auto& [tag, e] : ds) {
    if (tag.group < 0x0002) continue;
    if (tag.group > 0x0002) break;
    if (tag == tags::kFileMetaGroupLength || tag == tags::kTransferSyntaxUid) continue;
    if (!ts_written && tags::kTransferSyntaxUid < tag) {
      encode_element(meta, ts_element, true);
      ts_written = true;
    }
    encode_element(meta, e, true);
  }
  if (!ts_written) encode_element(meta, ts_element, true);

  std::uint32_t meta_len = static_cast<std::uint32_t>(meta.size());
  encode_element(out, make_u32(tags::kFileMetaGroupLength, std::span(&meta_len, 1)), true);
  out.insert(out.end(), meta.begin(), meta.end());

  bool explicit_vr = ds.transfer_syntax() == TransferSyntax::ExplicitVRLittleEndian;
  for (const auto& [tag, e] : ds) {
    if (tag.group == 0x0002) continue;
    encode_element(out, e, explicit_vr);
  }
  return out;
}

void SliceGeometry::validate() const {
  auto norm = [](const std::array<double, 3>& v) { return std::sqrt(dot(v, v)); };
  if (rows == 0 || cols == 0) fail(ErrorCode::BadGeometry, "rows and columns must be positive");
  if (std::fabs(norm(row_dir) - 1.0) > 1e-3 || std::fabs(norm(col_dir) - 1.0) > 1e-3)
    fail(ErrorCode::BadGeometry, "orientation vectors are not unit length");
  if (std::fabs(dot(row_dir, col_dir)) >= 1e-3)
    fail(ErrorCode::BadGeometry, "orientation vectors are not orthogonal");
  if (!(pixel_spacing[0] > 0.0) || !(pixel_spacing[1] > 0.0))
    fail(ErrorCode::BadGeometry, "pixel spacing must be positive");
}

std::array<double, 3> SliceGeometry::normal() const noexcept { return cross(row_dir, col_dir); }

SliceGeometry slice_geometry(const DataSet& ds) {
  auto required = [&](Tag tag) {
    auto v = ds.at(tag).as_numbers();
    if (v.empty()) fail(ErrorCode::MissingTag, "empty value for required tag " + tag.str());
    return v.front();
  };
  SliceGeometry g;
  g.rows = static_cast<std::size_t>(required(tags::kRows));
  g.cols = static_cast<std::size_t>(required(tags::kColumns));
  if (auto ipp = ds.numbers(tags::kImagePositionPatient); ipp && ipp->size() >= 3)
    g.position = {(*ipp)[0], (*ipp)[1], (*ipp)[2]};
  if (auto iop = ds.numbers(tags::kImageOrientationPatient); iop && iop->size() >= 6) {
    g.row_dir = {(*iop)[0], (*iop)[1], (*iop)[2]};
    g.col_dir = {(*iop)[3], (*iop)[4], (*iop)[5]};
  }
  if (auto ps = ds.numbers(tags::kPixelSpacing); ps && ps->size() >= 2)
    g.pixel_spacing = {(*ps)[0], (*ps)[1]};
  g.rescale_slope = ds.number(tags::kRescaleSlope).value_or(1.0);
  g.rescale_intercept = ds.number(tags::kRescaleIntercept).value_or(0.0);
  g.validate();
  return g;
}

PixelSlice extract_pixels(const DataSet& ds) {
  auto required = [&](Tag tag) {
    auto v = ds.at(tag).as_numbers();
    if (v.empty()) fail(ErrorCode::MissingTag, "empty value for required tag " + tag.str());
    return v.front();
  };
  const auto rows = static_cast<std::size_t>(required(tags::kRows));
  const auto cols = static_cast<std::size_t>(required(tags::kColumns));
  const auto bits_allocated = static_cast<int>(required(tags::kBitsAllocated));
  const auto representation = static_cast<int>(required(tags::kPixelRepresentation));
  const Element& pixel_data = ds.at(tags::kPixelData);

  const auto samples = static_cast<int>(ds.number(tags::kSamplesPerPixel).value_or(1.0));
  if (samples != 1) fail(ErrorCode::UnsupportedFeature, "only single-sample pixels are supported");
  if (bits_allocated != 8 && bits_allocated != 16)
    fail(ErrorCode::UnsupportedFeature, "BitsAllocated must be 8 or 16");
  if (representation != 0 && representation != 1)
    fail(ErrorCode::UnsupportedFeature, "PixelRepresentation must be 0 or 1");
  const int bits_stored =
      static_cast<int>(ds.number(tags::kBitsStored).value_or(bits_allocated));
  if (bits_stored < 1 || bits_stored > bits_allocated)
    fail(ErrorCode::UnsupportedFeature, "BitsStored out of range");

  const std::size_t bytes_per_pixel = static_cast<std::size_t>(bits_allocated / 8);
  const std::size_t expected = rows * cols * bytes_per_pixel;
  const std::size_t actual = pixel_data.length();
  // An odd 8-bit payload carries one padding byte.
  if (actual != expected && !(expected % 2 == 1 && actual == expected + 1))
    fail(ErrorCode::LengthMismatch, "PixelData holds " + std::to_string(actual) +
                                        " bytes, expected " + std::to_string(expected));

  PixelSlice out;
  out.geometry = slice_geometry(ds);
  const SliceGeometry& g = out.geometry;

  const std::uint32_t mask =
      bits_stored >= 32 ? 0xFFFFFFFFu : ((1u << static_cast<unsigned>(bits_stored)) - 1u);
  const std::uint32_t sign_bit = 1u << static_cast<unsigned>(bits_stored - 1);
  auto raw = pixel_data.raw();
  out.pixels = Image2D(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    std::uint32_t word = bytes_per_pixel == 1 ? raw[i] : read_u16(raw, i * 2);
    word &= mask;
    double stored;
    if (representation == 1 && (word & sign_bit)) {
      stored = static_cast<double>(static_cast<std::int64_t>(word) -
                                   (static_cast<std::int64_t>(1) << bits_stored));
    } else {
      stored = static_cast<double>(word);
    }
    out.pixels.data[i] = g.rescale_slope * stored + g.rescale_intercept;
  }
  return out;
}

DataSet make_fixture_dataset(const SliceGeometry& geometry, std::span<const std::uint16_t> pixels,
                             const FixtureMetadata& meta) {
  geometry.validate();
  if (geometry.rows > 0xFFFF || geometry.cols > 0xFFFF)
    fail(ErrorCode::BadGeometry, "rows/columns exceed 16-bit range");
  if (pixels.size() != geometry.rows * geometry.cols)
    fail(ErrorCode::BadGeometry, "pixel count does not match rows x columns");

  static constexpr std::string_view kMrImageStorage = "1.2.840.10008.5.1.4.1.1.4";
  const std::string instance_uid = meta.series_uid + "." + std::to_string(meta.instance_number);

  DataSet ds;
  ds.set_transfer_syntax(TransferSyntax::ExplicitVRLittleEndian);
  ds.put(make_bytes(tags::kFileMetaVersion, VR::OB, {0x00, 0x01}));
  ds.put(make_string(tags::kMediaStorageSopClass, VR::UI, kMrImageStorage));
  ds.put(make_string(tags::kMediaStorageSopInstance, VR::UI, instance_uid));
  ds.put(make_string(tags::kTransferSyntaxUid, VR::UI, kExplicitVRLittleEndianUid));
  ds.put(make_string(tags::kImplementationClassUid, VR::UI, "1.2.826.0.1.3680043.10.1234.100"));

  ds.put(make_string(tags::kSopClassUid, VR::UI, kMrImageStorage));
  ds.put(make_string(tags::kSopInstanceUid, VR::UI, instance_uid));
  ds.put(make_string(tags::kModality, VR::CS, meta.modality));
  ds.put(make_string(tags::kPatientName, VR::PN, meta.patient_name));
  ds.put(make_string(tags::kPatientId, VR::LO, meta.patient_id));
  ds.put(make_string(tags::kSeriesInstanceUid, VR::UI, meta.series_uid));
  const std::int64_t instance[] = {meta.instance_number};
  ds.put(make_integer_string(tags::kInstanceNumber, instance));
  ds.put(make_decimal(tags::kImagePositionPatient, geometry.position));
  const double orientation[] = {geometry.row_dir[0], geometry.row_dir[1], geometry.row_dir[2],
                                geometry.col_dir[0], geometry.col_dir[1], geometry.col_dir[2]};
  ds.put(make_decimal(tags::kImageOrientationPatient, orientation));

  const std::uint16_t one[] = {1};
  ds.put(make_u16(tags::kSamplesPerPixel, one));
  ds.put(make_string(tags::kPhotometricInterpretation, VR::CS, "MONOCHROME2"));
  const std::uint16_t rows[] = {static_cast<std::uint16_t>(geometry.rows)};
  const std::uint16_t cols[] = {static_cast<std::uint16_t>(geometry.cols)};
  ds.put(make_u16(tags::kRows, rows));
  ds.put(make_u16(tags::kColumns, cols));
  ds.put(make_decimal(tags::kPixelSpacing, geometry.pixel_spacing));
  const std::uint16_t bits16[] = {16}, high[] = {15}, unsigned_rep[] = {0};
  ds.put(make_u16(tags::kBitsAllocated, bits16));
  ds.put(make_u16(tags::kBitsStored, bits16));
  ds.put(make_u16(tags::kHighBit, high));
  ds.put(make_u16(tags::kPixelRepresentation, unsigned_rep));
  const double intercept[] = {geometry.rescale_intercept};
  const double slope[] = {geometry.rescale_slope};
  ds.put(make_decimal(tags::kRescaleIntercept, intercept));
  ds.put(make_decimal(tags::kRescaleSlope, slope));

  std::vector<std::uint8_t> payload;
  payload.reserve(pixels.size() * 2);
  for (auto v : pixels) put_u16(payload, v);
  ds.put(Element(tags::kPixelData, VR::OW, std::move(payload)));
  return ds;
}

void write_fixture_dicom(const SliceGeometry& geometry, std::span<const std::uint16_t> pixels,
                         const std::filesystem::path& path, const FixtureMetadata& meta) {
  const auto bytes = serialize_dicom(make_fixture_dataset(geometry, pixels, meta));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace phydcm::dicom
