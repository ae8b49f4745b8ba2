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

#include <doctest.h>

#include <cstring>
#include <random>

#include "phydcm/dicom.hpp"
#include "phydcm/error.hpp"
#include "test_support.hpp"

using namespace phydcm;
using namespace phydcm::dicom;

namespace {

using Bytes = std::vector<std::uint8_t>;

void put16(Bytes& b, std::uint16_t v) {
  b.push_back(v & 0xFF);
  b.push_back(v >> 8);
}
void put32(Bytes& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xFF);
}

void explicit_short(Bytes& b, Tag t, const char* vr, const Bytes& value) {
  put16(b, t.group);
  put16(b, t.element);
  b.push_back(vr[0]);
  b.push_back(vr[1]);
  put16(b, static_cast<std::uint16_t>(value.size()));
  b.insert(b.end(), value.begin(), value.end());
}

void explicit_long(Bytes& b, Tag t, const char* vr, const Bytes& value,
                   std::optional<std::uint32_t> len = std::nullopt) {
  put16(b, t.group);
  put16(b, t.element);
  b.push_back(vr[0]);
  b.push_back(vr[1]);
  put16(b, 0);
  put32(b, len.value_or(static_cast<std::uint32_t>(value.size())));
  b.insert(b.end(), value.begin(), value.end());
}

void implicit(Bytes& b, Tag t, const Bytes& value) {
  put16(b, t.group);
  put16(b, t.element);
  put32(b, static_cast<std::uint32_t>(value.size()));
  b.insert(b.end(), value.begin(), value.end());
}

Bytes text(std::string s) {
  if (s.size() % 2) s += ' ';
  return {s.begin(), s.end()};
}

Bytes uid(std::string s) {
  Bytes b(s.begin(), s.end());
  if (b.size() % 2) b.push_back(0);
  return b;
}

Bytes u16(std::uint16_t v) {
  Bytes b;
  put16(b, v);
  return b;
}

/// Preamble, magic and a meta group declaring `ts`.
Bytes part10_header(const std::string& ts) {
  Bytes meta;
  explicit_short(meta, tags::kTransferSyntaxUid, "UI", uid(ts));
  Bytes b(128, 0);
  for (char c : {'D', 'I', 'C', 'M'}) b.push_back(static_cast<std::uint8_t>(c));
  Bytes len;
  put32(len, static_cast<std::uint32_t>(meta.size()));
  explicit_short(b, tags::kFileMetaGroupLength, "UL", len);
  b.insert(b.end(), meta.begin(), meta.end());
  return b;
}

DataSet image_dataset(std::size_t rows, std::size_t cols, int bits, int repr, const Bytes& pixels) {
  DataSet ds;
  const std::uint16_t r = rows, c = cols, ba = bits, pr = repr;
  ds.put(make_u16(tags::kRows, std::span(&r, 1)));
  ds.put(make_u16(tags::kColumns, std::span(&c, 1)));
  ds.put(make_u16(tags::kBitsAllocated, std::span(&ba, 1)));
  ds.put(make_u16(tags::kPixelRepresentation, std::span(&pr, 1)));
  Bytes payload = pixels;
  if (payload.size() % 2) payload.push_back(0);
  ds.put(make_bytes(tags::kPixelData, bits == 8 ? VR::OB : VR::OW, payload));
  return ds;
}

std::size_t non_meta_count(const DataSet& ds) {
  std::size_t n = 0;
  for (const auto& [tag, e] : ds)
    if (tag.group != 0x0002) ++n;
  return n;
}

SliceGeometry geometry(std::size_t rows, std::size_t cols, double z = 0.0) {
  SliceGeometry g;
  g.rows = rows;
  g.cols = cols;
  g.position = {-12.5, 3.25, z};
  g.pixel_spacing = {0.75, 0.5};
  return g;
}

}  // namespace

TEST_CASE("tags order lexicographically and render as uppercase hex") {
  CHECK(Tag{0x0008, 0x0060} < Tag{0x0010, 0x0010});
  CHECK(Tag{0x0010, 0x0010} < Tag{0x0010, 0x0020});
  CHECK_FALSE(Tag{0x7FE0, 0x0010} < Tag{0x0028, 0xFFFF});
  CHECK(Tag{0x7FE0, 0x0010}.str() == "(7FE0,0010)");
  CHECK(Tag{0x0002, 0x000a}.str() == "(0002,000A)");
}

TEST_CASE("vr codes") {
  for (auto vr : {VR::UL, VR::US, VR::SS, VR::FL, VR::FD, VR::DS, VR::IS, VR::CS, VR::LO, VR::SH,
                  VR::PN, VR::DA, VR::TM, VR::UI, VR::OB, VR::OW, VR::UN}) {
    auto back = vr_from_code(vr_name(vr));
    REQUIRE(back.has_value());
    CHECK(*back == vr);
  }
  CHECK_FALSE(vr_from_code("SQ").has_value());
  CHECK_FALSE(vr_from_code("zz").has_value());
  CHECK(dictionary_vr(tags::kRows) == VR::US);
  CHECK(dictionary_vr(tags::kPatientName) == VR::PN);
  CHECK(dictionary_vr(Tag{0x0009, 0x1001}) == VR::UN);
}

TEST_CASE("meta header plus Rows parses to one data element") {
  DataSet ds;
  const std::uint16_t four = 4;
  ds.put(make_u16(tags::kRows, std::span(&four, 1)));
  const auto bytes = serialize_dicom(ds);
  const auto parsed = parse_dicom(bytes);
  CHECK(non_meta_count(parsed) == 1);
  CHECK(parsed.number(tags::kRows) == 4.0);
  CHECK(parsed.transfer_syntax() == TransferSyntax::ExplicitVRLittleEndian);
  CHECK(parsed.string_value(tags::kTransferSyntaxUid) == std::string(kExplicitVRLittleEndianUid));
}

TEST_CASE("inputs shorter than preamble and magic are truncated") {
  Bytes b(131, 0);
  CHECK_THROWS_WITH_AS(parse_dicom(b), doctest::Contains("131"), Error);
  try {
    parse_dicom(b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncatedFile);
  }
  CHECK_THROWS_AS(parse_dicom(Bytes{}), Error);
}

TEST_CASE("missing magic is BadMagic") {
  Bytes b(200, 0);
  std::memcpy(b.data() + 128, "DICX", 4);
  try {
    parse_dicom(b);
    FAIL("expected BadMagic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMagic);
  }
}

TEST_CASE("transfer syntax table") {
  CHECK(transfer_syntax_from_uid("1.2.840.10008.1.2.1") == TransferSyntax::ExplicitVRLittleEndian);
  CHECK(transfer_syntax_from_uid("1.2.840.10008.1.2") == TransferSyntax::ImplicitVRLittleEndian);
  for (const char* bad : {"1.2.840.10008.1.2.2", "1.2.840.10008.1.2.4.50", "1.2.840.10008.1.2.5",
                          "1.2.840.10008.1.2.4.90", ""}) {
    try {
      transfer_syntax_from_uid(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsupportedTransferSyntax);
    }
  }
}

TEST_CASE("compressed files are rejected") {
  Bytes b = part10_header("1.2.840.10008.1.2.4.50");
  explicit_short(b, tags::kRows, "US", u16(2));
  try {
    parse_dicom(b);
    FAIL("parsed a JPEG file");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedTransferSyntax);
  }
}

TEST_CASE("explicit VR stream with unknown VR, sequence and long forms") {
  Bytes b = part10_header("1.2.840.10008.1.2.1");
  explicit_short(b, tags::kModality, "CS", text("MR"));
  explicit_short(b, Tag{0x0009, 0x0010}, "XY", {1, 2, 3, 4});
  Bytes item;
  put16(item, 0xFFFE);
  put16(item, 0xE000);
  put32(item, 0);
  explicit_long(b, Tag{0x0009, 0x1100}, "SQ", item);
  explicit_short(b, tags::kPatientName, "PN", text("Doe^Jane"));
  explicit_long(b, Tag{0x0011, 0x0001}, "UN", {9, 8, 7, 6});

  const auto ds = parse_dicom(b);
  CHECK(ds.string_value(tags::kModality) == "MR");
  CHECK(ds.string_value(tags::kPatientName) == "Doe^Jane");
  const Element* odd = ds.find(Tag{0x0009, 0x0010});
  REQUIRE(odd != nullptr);
  CHECK(odd->vr() == VR::UN);
  CHECK(Bytes(odd->raw().begin(), odd->raw().end()) == Bytes{1, 2, 3, 4});
  CHECK_FALSE(ds.contains(Tag{0x0009, 0x1100}));
  const Element* un = ds.find(Tag{0x0011, 0x0001});
  REQUIRE(un != nullptr);
  CHECK(un->vr() == VR::UN);
  CHECK(un->length() == 4);
}

TEST_CASE("undefined-length sequences are unsupported") {
  Bytes b = part10_header("1.2.840.10008.1.2.1");
  explicit_long(b, Tag{0x0008, 0x1140}, "SQ", {}, 0xFFFFFFFFu);
  try {
    parse_dicom(b);
    FAIL("parsed undefined length");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFeature);
  }
}

TEST_CASE("a stream ending mid-element is truncated") {
  Bytes b = part10_header("1.2.840.10008.1.2.1");
  explicit_short(b, tags::kPatientName, "PN", text("Doe^Jane"));
  for (std::size_t cut = 1; cut < 16; ++cut) {
    Bytes shorter(b.begin(), b.end() - static_cast<std::ptrdiff_t>(cut));
    try {
      parse_dicom(shorter);
      FAIL("accepted truncated stream, cut " << cut);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TruncatedFile);
    }
  }
}

TEST_CASE("descending tags are malformed") {
  Bytes b = part10_header("1.2.840.10008.1.2.1");
  explicit_short(b, tags::kPatientName, "PN", text("A"));
  explicit_short(b, tags::kModality, "CS", text("MR"));
  try {
    parse_dicom(b);
    FAIL("accepted descending tags");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedElement);
  }
}

TEST_CASE("implicit VR file uses the data dictionary") {
  Bytes b = part10_header("1.2.840.10008.1.2");
  implicit(b, tags::kModality, text("MR"));
  implicit(b, tags::kRows, u16(3));
  implicit(b, tags::kColumns, u16(2));
  const auto ds = parse_dicom(b);
  CHECK(ds.transfer_syntax() == TransferSyntax::ImplicitVRLittleEndian);
  CHECK(ds.at(tags::kRows).vr() == VR::US);
  CHECK(ds.number(tags::kRows) == 3.0);
  CHECK(ds.number(tags::kColumns) == 2.0);
  CHECK(ds.string_value(tags::kModality) == "MR");
}

TEST_CASE("headerless implicit streams are detected") {
  Bytes b;
  implicit(b, tags::kSopInstanceUid, uid("1.2.3"));
  implicit(b, tags::kModality, text("MR"));
  implicit(b, tags::kRows, u16(1));
  CHECK(looks_like_dicom(b));
  const auto ds = parse_dicom(b);
  CHECK(ds.transfer_syntax() == TransferSyntax::ImplicitVRLittleEndian);
  CHECK(ds.string_value(tags::kSopInstanceUid) == "1.2.3");
  CHECK(ds.number(tags::kRows) == 1.0);

  Bytes wrong_group;
  implicit(wrong_group, tags::kRows, u16(1));
  CHECK_FALSE(looks_like_dicom(wrong_group));
  Bytes pgm{'P', '5', '\n', '1', ' ', '1', '\n', '2', '5', '5', '\n', 0};
  CHECK_FALSE(looks_like_dicom(pgm));
}

TEST_CASE("headerless serialization round-trips") {
  DataSet ds;
  ds.put(make_string(tags::kModality, VR::CS, "MR"));
  ds.put(make_string(tags::kPatientId, VR::LO, "ID7"));
  ds.set_transfer_syntax(TransferSyntax::ImplicitVRLittleEndian);
  const auto bytes = serialize_dicom(ds, {.headerless = true});
  const auto back = parse_dicom(bytes);
  CHECK(back == ds);
}

TEST_CASE("16-bit stored 100 with slope 2 and intercept -50 is 150") {
  auto ds = image_dataset(1, 1, 16, 0, u16(100));
  const double slope = 2.0, intercept = -50.0;
  ds.put(make_decimal(tags::kRescaleSlope, std::span(&slope, 1)));
  ds.put(make_decimal(tags::kRescaleIntercept, std::span(&intercept, 1)));
  const auto px = extract_pixels(parse_dicom(serialize_dicom(ds)));
  CHECK(px.pixels.at(0, 0) == 150.0);
}

TEST_CASE("8-bit 2x2 payload decodes row-major") {
  const auto ds = image_dataset(2, 2, 8, 0, {0, 255, 128, 64});
  const auto px = extract_pixels(parse_dicom(serialize_dicom(ds)));
  REQUIRE(px.pixels.rows == 2);
  REQUIRE(px.pixels.cols == 2);
  CHECK(px.pixels.at(0, 0) == 0.0);
  CHECK(px.pixels.at(0, 1) == 255.0);
  CHECK(px.pixels.at(1, 0) == 128.0);
  CHECK(px.pixels.at(1, 1) == 64.0);
}

TEST_CASE("absent rescale tags mean identity") {
  const auto ds = image_dataset(1, 3, 16, 0, {1, 0, 0x34, 0x12, 0xFF, 0xFF});
  const auto px = extract_pixels(ds);
  CHECK(px.geometry.rescale_slope == 1.0);
  CHECK(px.geometry.rescale_intercept == 0.0);
  CHECK(px.pixels.data == std::vector<double>{1.0, 0x1234, 65535.0});
}

TEST_CASE("signed pixels and BitsStored masking") {
  auto ds = image_dataset(1, 3, 16, 1, {0xFF, 0xFF, 0x00, 0x80, 0xFF, 0x7F});
  CHECK(extract_pixels(ds).pixels.data == std::vector<double>{-1.0, -32768.0, 32767.0});

  auto masked = image_dataset(1, 2, 16, 1, {0xFF, 0xFF, 0xFF, 0x07});
  const std::uint16_t stored = 12;
  masked.put(make_u16(tags::kBitsStored, std::span(&stored, 1)));
  CHECK(extract_pixels(masked).pixels.data == std::vector<double>{-1.0, 2047.0});

  auto unsigned12 = image_dataset(1, 1, 16, 0, {0xFF, 0xF0});
  unsigned12.put(make_u16(tags::kBitsStored, std::span(&stored, 1)));
  CHECK(extract_pixels(unsigned12).pixels.data == std::vector<double>{255.0});

  auto signed8 = image_dataset(1, 2, 8, 1, {0x80, 0x7F});
  CHECK(extract_pixels(signed8).pixels.data == std::vector<double>{-128.0, 127.0});
}

TEST_CASE("pixel extraction errors") {
  auto short_payload = image_dataset(2, 2, 16, 0, {1, 2, 3, 4});
  try {
    extract_pixels(short_payload);
    FAIL("accepted short payload");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }

  for (Tag missing : {tags::kRows, tags::kColumns, tags::kBitsAllocated, tags::kPixelRepresentation,
                      tags::kPixelData}) {
    DataSet full = image_dataset(1, 1, 8, 0, {7});
    DataSet ds;
    for (const auto& [tag, e] : full)
      if (tag != missing) ds.put(e);
    try {
      extract_pixels(ds);
      FAIL("no error without " << missing.str());
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingTag);
      CHECK(std::string(e.what()).find(missing.str()) != std::string::npos);
    }
  }

  auto bits12 = image_dataset(1, 1, 12, 0, {1, 2});
  CHECK_THROWS_AS(extract_pixels(bits12), Error);
}

TEST_CASE("string elements are padded to even length") {
  const auto odd = make_string(tags::kModality, VR::CS, "MRI");
  CHECK(odd.length() == 4);
  CHECK(odd.raw()[3] == ' ');
  CHECK(odd.as_string() == "MRI");
  const auto u = make_string(tags::kSopInstanceUid, VR::UI, "1.2.3");
  CHECK(u.length() == 6);
  CHECK(u.raw()[5] == 0);
  CHECK(u.as_string() == "1.2.3");
  const double ds_values[] = {0.1, -2.5, 1e-7};
  const auto dec = make_decimal(tags::kPixelSpacing, ds_values);
  CHECK(dec.length() % 2 == 0);
  CHECK(dec.as_numbers() == std::vector<double>{0.1, -2.5, 1e-7});
}

TEST_CASE("write_fixture_dicom round-trips every tag and pixel") {
  testing::TempDir tmp;
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> dist(0, 65535);
  for (std::size_t rows : {1u, 3u, 8u})
    for (std::size_t cols : {1u, 5u, 8u}) {
      std::vector<std::uint16_t> px(rows * cols);
      for (auto& p : px) p = static_cast<std::uint16_t>(dist(rng));
      auto g = geometry(rows, cols, 2.5);
      g.rescale_slope = 0.5;
      g.rescale_intercept = -1024.0;
      FixtureMetadata meta;
      meta.patient_id = "P-1";
      meta.patient_name = "Doe^John";
      const auto path = tmp / "slice.dcm";
      write_fixture_dicom(g, px, path, meta);

      const auto expected = make_fixture_dataset(g, px, meta);
      const auto parsed = read_dicom_file(path);
      for (const auto& [tag, e] : expected) {
        if (tag == tags::kFileMetaGroupLength) continue;
        const Element* got = parsed.find(tag);
        REQUIRE_MESSAGE(got != nullptr, tag.str());
        CHECK_MESSAGE(got->raw().size() == e.raw().size(), tag.str());
        CHECK_MESSAGE(std::equal(e.raw().begin(), e.raw().end(), got->raw().begin()), tag.str());
      }
      const auto slice = extract_pixels(parsed);
      CHECK(slice.geometry == g);
      for (std::size_t i = 0; i < px.size(); ++i) CHECK(slice.pixels.data[i] == 0.5 * px[i] - 1024.0);
    }
}

TEST_CASE("serialize and parse are inverse on fixture data sets") {
  const std::uint16_t px[] = {1, 2, 3, 4, 5, 6};
  const auto ds = make_fixture_dataset(geometry(2, 3), px);
  const auto back = parse_dicom(serialize_dicom(ds));
  for (const auto& [tag, e] : ds)
    if (tag != tags::kFileMetaGroupLength) CHECK_MESSAGE(*back.find(tag) == e, tag.str());
  Tag last{};
  bool first = true;
  for (const auto& [tag, e] : back) {
    if (!first) CHECK(last < tag);
    last = tag;
    first = false;
    if (is_string_vr(e.vr())) CHECK_MESSAGE(e.length() % 2 == 0, tag.str());
  }
}

TEST_CASE("degenerate geometry is rejected before writing") {
  testing::TempDir tmp;
  auto g = geometry(0, 4);
  const auto path = tmp / "never.dcm";
  try {
    write_fixture_dicom(g, {}, path);
    FAIL("accepted rows=0");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadGeometry);
  }
  CHECK_FALSE(std::filesystem::exists(path));

  auto skew = geometry(2, 2);
  skew.col_dir = {0.5, 0.866, 0.0};
  const std::uint16_t px[4] = {};
  CHECK_THROWS_AS(write_fixture_dicom(skew, px, path), Error);
  auto spacing = geometry(2, 2);
  spacing.pixel_spacing = {0.0, 1.0};
  CHECK_THROWS_AS(write_fixture_dicom(spacing, px, path), Error);
  CHECK_THROWS_AS(write_fixture_dicom(geometry(2, 2), std::span(px, 3), path), Error);
}

TEST_CASE("three-slice series keeps its positions") {
  testing::TempDir tmp;
  const std::uint16_t px[4] = {1, 2, 3, 4};
  for (int z = 0; z < 3; ++z)
    write_fixture_dicom(geometry(2, 2, z), px, tmp / ("s" + std::to_string(z) + ".dcm"));
  for (int z = 0; z < 3; ++z) {
    const auto ds = read_dicom_file(tmp / ("s" + std::to_string(z) + ".dcm"));
    CHECK(ds.numbers(tags::kImagePositionPatient) == std::vector<double>{-12.5, 3.25, double(z)});
  }
}

TEST_CASE("rescale is affine and exact for representable parameters") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dist(0, 4095);
  std::vector<std::uint16_t> px(64);
  for (auto& p : px) p = static_cast<std::uint16_t>(dist(rng));
  auto g = geometry(8, 8);
  const auto base = extract_pixels(make_fixture_dataset(g, px)).pixels;
  for (auto [s, b] : {std::pair{2.0, 10.0}, {0.25, -1024.0}, {-1.5, 3.0}, {1.0, 0.5}}) {
    g.rescale_slope = s;
    g.rescale_intercept = b;
    const auto scaled = extract_pixels(parse_dicom(serialize_dicom(make_fixture_dataset(g, px)))).pixels;
    for (std::size_t i = 0; i < px.size(); ++i) CHECK(scaled.data[i] == s * base.data[i] + b);
  }
}

TEST_CASE("geometry defaults without optional tags") {
  auto ds = image_dataset(2, 2, 8, 0, {1, 2, 3, 4});
  const auto g = slice_geometry(ds);
  CHECK(g.position == std::array<double, 3>{0, 0, 0});
  CHECK(g.row_dir == std::array<double, 3>{1, 0, 0});
  CHECK(g.col_dir == std::array<double, 3>{0, 1, 0});
  CHECK(g.normal() == std::array<double, 3>{0, 0, 1});
  CHECK(g.pixel_spacing == std::array<double, 2>{1, 1});
}

TEST_CASE("data set accessors") {
  DataSet ds;
  CHECK_FALSE(ds.string_value(tags::kModality).has_value());
  CHECK(ds.find(tags::kModality) == nullptr);
  try {
    (void)ds.at(tags::kModality);
    FAIL("at() on a missing tag");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTag);
  }
  ds.put(make_string(tags::kImageOrientationPatient, VR::DS, "1\\0\\0\\0\\1\\0"));
  CHECK(ds.numbers(tags::kImageOrientationPatient) == std::vector<double>{1, 0, 0, 0, 1, 0});
  CHECK(ds.number(tags::kImageOrientationPatient, 4) == 1.0);
  CHECK_FALSE(ds.number(tags::kImageOrientationPatient, 6).has_value());
  ds.put(make_string(tags::kModality, VR::CS, "CT"));
  ds.put(make_string(tags::kModality, VR::CS, "MR"));
  CHECK(ds.size() == 2);
  CHECK(ds.string_value(tags::kModality) == "MR");
}
