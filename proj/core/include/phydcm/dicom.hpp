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

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phydcm/image.hpp"

namespace phydcm::dicom {

struct Tag {
  std::uint16_t group = 0;
  std::uint16_t element = 0;

  constexpr auto operator<=>(const Tag&) const = default;

  /// "(GGGG,EEEE)" in uppercase hex.
  std::string str() const;
};

namespace tags {
inline constexpr Tag kFileMetaGroupLength{0x0002, 0x0000};
inline constexpr Tag kFileMetaVersion{0x0002, 0x0001};
inline constexpr Tag kMediaStorageSopClass{0x0002, 0x0002};
inline constexpr Tag kMediaStorageSopInstance{0x0002, 0x0003};
inline constexpr Tag kTransferSyntaxUid{0x0002, 0x0010};
inline constexpr Tag kImplementationClassUid{0x0002, 0x0012};
inline constexpr Tag kSopClassUid{0x0008, 0x0016};
inline constexpr Tag kSopInstanceUid{0x0008, 0x0018};
inline constexpr Tag kModality{0x0008, 0x0060};
inline constexpr Tag kPatientName{0x0010, 0x0010};
inline constexpr Tag kPatientId{0x0010, 0x0020};
inline constexpr Tag kStudyInstanceUid{0x0020, 0x000D};
inline constexpr Tag kSeriesInstanceUid{0x0020, 0x000E};
inline constexpr Tag kInstanceNumber{0x0020, 0x0013};
inline constexpr Tag kImagePositionPatient{0x0020, 0x0032};
inline constexpr Tag kImageOrientationPatient{0x0020, 0x0037};
inline constexpr Tag kSamplesPerPixel{0x0028, 0x0002};
inline constexpr Tag kPhotometricInterpretation{0x0028, 0x0004};
inline constexpr Tag kRows{0x0028, 0x0010};
inline constexpr Tag kColumns{0x0028, 0x0011};
inline constexpr Tag kPixelSpacing{0x0028, 0x0030};
inline constexpr Tag kBitsAllocated{0x0028, 0x0100};
inline constexpr Tag kBitsStored{0x0028, 0x0101};
inline constexpr Tag kHighBit{0x0028, 0x0102};
inline constexpr Tag kPixelRepresentation{0x0028, 0x0103};
inline constexpr Tag kWindowCenter{0x0028, 0x1050};
inline constexpr Tag kWindowWidth{0x0028, 0x1051};
inline constexpr Tag kRescaleIntercept{0x0028, 0x1052};
inline constexpr Tag kRescaleSlope{0x0028, 0x1053};
inline constexpr Tag kPixelData{0x7FE0, 0x0010};
}  // namespace tags

enum class VR : std::uint8_t {
  UL, US, SS, FL, FD, DS, IS, CS, LO, SH, PN, DA, TM, UI, OB, OW, UN
};

std::string_view vr_name(VR vr) noexcept;
/// Maps a two-character code onto the supported set; anything else is nullopt.
std::optional<VR> vr_from_code(std::string_view code) noexcept;
bool is_string_vr(VR vr) noexcept;

/// VR used when reading implicit-VR streams. Unknown tags map to UN.
VR dictionary_vr(Tag tag) noexcept;

class Element {
 public:
  Element() = default;
  Element(Tag tag, VR vr, std::vector<std::uint8_t> raw)
      : tag_(tag), vr_(vr), raw_(std::move(raw)) {}

  Tag tag() const noexcept { return tag_; }
  VR vr() const noexcept { return vr_; }
  std::span<const std::uint8_t> raw() const noexcept { return raw_; }
  std::uint32_t length() const noexcept {
    return static_cast<std::uint32_t>(raw_.size());
  }

  /// Value with trailing space/NUL padding removed. Bytes are passed through.
  std::string as_string() const;
  /// Backslash-separated values, each trimmed of surrounding spaces.
  std::vector<std::string> as_strings() const;
  /// Numeric view for binary (US/SS/UL/FL/FD) and decimal-text (DS/IS) VRs.
  std::vector<double> as_numbers() const;

  friend bool operator==(const Element&, const Element&) = default;

 private:
  Tag tag_;
  VR vr_ = VR::UN;
  std::vector<std::uint8_t> raw_;
};

// Element builders. String values are padded to even length with a space
// (UI uses NUL).
Element make_string(Tag tag, VR vr, std::string_view value);
Element make_u16(Tag tag, std::span<const std::uint16_t> values);
Element make_u32(Tag tag, std::span<const std::uint32_t> values);
Element make_decimal(Tag tag, std::span<const double> values);
Element make_integer_string(Tag tag, std::span<const std::int64_t> values);
Element make_bytes(Tag tag, VR vr, std::vector<std::uint8_t> bytes);

enum class TransferSyntax { ExplicitVRLittleEndian, ImplicitVRLittleEndian };

inline constexpr std::string_view kExplicitVRLittleEndianUid = "1.2.840.10008.1.2.1";
inline constexpr std::string_view kImplicitVRLittleEndianUid = "1.2.840.10008.1.2";

/// Throws UnsupportedTransferSyntax for anything but the two little-endian
/// uncompressed syntaxes.
TransferSyntax transfer_syntax_from_uid(std::string_view uid);
std::string_view transfer_syntax_uid(TransferSyntax ts) noexcept;

/// Tag-indexed element tree. Iteration is in ascending tag order.
class DataSet {
 public:
  using Map = std::map<Tag, Element>;
  using const_iterator = Map::const_iterator;

  TransferSyntax transfer_syntax() const noexcept { return transfer_syntax_; }
  void set_transfer_syntax(TransferSyntax ts) noexcept { transfer_syntax_ = ts; }

  /// Inserts or replaces.
  void put(Element element);
  bool contains(Tag tag) const { return elements_.contains(tag); }
  const Element* find(Tag tag) const;
  /// Throws MissingTag.
  const Element& at(Tag tag) const;

  std::optional<std::string> string_value(Tag tag) const;
  std::optional<double> number(Tag tag, std::size_t index = 0) const;
  std::optional<std::vector<double>> numbers(Tag tag) const;

  std::size_t size() const noexcept { return elements_.size(); }
  const_iterator begin() const noexcept { return elements_.begin(); }
  const_iterator end() const noexcept { return elements_.end(); }

  friend bool operator==(const DataSet&, const DataSet&) = default;

 private:
  Map elements_;
  TransferSyntax transfer_syntax_ = TransferSyntax::ExplicitVRLittleEndian;
};

/// Parses a Part-10 file (128-byte preamble + "DICM") or a headerless
/// implicit-VR little-endian stream.
DataSet parse_dicom(std::span<const std::uint8_t> bytes);
DataSet read_dicom_file(const std::filesystem::path& path);

/// True when `bytes` starts like something parse_dicom would accept:
/// the "DICM" magic at offset 128, or a plausible headerless element.
bool looks_like_dicom(std::span<const std::uint8_t> bytes) noexcept;

struct SerializeOptions {
  /// Omit preamble and meta group and write the data set as implicit VR.
  bool headerless = false;
};

/// Encodes a data set. Meta elements (group 0002) are always explicit VR
/// and the meta group length is recomputed.
std::vector<std::uint8_t> serialize_dicom(const DataSet& ds,
                                          const SerializeOptions& options = {});

struct SliceGeometry {
  std::array<double, 3> position{0.0, 0.0, 0.0};
  std::array<double, 3> row_dir{1.0, 0.0, 0.0};
  std::array<double, 3> col_dir{0.0, 1.0, 0.0};
  /// (row spacing, column spacing) in mm, in DICOM PixelSpacing order.
  std::array<double, 2> pixel_spacing{1.0, 1.0};
  std::size_t rows = 0;
  std::size_t cols = 0;
  double rescale_slope = 1.0;
  double rescale_intercept = 0.0;

  /// Throws BadGeometry when the orientation or spacing invariants fail.
  void validate() const;
  /// row_dir x col_dir.
  std::array<double, 3> normal() const noexcept;

  friend bool operator==(const SliceGeometry&, const SliceGeometry&) = default;
};

struct PixelSlice {
  Image2D pixels;
  SliceGeometry geometry;
};

/// Geometry and rescale parameters without decoding pixels. Absent optional
/// tags take identity defaults (origin, axial orientation, 1 mm spacing,
/// slope 1, intercept 0).
SliceGeometry slice_geometry(const DataSet& ds);

/// Decodes PixelData and applies the rescale affine map.
PixelSlice extract_pixels(const DataSet& ds);

struct FixtureMetadata {
  std::string modality = "MR";
  std::string patient_id;
  std::string patient_name;
  std::string series_uid = "1.2.826.0.1.3680043.10.1234.1";
  std::int64_t instance_number = 1;
};

/// Data set a fixture file would contain, without touching the filesystem.
DataSet make_fixture_dataset(const SliceGeometry& geometry,
                             std::span<const std::uint16_t> pixels,
                             const FixtureMetadata& meta = {});

/// Writes an explicit-VR little-endian Part-10 file with 16-bit unsigned
/// pixels. Throws BadGeometry before writing if the shape is degenerate.
void write_fixture_dicom(const SliceGeometry& geometry,
                         std::span<const std::uint16_t> pixels,
                         const std::filesystem::path& path,
                         const FixtureMetadata& meta = {});

}  // namespace phydcm::dicom
