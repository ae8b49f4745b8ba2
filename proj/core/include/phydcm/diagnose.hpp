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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phydcm/image.hpp"
#include "phydcm/preprocess.hpp"
#include "phydcm/registry.hpp"

namespace phydcm::diagnose {

inline constexpr std::string_view kEngineVersion = "phydcm 1.0.0 (medvit-lite v1)";

inline constexpr std::string_view kCsvHeader =
    "timestamp,patient_id,patient_name,scan_type,predicted_class,confidence,"
    "p_glioma,p_meningioma,p_pituitary,p_notumor,source_path";

/// Statistics of the normalized model input.
struct QualityMetrics {
  double mean_intensity = 0.0;
  double std_intensity = 0.0;
  double saturated_fraction = 0.0;  ///< pixels exactly 0 or 1

  friend bool operator==(const QualityMetrics&, const QualityMetrics&) = default;
};

struct DiagnosticRecord {
  std::string record_id;
  std::string timestamp;
  std::optional<std::string> patient_id;
  std::optional<std::string> patient_name;
  std::string scan_type;
  std::string source_path;
  std::string predicted_class;
  double confidence = 0.0;
  std::vector<std::pair<std::string, double>> probabilities;
  QualityMetrics quality;
  std::string engine_version;

  friend bool operator==(const DiagnosticRecord&, const DiagnosticRecord&) = default;
};

enum class InputFormat { Dicom, Pgm };

/// DICOM by "DICM" magic or the headerless heuristic, else PGM by "P5".
/// Throws UnknownFormat.
InputFormat detect_format(std::span<const std::uint8_t> bytes);

struct PatientInfo {
  std::optional<std::string> id;
  std::optional<std::string> name;
};

struct LoadedImage {
  Image2D pixels;
  InputFormat format = InputFormat::Pgm;
  PatientInfo patient;            ///< from DICOM tags when present
  std::optional<std::string> modality;
};

LoadedImage load_image(const std::filesystem::path& path);

QualityMetrics quality_metrics(const preprocess::ImageTensor& input);

/// RFC 4122 version-4 UUID string.
std::string new_record_id();
/// Current time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

/// Argmax with ties broken by lowest index. `probabilities` and `labels`
/// must have equal length.
std::size_t argmax(std::span<const float> probabilities) noexcept;

/// Fills a record from a probability vector; identity fields are left for
/// the caller.
DiagnosticRecord make_record(std::span<const float> probabilities,
                             const registry::LabelMap& labels, const QualityMetrics& quality);

/// Preprocess -> forward -> record for an already-decoded image.
DiagnosticRecord predict_image(const Image2D& image, std::string_view scan_type,
                               std::string source_path, const registry::Registry& registry,
                               const PatientInfo& patient = {});

/// Format detection and decoding, then predict_image. Explicit patient
/// fields override those read from DICOM.
DiagnosticRecord predict(const std::filesystem::path& path, std::string_view scan_type,
                         const registry::Registry& registry, const PatientInfo& patient = {});

std::string record_to_json(const DiagnosticRecord& record, int indent = -1);
DiagnosticRecord record_from_json(std::string_view json);

std::string history_to_json(std::span<const DiagnosticRecord> records);

/// Missing file yields an empty list; throws CorruptHistory.
std::vector<DiagnosticRecord> read_history(const std::filesystem::path& path);
/// Read, append, write-temp-then-rename. The original file is untouched on
/// any failure.
void append_history(const DiagnosticRecord& record, const std::filesystem::path& path);
void clear_history(const std::filesystem::path& path);

/// Header plus one CRLF-terminated row per record, RFC 4180 quoting, six
/// decimals rounded half away from zero.
std::string records_to_csv(std::span<const DiagnosticRecord> records);
void export_csv(std::span<const DiagnosticRecord> records, const std::filesystem::path& path);

}  // namespace phydcm::diagnose
