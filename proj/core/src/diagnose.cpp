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

#include "phydcm/diagnose.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <random>

#include "io_util.hpp"
#include "json_convert.hpp"
#include "phydcm/dicom.hpp"
#include "phydcm/error.hpp"
#include "phydcm/format.hpp"
#include "phydcm/nnet.hpp"
#include "phydcm/pgm.hpp"

namespace phydcm::diagnose {
namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<std::string> non_empty(std::optional<std::string> s) {
  if (s && s->empty()) return std::nullopt;
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string probability_of(const DiagnosticRecord& r, std::string_view label) {
  for (const auto& [name, p] : r.probabilities)
    if (name == label) return format_fixed(p, 6);
  return "";
}

}  // namespace

InputFormat detect_format(std::span<const std::uint8_t> bytes) {
  if (dicom::looks_like_dicom(bytes)) return InputFormat::Dicom;
  if (pgm::looks_like_pgm(bytes)) return InputFormat::Pgm;
  throw Error(ErrorCode::UnknownFormat, "input is neither DICOM nor binary PGM");
}

LoadedImage load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  LoadedImage out;
  out.format = detect_format(bytes);
  if (out.format == InputFormat::Dicom) {
    const auto ds = dicom::parse_dicom(bytes);
    out.pixels = dicom::extract_pixels(ds).pixels;
    out.patient.id = non_empty(ds.string_value(dicom::tags::kPatientId));
    out.patient.name = non_empty(ds.string_value(dicom::tags::kPatientName));
    out.modality = non_empty(ds.string_value(dicom::tags::kModality));
  } else {
    out.pixels = pgm::to_image(pgm::parse_pgm(bytes));
  }
  return out;
}

QualityMetrics quality_metrics(const preprocess::ImageTensor& input) {
  QualityMetrics q;
  if (input.data.empty()) return q;
  const double n = static_cast<double>(input.data.size());
  double sum = 0.0;
  std::size_t saturated = 0;
  for (float v : input.data) {
    sum += v;
    if (v == 0.0f || v == 1.0f) ++saturated;
  }
  q.mean_intensity = sum / n;
  double var = 0.0;
  for (float v : input.data) var += (v - q.mean_intensity) * (v - q.mean_intensity);
  q.std_intensity = std::sqrt(var / n);
  q.saturated_fraction = static_cast<double>(saturated) / n;
  return q;
}

std::string new_record_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uint64_t hi = rng(), lo = rng();
  hi = (hi & 0xFFFFFFFFFFFF0FFFull) | 0x0000000000004000ull;  // version 4
  lo = (lo & 0x3FFFFFFFFFFFFFFFull) | 0x8000000000000000ull;  // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xFFFF),
                static_cast<unsigned>(hi & 0xFFFF), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFull));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::size_t argmax(std::span<const float> probabilities) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i)
    if (probabilities[i] > probabilities[best]) best = i;
  return best;
}

DiagnosticRecord make_record(std::span<const float> probabilities,
                             const registry::LabelMap& labels, const QualityMetrics& quality) {
  if (probabilities.size() != labels.classes.size() || probabilities.empty())
    throw Error(ErrorCode::LabelCountMismatch, "probability vector does not match label map");
  DiagnosticRecord r;
  const std::size_t best = argmax(probabilities);
  r.predicted_class = labels.classes[best];
  r.confidence = probabilities[best];
  for (std::size_t i = 0; i < probabilities.size(); ++i)
    r.probabilities.emplace_back(labels.classes[i], static_cast<double>(probabilities[i]));
  r.quality = quality;
  r.engine_version = std::string(kEngineVersion);
  return r;
}

DiagnosticRecord predict_image(const Image2D& image, std::string_view scan_type,
                               std::string source_path, const registry::Registry& registry,
                               const PatientInfo& patient) {
  const auto& bundle = registry.require(scan_type);
  const auto input = preprocess::to_model_input(image);
  const auto probs = nnet::forward(bundle.weights(), input);
  DiagnosticRecord r = make_record(probs.data, bundle.labels(), quality_metrics(input));
  r.record_id = new_record_id();
  r.timestamp = utc_timestamp();
  r.patient_id = patient.id;
  r.patient_name = patient.name;
  r.scan_type = std::string(scan_type);
  r.source_path = std::move(source_path);
  return r;
}

DiagnosticRecord predict(const std::filesystem::path& path, std::string_view scan_type,
                         const registry::Registry& registry, const PatientInfo& patient) {
  registry.require(scan_type);
  LoadedImage img = load_image(path);
  PatientInfo who = img.patient;
  if (patient.id) who.id = patient.id;
  if (patient.name) who.name = patient.name;
  return predict_image(img.pixels, scan_type, path.string(), registry, who);
}

std::string record_to_json(const DiagnosticRecord& record, int indent) {
  return detail::to_json(record).dump(indent);
}

DiagnosticRecord record_from_json(std::string_view json) {
  try {
    return detail::record_from_json(ordered_json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptHistory, std::string("invalid record JSON: ") + e.what());
  }
}

std::string history_to_json(std::span<const DiagnosticRecord> records) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : records) arr.push_back(detail::to_json(r));
  return arr.dump(2) + "\n";
}

std::vector<DiagnosticRecord> read_history(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  const auto bytes = detail::read_file(path);
  std::vector<DiagnosticRecord> out;
  try {
    const auto j = ordered_json::parse(bytes.begin(), bytes.end());
    if (!j.is_array()) throw Error(ErrorCode::CorruptHistory, path.string() + " is not a JSON array");
    for (const auto& item : j) out.push_back(detail::record_from_json(item));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptHistory, path.string() + ": " + e.what());
  }
  return out;
}

void append_history(const DiagnosticRecord& record, const std::filesystem::path& path) {
  auto records = read_history(path);
  records.push_back(record);
  detail::write_file_atomic(path, history_to_json(records));
}

void clear_history(const std::filesystem::path& path) {
  detail::write_file_atomic(path, history_to_json({}));
}

std::string records_to_csv(std::span<const DiagnosticRecord> records) {
  std::string out(kCsvHeader);
  out += "\r\n";
  for (const auto& r : records) {
    const std::string fields[] = {
        r.timestamp,
        r.patient_id.value_or(""),
        r.patient_name.value_or(""),
        r.scan_type,
        r.predicted_class,
        format_fixed(r.confidence, 6),
        probability_of(r, "glioma"),
        probability_of(r, "meningioma"),
        probability_of(r, "pituitary"),
        probability_of(r, "notumor"),
        r.source_path,
    };
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (i) out += ',';
      out += csv_field(fields[i]);
    }
    out += "\r\n";
  }
  return out;
}

void export_csv(std::span<const DiagnosticRecord> records, const std::filesystem::path& path) {
  detail::write_file(path, records_to_csv(records));
}

}  // namespace phydcm::diagnose

namespace phydcm::detail {

nlohmann::ordered_json to_json(const diagnose::DiagnosticRecord& r) {
  nlohmann::ordered_json j;
  j["record_id"] = r.record_id;
  j["timestamp"] = r.timestamp;
  j["patient_id"] = r.patient_id ? nlohmann::ordered_json(*r.patient_id) : nullptr;
  j["patient_name"] = r.patient_name ? nlohmann::ordered_json(*r.patient_name) : nullptr;
  j["scan_type"] = r.scan_type;
  j["source_path"] = r.source_path;
  j["predicted_class"] = r.predicted_class;
  j["confidence"] = r.confidence;
  nlohmann::ordered_json probs = nlohmann::ordered_json::object();
  for (const auto& [label, p] : r.probabilities) probs[label] = p;
  j["probabilities"] = std::move(probs);
  j["quality"] = {{"mean_intensity", r.quality.mean_intensity},
                  {"std_intensity", r.quality.std_intensity},
                  {"saturated_fraction", r.quality.saturated_fraction}};
  j["engine_version"] = r.engine_version;
  return j;
}

diagnose::DiagnosticRecord record_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw Error(ErrorCode::CorruptHistory, "record is not a JSON object");
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  diagnose::DiagnosticRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.patient_id = opt("patient_id");
  r.patient_name = opt("patient_name");
  r.scan_type = j.at("scan_type").get<std::string>();
  r.source_path = j.at("source_path").get<std::string>();
  r.predicted_class = j.at("predicted_class").get<std::string>();
  r.confidence = j.at("confidence").get<double>();
  for (const auto& [label, p] : j.at("probabilities").items())
    r.probabilities.emplace_back(label, p.get<double>());
  const auto& q = j.at("quality");
  r.quality.mean_intensity = q.at("mean_intensity").get<double>();
  r.quality.std_intensity = q.at("std_intensity").get<double>();
  r.quality.saturated_fraction = q.at("saturated_fraction").get<double>();
  r.engine_version = j.at("engine_version").get<std::string>();
  return r;
}

}  // namespace phydcm::detail
