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

#include "phydcm/service.hpp"

#include <atomic>
#include <map>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/logger.h>
#include <spdlog/sinks/ringbuffer_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "json_convert.hpp"
#include "phydcm/diagnose.hpp"
#include "phydcm/dicom.hpp"
#include "phydcm/error.hpp"
#include "phydcm/registry.hpp"
#include "phydcm/volume.hpp"

namespace phydcm::service {
namespace {

using json = nlohmann::ordered_json;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void http_fail(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

std::string scan_type_hint(const std::optional<std::string>& modality) {
  if (!modality) return "";
  if (*modality == "MR") return "mri";
  if (*modality == "CT") return "ct";
  if (*modality == "PT") return "pet";
  return "";
}

std::size_t parse_index(const std::string& text, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (text.empty() || text.front() == '-') throw std::invalid_argument(what);
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    http_fail(400, "BadRequest", std::string("invalid ") + what + " '" + text + "'");
  }
  if (pos != text.size()) http_fail(400, "BadRequest", std::string("invalid ") + what + " '" + text + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& text, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    http_fail(400, "BadRequest", std::string("invalid ") + what + " '" + text + "'");
  }
  if (pos != text.size() || !std::isfinite(v))
    http_fail(400, "BadRequest", std::string("invalid ") + what + " '" + text + "'");
  return v;
}

std::size_t json_index(const json& body, const char* key) {
  if (!body.contains(key)) http_fail(400, "BadRequest", std::string("missing field '") + key + "'");
  const auto& v = body.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    http_fail(400, "BadRequest", std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

std::optional<std::string> json_string(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
  if (!body.at(key).is_string())
    http_fail(400, "BadRequest", std::string("field '") + key + "' must be a string");
  return body.at(key).get<std::string>();
}

volume::Plane parse_plane(const std::string& name) {
  auto plane = volume::plane_from_name(name);
  if (!plane) http_fail(400, "BadPlane", "plane must be axial, coronal or sagittal, got '" + name + "'");
  return *plane;
}

json plane_coord_json(const volume::PlaneCoord& c) {
  return {{"index", c.index}, {"row", c.row}, {"col", c.col}};
}

bool localhost_origin(const std::string& origin) {
  for (const char* prefix : {"http://localhost", "http://127.0.0.1", "https://localhost",
                             "https://127.0.0.1", "http://[::1]"}) {
    const std::string p = prefix;
    if (origin.rfind(p, 0) == 0 && (origin.size() == p.size() || origin[p.size()] == ':'))
      return true;
  }
  return false;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t n = bytes[i] << 16;
    if (rest == 2) n |= bytes[i + 1] << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

struct Server::Impl {
  struct Study {
    std::string id;
    std::filesystem::path dir;
    std::vector<std::filesystem::path> files;
    std::array<std::size_t, 3> dims{};
    std::array<double, 3> spacing{};
    std::string scan_type_hint;
    diagnose::PatientInfo patient;

    std::once_flag assembled;
    std::shared_ptr<const volume::Volume> vol;
    volume::WindowLevel full_range;
  };

  ServiceConfig config;
  registry::Registry models;
  std::vector<std::unique_ptr<Study>> studies;
  std::mutex history_mutex;
  std::atomic<std::size_t> assemblies{0};
  std::shared_ptr<spdlog::sinks::ringbuffer_sink_mt> ring;
  std::shared_ptr<spdlog::logger> log;
  httplib::Server http;
  bool bound = false;
  std::mutex run_mutex;
  bool run_entered = false;
  bool stop_requested = false;

  explicit Impl(ServiceConfig cfg) : config(std::move(cfg)) {
    ring = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(kLogLines);
    std::vector<spdlog::sink_ptr> sinks{ring};
    if (config.log_to_stderr) sinks.push_back(std::make_shared<spdlog::sinks::stderr_color_sink_mt>());
    log = std::make_shared<spdlog::logger>("phydcm-service", sinks.begin(), sinks.end());
    log->set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");

    registry::Registry::Options options;
    options.eager = config.eager_load;
    models = registry::Registry::open(config.models_dir, options);
    for (const auto& w : models.warnings()) log->warn("models: {}", w);
    log->info("models: {} bundle(s) in {}", models.bundles().size(), config.models_dir.string());

    discover_studies();
    install_routes();
  }

  void discover_studies() {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(config.data_dir, ec))
      throw Error(ErrorCode::DirNotFound, "data directory not found: " + config.data_dir.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(config.data_dir))
      if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
      auto files = volume::list_dicom_files(dir);
      if (files.empty()) continue;
      try {
        std::vector<dicom::SliceGeometry> geometries;
        std::optional<std::string> modality;
        diagnose::PatientInfo patient;
        for (const auto& f : files) {
          const auto ds = dicom::read_dicom_file(f);
          geometries.push_back(dicom::slice_geometry(ds));
          if (!modality) modality = ds.string_value(dicom::tags::kModality);
          if (!patient.id) {
            auto id = ds.string_value(dicom::tags::kPatientId);
            if (id && !id->empty()) patient.id = id;
          }
          if (!patient.name) {
            auto name = ds.string_value(dicom::tags::kPatientName);
            if (name && !name->empty()) patient.name = name;
          }
        }
        const auto plan = volume::plan_series(geometries);
        auto study = std::make_unique<Study>();
        study->id = dir.filename().string();
        study->dir = dir;
        study->files = std::move(files);
        study->dims = {geometries[0].cols, geometries[0].rows, geometries.size()};
        study->spacing = {geometries[0].pixel_spacing[1], geometries[0].pixel_spacing[0],
                          plan.slice_gap};
        study->scan_type_hint = scan_type_hint(modality);
        study->patient = std::move(patient);
        log->info("study '{}': {} slice(s)", study->id, study->dims[2]);
        studies.push_back(std::move(study));
      } catch (const Error& e) {
        log->warn("skipping {}: {}", dir.string(), e.what());
      }
    }
  }

  Study& find_study(const std::string& id) {
    for (auto& s : studies)
      if (s->id == id) return *s;
    http_fail(404, "UnknownStudy", "no study '" + id + "'");
  }

  const volume::Volume& volume_of(Study& study) {
    std::call_once(study.assembled, [&] {
      try {
        std::vector<dicom::PixelSlice> slices;
        for (const auto& f : study.files)
          slices.push_back(dicom::extract_pixels(dicom::read_dicom_file(f)));
        auto v = std::make_shared<volume::Volume>(volume::assemble_volume(slices));
        study.full_range = volume::full_range_window(v->voxels);
        study.vol = std::move(v);
        ++assemblies;
        log->info("assembled volume for study '{}'", study.id);
      } catch (const Error& e) {
        http_fail(422, std::string(error_code_name(e.code())), e.what());
      }
    });
    return *study.vol;
  }

  json study_json(const Study& s) const {
    json j;
    j["study_id"] = s.id;
    j["source_dir"] = s.dir.string();
    j["dims"] = s.dims;
    j["spacing"] = s.spacing;
    j["slices"] = s.files.size();
    j["scan_type_hint"] = s.scan_type_hint.empty() ? json(nullptr) : json(s.scan_type_hint);
    return j;
  }

  static void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void send_error(httplib::Response& res, int status, const std::string& code,
                  const std::string& message) {
    send_json(res, json{{"error", code}, {"message", message}}, status);
  }

  template <typename Handler>
  httplib::Server::Handler guarded(Handler handler) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const HttpError& e) {
        send_error(res, e.status, e.code, e.message);
      } catch (const Error& e) {
        const int status = e.code() == ErrorCode::NoModelForScanType ? 409
                           : e.code() == ErrorCode::IndexOutOfRange || e.code() == ErrorCode::BadWindow
                               ? 400
                               : 422;
        send_error(res, status, std::string(error_code_name(e.code())), e.what());
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "BadRequest", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "InternalError", e.what());
      }
    };
  }

  static json parse_body(const httplib::Request& req) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      http_fail(400, "BadRequest", "request body is not valid JSON");
    }
    if (!body.is_object()) http_fail(400, "BadRequest", "request body must be a JSON object");
    return body;
  }

  void handle_models(const httplib::Request& req, httplib::Response& res) {
    const std::string filter = req.has_param("scan_type") ? req.get_param_value("scan_type") : "";
    json out = json::array();
    for (const auto& b : models.bundles()) {
      if (!filter.empty() && b.scan_type() != filter) continue;
      json classes = json::array();
      try {
        classes = b.labels().classes;
      } catch (const Error& e) {
        log->warn("labels for '{}': {}", b.scan_type(), e.what());
      }
      out.push_back({{"scan_type", b.scan_type()}, {"classes", classes}, {"loaded", b.loaded()}});
    }
    send_json(res, out);
  }

  void handle_studies(const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& s : studies) out.push_back(study_json(*s));
    send_json(res, out);
  }

  void handle_slice(const httplib::Request& req, httplib::Response& res) {
    Study& study = find_study(req.matches[1]);
    const auto plane = parse_plane(req.has_param("plane") ? req.get_param_value("plane") : "axial");
    if (!req.has_param("index")) http_fail(400, "BadRequest", "missing query parameter 'index'");
    const std::size_t index = parse_index(req.get_param_value("index"), "index");
    const volume::Volume& v = volume_of(study);
    double window = study.full_range.window, level = study.full_range.level;
    if (req.has_param("window")) window = parse_real(req.get_param_value("window"), "window");
    if (req.has_param("level")) level = parse_real(req.get_param_value("level"), "level");
    if (!(window > 0.0)) http_fail(400, "BadWindow", "window must be positive");

    const auto slice = volume::extract_slice(v, plane, index);
    const auto bytes = volume::render_window(slice, window, level);
    json out;
    out["study_id"] = study.id;
    out["plane"] = volume::plane_name(plane);
    out["index"] = index;
    out["width"] = slice.cols;
    out["height"] = slice.rows;
    out["window"] = window;
    out["level"] = level;
    out["pixels"] = base64_encode(bytes);
    send_json(res, out);
  }

  void handle_crosshair(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto id = json_string(body, "study_id");
    if (!id) http_fail(400, "BadRequest", "missing field 'study_id'");
    Study& study = find_study(*id);
    const volume::CrosshairPoint p{json_index(body, "x"), json_index(body, "y"), json_index(body, "z")};
    const auto mapping = volume::map_crosshair(p, volume_of(study));
    send_json(res, json{{"axial", plane_coord_json(mapping.axial)},
                        {"coronal", plane_coord_json(mapping.coronal)},
                        {"sagittal", plane_coord_json(mapping.sagittal)}});
  }

  void handle_diagnose(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto scan_type = json_string(body, "scan_type");
    if (!scan_type || scan_type->empty()) http_fail(400, "BadRequest", "missing field 'scan_type'");
    diagnose::PatientInfo patient{json_string(body, "patient_id"), json_string(body, "patient_name")};

    diagnose::DiagnosticRecord record;
    if (auto id = json_string(body, "study_id")) {
      Study& study = find_study(*id);
      models.require(*scan_type);
      const volume::Volume& v = volume_of(study);
      const auto plane = parse_plane(json_string(body, "plane").value_or("axial"));
      const std::size_t index =
          body.contains("index") ? json_index(body, "index") : volume::plane_extent(v, plane) / 2;
      const auto slice = volume::extract_slice(v, plane, index);
      if (!patient.id) patient.id = study.patient.id;
      if (!patient.name) patient.name = study.patient.name;
      const std::string source = study.dir.string() + "#" + std::string(volume::plane_name(plane)) +
                                 ":" + std::to_string(index);
      record = diagnose::predict_image(slice, *scan_type, source, models, patient);
    } else if (auto path = json_string(body, "path")) {
      std::error_code ec;
      if (!std::filesystem::is_regular_file(*path, ec))
        http_fail(404, "FileNotFound", "no file at '" + *path + "'");
      record = diagnose::predict(*path, *scan_type, models, patient);
    } else {
      http_fail(400, "BadRequest", "either 'study_id' or 'path' is required");
    }

    {
      std::lock_guard lock(history_mutex);
      diagnose::append_history(record, config.history_path);
    }
    log->info("diagnosis {}: {} ({:.2f})", record.record_id, record.predicted_class, record.confidence);
    send_json(res, detail::to_json(record));
  }

  void handle_history(const httplib::Request&, httplib::Response& res) {
    std::vector<diagnose::DiagnosticRecord> records;
    {
      std::lock_guard lock(history_mutex);
      records = diagnose::read_history(config.history_path);
    }
    json out = json::array();
    for (const auto& r : records) out.push_back(detail::to_json(r));
    send_json(res, out);
  }

  void handle_export(const httplib::Request& req, httplib::Response& res) {
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "csv";
    if (format != "csv") http_fail(400, "BadRequest", "unsupported export format '" + format + "'");
    std::vector<diagnose::DiagnosticRecord> records;
    {
      std::lock_guard lock(history_mutex);
      records = diagnose::read_history(config.history_path);
    }
    res.set_header("Content-Disposition", "attachment; filename=\"phydcm_history.csv\"");
    res.set_content(diagnose::records_to_csv(records), "text/csv");
  }

  void handle_clear(const httplib::Request&, httplib::Response& res) {
    {
      std::lock_guard lock(history_mutex);
      diagnose::clear_history(config.history_path);
    }
    log->info("history cleared");
    send_json(res, json::array());
  }

  void handle_log(const httplib::Request&, httplib::Response& res) {
    std::string text;
    for (const auto& line : ring->last_formatted()) text += line;
    res.set_content(text, "text/plain");
  }

  void install_routes() {
    using R = const httplib::Request&;
    using S = httplib::Response&;
    http.Get("/api/models", guarded([this](R q, S s) { handle_models(q, s); }));
    http.Get("/api/studies", guarded([this](R q, S s) { handle_studies(q, s); }));
    http.Get(R"(/api/studies/([^/]+)/slice)", guarded([this](R q, S s) { handle_slice(q, s); }));
    http.Post("/api/crosshair", guarded([this](R q, S s) { handle_crosshair(q, s); }));
    http.Post("/api/diagnose", guarded([this](R q, S s) { handle_diagnose(q, s); }));
    http.Get("/api/history", guarded([this](R q, S s) { handle_history(q, s); }));
    http.Get("/api/history/export", guarded([this](R q, S s) { handle_export(q, s); }));
    http.Delete("/api/history", guarded([this](R q, S s) { handle_clear(q, s); }));
    http.Get("/api/log", guarded([this](R q, S s) { handle_log(q, s); }));
    http.Options(R"(/api/.*)", [](R, S s) { s.status = 204; });

    if (config.static_dir) http.set_mount_point("/", config.static_dir->string());

    http.set_post_routing_handler([](R req, S res) {
      const std::string origin = req.get_header_value("Origin");
      if (!origin.empty() && localhost_origin(origin)) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
      }
    });
    http.set_error_handler([this](R, S res) {
      if (res.body.empty())
        send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError",
                   "HTTP " + std::to_string(res.status));
    });
    http.set_logger([this](R req, const httplib::Response& res) {
      log->info("{} {} -> {}", req.method, req.path, res.status);
    });
  }
};

Server::Server(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

int Server::bind() {
  auto& cfg = impl_->config;
  impl_->http.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  int port = cfg.port;
  if (port == 0) {
    port = impl_->http.bind_to_any_port(cfg.host);
    if (port < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + cfg.host);
  } else if (!impl_->http.bind_to_port(cfg.host, port)) {
    throw Error(ErrorCode::IoFailure,
                "cannot bind " + cfg.host + ":" + std::to_string(port) + " (port in use?)");
  }
  impl_->bound = true;
  impl_->log->info("listening on http://{}:{}", cfg.host, port);
  return port;
}

void Server::run() {
  if (!impl_->bound) throw Error(ErrorCode::IoFailure, "server is not bound");
  {
    std::lock_guard lock(impl_->run_mutex);
    if (impl_->stop_requested) return;
    impl_->run_entered = true;
  }
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (!impl_) return;
  bool entered = false;
  {
    std::lock_guard lock(impl_->run_mutex);
    impl_->stop_requested = true;
    entered = impl_->run_entered;
  }
  if (!entered) return;
  impl_->http.wait_until_ready();
  impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

std::size_t Server::volume_assemblies() const { return impl_->assemblies.load(); }

}  // namespace phydcm::service
