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

#include <csignal>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phydcm/diagnose.hpp"
#include "phydcm/error.hpp"
#include "phydcm/fixtures.hpp"
#include "phydcm/format.hpp"
#include "phydcm/metrics.hpp"
#include "phydcm/pgm.hpp"
#include "phydcm/registry.hpp"
#include "phydcm/service.hpp"
#include "phydcm/volume.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace phydcm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct PredictArgs {
  std::string input;
  std::string scan_type;
  std::string models_dir;
  std::string history;
  std::string patient_id;
  std::string patient_name;
  bool json = false;
};

struct EvaluateArgs {
  std::string dataset;
  std::string scan_type;
  std::string models_dir;
  std::string report;
  std::string name;
  bool table = false;
};

struct MprArgs {
  std::string series;
  std::string plane;
  std::size_t index = 0;
  std::string out;
  std::optional<double> window;
  std::optional<double> level;
  bool json = false;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = service::kDefaultPort;
  std::string models_dir;
  std::string data_dir = "data";
  std::string history = "phydcm_history.json";
  std::string static_dir;
  bool lazy = false;
};

struct FixtureArgs {
  std::string seed = "5EED";
  std::string out;
  bool json = false;
};

fs::path models_dir_or_default(const std::string& flag) {
  return flag.empty() ? registry::default_models_dir() : fs::path(flag);
}

int run_predict(const PredictArgs& a) {
  const auto models = registry::Registry::open(models_dir_or_default(a.models_dir));
  diagnose::PatientInfo patient;
  if (!a.patient_id.empty()) patient.id = a.patient_id;
  if (!a.patient_name.empty()) patient.name = a.patient_name;
  const auto record = diagnose::predict(a.input, a.scan_type, models, patient);
  if (!a.history.empty()) diagnose::append_history(record, a.history);
  if (a.json) {
    std::cout << diagnose::record_to_json(record, 2) << "\n";
  } else {
    std::cout << record.predicted_class << " (confidence " << format_fixed(record.confidence, 2)
              << ")\n";
  }
  return kExitOk;
}

int run_evaluate(const EvaluateArgs& a) {
  const auto models = registry::Registry::open(models_dir_or_default(a.models_dir));
  const auto result = metrics::evaluate_dir(a.dataset, models, a.scan_type);
  const std::string name = a.name.empty() ? fs::path(a.dataset).filename().string() : a.name;
  const std::string report = metrics::report_to_json(result.report, result.cm, name, a.scan_type);
  if (!a.report.empty()) {
    std::ofstream out(a.report, std::ios::binary);
    out << report << "\n";
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write report " + a.report);
  }
  if (a.table) {
    std::cout << metrics::render_table(result.report, name);
  } else if (a.report.empty()) {
    std::cout << report << "\n";
  } else {
    std::cout << "overall accuracy " << metrics::format_pct(result.report.overall_accuracy_pct)
              << "% (" << result.report.correct << "/" << result.report.tested << ")\n";
  }
  return kExitOk;
}

int run_mpr(const MprArgs& a) {
  const auto v = volume::load_series(a.series);
  const auto plane = *volume::plane_from_name(a.plane);
  const auto slice = volume::extract_slice(v, plane, a.index);
  const auto full = volume::full_range_window(v.voxels);
  const double window = a.window.value_or(full.window);
  const double level = a.level.value_or(full.level);
  const auto bytes = volume::render_window(slice, window, level);
  pgm::write_pgm(a.out, pgm::from_bytes(slice.cols, slice.rows, bytes));
  if (a.json) {
    json j{{"out", a.out},       {"plane", a.plane},   {"index", a.index},
           {"width", slice.cols}, {"height", slice.rows}, {"window", window},
           {"level", level}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << a.out << ": " << slice.cols << "x" << slice.rows << " " << a.plane << " slice "
              << a.index << "\n";
  }
  return kExitOk;
}

int run_models(const std::string& dir_flag, bool as_json) {
  const auto models = registry::Registry::open(models_dir_or_default(dir_flag));
  for (const auto& w : models.warnings()) std::cerr << "warning: " << w << "\n";
  json out = json::array();
  for (const auto& b : models.bundles()) {
    json entry{{"scan_type", b.scan_type()}, {"weights", b.weights_path().string()}};
    try {
      entry["classes"] = b.labels().classes;
    } catch (const Error& e) {
      entry["classes"] = nullptr;
      std::cerr << "warning: " << e.what() << "\n";
    }
    out.push_back(std::move(entry));
  }
  if (as_json) {
    std::cout << out.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& e : out) {
    std::cout << e["scan_type"].get<std::string>() << "\t" << e["weights"].get<std::string>();
    if (e["classes"].is_array()) {
      std::cout << "\t";
      for (std::size_t i = 0; i < e["classes"].size(); ++i)
        std::cout << (i ? "," : "") << e["classes"][i].get<std::string>();
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int run_serve(const ServeArgs& a) {
  service::ServiceConfig cfg;
  cfg.host = a.host;
  cfg.port = a.port;
  cfg.models_dir = models_dir_or_default(a.models_dir);
  cfg.data_dir = a.data_dir;
  cfg.history_path = a.history;
  if (!a.static_dir.empty()) cfg.static_dir = fs::path(a.static_dir);
  cfg.eager_load = !a.lazy;

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Server server(cfg);
  const int port = server.bind();
  std::cout << "serving on http://" << a.host << ":" << port << std::endl;

  std::thread worker([&] {
    server.run();
    kill(getpid(), SIGTERM);
  });
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  worker.join();
  return kExitOk;
}

std::uint64_t parse_seed(const std::string& text) {
  std::string_view s = text;
  if (s.starts_with("0x") || s.starts_with("0X")) s.remove_prefix(2);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw CLI::ValidationError("--seed", "expected a hexadecimal integer, got '" + text + "'");
  return v;
}

int run_gen_fixture(const FixtureArgs& a, std::uint64_t seed) {
  const auto layout = fixtures::generate(a.out, seed);
  if (a.json) {
    json files = json::array();
    for (const auto& f : layout.series_files) files.push_back(f.string());
    json j{{"root", layout.root.string()},
           {"models_dir", layout.models_dir.string()},
           {"data_dir", layout.data_dir.string()},
           {"series_dir", layout.series_dir.string()},
           {"series_files", files},
           {"slice_dicom", layout.slice_dicom.string()},
           {"pgm", layout.pgm_path.string()},
           {"dataset_dir", layout.dataset_dir.string()}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "fixture written to " << layout.root.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PhyDCM: DICOM viewing and brain MRI classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "phydcm 1.0.0");

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Classify one DICOM or PGM image");
  predict->add_option("--input", pa.input, "Image file")->required();
  predict->add_option("--scan-type", pa.scan_type, "Model key, e.g. mri")->required();
  predict->add_option("--models-dir", pa.models_dir, "Models directory (default $PHYDCM_MODELS_DIR or ./models)");
  predict->add_option("--history", pa.history, "Append the record to this JSON history file");
  predict->add_option("--patient-id", pa.patient_id);
  predict->add_option("--patient-name", pa.patient_name);
  predict->add_flag("--json", pa.json, "Print the full record as JSON");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a labelled dataset directory");
  evaluate->add_option("--dataset", ea.dataset, "Directory of <class>/ folders")->required();
  evaluate->add_option("--scan-type", ea.scan_type)->required();
  evaluate->add_option("--models-dir", ea.models_dir);
  evaluate->add_option("--report", ea.report, "Write the JSON report here");
  evaluate->add_option("--name", ea.name, "Dataset name used in the report");
  evaluate->add_flag("--table", ea.table, "Print the per-class table");

  MprArgs ma;
  auto* mpr = app.add_subcommand("mpr", "Export one reformatted slice as PGM");
  mpr->add_option("--series", ma.series, "DICOM series directory")->required();
  mpr->add_option("--plane", ma.plane)->required()->check(CLI::IsMember({"axial", "coronal", "sagittal"}));
  mpr->add_option("--index", ma.index)->required();
  mpr->add_option("--out", ma.out, "Output PGM path")->required();
  mpr->add_option("--window", ma.window)->check(CLI::PositiveNumber);
  mpr->add_option("--level", ma.level);
  mpr->add_flag("--json", ma.json);

  std::string models_dir;
  bool models_json = false;
  auto* models = app.add_subcommand("models", "List model bundles");
  models->add_option("--models-dir", models_dir);
  models->add_flag("--json", models_json);

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
  serve->add_option("--host", sa.host)->capture_default_str();
  serve->add_option("--port", sa.port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--models-dir", sa.models_dir);
  serve->add_option("--data-dir", sa.data_dir)->capture_default_str();
  serve->add_option("--history", sa.history)->capture_default_str();
  serve->add_option("--static-dir", sa.static_dir, "Serve viewer files from this directory");
  serve->add_flag("--lazy", sa.lazy, "Load model weights on first use");

  FixtureArgs fa;
  std::uint64_t seed = fixtures::kDefaultSeed;
  auto* fixture = app.add_subcommand("gen-fixture", "Write deterministic weights, series and images");
  fixture->add_option("--seed", fa.seed, "Hexadecimal seed")->capture_default_str();
  fixture->add_option("--out", fa.out)->required();
  fixture->add_flag("--json", fa.json);

  try {
    app.parse(argc, argv);
    if (fixture->parsed()) seed = parse_seed(fa.seed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (predict->parsed()) return run_predict(pa);
    if (evaluate->parsed()) return run_evaluate(ea);
    if (mpr->parsed()) return run_mpr(ma);
    if (models->parsed()) return run_models(models_dir, models_json);
    if (serve->parsed()) return run_serve(sa);
    if (fixture->parsed()) return run_gen_fixture(fa, seed);
  } catch (const Error& e) {
    std::cerr << "phydcm: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "phydcm: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
