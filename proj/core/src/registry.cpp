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

#include "phydcm/registry.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <mutex>
#include <set>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "phydcm/error.hpp"
#include "phydcm/weights.hpp"

namespace phydcm::registry {
namespace {

constexpr std::string_view kModelSuffix = "_model.pdcm";
constexpr std::string_view kLabelsSuffix = "_labels.json";

bool valid_label(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c < 0x80 && !(c >= 'A' && c <= 'Z') && c > 0x20;
  });
}

}  // namespace

std::optional<std::size_t> LabelMap::index_of(std::string_view label) const {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

LabelMap parse_label_map(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadLabels, std::string("label map is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("classes") || !j["classes"].is_array())
    throw Error(ErrorCode::BadLabels, "label map must be an object with a 'classes' array");
  LabelMap labels;
  std::set<std::string> seen;
  for (const auto& item : j["classes"]) {
    if (!item.is_string()) throw Error(ErrorCode::BadLabels, "class labels must be strings");
    auto label = item.get<std::string>();
    if (!valid_label(label))
      throw Error(ErrorCode::BadLabels, "class label '" + label + "' must be non-empty lowercase ASCII");
    if (!seen.insert(label).second)
      throw Error(ErrorCode::BadLabels, "duplicate class label '" + label + "'");
    labels.classes.push_back(std::move(label));
  }
  return labels;
}

LabelMap load_label_map(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_label_map(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string label_map_json(const LabelMap& labels) {
  nlohmann::json j;
  j["classes"] = labels.classes;
  return j.dump(2) + "\n";
}

struct ModelBundle::State {
  WeightLoader loader;
  mutable std::mutex mutex;
  std::optional<LabelMap> labels;
  std::optional<nnet::WeightTable> weights;
};

ModelBundle::ModelBundle(std::string scan_type, std::filesystem::path weights_path,
                         std::filesystem::path labels_path, WeightLoader loader)
    : scan_type_(std::move(scan_type)),
      weights_path_(std::move(weights_path)),
      labels_path_(std::move(labels_path)),
      state_(std::make_shared<State>()) {
  state_->loader = loader ? std::move(loader) : WeightLoader(&nnet::load_weights);
}

bool ModelBundle::loaded() const {
  std::lock_guard lock(state_->mutex);
  return state_->weights.has_value();
}

const LabelMap& ModelBundle::labels() const {
  std::lock_guard lock(state_->mutex);
  if (!state_->labels) state_->labels = load_label_map(labels_path_);
  return *state_->labels;
}

void ModelBundle::load() const {
  std::lock_guard lock(state_->mutex);
  if (state_->weights) return;
  if (!state_->labels) state_->labels = load_label_map(labels_path_);
  if (state_->labels->classes.size() != nnet::kNumClasses)
    throw Error(ErrorCode::LabelCountMismatch,
                scan_type_ + ": label map has " + std::to_string(state_->labels->classes.size()) +
                    " classes, model outputs " + std::to_string(nnet::kNumClasses));
  nnet::WeightTable table = state_->loader(weights_path_);
  nnet::validate_weights(table);
  state_->weights = std::move(table);
}

const nnet::WeightTable& ModelBundle::weights() const {
  load();
  std::lock_guard lock(state_->mutex);
  return *state_->weights;
}

const ModelBundle& load_bundle(const ModelBundle& bundle) {
  bundle.load();
  return bundle;
}

ScanResult scan_models_dir(const std::filesystem::path& dir,
                           const std::optional<std::string>& filter, WeightLoader loader) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error(ErrorCode::DirNotFound, "models directory not found: " + dir.string());

  struct Halves {
    std::optional<fs::path> model, labels;
  };
  std::map<std::string, Halves> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    for (auto [suffix, is_model] : {std::pair{kModelSuffix, true}, std::pair{kLabelsSuffix, false}}) {
      if (name.size() > suffix.size() && name.ends_with(suffix)) {
        std::string scan_type = name.substr(0, name.size() - suffix.size());
        if (filter && scan_type != *filter) continue;
        (is_model ? found[scan_type].model : found[scan_type].labels) = entry.path();
      }
    }
  }

  ScanResult result;
  for (const auto& [scan_type, halves] : found) {
    if (halves.model && halves.labels) {
      result.bundles.emplace_back(scan_type, *halves.model, *halves.labels, loader);
    } else if (halves.model) {
      result.warnings.push_back("orphan model file " + halves.model->filename().string() +
                                " has no " + scan_type + std::string(kLabelsSuffix));
    } else {
      result.warnings.push_back("orphan label file " + halves.labels->filename().string() +
                                " has no " + scan_type + std::string(kModelSuffix));
    }
  }
  return result;
}

Registry Registry::open(const std::filesystem::path& dir, Options options) {
  ScanResult scan = scan_models_dir(dir, options.filter, options.loader);
  Registry r;
  r.dir_ = dir;
  r.bundles_ = std::move(scan.bundles);
  r.warnings_ = std::move(scan.warnings);
  if (options.eager) {
    for (const auto& b : r.bundles_) b.load();
  }
  return r;
}

const ModelBundle* Registry::find(std::string_view scan_type) const {
  for (const auto& b : bundles_)
    if (b.scan_type() == scan_type) return &b;
  return nullptr;
}

const ModelBundle& Registry::require(std::string_view scan_type) const {
  const ModelBundle* b = find(scan_type);
  if (!b)
    throw Error(ErrorCode::NoModelForScanType,
                "no model for scan type '" + std::string(scan_type) + "' in " + dir_.string());
  return load_bundle(*b);
}

std::filesystem::path default_models_dir() {
  if (const char* env = std::getenv(std::string(kModelsDirEnv).c_str()); env && *env) return env;
  return "models";
}

}  // namespace phydcm::registry
