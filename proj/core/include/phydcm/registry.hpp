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

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phydcm/nnet.hpp"

namespace phydcm::registry {

/// Class order used by the shipped MRI model.
inline const std::vector<std::string> kMriClasses = {"glioma", "meningioma", "pituitary",
                                                     "notumor"};

inline constexpr std::string_view kModelsDirEnv = "PHYDCM_MODELS_DIR";

struct LabelMap {
  std::vector<std::string> classes;

  std::optional<std::size_t> index_of(std::string_view label) const;
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Parses {"classes": [...]}. Labels must be unique, non-empty lowercase
/// ASCII; throws BadLabels otherwise.
LabelMap parse_label_map(std::string_view json);
LabelMap load_label_map(const std::filesystem::path& path);
std::string label_map_json(const LabelMap& labels);

using WeightLoader = std::function<nnet::WeightTable(const std::filesystem::path&)>;

/// Handle to one (weights, labels) pair. Copies share load state, so a
/// bundle is read from disk at most once however many handles exist.
class ModelBundle {
 public:
  ModelBundle(std::string scan_type, std::filesystem::path weights_path,
              std::filesystem::path labels_path, WeightLoader loader = {});

  const std::string& scan_type() const noexcept { return scan_type_; }
  const std::filesystem::path& weights_path() const noexcept { return weights_path_; }
  const std::filesystem::path& labels_path() const noexcept { return labels_path_; }

  bool loaded() const;

  /// Loads and validates weights and labels. Idempotent and safe to call
  /// concurrently; throws codec errors or LabelCountMismatch.
  void load() const;

  /// Label map only; does not touch the weight file.
  const LabelMap& labels() const;
  /// Loads on first use.
  const nnet::WeightTable& weights() const;

 private:
  struct State;
  std::string scan_type_;
  std::filesystem::path weights_path_;
  std::filesystem::path labels_path_;
  std::shared_ptr<State> state_;
};

/// Loads `bundle` (no-op when already loaded) and returns it.
const ModelBundle& load_bundle(const ModelBundle& bundle);

struct ScanResult {
  std::vector<ModelBundle> bundles;  ///< sorted by scan type, unloaded
  std::vector<std::string> warnings;
};

/// Pairs <scan_type>_model.pdcm with <scan_type>_labels.json. Unpaired files
/// become warnings. Throws DirNotFound.
ScanResult scan_models_dir(const std::filesystem::path& dir,
                           const std::optional<std::string>& filter = std::nullopt,
                           WeightLoader loader = {});

class Registry {
 public:
  struct Options {
    std::optional<std::string> filter;
    bool eager = false;
    WeightLoader loader;
  };

  static Registry open(const std::filesystem::path& dir, Options options);
  static Registry open(const std::filesystem::path& dir) { return open(dir, Options{}); }

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::vector<ModelBundle>& bundles() const noexcept { return bundles_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  const ModelBundle* find(std::string_view scan_type) const;
  /// Loaded bundle for `scan_type`; throws NoModelForScanType.
  const ModelBundle& require(std::string_view scan_type) const;

 private:
  std::filesystem::path dir_;
  std::vector<ModelBundle> bundles_;
  std::vector<std::string> warnings_;
};

/// $PHYDCM_MODELS_DIR if set, else "models".
std::filesystem::path default_models_dir();

}  // namespace phydcm::registry
