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
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace phydcm::service {

inline constexpr int kDefaultPort = 8640;
inline constexpr std::size_t kLogLines = 200;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;  ///< 0 binds any free port
  std::filesystem::path models_dir = "models";
  std::filesystem::path data_dir = "data";
  std::filesystem::path history_path = "phydcm_history.json";
  std::optional<std::filesystem::path> static_dir;  ///< served at / when set
  bool eager_load = true;
  bool log_to_stderr = true;
};

/// Local HTTP/JSON service over a models directory and a read-only data
/// directory. Endpoints:
///   GET    /api/models[?scan_type=S]
///   GET    /api/studies
///   GET    /api/studies/{id}/slice?plane=P&index=K[&window=W&level=L]
///   POST   /api/crosshair   {study_id, x, y, z}
///   POST   /api/diagnose    {study_id | path, plane?, index?, scan_type,
///                            patient_id?, patient_name?}
///   GET    /api/history
///   GET    /api/history/export?format=csv
///   DELETE /api/history
///   GET    /api/log
class Server {
 public:
  /// Opens the registry and discovers studies. Throws DirNotFound.
  explicit Server(ServiceConfig config);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listening socket and returns the port. Throws IoFailure when
  /// the port is unavailable.
  int bind();
  /// Serves until stop(). Requires a successful bind().
  void run();
  void stop();
  bool running() const;

  /// Number of volumes assembled so far (each study at most once).
  std::size_t volume_assemblies() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace phydcm::service
