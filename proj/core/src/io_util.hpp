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
#include <string_view>
#include <vector>

namespace phydcm::detail {

/// Whole file, or the first `limit` bytes when limit is non-zero.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path, std::size_t limit = 0);

void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace phydcm::detail
