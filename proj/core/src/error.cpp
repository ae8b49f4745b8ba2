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

#include "phydcm/error.hpp"

namespace phydcm {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedTransferSyntax: return "UnsupportedTransferSyntax";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::MalformedElement: return "MalformedElement";
    case ErrorCode::MissingTag: return "MissingTag";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadGeometry: return "BadGeometry";
    case ErrorCode::InconsistentSeries: return "InconsistentSeries";
    case ErrorCode::DuplicatePosition: return "DuplicatePosition";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::BadWindow: return "BadWindow";
    case ErrorCode::BadSize: return "BadSize";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::WeightsMissing: return "WeightsMissing";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DirNotFound: return "DirNotFound";
    case ErrorCode::LabelCountMismatch: return "LabelCountMismatch";
    case ErrorCode::BadLabels: return "BadLabels";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::NoModelForScanType: return "NoModelForScanType";
    case ErrorCode::CorruptHistory: return "CorruptHistory";
    case ErrorCode::UnknownClassDir: return "UnknownClassDir";
  }
  return "Unknown";
}

}  // namespace phydcm
