// Copyright 2026 The vidlabel Authors
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

#include "vidlabel/error.hpp"

namespace vidlabel {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegenerateVector: return "DegenerateVector";
    case ErrorKind::kDimMismatch: return "DimMismatch";
    case ErrorKind::kEmptyPool: return "EmptyPool";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kSourceHasNoTime: return "SourceHasNoTime";
    case ErrorKind::kNotFamous: return "NotFamous";
    case ErrorKind::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Error";
}

}  // namespace vidlabel
