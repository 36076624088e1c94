// Copyright 2026 The rbridge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rbridge/error.hpp"

namespace rbridge {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::ParseFailure: return "parse-failure";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Boundary: return "boundary";
    case ErrorKind::DegenerateFit: return "degenerate-fit";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::Data: return "data";
    case ErrorKind::Provider: return "provider";
    case ErrorKind::Capability: return "capability";
    case ErrorKind::PartialResults: return "partial-results";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Validation:
      return 1;
    case ErrorKind::Provider:
    case ErrorKind::Capability:
    case ErrorKind::PartialResults:
      return 2;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

AlignmentError::AlignmentError(std::size_t offset, const std::string& message)
    : Error(ErrorKind::Alignment, message + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace rbridge
