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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rbridge {

enum class ErrorKind {
  InvalidInput,
  Validation,
  ParseFailure,
  Alignment,
  Boundary,
  DegenerateFit,
  UndefinedCorrelation,
  Data,
  Provider,
  Capability,
  PartialResults,
};

const char* to_string(ErrorKind kind);

// CLI exit code for an error kind: 1 validation, 2 provider, 3 data/alignment.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Text mismatch while aligning byte sequences; `offset` is the first byte
// position where the two sides disagree.
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t offset, const std::string& message);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace rbridge
