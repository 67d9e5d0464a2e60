// Copyright 2026 The LSR Authors.
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsr {

// Every failure raised by the library carries one of these kinds. The CLI maps
// them onto process exit codes (see ExitCodeFor).
enum class ErrorKind {
  kDimension,       // shape disagreement between operands
  kDomain,          // argument outside the function's domain (log1p of x <= -1)
  kShape,           // wrong rank/size for an operation's contract
  kState,           // object used in the wrong lifecycle state
  kVocabulary,      // term id outside the vocabulary
  kDegenerateMask,  // attention row with every position masked
  kNumeric,         // NaN/Inf encountered
  kContract,        // precondition violated by the caller
  kEmptyInput,      // sequence that tokenizes to nothing
  kLength,          // sequence longer than max_seq_len
  kInput,           // invalid input data (duplicate names, bad config values)
  kFormat,          // malformed or truncated file
  kCompatibility,   // checkpoint/vocabulary mismatch
  kUsage,           // bad command-line or config usage
};

std::string_view ToString(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ToString(kind)) + " error: " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) {
    throw Error(kind, message);
  }
}

// Exit codes: 2 usage, 3 numeric, 4 compatibility, 5 format; 1 otherwise.
int ExitCodeFor(ErrorKind kind);

}  // namespace lsr
