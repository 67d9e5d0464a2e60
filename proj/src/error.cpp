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

#include "lsr/error.hpp"

namespace lsr {

std::string_view ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kState: return "state";
    case ErrorKind::kVocabulary: return "vocabulary";
    case ErrorKind::kDegenerateMask: return "degenerate-mask";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kLength: return "length";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kCompatibility: return "compatibility";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 2;
    case ErrorKind::kNumeric: return 3;
    case ErrorKind::kCompatibility: return 4;
    case ErrorKind::kFormat: return 5;
    default: return 1;
  }
}

}  // namespace lsr
