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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lsr {

struct GradCheckOptions {
  std::uint64_t seed = 1;
  std::size_t points = 10;
  double eps = 1e-6;
  double tolerance = 1e-5;
  // Also check backbone + head + training loss for every backbone/head pairing.
  bool composite = true;
};

struct GradCheckResult {
  std::string name;
  double max_error = 0.0;  // worst over all points
  bool passed = false;
};

// Central-difference check of every differentiable tape operation (inputs
// kept at least 1e-3 away from the ReLU kink) and, optionally, of the full
// training loss on a tiny randomized model.
std::vector<GradCheckResult> RunGradientSuite(const GradCheckOptions& options = {});

}  // namespace lsr
