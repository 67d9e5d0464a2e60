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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsr/model.hpp"
#include "lsr/training.hpp"

namespace lsr {

// Parsed training config file. Relative data paths resolve against the
// directory holding the config.
struct TrainJob {
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path vocab;
  std::filesystem::path triplets;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics_log;
  std::optional<ScoreStats> teacher_reference;
};

// Missing keys raise a usage error naming the dotted key path.
TrainJob ParseTrainJob(const nlohmann::json& config, const std::filesystem::path& base_dir);
TrainJob LoadTrainJob(const std::filesystem::path& config_path);

struct TrainJobOutcome {
  std::uint64_t checkpoint_digest = 0;
  TrainResult result;
};

// Trains, writes the checkpoint and the JSON-lines metrics log.
TrainJobOutcome RunTrainJob(const TrainJob& job);

// Runs the command line; returns the process exit code.
int RunCli(const std::vector<std::string>& args);

}  // namespace lsr
