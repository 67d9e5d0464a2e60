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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsr/model.hpp"
#include "lsr/sparse_vector.hpp"
#include "lsr/tensor.hpp"
#include "lsr/text.hpp"

namespace lsr {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t total_steps = 5000;
  std::size_t warmup_steps = 0;
  double learning_rate = 1e-3;
  double lambda_q = 0.0;
  double lambda_d = 0.0;
  std::size_t lambda_ramp_steps = 1000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // A metrics record is emitted every `log_every` steps and at the last step.
  std::size_t log_every = 100;

  void Validate() const;
};

struct ScoreStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

ScoreStats ComputeStats(std::span<const double> values);

// (1/|B|) Σ (student − teacher)².
double MarginMse(std::span<const double> student_margins, std::span<const double> teacher_margins);
Var MarginMse(Tape& tape, std::span<const Var> student_margins,
              std::span<const double> teacher_margins);

// Σ_v ((1/|B|) Σ_x w_v(x))² over the vocabulary.
double FlopsRegularizer(std::span<const SparseVector> batch, std::size_t vocab_size);
// Same penalty on dense [1×|V|] activation rows so gradients flow.
Var FlopsRegularizer(Tape& tape, std::span<const Var> dense_rows);

// lambda_max · min(1, step / ramp)².
double LambdaSchedule(std::size_t step, std::size_t ramp, double lambda_max);
// Linear warmup to `rate` over `warmup` steps, constant afterwards.
double WarmupLearningRate(std::size_t step, std::size_t warmup, double rate);

// (s − μ_src)/σ_src · σ_ref + μ_ref.
std::vector<double> AffineTransformScores(std::span<const double> scores, const ScoreStats& ref);
// Pools every teacher score of the dataset, then maps them onto `ref`.
void NormalizeTeacherScores(std::span<TrainingTriplet> triplets, const ScoreStats& ref);

struct StepReport {
  std::size_t step = 0;
  double loss = 0.0;
  double margin_loss = 0.0;
  double reg_q = 0.0;
  double reg_d = 0.0;
  double grad_norm = 0.0;
  double density_q = 0.0;
  double density_d = 0.0;
  double lr = 0.0;
  double lambda_q = 0.0;
  double lambda_d = 0.0;

  nlohmann::ordered_json ToJson() const;
  friend bool operator==(const StepReport&, const StepReport&) = default;
};

// One Adam-driven optimization loop over a model. Steps are numbered from 1;
// the warmup rate and the λ ramp are evaluated at the step being taken.
class Trainer {
 public:
  Trainer(SparseEncoder& model, const TrainConfig& config);

  // Encodes every query, positive and negative, scores margins by dot product
  // of dense activations, and applies one Adam update on
  // margin_mse + λ_q(t)·reg_q + λ_d(t)·reg_d. A non-finite loss raises a
  // numeric error naming the component and leaves the model untouched.
  StepReport Step(std::span<const TrainingTriplet> batch);

  std::size_t steps_taken() const { return step_; }

 private:
  SparseEncoder& model_;
  TrainConfig config_;
  std::vector<NamedTensor> params_;
  std::vector<std::vector<double>> first_moment_, second_moment_;
  std::size_t step_ = 0;
};

struct TrainResult {
  std::vector<StepReport> reports;  // every step
  std::vector<nlohmann::ordered_json> log;  // emitted metrics records
};

using MetricsSink = std::function<void(const nlohmann::ordered_json&)>;

// Runs config.total_steps steps over seeded per-epoch shuffles of `dataset`.
// Metrics records go to `sink` (and into the result); one epoch record with the
// mean query/document density is emitted whenever a pass over the data ends.
TrainResult Train(SparseEncoder& model, std::span<const TrainingTriplet> dataset,
                  const TrainConfig& config, const MetricsSink& sink = {});

}  // namespace lsr
