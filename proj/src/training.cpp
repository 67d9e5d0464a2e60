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

#include "lsr/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lsr/error.hpp"
#include "lsr/random.hpp"

namespace lsr {

void TrainConfig::Validate() const {
  Require(batch_size >= 1, ErrorKind::kInput, "batch_size must be >= 1");
  Require(warmup_steps <= total_steps, ErrorKind::kInput, "warmup_steps exceeds total_steps");
  Require(lambda_q >= 0.0 && lambda_d >= 0.0, ErrorKind::kInput, "lambda values must be >= 0");
  Require(lambda_ramp_steps >= 1, ErrorKind::kInput, "lambda_ramp_steps must be >= 1");
  Require(learning_rate > 0.0, ErrorKind::kInput, "learning_rate must be > 0");
  Require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0,
          ErrorKind::kInput, "invalid Adam hyperparameters");
  Require(log_every >= 1, ErrorKind::kInput, "log_every must be >= 1");
}

ScoreStats ComputeStats(std::span<const double> values) {
  Require(!values.empty(), ErrorKind::kContract, "statistics of an empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

double MarginMse(std::span<const double> student, std::span<const double> teacher) {
  Require(!student.empty(), ErrorKind::kContract, "margin_mse on an empty batch");
  Require(student.size() == teacher.size(), ErrorKind::kContract,
          "margin_mse: " + std::to_string(student.size()) + " student vs " +
              std::to_string(teacher.size()) + " teacher margins");
  double total = 0.0;
  for (std::size_t i = 0; i < student.size(); ++i) {
    const double d = student[i] - teacher[i];
    total += d * d;
  }
  return total / static_cast<double>(student.size());
}

Var MarginMse(Tape& tape, std::span<const Var> student, std::span<const double> teacher) {
  Require(!student.empty(), ErrorKind::kContract, "margin_mse on an empty batch");
  Require(student.size() == teacher.size(), ErrorKind::kContract,
          "margin_mse: " + std::to_string(student.size()) + " student vs " +
              std::to_string(teacher.size()) + " teacher margins");
  Var margins = tape.Reshape(tape.ConcatRows(student), {student.size()});
  Var targets = tape.Constant(Tensor(Shape{teacher.size()}, std::vector<double>(teacher.begin(), teacher.end())));
  return tape.Mean(tape.Square(tape.Sub(margins, targets)));
}

double FlopsRegularizer(std::span<const SparseVector> batch, std::size_t vocab_size) {
  Require(!batch.empty(), ErrorKind::kContract, "FLOPs regularizer on an empty batch");
  std::vector<double> mean(vocab_size, 0.0);
  for (const auto& v : batch) {
    for (const auto& e : v.entries()) {
      Require(e.term < vocab_size, ErrorKind::kVocabulary, "term outside vocabulary");
      mean[e.term] += e.weight;
    }
  }
  double total = 0.0;
  for (double& m : mean) {
    m /= static_cast<double>(batch.size());
    total += m * m;
  }
  return total;
}

Var FlopsRegularizer(Tape& tape, std::span<const Var> dense_rows) {
  Require(!dense_rows.empty(), ErrorKind::kContract, "FLOPs regularizer on an empty batch");
  Var stacked = tape.ConcatRows(dense_rows);
  Var mean = tape.Scale(tape.SumOverAxis(stacked, 0), 1.0 / static_cast<double>(dense_rows.size()));
  return tape.Sum(tape.Square(mean));
}

double LambdaSchedule(std::size_t step, std::size_t ramp, double lambda_max) {
  Require(ramp >= 1, ErrorKind::kContract, "lambda ramp must be >= 1 step");
  const double fraction = std::min(1.0, static_cast<double>(step) / static_cast<double>(ramp));
  return lambda_max * fraction * fraction;
}

double WarmupLearningRate(std::size_t step, std::size_t warmup, double rate) {
  if (warmup == 0) return rate;
  return rate * std::min(1.0, static_cast<double>(step) / static_cast<double>(warmup));
}

std::vector<double> AffineTransformScores(std::span<const double> scores, const ScoreStats& ref) {
  Require(scores.size() >= 2, ErrorKind::kContract, "affine transform needs at least two scores");
  const ScoreStats src = ComputeStats(scores);
  Require(src.std > 0.0, ErrorKind::kContract,
          "degenerate score distribution: zero standard deviation cannot be rescaled");
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = (scores[i] - src.mean) / src.std * ref.std + ref.mean;
  }
  return out;
}

void NormalizeTeacherScores(std::span<TrainingTriplet> triplets, const ScoreStats& ref) {
  std::vector<double> pooled;
  pooled.reserve(2 * triplets.size());
  for (const auto& t : triplets) {
    pooled.push_back(t.teacher_pos);
    pooled.push_back(t.teacher_neg);
  }
  const auto mapped = AffineTransformScores(pooled, ref);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    triplets[i].teacher_pos = mapped[2 * i];
    triplets[i].teacher_neg = mapped[2 * i + 1];
  }
}

nlohmann::ordered_json StepReport::ToJson() const {
  return {{"step", step},       {"loss", loss},           {"margin_loss", margin_loss},
          {"reg_q", reg_q},     {"reg_d", reg_d},         {"density_q", density_q},
          {"density_d", density_d}, {"lr", lr},           {"lambda", lambda_d},
          {"lambda_q", lambda_q}, {"lambda_d", lambda_d}, {"grad_norm", grad_norm}};
}

// ---------------------------------------------------------------- trainer

namespace {

double MeanNonzero(const Tape& tape, std::span<const Var> rows) {
  double total = 0.0;
  for (Var r : rows) {
    for (double v : tape.value(r).data()) total += v > 0.0 ? 1.0 : 0.0;
  }
  return total / static_cast<double>(rows.size());
}

void RequireFiniteComponent(double value, const char* name, std::size_t step) {
  if (!std::isfinite(value)) {
    Fail(ErrorKind::kNumeric, std::string("non-finite ") + name + " (" + std::to_string(value) +
                                  ") at step " + std::to_string(step));
  }
}

}  // namespace

Trainer::Trainer(SparseEncoder& model, const TrainConfig& config)
    : model_(model), config_(config), params_(model.NamedParameters()) {
  config_.Validate();
  for (const auto& [name, tensor] : params_) {
    tensor->set_requires_grad(true);
    tensor->clear_grad();
    first_moment_.emplace_back(tensor->size(), 0.0);
    second_moment_.emplace_back(tensor->size(), 0.0);
  }
}

StepReport Trainer::Step(std::span<const TrainingTriplet> batch) {
  Require(!batch.empty(), ErrorKind::kContract, "train step on an empty batch");
  const std::size_t t = step_ + 1;
  StepReport report;
  report.step = t;
  report.lr = WarmupLearningRate(t, config_.warmup_steps, config_.learning_rate);
  report.lambda_q = LambdaSchedule(t, config_.lambda_ramp_steps, config_.lambda_q);
  report.lambda_d = LambdaSchedule(t, config_.lambda_ramp_steps, config_.lambda_d);

  Tape tape;
  const auto bound = model_.Bind(tape);
  std::vector<Var> queries, docs, margins;
  std::vector<double> teacher;
  queries.reserve(batch.size());
  docs.reserve(2 * batch.size());
  for (const auto& triplet : batch) {
    Var q = model_.EncodeDense(tape, bound, triplet.query_tokens);
    Var pos = model_.EncodeDense(tape, bound, triplet.pos_tokens);
    Var neg = model_.EncodeDense(tape, bound, triplet.neg_tokens);
    margins.push_back(tape.Sub(tape.Dot(q, pos), tape.Dot(q, neg)));
    teacher.push_back(triplet.teacher_pos - triplet.teacher_neg);
    queries.push_back(q);
    docs.push_back(pos);
    docs.push_back(neg);
  }
  Var margin_loss = MarginMse(tape, margins, teacher);
  Var reg_q = FlopsRegularizer(tape, queries);
  Var reg_d = FlopsRegularizer(tape, docs);
  Var loss = tape.Add(margin_loss, tape.Add(tape.Scale(reg_q, report.lambda_q),
                                            tape.Scale(reg_d, report.lambda_d)));
  report.margin_loss = tape.value(margin_loss).item();
  report.reg_q = tape.value(reg_q).item();
  report.reg_d = tape.value(reg_d).item();
  report.loss = tape.value(loss).item();
  report.density_q = MeanNonzero(tape, queries);
  report.density_d = MeanNonzero(tape, docs);
  RequireFiniteComponent(report.margin_loss, "margin_loss", t);
  RequireFiniteComponent(report.reg_q, "reg_q", t);
  RequireFiniteComponent(report.reg_d, "reg_d", t);
  RequireFiniteComponent(report.loss, "loss", t);

  for (auto& [name, tensor] : params_) tensor->zero_grad();
  tape.Backward(loss);

  double norm_sq = 0.0;
  for (const auto& [name, tensor] : params_) {
    for (double g : tensor->grad()) norm_sq += g * g;
  }
  report.grad_norm = std::sqrt(norm_sq);
  RequireFiniteComponent(report.grad_norm, "gradient norm", t);

  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& tensor = *params_[p].second;
    if (!tensor.has_grad()) continue;
    auto data = tensor.data();
    const auto grad = tensor.grad();
    auto& m = first_moment_[p];
    auto& v = second_moment_[p];
    for (std::size_t i = 0; i < data.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      data[i] -= report.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    tensor.zero_grad();
  }
  step_ = t;
  return report;
}

TrainResult Train(SparseEncoder& model, std::span<const TrainingTriplet> dataset,
                  const TrainConfig& config, const MetricsSink& sink) {
  config.Validate();
  Require(!dataset.empty(), ErrorKind::kContract, "training needs a non-empty dataset");
  TrainResult result;
  auto emit = [&](nlohmann::ordered_json record) {
    if (sink) sink(record);
    result.log.push_back(std::move(record));
  };
  if (config.total_steps == 0) return result;

  Trainer trainer(model, config);
  Rng rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;
  std::size_t consumed = 0, completed_epochs = 0, epoch_steps = 0;
  double density_q = 0.0, density_d = 0.0;
  auto emit_epoch = [&](std::size_t step, bool partial) {
    nlohmann::ordered_json record = {{"epoch", partial ? completed_epochs + 1 : completed_epochs},
                                     {"step", step},
                                     {"density_q", density_q / static_cast<double>(epoch_steps)},
                                     {"density_d", density_d / static_cast<double>(epoch_steps)}};
    if (partial) record["partial"] = true;
    emit(std::move(record));
    density_q = density_d = 0.0;
    epoch_steps = 0;
  };

  std::vector<TrainingTriplet> batch;
  for (std::size_t s = 1; s <= config.total_steps; ++s) {
    batch.clear();
    while (batch.size() < config.batch_size) {
      if (cursor == n) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.Shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    const StepReport report = trainer.Step(batch);
    result.reports.push_back(report);
    density_q += report.density_q;
    density_d += report.density_d;
    ++epoch_steps;
    consumed += batch.size();
    if (s % config.log_every == 0 || s == config.total_steps) emit(report.ToJson());
    if (consumed / n > completed_epochs) {
      completed_epochs = consumed / n;
      emit_epoch(s, false);
    }
  }
  if (epoch_steps > 0) emit_epoch(config.total_steps, true);
  return result;
}

}  // namespace lsr
