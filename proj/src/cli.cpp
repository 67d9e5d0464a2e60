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

#include "lsr/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lsr/error.hpp"
#include "lsr/evaluation.hpp"
#include "lsr/gradcheck.hpp"
#include "lsr/index.hpp"
#include "lsr/pipeline.hpp"
#include "lsr/synthetic.hpp"

namespace lsr {
namespace {

using nlohmann::json;

const json& Key(const json& section, const std::string& prefix, const std::string& key) {
  if (!section.is_object() || !section.contains(key)) {
    Fail(ErrorKind::kUsage, "missing config key: " + prefix + key);
  }
  return section.at(key);
}

template <typename T>
T Get(const json& section, const std::string& prefix, const std::string& key) {
  const json& v = Key(section, prefix, key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    Fail(ErrorKind::kUsage, "config key " + prefix + key + " has the wrong type");
  }
}

template <typename T>
T GetOr(const json& section, const std::string& prefix, const std::string& key, T fallback) {
  return section.is_object() && section.contains(key) ? Get<T>(section, prefix, key) : fallback;
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Pooling ParsePooling(const std::string& name) {
  if (name == "max") return Pooling::kMax;
  if (name == "sum") return Pooling::kSum;
  Fail(ErrorKind::kUsage, "unknown pooling '" + name + "' (expected max or sum)");
}

std::vector<SparseVector> Vectors(std::span<const NamedVector> named) {
  std::vector<SparseVector> out;
  out.reserve(named.size());
  for (const auto& n : named) out.push_back(n.vector);
  return out;
}

}  // namespace

TrainJob ParseTrainJob(const json& config, const std::filesystem::path& base_dir) {
  if (!config.is_object()) Fail(ErrorKind::kUsage, "config root must be an object");
  TrainJob job;
  const json& bb = Key(config, "", "backbone");
  BackboneConfig& b = job.model.backbone;
  b.variant = ParseBackboneVariant(Get<std::string>(bb, "backbone.", "variant"));
  b.num_layers = Get<std::size_t>(bb, "backbone.", "num_layers");
  b.d_model = Get<std::size_t>(bb, "backbone.", "d_model");
  b.num_heads = Get<std::size_t>(bb, "backbone.", "num_heads");
  b.d_ff = GetOr<std::size_t>(bb, "backbone.", "d_ff", 0);
  b.max_seq_len = Get<std::size_t>(bb, "backbone.", "max_seq_len");
  b.seed = Get<std::uint64_t>(bb, "backbone.", "seed");

  const json& hd = Key(config, "", "head");
  job.model.head = ParseHeadKind(Get<std::string>(hd, "head.", "kind"));
  job.model.pooling = ParsePooling(GetOr<std::string>(hd, "head.", "pooling", "max"));

  const json& tr = Key(config, "", "train");
  TrainConfig& t = job.train;
  t.batch_size = Get<std::size_t>(tr, "train.", "batch_size");
  t.total_steps = Get<std::size_t>(tr, "train.", "total_steps");
  t.learning_rate = Get<double>(tr, "train.", "learning_rate");
  t.lambda_q = Get<double>(tr, "train.", "lambda_q");
  t.lambda_d = Get<double>(tr, "train.", "lambda_d");
  t.lambda_ramp_steps = Get<std::size_t>(tr, "train.", "lambda_ramp_steps");
  t.seed = Get<std::uint64_t>(tr, "train.", "seed");
  t.warmup_steps = GetOr<std::size_t>(tr, "train.", "warmup_steps", t.warmup_steps);
  t.beta1 = GetOr<double>(tr, "train.", "beta1", t.beta1);
  t.beta2 = GetOr<double>(tr, "train.", "beta2", t.beta2);
  t.epsilon = GetOr<double>(tr, "train.", "epsilon", t.epsilon);
  t.log_every = GetOr<std::size_t>(tr, "train.", "log_every", t.log_every);
  if (tr.contains("teacher_reference")) {
    const json& ref = tr.at("teacher_reference");
    job.teacher_reference = ScoreStats{Get<double>(ref, "train.teacher_reference.", "mean"),
                                       Get<double>(ref, "train.teacher_reference.", "std")};
  }

  const json& data = Key(config, "", "data");
  job.vocab = Resolve(base_dir, Get<std::string>(data, "data.", "vocab"));
  job.triplets = Resolve(base_dir, Get<std::string>(data, "data.", "triplets"));
  job.checkpoint = Resolve(base_dir, Get<std::string>(data, "data.", "checkpoint"));
  job.metrics_log = Resolve(base_dir, Get<std::string>(data, "data.", "metrics_log"));
  return job;
}

TrainJob LoadTrainJob(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  Require(static_cast<bool>(in), ErrorKind::kInput, "cannot open config " + config_path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    Fail(ErrorKind::kFormat, config_path.string() + ": " + e.what());
  }
  return ParseTrainJob(config, config_path.parent_path());
}

TrainJobOutcome RunTrainJob(const TrainJob& job) {
  const Vocabulary vocab = Vocabulary::Load(job.vocab);
  ModelConfig config = job.model;
  config.backbone.vocab_size = vocab.size();
  SparseEncoder model(config);
  model.set_vocab_digest(vocab.Digest());
  auto triplets = TokenizeTriplets(vocab, ReadTriplets(job.triplets), config.backbone.max_seq_len);
  if (job.teacher_reference) NormalizeTeacherScores(triplets, *job.teacher_reference);

  std::ofstream log(job.metrics_log, std::ios::binary);
  Require(static_cast<bool>(log), ErrorKind::kInput, "cannot write " + job.metrics_log.string());
  TrainJobOutcome outcome;
  outcome.result = Train(model, triplets, job.train,
                         [&](const nlohmann::ordered_json& record) { log << record.dump() << '\n'; });
  model.Save(job.checkpoint);
  outcome.checkpoint_digest = FileDigest(job.checkpoint);
  return outcome;
}

int RunCli(const std::vector<std::string>& args) {
  CLI::App app{"Learned sparse retrieval: train, encode, index, search and evaluate."};
  app.name("lsr");
  app.require_subcommand(1);

  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a vocabulary from tab-separated text files");
  std::vector<std::string> vocab_inputs;
  std::size_t min_freq = 1;
  std::string vocab_out;
  vocab_cmd->add_option("--input", vocab_inputs, "id<TAB>text files (corpus, queries)")->required();
  vocab_cmd->add_option("--min-freq", min_freq, "Minimum token frequency")->capture_default_str();
  vocab_cmd->add_option("--output", vocab_out, "Vocabulary file")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON config");
  std::string config_path;
  std::optional<std::uint64_t> train_seed;
  train_cmd->add_option("config", config_path, "Config with backbone, head, train, data sections")->required();
  train_cmd->add_option("--seed", train_seed, "Override both the init and the training seed");

  auto* encode_cmd = app.add_subcommand("encode", "Encode queries or documents into sparse vectors");
  std::string checkpoint, vocab_path, encode_in, encode_out, role = "doc";
  encode_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  encode_cmd->add_option("--vocab", vocab_path, "Vocabulary file the model was trained with")->required();
  encode_cmd->add_option("--input", encode_in, "id<TAB>text file")->required();
  encode_cmd->add_option("--output", encode_out, "Sparse vector file")->required();
  encode_cmd->add_option("--role", role, "query or doc")->check(CLI::IsMember({"query", "doc"}))->capture_default_str();

  auto* index_cmd = app.add_subcommand("index", "Build an inverted index from document vectors");
  std::string index_in, index_out, quantize = "none";
  index_cmd->add_option("--input", index_in, "Document sparse vector file")->required();
  index_cmd->add_option("--output", index_out, "Index file")->required();
  index_cmd->add_option("--quantize", quantize, "Impact quantization: none or linear8")
      ->check(CLI::IsMember({"none", "linear8"}))->capture_default_str();

  auto* search_cmd = app.add_subcommand("search", "Retrieve top-k documents and write a TREC run");
  std::string search_index, search_queries, run_out, tag = "lsr";
  std::size_t k = 1000;
  search_cmd->add_option("--index", search_index, "Index file")->required();
  search_cmd->add_option("--queries", search_queries, "Query sparse vector file")->required();
  search_cmd->add_option("--output", run_out, "TREC run file")->required();
  search_cmd->add_option("--k", k, "Documents retrieved per query")->check(CLI::PositiveNumber)->capture_default_str();
  search_cmd->add_option("--tag", tag, "Run tag written in the last column")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Score a TREC run against qrels");
  std::string eval_run, eval_qrels;
  eval_cmd->add_option("--run", eval_run, "TREC run file")->required();
  eval_cmd->add_option("--qrels", eval_qrels, "TREC qrels file")->required();

  auto* flops_cmd = app.add_subcommand("flops", "Expected posting operations per query");
  std::string flops_index, flops_queries;
  flops_cmd->add_option("--index", flops_index, "Index file")->required();
  flops_cmd->add_option("--queries", flops_queries, "Query sparse vector file")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  GradCheckOptions grad;
  bool ops_only = false;
  grad_cmd->add_option("--seed", grad.seed, "Seed for the sampled points")->capture_default_str();
  grad_cmd->add_option("--points", grad.points, "Points per check")->capture_default_str();
  grad_cmd->add_flag("--ops-only", ops_only, "Skip the full model checks");

  auto* toy_cmd = app.add_subcommand("make-toy", "Write a synthetic retrieval task");
  std::string toy_dir;
  SyntheticTaskConfig toy;
  toy_cmd->add_option("--output-dir", toy_dir, "Directory for corpus, triplets, queries, qrels")->required();
  toy_cmd->add_option("--docs", toy.num_docs, "Number of documents")->capture_default_str();
  toy_cmd->add_option("--queries", toy.dev_queries, "Number of dev queries")->capture_default_str();
  toy_cmd->add_option("--train-per-doc", toy.train_queries_per_doc, "Training triplets per document")
      ->capture_default_str();
  toy_cmd->add_option("--seed", toy.seed, "Generator seed")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*vocab_cmd) {
      std::vector<std::string> texts;
      for (const auto& path : vocab_inputs) {
        for (auto& r : ReadRecords(path)) texts.push_back(std::move(r.text));
      }
      BuildVocab(texts, min_freq).Save(vocab_out);
    } else if (*train_cmd) {
      TrainJob job = LoadTrainJob(config_path);
      if (train_seed) job.model.backbone.seed = job.train.seed = *train_seed;
      const auto outcome = RunTrainJob(job);
      std::cout << "checkpoint\t" << job.checkpoint.string() << "\n"
                << "digest\t" << DigestHex(outcome.checkpoint_digest) << "\n";
    } else if (*encode_cmd) {
      SparseEncoder model = SparseEncoder::Load(checkpoint);
      const Vocabulary vocab = Vocabulary::Load(vocab_path);
      Require(model.vocab_digest() == vocab.Digest(), ErrorKind::kCompatibility,
              "vocabulary digest " + DigestHex(vocab.Digest()) + " does not match checkpoint " +
                  DigestHex(model.vocab_digest()));
      // Queries and documents share one encoder; --role only labels the output.
      const auto records = ReadRecords(encode_in);
      WriteSparseVectors(encode_out, EncodeRecords(model, vocab, records));
    } else if (*index_cmd) {
      const auto docs = ReadSparseVectors(index_in);
      const auto mode = quantize == "linear8" ? ImpactQuantization::kLinear8 : ImpactQuantization::kNone;
      BuildIndex(docs, mode).Save(index_out);
    } else if (*search_cmd) {
      const InvertedIndex index = InvertedIndex::Load(search_index);
      WriteRun(run_out, Retrieve(index, ReadSparseVectors(search_queries), k), tag);
    } else if (*eval_cmd) {
      const Run run = ReadRun(eval_run);
      const Qrels qrels = ReadQrels(eval_qrels);
      std::printf("MRR@10\t%.6f\n", MrrAtK(run, qrels, 10).value);
      std::printf("nDCG@10\t%.6f\n", NdcgAtK(run, qrels, 10).value);
      std::printf("Recall@1000\t%.6f\n", RecallAtK(run, qrels, 1000).value);
    } else if (*flops_cmd) {
      const InvertedIndex index = InvertedIndex::Load(flops_index);
      const auto queries = ReadSparseVectors(flops_queries);
      std::printf("FLOPS\t%.6f\n", FlopsMetric(Vectors(queries), index));
    } else if (*grad_cmd) {
      grad.composite = !ops_only;
      bool ok = true;
      for (const auto& r : RunGradientSuite(grad)) {
        std::printf("%s\t%s\t%.3e\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.max_error);
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    } else if (*toy_cmd) {
      const SyntheticTask task = MakeSyntheticTask(toy);
      const std::filesystem::path dir(toy_dir);
      std::filesystem::create_directories(dir);
      std::vector<TextRecord> corpus;
      for (const auto& [name, text] : task.corpus.docs()) corpus.push_back({name, text});
      WriteRecords(dir / "corpus.tsv", corpus);
      WriteTriplets(dir / "triplets.tsv", task.triplets);
      WriteRecords(dir / "queries.tsv", task.dev_queries);
      WriteQrels(dir / "qrels.txt", task.dev_qrels);
    }
  } catch (const Error& e) {
    std::cerr << "lsr: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "lsr: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace lsr
