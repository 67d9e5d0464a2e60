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

#include <chrono>
#include <map>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lsr/cli.hpp"
#include "lsr/evaluation.hpp"
#include "lsr/pipeline.hpp"
#include "test_util.hpp"

namespace lsr {
namespace {

using testing::ReadText;
using testing::TempDir;
using testing::WriteText;

const std::filesystem::path kToy = std::filesystem::path(LSR_SOURCE_DIR) / "data" / "toy";

std::string P(const std::filesystem::path& p) { return p.string(); }

// Bundled toy config with absolute inputs and outputs redirected to `dir`.
std::filesystem::path ToyConfig(const TempDir& dir, const std::string& name,
                                const std::function<void(nlohmann::json&)>& edit = {}) {
  nlohmann::json config = nlohmann::json::parse(ReadText(kToy / "config.json"));
  config["data"]["vocab"] = P(kToy / "vocab.txt");
  config["data"]["triplets"] = P(kToy / "triplets.tsv");
  config["data"]["checkpoint"] = P(dir / (name + ".lsrc"));
  config["data"]["metrics_log"] = P(dir / (name + ".jsonl"));
  if (edit) edit(config);
  const auto path = dir / (name + ".json");
  WriteText(path, config.dump(2));
  return path;
}

int Encode(const std::filesystem::path& input, const std::filesystem::path& output,
           const std::string& role = "doc", const std::filesystem::path& vocab = kToy / "vocab.txt") {
  return RunCli({"encode", "--checkpoint", P(kToy / "model.lsrc"), "--vocab", P(vocab), "--input",
                 P(input), "--output", P(output), "--role", role});
}

TEST_SUITE("cli") {
  TEST_CASE("golden run reproduced byte for byte") {
    TempDir dir("golden");
    REQUIRE(Encode(kToy / "corpus.tsv", dir / "docs.vec", "doc") == 0);
    REQUIRE(Encode(kToy / "queries.tsv", dir / "queries.vec", "query") == 0);
    REQUIRE(RunCli({"index", "--input", P(dir / "docs.vec"), "--output", P(dir / "toy.lsrx")}) == 0);
    REQUIRE(RunCli({"search", "--index", P(dir / "toy.lsrx"), "--queries", P(dir / "queries.vec"),
                    "--k", "10", "--tag", "toy", "--output", P(dir / "run.trec")}) == 0);
    CHECK(ReadText(dir / "run.trec") == ReadText(kToy / "golden.run"));
    const Run run = ReadRun(dir / "run.trec");
    const Qrels qrels = ReadQrels(kToy / "qrels.txt");
    CHECK(MrrAtK(run, qrels, 10).value == 1.0);
    CHECK(RunCli({"eval", "--run", P(dir / "run.trec"), "--qrels", P(kToy / "qrels.txt")}) == 0);
    CHECK(RunCli({"flops", "--index", P(dir / "toy.lsrx"), "--queries", P(dir / "queries.vec")}) == 0);
  }

  TEST_CASE("search with k emits at most k lines per query") {
    TempDir dir("k");
    REQUIRE(Encode(kToy / "corpus.tsv", dir / "docs.vec") == 0);
    REQUIRE(Encode(kToy / "queries.tsv", dir / "queries.vec") == 0);
    REQUIRE(RunCli({"index", "--input", P(dir / "docs.vec"), "--output", P(dir / "i.lsrx")}) == 0);
    REQUIRE(RunCli({"search", "--index", P(dir / "i.lsrx"), "--queries", P(dir / "queries.vec"), "--k",
                    "3", "--output", P(dir / "run.trec")}) == 0);
    std::map<std::string, int> lines;
    std::istringstream in(ReadText(dir / "run.trec"));
    for (std::string line; std::getline(in, line);) ++lines[line.substr(0, line.find(' '))];
    CHECK(!lines.empty());
    for (const auto& [q, n] : lines) CHECK(n <= 3);
  }

  TEST_CASE("encode matches the library and is repeatable") {
    TempDir dir("encode");
    REQUIRE(Encode(kToy / "queries.tsv", dir / "a.vec") == 0);
    REQUIRE(Encode(kToy / "queries.tsv", dir / "b.vec") == 0);
    CHECK(ReadText(dir / "a.vec") == ReadText(dir / "b.vec"));

    SparseEncoder model = SparseEncoder::Load(kToy / "model.lsrc");
    const Vocabulary vocab = Vocabulary::Load(kToy / "vocab.txt");
    const auto records = ReadRecords(kToy / "queries.tsv");
    std::string expected;
    for (const auto& v : EncodeRecords(model, vocab, records)) expected += FormatSparseLine(v.id, v.vector) + "\n";
    CHECK(ReadText(dir / "a.vec") == expected);

    WriteText(dir / "empty.tsv", "");
    CHECK(Encode(dir / "empty.tsv", dir / "empty.vec") == 0);
    CHECK(ReadText(dir / "empty.vec").empty());
  }

  TEST_CASE("exit codes") {
    TempDir dir("exit");
    WriteText(dir / "other_vocab.txt", "alpha\nbeta\n");
    CHECK(Encode(kToy / "queries.tsv", dir / "x.vec", "doc", dir / "other_vocab.txt") == 4);
    CHECK(RunCli({"encode", "--bogus"}) == 2);
    CHECK(RunCli({}) == 2);
    CHECK(RunCli({"--help"}) == 0);
    CHECK(RunCli({"search", "--help"}) == 0);
    WriteText(dir / "bad.vec", "d1\t3:oops\n");
    CHECK(RunCli({"index", "--input", P(dir / "bad.vec"), "--output", P(dir / "i.lsrx")}) == 5);
    WriteText(dir / "bad.lsrx", "garbage");
    CHECK(RunCli({"flops", "--index", P(dir / "bad.lsrx"), "--queries", P(dir / "bad.vec")}) == 5);
    CHECK(Encode(kToy / "queries.tsv", dir / "x.vec", "neither") == 2);
  }

  TEST_CASE("train config errors") {
    TempDir dir("train_err");
    const auto missing = ToyConfig(dir, "missing", [](auto& c) { c["train"].erase("learning_rate"); });
    CHECK(RunCli({"train", P(missing)}) == 2);
    try {
      LoadTrainJob(missing);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("train.learning_rate") != std::string::npos);
    }
    const auto variant = ToyConfig(dir, "variant", [](auto& c) { c["backbone"]["variant"] = "Encoder"; });
    CHECK(RunCli({"train", P(variant)}) == 2);
    const auto section = ToyConfig(dir, "section", [](auto& c) { c.erase("head"); });
    CHECK(RunCli({"train", P(section)}) == 2);

    WriteText(dir / "huge.tsv", "key0000x\tkey0000x key0000y\ttopic00a\t1e200\t0\n");
    const auto numeric = ToyConfig(dir, "numeric", [&](auto& c) {
      c["data"]["triplets"] = P(dir / "huge.tsv");
      c["train"]["total_steps"] = 2;
      c["train"]["warmup_steps"] = 0;
    });
    CHECK(RunCli({"train", P(numeric)}) == 3);
    WriteText(dir / "broken.json", "{ not json");
    CHECK(RunCli({"train", P(dir / "broken.json")}) == 5);
  }

  TEST_CASE("training is deterministic per seed") {
    TempDir dir("train_seed");
    auto short_run = [&](const std::string& name) {
      return ToyConfig(dir, name, [](auto& c) {
        c["train"]["total_steps"] = 20;
        c["train"]["warmup_steps"] = 0;
      });
    };
    REQUIRE(RunCli({"train", P(short_run("a"))}) == 0);
    REQUIRE(RunCli({"train", P(short_run("b"))}) == 0);
    REQUIRE(RunCli({"train", P(short_run("c")), "--seed", "2"}) == 0);
    CHECK(FileDigest(dir / "a.lsrc") == FileDigest(dir / "b.lsrc"));
    CHECK(ReadText(dir / "a.jsonl") == ReadText(dir / "b.jsonl"));
    CHECK(FileDigest(dir / "a.lsrc") != FileDigest(dir / "c.lsrc"));
  }

  TEST_CASE("bundled toy config reproduces the committed checkpoint") {
    TempDir dir("train_toy");
    const auto start = std::chrono::steady_clock::now();
    REQUIRE(RunCli({"train", P(ToyConfig(dir, "toy"))}) == 0);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 300.0);
    CHECK(FileDigest(dir / "toy.lsrc") == FileDigest(kToy / "model.lsrc"));
    CHECK(ReadText(dir / "toy.jsonl") == ReadText(kToy / "metrics.jsonl"));
  }

  TEST_CASE("build-vocab reproduces the bundled vocabulary") {
    TempDir dir("vocab");
    REQUIRE(RunCli({"build-vocab", "--input", P(kToy / "corpus.tsv"), "--input", P(kToy / "queries.tsv"),
                    "--output", P(dir / "v.txt")}) == 0);
    CHECK(ReadText(dir / "v.txt") == ReadText(kToy / "vocab.txt"));
  }

  TEST_CASE("make-toy writes a loadable task") {
    TempDir dir("toy");
    REQUIRE(RunCli({"make-toy", "--output-dir", P(dir.path()), "--docs", "10", "--queries", "5"}) == 0);
    CHECK(ReadCorpus(dir / "corpus.tsv").size() == 10);
    CHECK(ReadQrels(dir / "qrels.txt").size() == 5);
    CHECK(ReadTriplets(dir / "triplets.tsv").size() == 40);
  }

  TEST_CASE("gradcheck subcommand") {
    CHECK(RunCli({"gradcheck", "--ops-only", "--points", "2"}) == 0);
  }
}

}  // namespace
}  // namespace lsr
