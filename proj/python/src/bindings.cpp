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

// Python bindings for the core library.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "lsr/cli.hpp"
#include "lsr/error.hpp"
#include "lsr/evaluation.hpp"
#include "lsr/gradcheck.hpp"
#include "lsr/index.hpp"
#include "lsr/model.hpp"
#include "lsr/pipeline.hpp"
#include "lsr/sparse_vector.hpp"
#include "lsr/text.hpp"
#include "lsr/training.hpp"

namespace py = pybind11;

namespace lsr {
namespace {

using WeightMap = std::map<TermId, double>;

SparseVector FromMap(const WeightMap& weights) {
  std::vector<SparseEntry> entries;
  for (const auto& [term, weight] : weights) entries.push_back({term, weight});
  return SparseVector(std::move(entries));
}

WeightMap ToMap(const SparseVector& v) {
  WeightMap out;
  for (const auto& e : v.entries()) out[e.term] = e.weight;
  return out;
}

std::vector<NamedVector> FromNamed(const std::vector<std::pair<std::string, WeightMap>>& items) {
  std::vector<NamedVector> out;
  for (const auto& [id, weights] : items) out.push_back({id, FromMap(weights)});
  return out;
}

std::vector<std::pair<std::string, double>> ToPairs(const SearchResult& result) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& d : result) out.emplace_back(d.name, d.score);
  return out;
}

using PyRun = std::map<std::string, std::vector<std::pair<std::string, double>>>;

Run FromPyRun(const PyRun& run) {
  Run out;
  for (const auto& [qid, docs] : run) {
    RankedList list{qid, {}};
    for (const auto& [name, score] : docs) list.docs.push_back({name, score});
    out.push_back(std::move(list));
  }
  return out;
}

}  // namespace
}  // namespace lsr

PYBIND11_MODULE(_core, m) {
  using namespace lsr;
  m.doc() = "Learned sparse retrieval core";

  static py::exception<Error> error(m, "LsrError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string message = std::string(ToString(e.kind())) + ": " + e.what();
      PyErr_SetString(error.ptr(), message.c_str());
    }
  });

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def(py::init<std::vector<std::string>>(), py::arg("tokens"))
      .def_static("build", py::overload_cast<const std::vector<std::string>&, std::size_t>(&BuildVocab),
                  py::arg("texts"), py::arg("min_freq") = 1)
      .def_static("load", &Vocabulary::Load, py::arg("path"))
      .def("save", &Vocabulary::Save, py::arg("path"))
      .def("lookup", &Vocabulary::Lookup, py::arg("token"))
      .def("token", &Vocabulary::Token, py::arg("id"))
      .def("tokens", &Vocabulary::tokens)
      .def("digest", &Vocabulary::Digest)
      .def("__len__", &Vocabulary::size);

  m.def(
      "tokenize",
      [](const Vocabulary& vocab, const std::string& text, std::size_t max_len) {
        return Tokenize(vocab, text, max_len);
      },
      py::arg("vocab"), py::arg("text"), py::arg("max_len") = 64);

  py::class_<SparseEncoder>(m, "SparseEncoder")
      .def_static("load", &SparseEncoder::Load, py::arg("path"))
      .def("save", &SparseEncoder::Save, py::arg("path"))
      .def_property_readonly("vocab_size", &SparseEncoder::vocab_size)
      .def_property_readonly("vocab_digest", &SparseEncoder::vocab_digest)
      .def_property_readonly("variant",
                             [](const SparseEncoder& e) { return std::string(ToString(e.config().backbone.variant)); })
      .def_property_readonly("head", [](const SparseEncoder& e) { return std::string(ToString(e.config().head)); })
      .def(
          "encode", [](SparseEncoder& e, const TokenIds& tokens) { return ToMap(e.Encode(tokens)); },
          py::arg("tokens"));

  m.def("sparse_dot", [](const WeightMap& a, const WeightMap& b) { return SparseDot(FromMap(a), FromMap(b)); });

  py::class_<InvertedIndex>(m, "InvertedIndex")
      .def_static(
          "build",
          [](const std::vector<std::pair<std::string, WeightMap>>& docs, bool linear8) {
            return BuildIndex(FromNamed(docs), linear8 ? ImpactQuantization::kLinear8 : ImpactQuantization::kNone);
          },
          py::arg("docs"), py::arg("linear8") = false)
      .def_static("load", &InvertedIndex::Load, py::arg("path"))
      .def("save", &InvertedIndex::Save, py::arg("path"))
      .def_property_readonly("doc_count", &InvertedIndex::doc_count)
      .def_property_readonly("term_count", &InvertedIndex::term_count)
      .def_property_readonly("posting_count", &InvertedIndex::posting_count)
      .def(
          "search",
          [](const InvertedIndex& index, const WeightMap& query, std::size_t k) {
            return ToPairs(TopKSearch(index, FromMap(query), k));
          },
          py::arg("query"), py::arg("k") = 1000)
      .def(
          "flops",
          [](const InvertedIndex& index, const std::vector<WeightMap>& queries) {
            std::vector<SparseVector> qs;
            for (const auto& q : queries) qs.push_back(FromMap(q));
            return FlopsMetric(qs, index);
          },
          py::arg("queries"));

  m.def(
      "brute_force_search",
      [](const std::vector<std::pair<std::string, WeightMap>>& docs, const WeightMap& query, std::size_t k) {
        return ToPairs(BruteForceSearch(FromNamed(docs), FromMap(query), k));
      },
      py::arg("docs"), py::arg("query"), py::arg("k"));

  m.def(
      "mrr_at_k", [](const PyRun& run, const Qrels& qrels, std::size_t k) { return MrrAtK(FromPyRun(run), qrels, k).value; },
      py::arg("run"), py::arg("qrels"), py::arg("k") = 10);
  m.def(
      "ndcg_at_k",
      [](const PyRun& run, const Qrels& qrels, std::size_t k) { return NdcgAtK(FromPyRun(run), qrels, k).value; },
      py::arg("run"), py::arg("qrels"), py::arg("k") = 10);
  m.def(
      "recall_at_k",
      [](const PyRun& run, const Qrels& qrels, std::size_t k) { return RecallAtK(FromPyRun(run), qrels, k).value; },
      py::arg("run"), py::arg("qrels"), py::arg("k") = 1000);
  m.def("read_qrels", &ReadQrels, py::arg("path"));

  m.def(
      "margin_mse",
      [](const std::vector<double>& student, const std::vector<double>& teacher) {
        return MarginMse(student, teacher);
      },
      py::arg("student_margins"), py::arg("teacher_margins"));
  m.def(
      "flops_regularizer",
      [](const std::vector<WeightMap>& batch, std::size_t vocab_size) {
        std::vector<SparseVector> vs;
        for (const auto& v : batch) vs.push_back(FromMap(v));
        return FlopsRegularizer(vs, vocab_size);
      },
      py::arg("batch"), py::arg("vocab_size"));
  m.def("lambda_schedule", &LambdaSchedule, py::arg("step"), py::arg("ramp"), py::arg("lambda_max"));

  m.def(
      "gradient_suite",
      [](std::uint64_t seed, std::size_t points, bool composite) {
        GradCheckOptions options;
        options.seed = seed;
        options.points = points;
        options.composite = composite;
        std::vector<std::tuple<std::string, double, bool>> out;
        for (const auto& r : RunGradientSuite(options)) out.emplace_back(r.name, r.max_error, r.passed);
        return out;
      },
      py::arg("seed") = 1, py::arg("points") = 10, py::arg("composite") = true);

  // Output goes to the process stdout/stderr; returns the exit code.
  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return RunCli(args); }, py::arg("args"));
}
