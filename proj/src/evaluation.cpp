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

#include "lsr/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "lsr/error.hpp"

namespace lsr {
namespace {

using PerQuery =
    std::function<std::optional<double>(const RankedList&, const std::map<std::string, int>&)>;

// Averages `per_query` over run queries that have judgments. A nullopt from
// `per_query` drops the query from the mean.
MetricResult Average(const Run& run, const Qrels& qrels, const char* metric, const PerQuery& per_query) {
  MetricResult result;
  double total = 0.0;
  bool any_judged = false;
  for (const auto& list : run) {
    auto it = qrels.find(list.query_id);
    if (it == qrels.end()) {
      ++result.skipped_unjudged;
      continue;
    }
    any_judged = true;
    const auto value = per_query(list, it->second);
    if (!value) {
      ++result.skipped_no_relevant;
      continue;
    }
    total += *value;
    ++result.evaluated;
  }
  Require(any_judged, ErrorKind::kContract,
          std::string(metric) + ": no run query has relevance judgments");
  Require(result.evaluated > 0, ErrorKind::kContract,
          std::string(metric) + ": no judged query has a relevant document");
  result.value = total / static_cast<double>(result.evaluated);
  return result;
}

int Relevance(const std::map<std::string, int>& judged, const std::string& doc) {
  auto it = judged.find(doc);
  return it == judged.end() ? 0 : it->second;
}

std::vector<std::string> Fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string f;
  while (in >> f) out.push_back(f);
  return out;
}

[[noreturn]] void BadLine(const std::filesystem::path& path, std::size_t line_no,
                          const std::string& why) {
  Fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) + ": " + why);
}

}  // namespace

MetricResult MrrAtK(const Run& run, const Qrels& qrels, std::size_t k) {
  return Average(run, qrels, "MRR", [k](const RankedList& list, const auto& judged) -> std::optional<double> {
    const std::size_t depth = std::min(k, list.docs.size());
    for (std::size_t r = 0; r < depth; ++r) {
      if (Relevance(judged, list.docs[r].name) >= 1) return 1.0 / static_cast<double>(r + 1);
    }
    return 0.0;
  });
}

MetricResult NdcgAtK(const Run& run, const Qrels& qrels, std::size_t k) {
  return Average(run, qrels, "nDCG", [k](const RankedList& list, const auto& judged) -> std::optional<double> {
    auto gain = [](int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; };
    auto discount = [](std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); };
    double dcg = 0.0;
    const std::size_t depth = std::min(k, list.docs.size());
    for (std::size_t r = 0; r < depth; ++r) dcg += gain(Relevance(judged, list.docs[r].name)) * discount(r + 1);
    std::vector<int> ideal;
    for (const auto& [doc, rel] : judged) ideal.push_back(rel);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) idcg += gain(ideal[r]) * discount(r + 1);
    return idcg > 0.0 ? dcg / idcg : 0.0;
  });
}

MetricResult RecallAtK(const Run& run, const Qrels& qrels, std::size_t k) {
  return Average(run, qrels, "Recall", [k](const RankedList& list, const auto& judged) -> std::optional<double> {
    std::size_t relevant = 0;
    for (const auto& [doc, rel] : judged) relevant += rel >= 1 ? 1 : 0;
    if (relevant == 0) return std::nullopt;
    std::size_t found = 0;
    const std::size_t depth = std::min(k, list.docs.size());
    for (std::size_t r = 0; r < depth; ++r) found += Relevance(judged, list.docs[r].name) >= 1 ? 1 : 0;
    return static_cast<double>(found) / static_cast<double>(relevant);
  });
}

Qrels ReadQrels(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kFormat, "cannot open " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = Fields(line);
    if (f.empty()) continue;
    if (f.size() != 4) BadLine(path, line_no, "expected 'qid 0 docname rel'");
    int rel = 0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), rel);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size() || rel < 0) {
      BadLine(path, line_no, "relevance '" + f[3] + "' is not a non-negative integer");
    }
    if (!qrels[f[0]].emplace(f[2], rel).second) {
      BadLine(path, line_no, "duplicate judgment for (" + f[0] + ", " + f[2] + ")");
    }
  }
  return qrels;
}

void WriteQrels(const std::filesystem::path& path, const Qrels& qrels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kFormat, "cannot write " + path.string());
  for (const auto& [qid, judged] : qrels) {
    for (const auto& [doc, rel] : judged) out << qid << " 0 " << doc << ' ' << rel << '\n';
  }
}

std::string FormatRun(const Run& run, const std::string& tag) {
  std::string out;
  char score[64];
  for (const auto& list : run) {
    for (std::size_t r = 0; r < list.docs.size(); ++r) {
      std::snprintf(score, sizeof(score), "%.6f", list.docs[r].score);
      out += list.query_id + " Q0 " + list.docs[r].name + ' ' + std::to_string(r + 1) + ' ' + score +
             ' ' + tag + '\n';
    }
  }
  return out;
}

void WriteRun(const std::filesystem::path& path, const Run& run, const std::string& tag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorKind::kFormat, "cannot write " + path.string());
  out << FormatRun(run, tag);
}

Run ReadRun(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorKind::kFormat, "cannot open " + path.string());
  Run run;
  std::map<std::string, std::size_t> position;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = Fields(line);
    if (f.empty()) continue;
    if (f.size() != 6) BadLine(path, line_no, "expected 'qid Q0 docname rank score tag'");
    std::size_t rank = 0;
    double score = 0.0;
    auto r1 = std::from_chars(f[3].data(), f[3].data() + f[3].size(), rank);
    auto r2 = std::from_chars(f[4].data(), f[4].data() + f[4].size(), score);
    if (r1.ec != std::errc() || r1.ptr != f[3].data() + f[3].size() || r2.ec != std::errc() ||
        r2.ptr != f[4].data() + f[4].size()) {
      BadLine(path, line_no, "cannot parse rank/score");
    }
    auto [it, inserted] = position.emplace(f[0], run.size());
    if (inserted) run.push_back({f[0], {}});
    auto& list = run[it->second];
    if (rank != list.docs.size() + 1) {
      BadLine(path, line_no, "rank " + f[3] + " breaks the contiguous ranking for query " + f[0]);
    }
    if (!list.docs.empty() && score > list.docs.back().score) {
      BadLine(path, line_no, "score increases within query " + f[0]);
    }
    list.docs.push_back({f[2], score});
  }
  return run;
}

}  // namespace lsr
