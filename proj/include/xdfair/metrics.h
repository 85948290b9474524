// Copyright 2026 The xdfair Authors.
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

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdfair/backbone.h"
#include "xdfair/common.h"
#include "xdfair/dataset.h"

namespace xdfair {

// Items ordered by descending score, ties by ascending id, with excluded
// items removed. `excluded` is a sorted list.
std::vector<std::int32_t> RankItems(std::span<const double> scores,
                                    std::span<const std::int32_t> excluded);

// First k entries of RankItems without sorting the tail.
std::vector<std::int32_t> TopK(std::span<const double> scores,
                               std::span<const std::int32_t> excluded,
                               std::int32_t k);

// Full ranking of the user's target-domain items, excluding the items of
// every index in `exclude`.
std::vector<std::int32_t> RankItems(
    const Backbone& backbone, std::int32_t target_user,
    std::span<const UserItemIndex* const> exclude);

// |top-k ∩ relevant| / |relevant|.
double RecallAtK(std::span<const std::int32_t> ranked,
                 std::span<const std::int32_t> relevant, std::int32_t k);

// Binary-relevance NDCG with gain 1/log2(rank + 1).
double NdcgAtK(std::span<const std::int32_t> ranked,
               std::span<const std::int32_t> relevant, std::int32_t k);

// |m(g0) - m(g1)|.
double Ugf(double metric_g0, double metric_g1);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

// Paired two-sided t-test. A zero-variance difference gives p = 1 when the
// mean difference is zero and p = 0 otherwise.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

enum class EvalPhase { kValidation, kTest };

struct EvaluationReport {
  std::vector<std::int32_t> ks;
  // "Recall@K" for each K, then "NDCG@K" for each K.
  std::vector<std::string> metric_names;
  std::map<std::string, double> overall;
  std::map<std::string, std::array<double, 2>> per_group;
  std::map<std::string, double> ugf;
  std::array<std::int64_t, 2> n_users{0, 0};
  // Evaluated users (ascending id) and their per-user values.
  std::vector<std::int32_t> users;
  std::map<std::string, std::vector<double>> per_user;

  nlohmann::ordered_json ToJson() const;
  // One row per (metric, scope) with scope in {overall, g0, g1, ugf}.
  std::string ToCsv() const;
};

// Full-ranking evaluation on the target domain. Validation excludes training
// positives; test additionally excludes validation positives. Users without
// relevant items in the phase are skipped.
EvaluationReport Evaluate(const Backbone& backbone,
                          const CrossDomainDataset& ds,
                          const SplitDataset& split, EvalPhase phase,
                          std::vector<std::int32_t> ks = {10, 20});

// Mean NDCG@k over validation users, the early-stopping signal.
double ValidationNdcg(const Backbone& backbone, const CrossDomainDataset& ds,
                      const SplitDataset& split, std::int32_t k = 10);

struct ReportComparison {
  // (candidate - baseline) / baseline per accuracy metric.
  std::map<std::string, double> accuracy_change;
  // (baseline - candidate) / baseline per UGF metric (positive = fairer).
  std::map<std::string, double> fairness_change;
  // Arithmetic means of the two maps above.
  double accuracy_improvement = 0.0;
  double fairness_improvement = 0.0;
  // Paired t-test p-values per accuracy metric over common users.
  std::map<std::string, double> p_values;

  nlohmann::ordered_json ToJson() const;
};

ReportComparison CompareReports(const EvaluationReport& candidate,
                                const EvaluationReport& baseline);

}  // namespace xdfair
