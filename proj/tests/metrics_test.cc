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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xdfair/metrics.h"
#include "xdfair/rng.h"

namespace xdfair {
namespace {

using Ids = std::vector<std::int32_t>;

TEST(RankItems, SortsByScoreThenId) {
  const std::vector<double> s{0.5, 0.9, 0.1};
  EXPECT_EQ(RankItems(s, {}), (Ids{1, 0, 2}));
  const Ids ex{1};
  EXPECT_EQ(RankItems(s, ex), (Ids{0, 2}));
  const std::vector<double> tie{0.2, 0.7, 0.2, 0.7, 0.2};
  EXPECT_EQ(RankItems(tie, {}), (Ids{1, 3, 0, 2, 4}));
}

TEST(TopK, AgreesWithTheFullRanking) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(30);
    for (double& v : s) v = std::round(4 * StandardNormal(rng)) / 4;  // ties
    Ids ex;
    for (std::int32_t i = 0; i < 30; ++i) {
      if (UniformUnit(rng) < 0.2) ex.push_back(i);
    }
    const Ids full = RankItems(s, ex);
    for (const std::int32_t k : {1, 5, 29, 40}) {
      const Ids top = TopK(s, ex, k);
      const auto n = std::min<std::size_t>(full.size(), static_cast<std::size_t>(k));
      EXPECT_EQ(top, Ids(full.begin(), full.begin() + static_cast<long>(n)));
    }
  }
}

TEST(RecallAtK, HandCases) {
  const Ids ranked{4, 2, 7, 1, 0, 3, 5, 6, 8, 9, 10, 11};
  EXPECT_EQ(RecallAtK(ranked, Ids{2, 11}, 10), 0.5);
  EXPECT_EQ(RecallAtK(ranked, Ids{4, 2, 7}, 10), 1.0);
  EXPECT_EQ(RecallAtK(ranked, Ids{2}, 1), 0.0);
  EXPECT_THROW(RecallAtK(ranked, Ids{}, 10), Error);
  EXPECT_THROW(RecallAtK(ranked, Ids{2}, 0), Error);
}

TEST(NdcgAtK, HandCases) {
  const Ids ranked{4, 2, 7, 1, 0};
  EXPECT_EQ(NdcgAtK(ranked, Ids{4}, 10), 1.0);
  EXPECT_NEAR(NdcgAtK(ranked, Ids{7}, 10), 0.5, 1e-15);
  EXPECT_EQ(NdcgAtK(ranked, Ids{9}, 3), 0.0);
  EXPECT_EQ(NdcgAtK(ranked, Ids{0}, 3), 0.0);
}

// All rankings of 5 items against every nonempty relevant subset.
TEST(Metrics, MatchExhaustiveEnumeration) {
  Ids perm{0, 1, 2, 3, 4};
  int cases = 0;
  do {
    for (int mask = 1; mask < 32; ++mask) {
      Ids rel;
      for (int i = 0; i < 5; ++i) {
        if (mask & (1 << i)) rel.push_back(i);
      }
      double prev_recall = 0, prev_ndcg = 0;
      for (int k = 1; k <= 5; ++k) {
        double hits = 0, dcg = 0, idcg = 0;
        for (int r = 0; r < k; ++r) {
          if (mask & (1 << perm[r])) {
            hits += 1;
            dcg += 1.0 / std::log2(r + 2.0);
          }
          if (r < static_cast<int>(rel.size())) idcg += 1.0 / std::log2(r + 2.0);
        }
        const double recall = RecallAtK(perm, rel, k);
        const double ndcg = NdcgAtK(perm, rel, k);
        EXPECT_NEAR(recall, hits / static_cast<double>(rel.size()), 1e-12);
        EXPECT_NEAR(ndcg, dcg / idcg, 1e-12);
        EXPECT_GE(recall, prev_recall);
        EXPECT_LE(recall, 1.0);
        EXPECT_LE(ndcg, 1.0 + 1e-15);
        EXPECT_GE(ndcg, 0.0);
        prev_recall = recall;
        prev_ndcg = ndcg;
        ++cases;
      }
      (void)prev_ndcg;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_EQ(cases, 120 * 31 * 5);
}

TEST(Ugf, AbsoluteGap) {
  EXPECT_NEAR(Ugf(0.3, 0.2), 0.1, 1e-15);
  EXPECT_EQ(Ugf(0.2, 0.3), Ugf(0.3, 0.2));
  EXPECT_EQ(Ugf(0.25, 0.25), 0.0);
}

TEST(PairedTTest, IdenticalSamples) {
  const std::vector<double> a{0.1, 0.5, 0.3};
  const TTestResult r = PairedTTest(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
}

TEST(PairedTTest, ConstantShiftHasZeroPValue) {
  const std::vector<double> a{1, 2, 3}, b{0.5, 1.5, 2.5};
  EXPECT_EQ(PairedTTest(a, b).p, 0.0);
}

TEST(PairedTTest, ReferenceValues) {
  const std::vector<double> a{1, 2, 3, 4, 5}, zero(5, 0.0);
  const TTestResult r = PairedTTest(a, zero);
  EXPECT_NEAR(r.t, std::sqrt(5.0) * 3.0 / std::sqrt(2.5), 1e-12);
  EXPECT_NEAR(r.t, 4.242640687119285, 1e-12);
  EXPECT_NEAR(r.p, 0.013235599563682695, 1e-9);

  const std::vector<double> x{0.3, 0.1, -0.7, 1.2, 0.5, 0.9};
  const std::vector<double> y{0.1, 0.4, -0.2, 0.3, 0.6, -0.1};
  const TTestResult q = PairedTTest(x, y);
  EXPECT_NEAR(q.t, 0.7824607964359516, 1e-12);
  EXPECT_NEAR(q.p, 0.46936109078827787, 1e-9);
  EXPECT_NEAR(PairedTTest(y, x).t, -q.t, 1e-15);
}

TEST(PairedTTest, RejectsBadInput) {
  const std::vector<double> one{1.0}, two{1.0, 2.0};
  EXPECT_THROW(PairedTTest(one, one), Error);
  EXPECT_THROW(PairedTTest(two, one), Error);
}

// Four users, six items, every user ranks items by the first coordinate.
struct EvalFixture {
  CrossDomainDataset ds = testing::ToyDataset(4, 6, 2, 1);
  SplitDataset split;
  Backbone backbone = Backbone::Init(ds, 2, SharingMode::kShared, 1);

  EvalFixture() {
    // scores: item i -> 6 - i, so the base order is 0,1,2,3,4,5.
    for (std::int32_t i = 0; i < 6; ++i) {
      backbone.mutable_table(Table::kTargetItem).row(i) << 6.0 - i, 0.0;
    }
    for (std::int32_t u = 0; u < 4; ++u) {
      backbone.mutable_table(Table::kUser).row(backbone.TargetUserRow(u)) << 1.0, 0.0;
    }
    split.target_train = {{0, 0}, {1, 1}, {2, 0}, {3, 5}};
    split.target_val = {{0, 1}, {1, 0}, {2, 4}};
    split.target_test = {{0, 2}, {0, 5}, {1, 3}, {2, 1}, {3, 4}};
  }
};

TEST(Evaluate, HandComputedTestPhase) {
  const EvalFixture f;
  const EvaluationReport r =
      Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest, {1, 2});
  // Rankings after exclusions:
  //   u0 (g0): 2,3,4,5  relevant {2,5}: R@1 .5  R@2 .5
  //   u1 (g1): 2,3,4,5  relevant {3}:   R@1 0   R@2 1
  //   u2 (g0): 1,2,3,5  relevant {1}:   R@1 1   R@2 1
  //   u3 (g1): 0,1,2,3,4 relevant {4}:  R@1 0   R@2 0
  EXPECT_EQ(r.users, (Ids{0, 1, 2, 3}));
  EXPECT_EQ(r.n_users[0], 2);
  EXPECT_EQ(r.n_users[1], 2);
  EXPECT_NEAR(r.per_group.at("Recall@1")[0], 0.75, 1e-15);
  EXPECT_NEAR(r.per_group.at("Recall@1")[1], 0.0, 1e-15);
  EXPECT_NEAR(r.per_group.at("Recall@2")[1], 0.5, 1e-15);
  EXPECT_NEAR(r.overall.at("Recall@2"), 2.5 / 4, 1e-15);
  EXPECT_NEAR(r.ugf.at("Recall@1"), 0.75, 1e-15);
  const double u1_ndcg2 = 1.0 / std::log2(3.0);
  EXPECT_NEAR(r.per_user.at("NDCG@2")[1], u1_ndcg2, 1e-15);
  EXPECT_NEAR(r.per_user.at("NDCG@2")[0], 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-15);
  EXPECT_EQ(r.metric_names,
            (std::vector<std::string>{"Recall@1", "Recall@2", "NDCG@1", "NDCG@2"}));
}

TEST(Evaluate, ValidationPhaseSkipsUsersWithoutValidation) {
  const EvalFixture f;
  const EvaluationReport r =
      Evaluate(f.backbone, f.ds, f.split, EvalPhase::kValidation, {1});
  EXPECT_EQ(r.users, (Ids{0, 1, 2}));
  // u0: 1,... -> hit; u1: 0 -> hit; u2: 1,2,3,4 -> miss at 1.
  EXPECT_NEAR(r.per_group.at("Recall@1")[0], 0.5, 1e-15);
  EXPECT_NEAR(r.per_group.at("Recall@1")[1], 1.0, 1e-15);
  EXPECT_NEAR(ValidationNdcg(f.backbone, f.ds, f.split, 1), 2.0 / 3.0, 1e-15);
}

TEST(Evaluate, NeedsBothGroups) {
  EvalFixture f;
  f.split.target_test = {{0, 2}, {2, 1}};
  EXPECT_THROW(Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest), Error);
}

TEST(Evaluate, SwappingGroupLabelsKeepsUgf) {
  EvalFixture f;
  const EvaluationReport a = Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest);
  for (Group& g : f.ds.groups) g = g == Group::kG0 ? Group::kG1 : Group::kG0;
  const EvaluationReport b = Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest);
  for (const auto& m : a.metric_names) {
    EXPECT_EQ(a.ugf.at(m), b.ugf.at(m));
    EXPECT_EQ(a.per_group.at(m)[0], b.per_group.at(m)[1]);
  }
}

TEST(Evaluate, MetricsGrowWithK) {
  const EvalFixture f;
  const EvaluationReport r =
      Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest, {1, 2, 3, 5});
  for (const char* base : {"Recall@", "NDCG@"}) {
    double prev = 0;
    for (const int k : {1, 2, 3, 5}) {
      const double v = r.overall.at(base + std::to_string(k));
      if (std::string(base) == "Recall@") EXPECT_GE(v, prev);
      EXPECT_LE(v, 1.0);
      prev = v;
    }
  }
}

TEST(Evaluate, ReportsAreDeterministic) {
  const EvalFixture f;
  const EvaluationReport a = Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest);
  const EvaluationReport b = Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest);
  EXPECT_EQ(a.ToJson().dump(), b.ToJson().dump());
  EXPECT_EQ(a.ToCsv(), b.ToCsv());
  EXPECT_EQ(a.ToCsv().substr(0, 19), "metric,scope,value\n");
}

TEST(CompareReports, RelativeChanges) {
  const EvalFixture f;
  const EvaluationReport base =
      Evaluate(f.backbone, f.ds, f.split, EvalPhase::kTest, {1, 2});
  EvalFixture g;
  g.backbone.mutable_table(Table::kTargetItem).row(4) << 10.0, 0.0;
  const EvaluationReport cand =
      Evaluate(g.backbone, g.ds, g.split, EvalPhase::kTest, {1, 2});
  const ReportComparison c = CompareReports(cand, base);
  const double r1 = (cand.overall.at("Recall@1") - base.overall.at("Recall@1")) /
                    base.overall.at("Recall@1");
  EXPECT_NEAR(c.accuracy_change.at("Recall@1"), r1, 1e-15);
  const double f1 = (base.ugf.at("Recall@1") - cand.ugf.at("Recall@1")) /
                    base.ugf.at("Recall@1");
  EXPECT_NEAR(c.fairness_change.at("UGF(Recall@1)"), f1, 1e-15);
  double mean = 0;
  for (const auto& [m, v] : c.accuracy_change) mean += v / 4.0;
  EXPECT_NEAR(c.accuracy_improvement, mean, 1e-15);
  EXPECT_EQ(c.p_values.size(), 4u);
  const auto j = c.ToJson();
  EXPECT_TRUE(j.contains("p_values"));
}

}  // namespace
}  // namespace xdfair
