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
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xdfair/dataset.h"
#include "xdfair/metrics.h"
#include "xdfair/synthetic.h"

namespace xdfair {
namespace {

using testing::TempDir;
using testing::WriteFile;

TEST(LoadInteractions, DeduplicatesAndDensifiesInFirstSeenOrder) {
  const auto dir = TempDir("load_dedup");
  WriteFile(dir / "x.tsv", "user_id\titem_id\nu1\ti1\nu1\ti1\nu2\ti3\n");
  const InteractionLog log = LoadInteractions(dir / "x.tsv", true);
  ASSERT_EQ(log.pairs.size(), 2u);
  EXPECT_EQ(log.pairs[0], (Interaction{0, 0}));
  EXPECT_EQ(log.pairs[1], (Interaction{1, 1}));
  EXPECT_EQ(log.users.Raw(1), "u2");
  EXPECT_EQ(log.items.Raw(1), "i3");
}

TEST(LoadInteractions, EmptyBodyIsAnError) {
  const auto dir = TempDir("load_empty");
  WriteFile(dir / "x.tsv", "user_id\titem_id\n");
  try {
    LoadInteractions(dir / "x.tsv", true);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("no interactions"), std::string::npos);
  }
}

TEST(LoadInteractions, ExtraColumnsAreIgnored) {
  const auto dir = TempDir("load_extra");
  WriteFile(dir / "x.tsv",
            "timestamp\titem_id\tuser_id\n17\t5\t2\n18\t6\t2\n19\t5\t0\n");
  const InteractionLog log = LoadInteractions(dir / "x.tsv", false);
  const std::vector<Interaction> expected{{2, 5}, {2, 6}, {0, 5}};
  EXPECT_EQ(log.pairs, expected);
  EXPECT_EQ(log.users.size(), 3);
  EXPECT_EQ(log.items.size(), 7);
}

TEST(LoadInteractions, VerbatimIdsMustBeIntegers) {
  const auto dir = TempDir("load_verbatim");
  WriteFile(dir / "x.tsv", "user_id\titem_id\nabc\t1\n");
  EXPECT_THROW(LoadInteractions(dir / "x.tsv", false), Error);
}

TEST(LoadAttributes, SmallerValueIsGroupZero) {
  const auto dir = TempDir("attrs");
  WriteFile(dir / "a.tsv", "user_id\tattribute\nb\tM\na\tF\n");
  const AttributeTable t = LoadAttributes(dir / "a.tsv");
  EXPECT_EQ(t.groups.at("a"), Group::kG0);
  EXPECT_EQ(t.groups.at("b"), Group::kG1);
  EXPECT_EQ(t.labels[0], "F");
}

TEST(LoadAttributes, ConflictingValuesAreRejected) {
  const auto dir = TempDir("attrs_conflict");
  WriteFile(dir / "a.tsv", "user_id\tattribute\na\tF\na\tM\n");
  EXPECT_THROW(LoadAttributes(dir / "a.tsv"), Error);
}

TEST(LoadAttributes, ThreeValuesAreRejected) {
  const auto dir = TempDir("attrs_three");
  std::string body = "user_id\tattribute\n";
  for (int u = 0; u < 100; ++u) {
    body += "u" + std::to_string(u) + "\t" + "ABC"[u % 3] + "\n";
  }
  WriteFile(dir / "a.tsv", body);
  EXPECT_THROW(LoadAttributes(dir / "a.tsv"), Error);
}

TEST(Interactions, WriteThenLoadIsIdentity) {
  const auto dir = TempDir("roundtrip");
  SynthConfig cfg;
  cfg.n_users_source = 40;
  cfg.n_users_target = 30;
  cfg.n_items_source = 50;
  cfg.n_items_target = 60;
  cfg.interactions_per_user = 5;
  const CrossDomainDataset ds = GenerateSynthetic(cfg);
  WriteInteractions(dir / "t.tsv", ds.target.interactions, ds.target_users,
                    ds.target_items);
  const InteractionLog log = LoadInteractions(dir / "t.tsv", true);
  ASSERT_EQ(log.pairs.size(), ds.target.interactions.size());
  for (std::size_t k = 0; k < log.pairs.size(); ++k) {
    const Interaction& a = log.pairs[k];
    const Interaction& b = ds.target.interactions[k];
    EXPECT_EQ(log.users.Raw(a.user), ds.target_users.Raw(b.user));
    EXPECT_EQ(log.items.Raw(a.item), ds.target_items.Raw(b.item));
  }
}

TEST(AssembleDataset, JoinsUsersByRawId) {
  const auto dir = TempDir("assemble");
  WriteFile(dir / "s.tsv", "user_id\titem_id\nx\tp\ny\tq\n");
  WriteFile(dir / "t.tsv", "user_id\titem_id\ny\tr\nz\tr\nz\ts\n");
  WriteFile(dir / "a.tsv", "user_id\tattribute\ny\t1\nz\t0\nx\t0\n");
  const CrossDomainDataset ds = AssembleDataset(
      LoadInteractions(dir / "s.tsv", true),
      LoadInteractions(dir / "t.tsv", true), LoadAttributes(dir / "a.tsv"));
  ds.Validate();
  EXPECT_EQ(ds.overlap, (std::vector<std::int32_t>{1, -1}));
  EXPECT_EQ(ds.groups, (std::vector<Group>{Group::kG1, Group::kG0}));
  EXPECT_EQ(ds.source_groups, (std::vector<std::int8_t>{0, 1}));
}

TEST(AssembleDataset, TargetUserWithoutAttributeFails) {
  const auto dir = TempDir("assemble_missing");
  WriteFile(dir / "s.tsv", "user_id\titem_id\nx\tp\n");
  WriteFile(dir / "t.tsv", "user_id\titem_id\ny\tr\nz\tr\n");
  WriteFile(dir / "a.tsv", "user_id\tattribute\ny\t1\nx\t0\n");
  EXPECT_THROW(AssembleDataset(LoadInteractions(dir / "s.tsv", true),
                               LoadInteractions(dir / "t.tsv", true),
                               LoadAttributes(dir / "a.tsv")),
               Error);
}

TEST(Validate, RejectsBrokenInvariants) {
  CrossDomainDataset ds = testing::ToyDataset(4, 8, 2, 2);
  CrossDomainDataset dup = ds;
  dup.target.interactions.push_back(dup.target.interactions.front());
  EXPECT_THROW(dup.Validate(), Error);
  CrossDomainDataset range = ds;
  range.target.interactions.push_back({0, 8});
  EXPECT_THROW(range.Validate(), Error);
  CrossDomainDataset inj = ds;
  inj.overlap[1] = 0;
  EXPECT_THROW(inj.Validate(), Error);
  CrossDomainDataset one_group = ds;
  std::fill(one_group.groups.begin(), one_group.groups.end(), Group::kG0);
  EXPECT_THROW(one_group.Validate(), Error);
}

CrossDomainDataset SingleUserDataset(std::int32_t n_source,
                                     std::int32_t n_target) {
  CrossDomainDataset ds;
  ds.source.n_users = 1;
  ds.source.n_items = std::max(n_source, 1);
  ds.target.n_users = 2;
  ds.target.n_items = std::max(n_target, 1);
  for (std::int32_t i = 0; i < n_source; ++i) {
    ds.source.interactions.push_back({0, i});
  }
  for (std::int32_t i = 0; i < n_target; ++i) {
    ds.target.interactions.push_back({0, i});
  }
  ds.target.interactions.push_back({1, 0});
  ds.overlap = {0, -1};
  ds.groups = {Group::kG0, Group::kG1};
  ds.source_groups = {0};
  return ds;
}

std::map<std::int32_t, std::int32_t> CountPerUser(
    const std::vector<Interaction>& pairs) {
  std::map<std::int32_t, std::int32_t> out;
  for (const Interaction& p : pairs) ++out[p.user];
  return out;
}

TEST(SplitPerUser, TenTargetInteractionsGiveEightOneOne) {
  const CrossDomainDataset ds = SingleUserDataset(5, 10);
  const SplitDataset s = SplitPerUser(ds, 7);
  EXPECT_EQ(CountPerUser(s.target_train)[0], 8);
  EXPECT_EQ(CountPerUser(s.target_val)[0], 1);
  EXPECT_EQ(CountPerUser(s.target_test)[0], 1);
}

TEST(SplitPerUser, SingleInteractionStaysInTrain) {
  const CrossDomainDataset ds = SingleUserDataset(5, 10);
  const SplitDataset s = SplitPerUser(ds, 7);
  EXPECT_EQ(CountPerUser(s.target_train)[1], 1);
  EXPECT_EQ(CountPerUser(s.target_val).count(1), 0u);
  EXPECT_EQ(CountPerUser(s.target_test).count(1), 0u);
}

TEST(SplitPerUser, FiveSourceInteractionsGiveFourOne) {
  const CrossDomainDataset ds = SingleUserDataset(5, 10);
  const SplitDataset s = SplitPerUser(ds, 7);
  EXPECT_EQ(s.source_train.size(), 4u);
  EXPECT_EQ(s.source_val.size(), 1u);
}

// Enumerates every small per-user count and checks the count rule and the
// minimum-train rule against floor arithmetic.
TEST(SplitPerUser, CountsFollowFloorRatios) {
  for (std::int32_t n = 1; n <= 23; ++n) {
    const CrossDomainDataset ds = SingleUserDataset(n, n);
    const SplitDataset s = SplitPerUser(ds, 11);
    const auto val = static_cast<std::size_t>(n / 10);
    const auto test = static_cast<std::size_t>(n / 10);
    auto train = CountPerUser(s.target_train)[0];
    EXPECT_EQ(static_cast<std::size_t>(train), n - val - test) << n;
    EXPECT_EQ(s.source_train.size(), static_cast<std::size_t>(std::max(1, n * 8 / 10))) << n;
    EXPECT_EQ(s.source_train.size() + s.source_val.size(),
              static_cast<std::size_t>(n));
  }
}

TEST(SplitPerUser, PartitionsAndIsReproducible) {
  SynthConfig cfg;
  cfg.n_users_source = 60;
  cfg.n_users_target = 50;
  cfg.n_items_source = 80;
  cfg.n_items_target = 70;
  cfg.interactions_per_user = 13;
  const CrossDomainDataset ds = GenerateSynthetic(cfg);
  const SplitDataset a = SplitPerUser(ds, 3);
  const SplitDataset b = SplitPerUser(ds, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, SplitPerUser(ds, 4));

  auto key = [](const Interaction& p) { return std::pair(p.user, p.item); };
  std::multiset<std::pair<int, int>> all, parts;
  for (const auto& p : ds.target.interactions) all.insert(key(p));
  for (const auto* v : {&a.target_train, &a.target_val, &a.target_test}) {
    for (const auto& p : *v) parts.insert(key(p));
  }
  EXPECT_EQ(all, parts);
  all.clear();
  parts.clear();
  for (const auto& p : ds.source.interactions) all.insert(key(p));
  for (const auto* v : {&a.source_train, &a.source_val}) {
    for (const auto& p : *v) parts.insert(key(p));
  }
  EXPECT_EQ(all, parts);
}

TEST(UserItemIndex, SortsPerUser) {
  const std::vector<Interaction> pairs{{1, 5}, {0, 3}, {1, 2}, {1, 9}};
  const UserItemIndex idx(3, pairs);
  EXPECT_EQ(idx.Count(0), 1);
  EXPECT_EQ(idx.Count(2), 0);
  const auto items = idx.Items(1);
  EXPECT_EQ(std::vector<std::int32_t>(items.begin(), items.end()),
            (std::vector<std::int32_t>{2, 5, 9}));
  EXPECT_TRUE(idx.Contains(1, 9));
  EXPECT_FALSE(idx.Contains(0, 9));
}

SynthConfig SmallWorld(std::uint64_t seed, double disparity) {
  SynthConfig cfg;
  cfg.n_users_source = 200;
  cfg.n_users_target = 200;
  cfg.n_items_source = 200;
  cfg.n_items_target = 200;
  cfg.interactions_per_user = 10;
  cfg.source_disparity = disparity;
  cfg.rng_seed = seed;
  return cfg;
}

TEST(Synthetic, SameSeedGivesIdenticalData) {
  const CrossDomainDataset a = GenerateSynthetic(SmallWorld(5, 2.0));
  const CrossDomainDataset b = GenerateSynthetic(SmallWorld(5, 2.0));
  EXPECT_EQ(a.source.interactions, b.source.interactions);
  EXPECT_EQ(a.target.interactions, b.target.interactions);
  EXPECT_EQ(a.overlap, b.overlap);
  EXPECT_EQ(a.groups, b.groups);
  EXPECT_EQ(a.source_groups, b.source_groups);
  const CrossDomainDataset c = GenerateSynthetic(SmallWorld(6, 2.0));
  EXPECT_NE(a.target.interactions, c.target.interactions);
}

TEST(Synthetic, ShapesAndOverlap) {
  const CrossDomainDataset ds = GenerateSynthetic(SmallWorld(1, 1.0));
  ds.Validate();
  EXPECT_EQ(ds.NumOverlapping(), 100);
  EXPECT_EQ(ds.target.interactions.size(), 200u * 10u);
  EXPECT_EQ(ds.source.interactions.size(), 200u * 10u);
  const auto g0 = std::count(ds.groups.begin(), ds.groups.end(), Group::kG0);
  EXPECT_EQ(g0, 100);
}

TEST(Synthetic, TooFewItemsIsAUsageError) {
  SynthConfig cfg = SmallWorld(1, 1.0);
  cfg.n_items_target = 5;
  try {
    GenerateSynthetic(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

// Mean position of each source positive in its user's noise-free ordering,
// per source group.
std::array<double, 2> SourcePositiveRank(const SyntheticWorld& w) {
  const CrossDomainDataset& ds = w.dataset;
  const UserItemIndex idx(ds.source.n_users, ds.source.interactions);
  std::array<double, 2> sum{0, 0};
  std::array<double, 2> count{0, 0};
  std::vector<double> aff(static_cast<std::size_t>(ds.source.n_items));
  for (std::int32_t u = 0; u < ds.source.n_users; ++u) {
    for (std::int32_t i = 0; i < ds.source.n_items; ++i) {
      aff[i] = w.SourceAffinity(u, i);
    }
    const std::vector<std::int32_t> order = RankItems(aff, {});
    std::vector<std::int32_t> pos(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = static_cast<std::int32_t>(r);
    const int g = ds.source_groups[u];
    for (const std::int32_t i : idx.Items(u)) {
      sum[g] += pos[i];
      count[g] += 1;
    }
  }
  return {sum[0] / count[0], sum[1] / count[1]};
}

TEST(Synthetic, DisparityDegradesGroupOneSourceRanking) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto rank = SourcePositiveRank(GenerateSyntheticWorld(SmallWorld(seed, 4.0)));
    EXPECT_GT(rank[1], rank[0]) << "seed " << seed;
  }
}

TEST(Synthetic, GapGrowsWithDisparity) {
  double previous = -1e9;
  for (const double disparity : {1.0, 2.0, 4.0}) {
    double gap = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto rank =
          SourcePositiveRank(GenerateSyntheticWorld(SmallWorld(seed, disparity)));
      gap += rank[1] - rank[0];
    }
    EXPECT_GE(gap / 10.0, previous) << disparity;
    previous = gap / 10.0;
  }
}

// Without disparity the per-seed group means of the positives' noise-free
// scores differ only by chance: a paired test across 20 seeds does not
// reject.
TEST(Synthetic, NoDisparityGroupsLookAlike) {
  std::vector<double> g0, g1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticWorld w = GenerateSyntheticWorld(SmallWorld(100 + seed, 1.0));
    std::array<double, 2> sum{0, 0};
    std::array<double, 2> count{0, 0};
    for (const Interaction& p : w.dataset.source.interactions) {
      const int g = w.dataset.source_groups[p.user];
      sum[g] += w.SourceAffinity(p.user, p.item);
      count[g] += 1;
    }
    g0.push_back(sum[0] / count[0]);
    g1.push_back(sum[1] / count[1]);
  }
  EXPECT_GT(PairedTTest(g0, g1).p, 0.01);
}

}  // namespace
}  // namespace xdfair
