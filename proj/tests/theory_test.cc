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

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "xdfair/rng.h"
#include "xdfair/theory.h"

namespace xdfair {
namespace {

RowMatrix Gaussian(Eigen::Index n, Eigen::Index d, Rng& rng, double shift = 0.0,
                   double scale = 1.0) {
  RowMatrix m(n, d);
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    m.data()[k] = shift + scale * StandardNormal(rng);
  }
  return m;
}

double BruteForceAssignment(const RowMatrix& cost) {
  std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += cost(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(MinCostAssignment, MatchesPermutationEnumeration) {
  Rng rng(1);
  for (int n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      RowMatrix cost(n, n);
      for (Eigen::Index k = 0; k < cost.size(); ++k) {
        cost.data()[k] = trial % 2 ? UniformUnit(rng) : std::floor(5 * UniformUnit(rng));
      }
      std::vector<int> assignment;
      const double got = MinCostAssignment(cost, &assignment);
      EXPECT_NEAR(got, BruteForceAssignment(cost), 1e-12) << n;
      std::vector<int> sorted = assignment;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i) EXPECT_EQ(sorted[i], i);
      double sum = 0;
      for (int i = 0; i < n; ++i) sum += cost(i, assignment[i]);
      EXPECT_NEAR(sum, got, 1e-12);
    }
  }
}

TEST(ExactWasserstein1, HandCases) {
  RowMatrix a(2, 1), b(2, 1);
  a << 0, 2;
  b << 1, 3;
  EXPECT_NEAR(ExactWasserstein1(a, b), 1.0, 1e-15);
  EXPECT_EQ(ExactWasserstein1(a, a), 0.0);
  RowMatrix p(1, 3), q(1, 3);
  p << 1, 2, 3;
  q << 4, 6, 3;
  EXPECT_NEAR(ExactWasserstein1(p, q), 5.0, 1e-15);
  RowMatrix c(3, 1);
  EXPECT_THROW(ExactWasserstein1(a, c), Error);
}

TEST(ExactWasserstein1, MatchesEnumerationOnSmallClouds) {
  Rng rng(2);
  for (int n = 1; n <= 7; ++n) {
    const RowMatrix a = Gaussian(n, 3, rng), b = Gaussian(n, 3, rng, 0.5);
    RowMatrix cost(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
    }
    EXPECT_NEAR(ExactWasserstein1(a, b), BruteForceAssignment(cost) / n, 1e-12);
  }
}

TEST(Wasserstein1, MetricAxiomsAtFullSize) {
  Rng rng(3);
  const W1Config full{64, 1, 0};
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix x = Gaussian(40, 4, rng);
    const RowMatrix y = Gaussian(40, 4, rng, 0.3);
    const RowMatrix z = Gaussian(40, 4, rng, -0.2, 2.0);
    const double xy = Wasserstein1(x, y, full);
    EXPECT_NEAR(xy, Wasserstein1(y, x, full), 1e-9);
    EXPECT_NEAR(Wasserstein1(x, x, full), 0.0, 1e-12);
    EXPECT_LE(Wasserstein1(x, z, full), xy + Wasserstein1(y, z, full) + 1e-9);
    EXPECT_GE(xy, 0.0);
  }
}

TEST(Wasserstein1, UnequalSizesAreExactWithinTheBudget) {
  RowMatrix a(1, 1), b(2, 1), c(3, 1);
  a << 0;
  b << 0, 2;
  c << 0, 0, 3;
  EXPECT_NEAR(Wasserstein1(a, b, {}), 1.0, 1e-15);
  // Mass 1/3 at 3 against 1/2 at 2: 1/6 moves 0 -> 2, 1/3 moves 2 -> 3.
  EXPECT_NEAR(Wasserstein1(b, c, {}), 2.0 / 6 + 1.0 / 3, 1e-15);
  EXPECT_NEAR(Wasserstein1(b, b.replicate(3, 1), {}), 0.0, 1e-15);
}

TEST(Wasserstein1, SubsamplingIsDeterministicAndNearExact) {
  Rng rng(4);
  const RowMatrix a = Gaussian(300, 3, rng), b = Gaussian(200, 3, rng, 1.0);
  const W1Config cfg{100, 8, 17};
  EXPECT_EQ(Wasserstein1(a, b, cfg), Wasserstein1(a, b, cfg));
  const double mean_shift = std::sqrt(3.0);
  EXPECT_GT(Wasserstein1(a, b, cfg), 0.7 * mean_shift);
  EXPECT_LT(Wasserstein1(a, b, cfg), 1.6 * mean_shift);
}

TEST(ProbeGap, NeverExceedsW1) {
  Rng rng(5);
  const VectorMap identity = [](const Eigen::VectorXd& z) { return z; };
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix a = Gaussian(30, 5, rng);
    const RowMatrix b = Gaussian(30, 5, rng, 0.4, 1.5);
    EXPECT_LE(ProbeGap(a, b, identity, 64, trial), ExactWasserstein1(a, b) + 1e-9);
  }
}

TEST(ProbeGap, LinearMapScalesTheBound) {
  Rng rng(6);
  RowMatrix A(3, 3);
  for (Eigen::Index k = 0; k < A.size(); ++k) A.data()[k] = StandardNormal(rng);
  const double lf = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  const VectorMap f = [&A](const Eigen::VectorXd& z) { return Eigen::VectorXd(A * z); };
  for (int trial = 0; trial < 10; ++trial) {
    const RowMatrix a = Gaussian(25, 3, rng);
    const RowMatrix b = Gaussian(25, 3, rng, 0.7);
    EXPECT_LE(ProbeGap(a, b, f, 32, trial), lf * ExactWasserstein1(a, b) + 1e-9);
  }
}

EmbeddingCloud FourCells(Rng& rng, Eigen::Index n, double gap_t, double gap_s,
                         double shift) {
  EmbeddingCloud c;
  const RowMatrix t0 = Gaussian(n, 3, rng), t1 = Gaussian(n + 7, 3, rng, gap_t);
  const RowMatrix s0 = Gaussian(n + 3, 3, rng, shift);
  const RowMatrix s1 = Gaussian(n - 5, 3, rng, shift + gap_s);
  for (Eigen::Index i = 0; i < t0.rows(); ++i) c.Add(t0.row(i), Domain::kTarget, Group::kG0);
  for (Eigen::Index i = 0; i < t1.rows(); ++i) c.Add(t1.row(i), Domain::kTarget, Group::kG1);
  for (Eigen::Index i = 0; i < s0.rows(); ++i) c.Add(s0.row(i), Domain::kSource, Group::kG0);
  for (Eigen::Index i = 0; i < s1.rows(); ++i) c.Add(s1.row(i), Domain::kSource, Group::kG1);
  return c;
}

TEST(GroupGapBound, IdenticalCellsGiveZero) {
  EmbeddingCloud c;
  Rng rng(7);
  const RowMatrix p = Gaussian(10, 3, rng);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (const Domain d : {Domain::kSource, Domain::kTarget}) {
      for (const Group g : {Group::kG0, Group::kG1}) c.Add(p.row(i), d, g);
    }
  }
  const BoundReport r = GroupGapBound(c, 1.0, 3.0, {});
  EXPECT_NEAR(r.rhs, 0.0, 1e-12);
  EXPECT_NEAR(r.w1_target_groups, 0.0, 1e-12);
  EXPECT_TRUE(r.chain_holds);
}

TEST(GroupGapBound, RhsIsLinearInTheConstants) {
  Rng rng(8);
  const EmbeddingCloud c = FourCells(rng, 40, 1.0, 2.0, 0.5);
  const W1Config cfg{32, 4, 9};
  const BoundReport a = GroupGapBound(c, 1.0, 1.5, cfg);
  const BoundReport b = GroupGapBound(c, 1.0, 3.0, cfg);
  EXPECT_EQ(b.rhs, 2.0 * a.rhs);
  EXPECT_EQ(a.rhs, a.lo * a.lf * a.DecompositionSum());
  EXPECT_EQ(a.DecompositionSum(),
            a.w1_source_groups + a.delta_target[0] + a.delta_target[1] +
                a.delta_source[0] + a.delta_source[1] + 2 * a.domain_shift);
  EXPECT_THROW(GroupGapBound(c, 0.0, 1.0, cfg), Error);
}

TEST(GroupGapBound, ChainHoldsOnGaussianFixtures) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(DeriveSeed(seed, "fixture"));
    const double gap_t = 2 * UniformUnit(rng);
    const double gap_s = 2 * UniformUnit(rng);
    const double shift = 3 * UniformUnit(rng);
    const EmbeddingCloud c = FourCells(rng, 30 + static_cast<Eigen::Index>(seed), gap_t, gap_s, shift);
    const BoundReport r = GroupGapBound(c, 1.0, 1.0, {24, 4, seed});
    EXPECT_TRUE(r.chain_holds) << seed << " slack " << r.chain_slack;
    EXPECT_GE(r.chain_slack, -r.mc_tolerance);
    for (const double v : {r.w1_source_groups, r.delta_target[0], r.delta_target[1],
                           r.delta_source[0], r.delta_source[1], r.domain_shift}) {
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(GroupGapBound, EmptyCellIsADataError) {
  EmbeddingCloud c;
  const Eigen::RowVector2d p(0, 0);
  c.Add(p, Domain::kTarget, Group::kG0);
  c.Add(p, Domain::kTarget, Group::kG1);
  c.Add(p, Domain::kSource, Group::kG0);
  EXPECT_THROW(GroupGapBound(c, 1, 1, {}), Error);
}

TEST(PreservationCheck, Cases) {
  EXPECT_TRUE(PreservationCheck(0.0, 0.0).preserved);
  EXPECT_TRUE(PreservationCheck(0.0, 0.4).preserved);
  EXPECT_TRUE(PreservationCheck(0.3, 0.3).preserved);
  const PreservationVerdict v = PreservationCheck(0.2, 0.1);
  EXPECT_FALSE(v.preserved);
  EXPECT_NEAR(v.margin, -0.1, 1e-15);
}

// Direct expectation over all sign vectors, written independently.
double ExactRademacher(const RowMatrix& values) {
  const auto n = values.cols();
  double total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index h = 0; h < values.rows(); ++h) {
      double s = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        s += ((mask >> i) & 1u ? 1.0 : -1.0) * values(h, i);
      }
      best = std::max(best, s / static_cast<double>(n));
    }
    total += best;
  }
  return total / static_cast<double>(1u << n);
}

TEST(Rademacher, TwoConstantsByHand) {
  const double c = 0.8;
  RowMatrix v(2, 2);
  v << c, c, -c, -c;
  const RademacherEstimate r = ExhaustiveRademacher(v);
  EXPECT_EQ(r.complexity, 0.5 * c);
  EXPECT_EQ(r.gain_class, c);
  EXPECT_EQ(r.sign_vectors, 4);
  EXPECT_TRUE(r.exhaustive);
}

TEST(Rademacher, ExhaustiveMatchesDirectExpectation) {
  Rng rng(9);
  for (int n = 1; n <= 12; ++n) {
    RowMatrix v(5, n);
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = 2 * UniformUnit(rng) - 1;
    EXPECT_NEAR(ExhaustiveRademacher(v).complexity, ExactRademacher(v), 1e-12) << n;
  }
}

TEST(Rademacher, SingletonClassIsNearZero) {
  Rng rng(10);
  const int n = 50, draws = 2000;
  RowMatrix v(1, n);
  for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = 2 * UniformUnit(rng) - 1;
  EXPECT_LT(std::abs(EstimateRademacher(v, draws, 3).complexity),
            3.0 / std::sqrt(static_cast<double>(n) * draws));
}

TEST(Rademacher, PositivelyHomogeneous) {
  Rng rng(11);
  RowMatrix v(4, 8);
  for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = StandardNormal(rng);
  const RowMatrix w = 2.5 * v;
  EXPECT_NEAR(EstimateRademacher(w, 300, 4).complexity,
              2.5 * EstimateRademacher(v, 300, 4).complexity, 1e-12);
  EXPECT_NEAR(ExhaustiveRademacher(w).complexity,
              2.5 * ExhaustiveRademacher(v).complexity, 1e-12);
}

TEST(Rademacher, MonteCarloApproachesExhaustive) {
  Rng rng(12);
  RowMatrix v(6, 10);
  for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] = UniformUnit(rng);
  EXPECT_NEAR(EstimateRademacher(v, 20000, 5).complexity,
              ExhaustiveRademacher(v).complexity, 0.01);
}

TEST(DeviationBound, HandCases) {
  EXPECT_NEAR(DeviationBound(0.0, 1.0, 2, 2.0 / std::exp(1.0)), 0.5, 1e-15);
  const double a = DeviationBound(0.0, 1.0, 10, 0.05);
  EXPECT_NEAR(DeviationBound(0.0, 1.0, 40, 0.05), a / 2, 1e-15);
  EXPECT_NEAR(DeviationBound(0.1, 1.0, 10, 0.05), a + 0.2, 1e-15);
  const double small = DeviationBound(0.0, 1.0, 1000, 0.999);
  EXPECT_GT(small, 0.0);
  EXPECT_LT(small, 0.05);
  EXPECT_THROW(DeviationBound(0.0, 1.0, 10, 1.0), Error);
  EXPECT_THROW(DeviationBound(0.0, 1.0, 10, 0.0), Error);
  EXPECT_THROW(DeviationBound(0.0, 1.0, 0, 0.5), Error);
}

TEST(LipschitzEstimate, LinearAndConstantMaps) {
  Rng rng(13);
  const RowMatrix cloud = Gaussian(50, 3, rng);
  const VectorMap twice = [](const Eigen::VectorXd& z) { return Eigen::VectorXd(2 * z); };
  const double l = LipschitzEstimate(twice, cloud, 500, 1);
  EXPECT_LE(l, 2.0 + 1e-12);
  EXPECT_NEAR(l, 2.0, 1e-9);
  const VectorMap constant = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(2); };
  EXPECT_EQ(LipschitzEstimate(constant, cloud, 500, 1), 0.0);
  const RowMatrix same = RowMatrix::Ones(5, 3);
  EXPECT_THROW(LipschitzEstimate(twice, same, 10, 1), Error);
}

TEST(LipschitzEstimate, ApproachesTheSpectralNorm) {
  Rng rng(14);
  RowMatrix A(3, 3);
  for (Eigen::Index k = 0; k < A.size(); ++k) A.data()[k] = StandardNormal(rng);
  // Power iteration on A^T A.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
  for (int it = 0; it < 500; ++it) v = (A.transpose() * (A * v)).normalized();
  const double spectral = (A * v).norm();
  const VectorMap f = [&A](const Eigen::VectorXd& z) { return Eigen::VectorXd(A * z); };
  const RowMatrix cloud = Gaussian(400, 3, rng);
  const double l = LipschitzEstimate(f, cloud, 100000, 2);
  EXPECT_LE(l, spectral + 1e-9);
  EXPECT_GE(l, 0.95 * spectral);
}

TEST(AnalyzeSnapshot, MirroredGroupsHaveNoGap) {
  Rng rng(15);
  EmbeddingSnapshot s;
  const RowMatrix base = Gaussian(4, 3, rng);
  s.user_target.resize(8, 3);
  for (Eigen::Index i = 0; i < 8; ++i) s.user_target.row(i) = base.row(i / 2);
  s.user_source = s.user_target;
  s.item_source = Gaussian(10, 3, rng);
  s.item_target = Gaussian(12, 3, rng);
  const std::vector<Group> groups{Group::kG0, Group::kG1, Group::kG0, Group::kG1,
                                  Group::kG0, Group::kG1, Group::kG0, Group::kG1};
  const std::vector<std::int8_t> sg{0, 1, 0, 1, 0, 1, 0, 1};
  TheoryOptions opt;
  opt.baseline_ugf = 10.0;
  const TheoryReport r = AnalyzeSnapshot(s, groups, sg, opt);
  EXPECT_NEAR(r.bound.w1_target_groups, 0.0, 1e-12);
  EXPECT_NEAR(r.bound.w1_source_groups, 0.0, 1e-12);
  EXPECT_NEAR(*r.bound.measured_ugf, 0.0, 1e-12);
  EXPECT_TRUE(r.bound.preservation->preserved);
  EXPECT_EQ(r.n_target[0], 4);
  EXPECT_EQ(r.rademacher[1].sign_vectors, opt.sign_draws);
  const auto j = r.ToJson();
  EXPECT_TRUE(j.contains("bound"));
}

TEST(AnalyzeSnapshot, MeasuredGapWithinTheBound) {
  Rng rng(16);
  EmbeddingSnapshot s;
  s.user_target = Gaussian(60, 4, rng);
  s.user_target.topRows(30).array() += 0.8;
  s.user_source = Gaussian(60, 4, rng, 0.3);
  s.item_source = Gaussian(20, 4, rng);
  s.item_target = Gaussian(25, 4, rng, 0.0, 0.5);
  std::vector<Group> groups(60, Group::kG1);
  std::fill(groups.begin(), groups.begin() + 30, Group::kG0);
  std::vector<std::int8_t> sg(60, 1);
  std::fill(sg.begin(), sg.begin() + 30, 0);
  TheoryOptions opt;
  opt.lipschitz_pairs = 2000;
  const TheoryReport r = AnalyzeSnapshot(s, groups, sg, opt);
  EXPECT_LE(r.lf_sampled, r.lf_spectral + 1e-9);
  EXPECT_LE(*r.bound.measured_ugf,
            r.bound.lf * r.bound.w1_target_groups + r.bound.lf * r.bound.mc_tolerance);
  EXPECT_GT(r.deviation[0], 0.0);
}

}  // namespace
}  // namespace xdfair
