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
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdfair/common.h"
#include "xdfair/snapshot.h"

namespace xdfair {

// Minimum-cost perfect matching on a square cost matrix (Hungarian method
// with potentials, O(n^3)). Writes row -> column into `assignment` if given.
double MinCostAssignment(const RowMatrix& cost,
                         std::vector<int>* assignment = nullptr);

// Exact W1 between two equal-size empirical measures with uniform weights
// under the Euclidean ground metric.
double ExactWasserstein1(const RowMatrix& a, const RowMatrix& b);

struct W1Config {
  std::int32_t subsample_n = 256;
  std::int32_t repetitions = 8;
  std::uint64_t seed = 0;
};

// Exact when lcm(|a|, |b|) <= subsample_n (each point replicated to the
// common size) or when both sizes are equal and within subsample_n.
// Otherwise the mean over repetitions of the exact W1 between equal-size
// subsamples of size min(|a|, |b|, subsample_n), drawn without replacement.
double Wasserstein1(const RowMatrix& a, const RowMatrix& b,
                    const W1Config& config);

// Root-mean-square distance of the points to their centroid.
double CloudScale(const RowMatrix& points);

// Users as points with domain and group labels.
struct EmbeddingCloud {
  RowMatrix points;
  std::vector<Domain> domain;
  std::vector<Group> group;

  RowMatrix Select(std::optional<Domain> d, std::optional<Group> g) const;
  void Add(const Eigen::Ref<const Eigen::RowVectorXd>& p, Domain d, Group g);
};

// Target users from `user_target` with their groups, and source users with a
// known group (source_groups >= 0) from `user_source`.
EmbeddingCloud CloudFromSnapshot(const EmbeddingSnapshot& snapshot,
                                 const std::vector<Group>& target_groups,
                                 const std::vector<std::int8_t>& source_groups);

struct PreservationVerdict {
  bool preserved = true;
  // baseline - rhs; negative when the condition fails.
  double margin = 0.0;
};

// rhs <= baseline (non-strict).
PreservationVerdict PreservationCheck(double rhs, double baseline_ugf);

struct BoundReport {
  double w1_source_groups = 0.0;  // W1(nu_s^0, nu_s^1)
  std::array<double, 2> delta_target{0.0, 0.0};  // W1(nu_t^g, nu_t)
  std::array<double, 2> delta_source{0.0, 0.0};  // W1(nu_s^g, nu_s)
  double domain_shift = 0.0;                     // W1(nu_t, nu_s)
  double lo = 1.0;
  double lf = 1.0;
  double rhs = 0.0;
  // Direct W1(nu_t^0, nu_t^1) and the decomposition check.
  double w1_target_groups = 0.0;
  double chain_slack = 0.0;  // decomposition sum - w1_target_groups
  double mc_tolerance = 0.0;
  bool chain_holds = true;
  double scale = 0.0;
  std::optional<double> measured_ugf;
  std::optional<double> baseline_ugf;
  std::optional<PreservationVerdict> preservation;
  std::int32_t subsample_n = 0;
  std::int32_t repetitions = 0;

  // W1(nu_s^0, nu_s^1) + delta terms + 2 * domain shift.
  double DecompositionSum() const;
  nlohmann::ordered_json ToJson() const;
};

// Relative Monte-Carlo tolerance applied to `scale`.
inline constexpr double kMonteCarloSlack = 0.05;

BoundReport GroupGapBound(const EmbeddingCloud& cloud, double lo, double lf,
                          const W1Config& config);

// Attaches the baseline and the preservation verdict.
void AttachBaseline(BoundReport& report, double baseline_ugf);

// sup over probe functions of |mean_a h - mean_b h|, where the probes are
// the coordinate projections and `n_directions` random unit projections of
// map(z). Every probe is 1-Lipschitz on the map's output space.
using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
double ProbeGap(const RowMatrix& a, const RowMatrix& b, const VectorMap& map,
                std::int32_t n_directions, std::uint64_t seed);

struct RademacherEstimate {
  double complexity = 0.0;  // R_n(H)
  double gain_class = 0.0;  // bound for differences: 2 R_n(H)
  std::int64_t sign_vectors = 0;
  bool exhaustive = false;
};

// values is H x n: function h evaluated on sample point i. Monte-Carlo over
// independent uniform sign vectors.
RademacherEstimate EstimateRademacher(const RowMatrix& values,
                                      std::int32_t n_sign_draws,
                                      std::uint64_t seed);

// Exact expectation over all 2^n sign vectors (n <= 24).
RademacherEstimate ExhaustiveRademacher(const RowMatrix& values);

// 2 R + B sqrt(ln(2 / delta) / (2 n)).
double DeviationBound(double rademacher, double bound_b, std::int64_t n,
                      double delta);

// max over sampled pairs of |f(z1) - f(z2)| / |z1 - z2|; a lower bound on
// the Lipschitz constant. Pairs at distance zero are skipped.
double LipschitzEstimate(const VectorMap& map, const RowMatrix& cloud,
                         std::int32_t n_pairs, std::uint64_t seed);

struct TheoryOptions {
  double lo = 1.0;
  // Unset: spectral norm of the target item matrix, exact for the linear
  // scoring map z -> I_t z.
  std::optional<double> lf;
  std::optional<double> baseline_ugf;
  W1Config w1;
  std::int32_t rademacher_items = 64;
  std::int32_t sign_draws = 200;
  double delta = 0.05;
  std::int32_t lipschitz_pairs = 10000;
  std::int32_t probe_directions = 32;
  std::uint64_t seed = 0;
};

struct TheoryReport {
  BoundReport bound;
  double lf_sampled = 0.0;
  double lf_spectral = 0.0;
  std::array<std::int64_t, 2> n_target{0, 0};
  std::array<RademacherEstimate, 2> rademacher;
  std::array<double, 2> deviation{0.0, 0.0};
  double delta = 0.05;

  nlohmann::ordered_json ToJson() const;
};

TheoryReport AnalyzeSnapshot(const EmbeddingSnapshot& snapshot,
                             const std::vector<Group>& target_groups,
                             const std::vector<std::int8_t>& source_groups,
                             const TheoryOptions& options);

}  // namespace xdfair
