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
#include <span>
#include <vector>

#include "xdfair/backbone.h"
#include "xdfair/common.h"
#include "xdfair/mlp.h"
#include "xdfair/optimizer.h"
#include "xdfair/rng.h"

namespace xdfair {

// Probabilities entering a logarithm are clamped to [kProbFloor, 1 - kProbFloor].
inline constexpr double kProbFloor = 1e-7;

double Sigmoid(double x);
double ClampProbability(double p);

struct EstimatorConfig {
  std::vector<int> hidden = {128, 64};
  double dropout = 0.2;
  double learning_rate = 0.001;
  std::int32_t batch_size = 256;
};

// Fuses [u_t ; u_s] (2d wide) into a d-vector. Owns its own Adam state so
// its parameters stay disjoint from the backbone's.
class GainEstimator {
 public:
  GainEstimator(int dim, EstimatorConfig config, std::uint64_t seed);

  int dim() const { return dim_; }
  const EstimatorConfig& config() const { return config_; }
  const Mlp& network() const { return network_; }
  Mlp& mutable_network() { return network_; }
  Adam& optimizer() { return optimizer_; }
  const Adam& optimizer() const { return optimizer_; }
  const std::vector<int>& weight_handles() const { return weight_handles_; }
  const std::vector<int>& bias_handles() const { return bias_handles_; }

  // Deterministic (dropout off) fused vector for one user.
  Eigen::RowVectorXd Fuse(const Eigen::Ref<const Eigen::RowVectorXd>& user_target,
                          const Eigen::Ref<const Eigen::RowVectorXd>& user_source) const;

  std::uint64_t Checksum() const { return network_.Checksum(); }

 private:
  int dim_;
  EstimatorConfig config_;
  Mlp network_;
  Adam optimizer_;
  std::vector<int> weight_handles_;
  std::vector<int> bias_handles_;
};

// sigma(u_s . i_t), clamped. Requires an overlapping user.
double ProbSource(const Backbone& backbone, std::int32_t target_user,
                  std::int32_t target_item);
// sigma(u_t . i_t), clamped.
double ProbTarget(const Backbone& backbone, std::int32_t target_user,
                  std::int32_t target_item);
// sigma(Estimator(u_t, u_s) . i_t), clamped, dropout off.
double ProbJoint(const Backbone& backbone, const GainEstimator& estimator,
                 std::int32_t target_user, std::int32_t target_item);

struct GainReport {
  // Mean of log(p_joint / (p_source * p_target)) per group.
  std::array<double, 2> delta_i{0.0, 0.0};
  // (delta_i[0] - delta_i[1])^2.
  double redistribution_loss = 0.0;
  std::array<std::int64_t, 2> n_samples{0, 0};

  bool both_groups() const { return n_samples[0] > 0 && n_samples[1] > 0; }
};

// Per-group cross-domain gain over the overlapping users' target positives.
// A group without qualifying samples reports gain 0.
GainReport EstimateGain(const Backbone& backbone,
                        const GainEstimator& estimator,
                        std::span<const Interaction> target_positives,
                        std::span<const Group> groups);

// Same estimate, and when both groups are present adds
// scale * d(redistribution_loss)/d(backbone) into the row gradients. The
// estimator is frozen: gradients flow through its forward pass into u_t and
// u_s but its parameters are not differentiated.
GainReport AccumulateRedistributionGradient(
    const Backbone& backbone, const GainEstimator& estimator,
    std::span<const Interaction> target_positives,
    std::span<const Group> groups, double scale, RowGradients& user_grad,
    RowGradients& target_item_grad);

// User representations frozen at an epoch boundary.
struct EpochSnapshot {
  RowMatrix user_target;  // one row per target user
  RowMatrix user_source;  // source view per target user; zero if none
  std::vector<std::int32_t> overlapping;

  static EpochSnapshot Take(const Backbone& backbone);
};

// One pass over the overlapping users in shuffled mini-batches minimizing
// mean ||Estimator(snapshot u_t, snapshot u_s) - live u_t||^2 with dropout on.
// Only the estimator is updated. Returns the mean loss over the pass.
double EstimatorStep(GainEstimator& estimator, const EpochSnapshot& snapshot,
                     const RowMatrix& live_user_target, Rng& rng);

}  // namespace xdfair
