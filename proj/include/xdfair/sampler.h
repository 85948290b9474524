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
#include "xdfair/dataset.h"
#include "xdfair/rng.h"

namespace xdfair {

// Momentum-smoothed per-group recommendation loss:
//   ema_g(0) = L_g(0),  ema_g(K) = beta * ema_g(K-1) + (1 - beta) * L_g(K)
// where L_g(K) is the mean per-sample loss of group g during epoch K.
class GroupLossTracker {
 public:
  explicit GroupLossTracker(double beta = 0.9);

  void Accumulate(Group group, double loss);
  // Folds the epoch means into the EMA and resets the accumulators. A group
  // without samples keeps its previous EMA; on the first epoch that is an
  // error.
  std::array<double, 2> EndEpoch();

  // Relative gap (ema_g - avg) / avg with avg the mean of both group EMAs.
  double Alpha(Group group) const;

  double beta() const { return beta_; }
  int epochs() const { return epochs_; }
  bool initialized(Group g) const { return initialized_[GroupIndex(g)]; }
  double ema(Group g) const { return ema_[GroupIndex(g)]; }
  double epoch_sum(Group g) const { return sum_[GroupIndex(g)]; }
  std::int64_t epoch_count(Group g) const { return count_[GroupIndex(g)]; }

  struct State {
    double beta = 0.9;
    int epochs = 0;
    std::array<double, 2> ema{};
    std::array<bool, 2> initialized{};
  };
  State state() const;
  static GroupLossTracker FromState(const State& state);

 private:
  double beta_;
  int epochs_ = 0;
  std::array<double, 2> ema_{0.0, 0.0};
  std::array<bool, 2> initialized_{false, false};
  std::array<double, 2> sum_{0.0, 0.0};
  std::array<std::int64_t, 2> count_{0, 0};
};

struct SamplerConfig {
  double epsilon = 1.0;
  std::int32_t candidate_size = 8;
  std::int32_t negatives_per_positive = 1;
  std::uint64_t seed = 0;

  void Validate() const;
};

// tau = exp(-epsilon * alpha).
double Temperature(double alpha, double epsilon);

// Uniform sample without replacement of `size` items in [0, n_items) that the
// user has no training interaction with. Returns every eligible item (sorted)
// when fewer than `size` exist; throws when none exist.
std::vector<std::int32_t> BuildCandidates(const UserItemIndex& positives,
                                          std::int32_t n_items,
                                          std::int32_t user, std::int32_t size,
                                          Rng& rng);

// softmax(scores / tau), max-subtracted.
std::vector<double> SamplingDistribution(std::span<const double> scores,
                                         double tau);

// Same, scoring the candidates with the backbone's target-domain view.
std::vector<double> SamplingDistribution(const Backbone& backbone,
                                         std::int32_t target_user,
                                         std::span<const std::int32_t> items,
                                         double tau);

// Inverse-CDF draw.
std::size_t DrawIndex(std::span<const double> probabilities, Rng& rng);

// Draws one candidate with probability softmax(score / tau).
std::int32_t DrawFromCandidates(const Backbone& backbone,
                                std::int32_t target_user,
                                std::span<const std::int32_t> candidates,
                                double tau, Rng& rng);

// Group-aware negative draw for a target-domain user. Before the tracker has
// completed an epoch the draw is uniform over a fresh candidate set.
struct NegativeDraw {
  std::int32_t item = -1;
  double tau = 1.0;
  bool group_aware = false;
};

NegativeDraw SampleNegative(const Backbone& backbone,
                            const GroupLossTracker& tracker,
                            const SamplerConfig& cfg,
                            const UserItemIndex& train_positives,
                            std::span<const Group> groups,
                            std::int32_t target_user, Rng& rng);

// Uniform negative over non-positive items; no candidate scoring.
std::int32_t SampleUniformNegative(const UserItemIndex& train_positives,
                                   std::int32_t n_items, std::int32_t user,
                                   Rng& rng);

}  // namespace xdfair
