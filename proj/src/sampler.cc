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

#include "xdfair/sampler.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xdfair {
namespace {

constexpr double kDegenerateLoss = 1e-12;

}  // namespace

GroupLossTracker::GroupLossTracker(double beta) : beta_(beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw InvalidArgument("tracker beta must lie in [0, 1)");
  }
}

void GroupLossTracker::Accumulate(Group group, double loss) {
  const int g = GroupIndex(group);
  if (g < 0 || g > 1) throw InvalidArgument("unknown group");
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss passed to group tracker");
  }
  sum_[g] += loss;
  ++count_[g];
}

std::array<double, 2> GroupLossTracker::EndEpoch() {
  for (int g = 0; g < 2; ++g) {
    if (count_[g] == 0 && !initialized_[g]) {
      throw InvalidArgument(std::string("group ") +
                            GroupName(static_cast<Group>(g)) +
                            " has no samples in its first epoch");
    }
  }
  for (int g = 0; g < 2; ++g) {
    if (count_[g] == 0) continue;  // keeps the previous EMA
    const double mean = sum_[g] / static_cast<double>(count_[g]);
    ema_[g] = initialized_[g] ? beta_ * ema_[g] + (1.0 - beta_) * mean : mean;
    initialized_[g] = true;
  }
  sum_ = {0.0, 0.0};
  count_ = {0, 0};
  ++epochs_;
  return ema_;
}

double GroupLossTracker::Alpha(Group group) const {
  if (!initialized_[0] || !initialized_[1]) {
    throw InvalidArgument("alpha requires both group EMAs");
  }
  const double avg = 0.5 * (ema_[0] + ema_[1]);
  if (avg <= kDegenerateLoss) throw NumericalError("degenerate losses");
  return (ema_[GroupIndex(group)] - avg) / avg;
}

GroupLossTracker::State GroupLossTracker::state() const {
  return {beta_, epochs_, ema_, initialized_};
}

GroupLossTracker GroupLossTracker::FromState(const State& state) {
  GroupLossTracker t(state.beta);
  t.epochs_ = state.epochs;
  t.ema_ = state.ema;
  t.initialized_ = state.initialized;
  return t;
}

void SamplerConfig::Validate() const {
  if (!(epsilon >= 0.0)) throw UsageError("epsilon must be >= 0");
  if (candidate_size < 1) throw UsageError("candidate_size must be >= 1");
  if (negatives_per_positive < 1) {
    throw UsageError("negatives_per_positive must be >= 1");
  }
}

double Temperature(double alpha, double epsilon) {
  return std::exp(-epsilon * alpha);
}

std::vector<std::int32_t> BuildCandidates(const UserItemIndex& positives,
                                          std::int32_t n_items,
                                          std::int32_t user, std::int32_t size,
                                          Rng& rng) {
  const auto taken = positives.Items(user);
  const std::int32_t eligible =
      n_items - static_cast<std::int32_t>(taken.size());
  if (eligible <= 0) {
    throw DataError("user " + std::to_string(user) +
                    " has no unlabeled items to sample");
  }
  std::vector<std::int32_t> out;
  if (eligible <= size || static_cast<std::int64_t>(eligible) * 4 < n_items) {
    // Explicit pool: every eligible item, then a partial Fisher-Yates.
    std::vector<std::int32_t> pool;
    pool.reserve(static_cast<std::size_t>(eligible));
    auto it = taken.begin();
    for (std::int32_t i = 0; i < n_items; ++i) {
      while (it != taken.end() && *it < i) ++it;
      if (it == taken.end() || *it != i) pool.push_back(i);
    }
    if (eligible <= size) return pool;
    for (std::int32_t k = 0; k < size; ++k) {
      const auto j =
          k + static_cast<std::int32_t>(UniformIndex(rng, eligible - k));
      std::swap(pool[k], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(size));
    return pool;
  }
  out.reserve(static_cast<std::size_t>(size));
  while (static_cast<std::int32_t>(out.size()) < size) {
    const auto item = static_cast<std::int32_t>(UniformIndex(rng, n_items));
    if (std::binary_search(taken.begin(), taken.end(), item)) continue;
    if (std::find(out.begin(), out.end(), item) != out.end()) continue;
    out.push_back(item);
  }
  return out;
}

std::vector<double> SamplingDistribution(std::span<const double> scores,
                                         double tau) {
  if (scores.empty()) throw InvalidArgument("empty candidate set");
  if (!(tau > 0.0)) throw InvalidArgument("temperature must be positive");
  const double max_score = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp((scores[k] - max_score) / tau);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> SamplingDistribution(const Backbone& backbone,
                                         std::int32_t target_user,
                                         std::span<const std::int32_t> items,
                                         double tau) {
  const auto user = backbone.UserTargetVector(target_user);
  std::vector<double> scores(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    scores[k] = user.dot(backbone.TargetItemVector(items[k]));
  }
  return SamplingDistribution(scores, tau);
}

std::size_t DrawIndex(std::span<const double> probabilities, Rng& rng) {
  const double u = UniformUnit(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    cumulative += probabilities[k];
    if (u < cumulative) return k;
  }
  return probabilities.size() - 1;
}

std::int32_t DrawFromCandidates(const Backbone& backbone,
                                std::int32_t target_user,
                                std::span<const std::int32_t> candidates,
                                double tau, Rng& rng) {
  if (candidates.size() == 1) return candidates[0];
  const auto p = SamplingDistribution(backbone, target_user, candidates, tau);
  return candidates[DrawIndex(p, rng)];
}

NegativeDraw SampleNegative(const Backbone& backbone,
                            const GroupLossTracker& tracker,
                            const SamplerConfig& cfg,
                            const UserItemIndex& train_positives,
                            std::span<const Group> groups,
                            std::int32_t target_user, Rng& rng) {
  const auto candidates =
      BuildCandidates(train_positives, backbone.num_target_items(),
                      target_user, cfg.candidate_size, rng);
  NegativeDraw draw;
  if (tracker.epochs() == 0) {
    draw.item = candidates[UniformIndex(rng, candidates.size())];
    draw.tau = std::numeric_limits<double>::infinity();
    return draw;
  }
  draw.tau = Temperature(tracker.Alpha(groups[target_user]), cfg.epsilon);
  draw.item = DrawFromCandidates(backbone, target_user, candidates, draw.tau,
                                 rng);
  draw.group_aware = true;
  return draw;
}

std::int32_t SampleUniformNegative(const UserItemIndex& train_positives,
                                   std::int32_t n_items, std::int32_t user,
                                   Rng& rng) {
  return BuildCandidates(train_positives, n_items, user, 1, rng)[0];
}

}  // namespace xdfair
