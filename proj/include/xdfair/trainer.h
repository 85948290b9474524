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
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdfair/backbone.h"
#include "xdfair/common.h"
#include "xdfair/config.h"
#include "xdfair/dataset.h"
#include "xdfair/gain.h"
#include "xdfair/optimizer.h"
#include "xdfair/rng.h"
#include "xdfair/sampler.h"

namespace xdfair {

struct AblationFlags {
  bool use_alpha = true;
  bool use_fair_sampling = true;
  bool use_redistribution = true;
  bool use_estimator_loss = true;

  static AblationFlags AllOff() { return {false, false, false, false}; }
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  double learning_rate = 0.001;
  std::int32_t batch_size = 2048;
  double l2_reg = 1e-4;
  std::int32_t epochs = 30;
  double gamma = 1.0;
  double beta = 0.9;
  SamplerConfig sampler;
  AblationFlags flags;
  std::uint64_t seed = 42;
  std::int32_t patience = 10;
  std::int32_t embedding_dim = 32;
  SharingMode mode = SharingMode::kShared;
  // false trains on the target domain alone.
  bool cross_domain = true;
  EstimatorConfig estimator;
  // Instrumentation for tests.
  bool record_batches = false;
  bool record_trace = false;

  void Validate() const;
  void Apply(const KeyValues& kv);
  KeyValues ToKeyValues() const;
  static const std::set<std::string>& Keys();
};

// One training triple tagged with its domain. Ids are domain-local.
struct Triple {
  Domain domain = Domain::kTarget;
  std::int32_t user = 0;
  std::int32_t pos = 0;
  std::int32_t neg = 0;
};

struct BprResult {
  double loss = 0.0;     // ranking term plus l2 term
  double ranking = 0.0;  // -log sigmoid(score gap)
  Eigen::RowVectorXd grad_user;
  Eigen::RowVectorXd grad_pos;
  Eigen::RowVectorXd grad_neg;
};

// -log sigmoid(u.i - u.j) + l2 (|u|^2 + |i|^2 + |j|^2) with analytic
// gradients.
BprResult BprLoss(const Eigen::Ref<const Eigen::RowVectorXd>& user,
                  const Eigen::Ref<const Eigen::RowVectorXd>& pos,
                  const Eigen::Ref<const Eigen::RowVectorXd>& neg,
                  double l2_reg);

// Backbone-level BPR for a domain triple.
BprResult BprLoss(const Backbone& backbone, const Triple& t, double l2_reg);

struct BatchObjective {
  double loss_rec = 0.0;
  double loss_redist = 0.0;
  double loss_total = 0.0;
  GainReport gain;
};

// Value and backbone gradient of
//   mean_t bpr(t) + gamma * redistribution(target positives)
// Gradients are accumulated into grads[Table]. The estimator is read only.
// The penalty is skipped entirely when `gamma` is zero or the positives do
// not cover both groups.
BatchObjective BatchGradients(const Backbone& backbone,
                              const GainEstimator& estimator,
                              std::span<const Triple> triples,
                              std::span<const Interaction> target_positives,
                              std::span<const Group> groups, double l2_reg,
                              double gamma, bool use_redistribution,
                              std::array<RowGradients, kNumTables>& grads);

struct BatchRecord {
  double loss_total = 0.0;
  double loss_rec = 0.0;
  double loss_redist = 0.0;
};

struct EpochStats {
  std::int32_t epoch = 0;
  double loss_total = 0.0;
  double loss_rec = 0.0;
  double loss_redist = 0.0;
  std::array<double, 2> ema{0.0, 0.0};
  double alpha_g0 = 0.0;
  GainReport gain;
  std::optional<double> estimator_loss;
  double val_ndcg10 = 0.0;
  double seconds = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t n_batches = 0;
  std::int64_t fair_sampler_calls = 0;
  std::uint64_t backbone_checksum = 0;
  std::uint64_t estimator_checksum = 0;
  std::vector<BatchRecord> batches;
  std::vector<Triple> trace;

  // Run-log line. Timing is kept out so logs are reproducible.
  nlohmann::ordered_json ToJson() const;
};

class Trainer {
 public:
  Trainer(const CrossDomainDataset& ds, const SplitDataset& split,
          TrainConfig config);

  EpochStats TrainEpoch();

  const TrainConfig& config() const { return config_; }
  const Backbone& backbone() const { return backbone_; }
  Backbone& mutable_backbone() { return backbone_; }
  const GainEstimator& estimator() const { return estimator_; }
  GainEstimator& mutable_estimator() { return estimator_; }
  const GroupLossTracker& tracker() const { return tracker_; }
  const Adam& optimizer() const { return adam_; }
  std::int32_t epochs_done() const { return epoch_; }

  // Contract checks: the estimator is untouched by backbone steps and the
  // backbone is untouched by estimator steps. Counts every violation.
  std::int64_t partition_violations() const { return partition_violations_; }
  std::int64_t partition_checks() const { return partition_checks_; }
  void set_check_partition(bool on) { check_partition_ = on; }

 private:
  struct PoolEntry {
    Domain domain;
    Interaction pair;
  };

  std::int32_t DrawNegative(Domain domain, std::int32_t user,
                            const std::array<double, 2>& tau,
                            std::int64_t& fair_calls);

  const CrossDomainDataset& ds_;
  const SplitDataset& split_;
  TrainConfig config_;
  UserItemIndex source_positives_;
  UserItemIndex target_positives_;
  std::vector<PoolEntry> pool_;
  Backbone backbone_;
  GainEstimator estimator_;
  GroupLossTracker tracker_;
  Adam adam_;
  std::array<int, kNumTables> handles_{};
  Rng shuffle_rng_;
  Rng sample_rng_;
  Rng estimator_rng_;
  std::int32_t epoch_ = 0;
  bool check_partition_ = false;
  std::int64_t partition_violations_ = 0;
  std::int64_t partition_checks_ = 0;
};

struct TrainedModel {
  Backbone backbone;
  GainEstimator estimator;
  GroupLossTracker tracker;
  Adam optimizer;
  std::vector<EpochStats> log;
  std::int32_t best_epoch = -1;
  double best_val_ndcg10 = 0.0;
  std::int64_t partition_violations = 0;
  std::int64_t partition_checks = 0;
};

// Epoch loop with early stopping on validation NDCG@10. The returned
// parameters are those of the best epoch (the initial model when epochs = 0).
TrainedModel Train(const CrossDomainDataset& ds, const SplitDataset& split,
                   const TrainConfig& config, bool check_partition = false);

// Optimizer and tracker state next to an embedding snapshot.
nlohmann::ordered_json CheckpointSidecar(const TrainedModel& model,
                                         const TrainConfig& config);

// Adam moments in binary form, little-endian f64:
//   "CDFO" | u32 version | i64 step | u32 n | n x (u64 rows | u64 cols | m | v)
void WriteOptimizerState(const std::filesystem::path& path, const Adam& adam);
void ReadOptimizerState(const std::filesystem::path& path, Adam& adam);

void WriteRunLog(const std::filesystem::path& path,
                 std::span<const EpochStats> log);

}  // namespace xdfair
