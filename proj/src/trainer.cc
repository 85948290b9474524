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

#include "xdfair/trainer.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "xdfair/metrics.h"

namespace xdfair {
namespace {

double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Table ItemTable(Domain d) {
  return d == Domain::kSource ? Table::kSourceItem : Table::kTargetItem;
}

std::int32_t UserStorageRow(const Backbone& b, const Triple& t) {
  return t.domain == Domain::kSource ? b.SourceUserRow(t.user)
                                     : b.TargetUserRow(t.user);
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(l2_reg >= 0.0)) throw UsageError("l2_reg must be >= 0");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(gamma >= 0.0)) throw UsageError("gamma must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw UsageError("beta must be in [0, 1)");
  if (patience < 1) throw UsageError("patience must be >= 1");
  if (embedding_dim < 1) throw UsageError("embedding_dim must be >= 1");
  if (!(estimator.learning_rate > 0.0)) {
    throw UsageError("estimator_lr must be > 0");
  }
  if (!(estimator.dropout >= 0.0 && estimator.dropout < 1.0)) {
    throw UsageError("estimator_dropout must be in [0, 1)");
  }
  if (estimator.batch_size < 1) throw UsageError("estimator_batch must be >= 1");
  for (const int w : estimator.hidden) {
    if (w < 1) throw UsageError("estimator_hidden widths must be >= 1");
  }
  if (!cross_domain && (flags.use_redistribution || flags.use_estimator_loss)) {
    throw UsageError("gain terms need cross_domain training");
  }
  sampler.Validate();
}

const std::set<std::string>& TrainConfig::Keys() {
  static const std::set<std::string> keys{
      "learning_rate",     "batch_size",
      "l2_reg",            "epochs",
      "gamma",             "beta",
      "epsilon",           "candidate_size",
      "negatives_per_positive", "use_alpha",
      "use_fair_sampling", "use_redistribution",
      "use_estimator_loss", "patience",
      "embedding_dim",     "mode",
      "cross_domain",      "estimator_hidden",
      "estimator_dropout", "estimator_lr",
      "estimator_batch",   "seed"};
  return keys;
}

void TrainConfig::Apply(const KeyValues& kv) {
  ReadKey(kv, "learning_rate", learning_rate);
  ReadKey(kv, "batch_size", batch_size);
  ReadKey(kv, "l2_reg", l2_reg);
  ReadKey(kv, "epochs", epochs);
  ReadKey(kv, "gamma", gamma);
  ReadKey(kv, "beta", beta);
  ReadKey(kv, "epsilon", sampler.epsilon);
  ReadKey(kv, "candidate_size", sampler.candidate_size);
  ReadKey(kv, "negatives_per_positive", sampler.negatives_per_positive);
  ReadKey(kv, "use_alpha", flags.use_alpha);
  ReadKey(kv, "use_fair_sampling", flags.use_fair_sampling);
  ReadKey(kv, "use_redistribution", flags.use_redistribution);
  ReadKey(kv, "use_estimator_loss", flags.use_estimator_loss);
  ReadKey(kv, "patience", patience);
  ReadKey(kv, "embedding_dim", embedding_dim);
  std::string mode_name;
  ReadKey(kv, "mode", mode_name);
  if (!mode_name.empty()) mode = ParseSharingMode(mode_name);
  ReadKey(kv, "cross_domain", cross_domain);
  std::vector<std::int32_t> hidden;
  ReadKey(kv, "estimator_hidden", hidden);
  if (kv.count("estimator_hidden") != 0) {
    estimator.hidden.assign(hidden.begin(), hidden.end());
  }
  ReadKey(kv, "estimator_dropout", estimator.dropout);
  ReadKey(kv, "estimator_lr", estimator.learning_rate);
  ReadKey(kv, "estimator_batch", estimator.batch_size);
  ReadKey(kv, "seed", seed);
  sampler.seed = seed;
}

KeyValues TrainConfig::ToKeyValues() const {
  std::string hidden;
  for (std::size_t k = 0; k < estimator.hidden.size(); ++k) {
    if (k > 0) hidden += ",";
    hidden += std::to_string(estimator.hidden[k]);
  }
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"learning_rate", FormatDouble(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"l2_reg", FormatDouble(l2_reg)},
      {"epochs", std::to_string(epochs)},
      {"gamma", FormatDouble(gamma)},
      {"beta", FormatDouble(beta)},
      {"epsilon", FormatDouble(sampler.epsilon)},
      {"candidate_size", std::to_string(sampler.candidate_size)},
      {"negatives_per_positive",
       std::to_string(sampler.negatives_per_positive)},
      {"use_alpha", b(flags.use_alpha)},
      {"use_fair_sampling", b(flags.use_fair_sampling)},
      {"use_redistribution", b(flags.use_redistribution)},
      {"use_estimator_loss", b(flags.use_estimator_loss)},
      {"patience", std::to_string(patience)},
      {"embedding_dim", std::to_string(embedding_dim)},
      {"mode", SharingModeName(mode)},
      {"cross_domain", b(cross_domain)},
      {"estimator_hidden", hidden},
      {"estimator_dropout", FormatDouble(estimator.dropout)},
      {"estimator_lr", FormatDouble(estimator.learning_rate)},
      {"estimator_batch", std::to_string(estimator.batch_size)},
      {"seed", std::to_string(seed)},
  };
}

BprResult BprLoss(const Eigen::Ref<const Eigen::RowVectorXd>& user,
                  const Eigen::Ref<const Eigen::RowVectorXd>& pos,
                  const Eigen::Ref<const Eigen::RowVectorXd>& neg,
                  double l2_reg) {
  const double x = user.dot(pos) - user.dot(neg);
  BprResult r;
  r.ranking = Softplus(-x);
  r.loss = r.ranking + l2_reg * (user.squaredNorm() + pos.squaredNorm() +
                                 neg.squaredNorm());
  // d softplus(-x) / dx = -sigmoid(-x)
  const double s = Sigmoid(-x);
  r.grad_user = -s * (pos - neg) + 2.0 * l2_reg * user;
  r.grad_pos = -s * user + 2.0 * l2_reg * pos;
  r.grad_neg = s * user + 2.0 * l2_reg * neg;
  return r;
}

BprResult BprLoss(const Backbone& backbone, const Triple& t, double l2_reg) {
  const auto user = backbone.UserRow(UserStorageRow(backbone, t));
  return BprLoss(user, backbone.ItemRow(t.domain, t.pos),
                 backbone.ItemRow(t.domain, t.neg), l2_reg);
}

namespace {

BatchObjective BatchGradientsImpl(
    const Backbone& backbone, const GainEstimator& estimator,
    std::span<const Triple> triples,
    std::span<const Interaction> target_positives,
    std::span<const Group> groups, double l2_reg, double gamma,
    bool use_redistribution, std::array<RowGradients, kNumTables>& grads,
    std::vector<double>* ranking_losses) {
  BatchObjective obj;
  if (!triples.empty()) {
    const double w = 1.0 / static_cast<double>(triples.size());
    for (const Triple& t : triples) {
      const BprResult r = BprLoss(backbone, t, l2_reg);
      obj.loss_rec += w * r.loss;
      if (ranking_losses != nullptr) ranking_losses->push_back(r.ranking);
      grads[static_cast<int>(Table::kUser)].Row(UserStorageRow(backbone, t)) +=
          w * r.grad_user;
      RowGradients& items = grads[static_cast<int>(ItemTable(t.domain))];
      items.Row(t.pos) += w * r.grad_pos;
      items.Row(t.neg) += w * r.grad_neg;
    }
  }
  if (use_redistribution) {
    if (gamma != 0.0) {
      obj.gain = AccumulateRedistributionGradient(
          backbone, estimator, target_positives, groups, gamma,
          grads[static_cast<int>(Table::kUser)],
          grads[static_cast<int>(Table::kTargetItem)]);
    } else {
      obj.gain = EstimateGain(backbone, estimator, target_positives, groups);
    }
    if (obj.gain.both_groups()) obj.loss_redist = obj.gain.redistribution_loss;
  }
  obj.loss_total = obj.loss_rec + gamma * obj.loss_redist;
  return obj;
}

}  // namespace

BatchObjective BatchGradients(const Backbone& backbone,
                              const GainEstimator& estimator,
                              std::span<const Triple> triples,
                              std::span<const Interaction> target_positives,
                              std::span<const Group> groups, double l2_reg,
                              double gamma, bool use_redistribution,
                              std::array<RowGradients, kNumTables>& grads) {
  return BatchGradientsImpl(backbone, estimator, triples, target_positives,
                            groups, l2_reg, gamma, use_redistribution, grads,
                            nullptr);
}

nlohmann::ordered_json EpochStats::ToJson() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss_total"] = loss_total;
  j["loss_rec"] = loss_rec;
  j["loss_redist"] = loss_redist;
  j["ema_g0"] = ema[0];
  j["ema_g1"] = ema[1];
  j["alpha_g0"] = alpha_g0;
  j["gain_g0"] = gain.delta_i[0];
  j["gain_g1"] = gain.delta_i[1];
  if (estimator_loss.has_value()) {
    j["estimator_loss"] = *estimator_loss;
  } else {
    j["estimator_loss"] = nullptr;
  }
  j["val_ndcg10"] = val_ndcg10;
  return j;
}

Trainer::Trainer(const CrossDomainDataset& ds, const SplitDataset& split,
                 TrainConfig config)
    : ds_(ds),
      split_(split),
      config_(std::move(config)),
      source_positives_(ds.source.n_users, split.source_train),
      target_positives_(ds.target.n_users, split.target_train),
      backbone_(Backbone::Init(ds, config_.embedding_dim, config_.mode,
                               DeriveSeed(config_.seed, "backbone"))),
      estimator_(config_.embedding_dim, config_.estimator,
                 DeriveSeed(config_.seed, "estimator")),
      tracker_(config_.beta),
      shuffle_rng_(DeriveSeed(config_.seed, "trainer/shuffle")),
      sample_rng_(DeriveSeed(config_.seed, "trainer/sampler")),
      estimator_rng_(DeriveSeed(config_.seed, "trainer/estimator")) {
  config_.Validate();
  const bool needs_overlap =
      config_.flags.use_redistribution || config_.flags.use_estimator_loss;
  if (needs_overlap && ds.NumOverlapping() == 0) {
    throw DataError("gain module requires overlapping users");
  }
  if (split.target_train.empty()) throw DataError("no target training data");
  for (int t = 0; t < kNumTables; ++t) {
    const RowMatrix& m = backbone_.table(static_cast<Table>(t));
    handles_[t] = adam_.AddParameter(m.rows(), m.cols());
  }
  if (config_.cross_domain) {
    for (const Interaction& p : split.source_train) {
      pool_.push_back({Domain::kSource, p});
    }
  }
  for (const Interaction& p : split.target_train) {
    pool_.push_back({Domain::kTarget, p});
  }
}

std::int32_t Trainer::DrawNegative(Domain domain, std::int32_t user,
                                   const std::array<double, 2>& tau,
                                   std::int64_t& fair_calls) {
  if (domain == Domain::kSource) {
    return SampleUniformNegative(source_positives_, ds_.source.n_items, user,
                                 sample_rng_);
  }
  if (!config_.flags.use_fair_sampling) {
    return SampleUniformNegative(target_positives_, ds_.target.n_items, user,
                                 sample_rng_);
  }
  ++fair_calls;
  const std::vector<std::int32_t> candidates =
      BuildCandidates(target_positives_, ds_.target.n_items, user,
                      config_.sampler.candidate_size, sample_rng_);
  const double t = tau[GroupIndex(ds_.groups[user])];
  if (std::isnan(t)) {
    return candidates[UniformIndex(sample_rng_, candidates.size())];
  }
  return DrawFromCandidates(backbone_, user, candidates, t, sample_rng_);
}

EpochStats Trainer::TrainEpoch() {
  const auto start_time = std::chrono::steady_clock::now();
  EpochStats st;
  st.epoch = epoch_;
  const AblationFlags& flags = config_.flags;

  std::optional<EpochSnapshot> snapshot;
  if (flags.use_estimator_loss) snapshot = EpochSnapshot::Take(backbone_);

  // NaN marks the uniform epoch-0 draw.
  std::array<double, 2> tau{1.0, 1.0};
  if (flags.use_alpha) {
    if (tracker_.epochs() == 0) {
      tau = {std::numeric_limits<double>::quiet_NaN(),
             std::numeric_limits<double>::quiet_NaN()};
    } else {
      tau = {Temperature(tracker_.Alpha(Group::kG0), config_.sampler.epsilon),
             Temperature(tracker_.Alpha(Group::kG1), config_.sampler.epsilon)};
    }
  }

  Shuffle(pool_.begin(), pool_.end(), shuffle_rng_);
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  const int dim = backbone_.dim();
  std::array<RowGradients, kNumTables> grads{RowGradients(dim),
                                             RowGradients(dim),
                                             RowGradients(dim)};
  std::vector<Triple> triples;
  std::vector<Interaction> positives;
  std::vector<double> ranking;
  for (std::size_t begin = 0; begin < pool_.size(); begin += batch) {
    const std::size_t end = std::min(pool_.size(), begin + batch);
    triples.clear();
    positives.clear();
    ranking.clear();
    for (std::size_t k = begin; k < end; ++k) {
      const PoolEntry& e = pool_[k];
      if (e.domain == Domain::kTarget) positives.push_back(e.pair);
      for (std::int32_t n = 0; n < config_.sampler.negatives_per_positive;
           ++n) {
        const std::int32_t neg =
            DrawNegative(e.domain, e.pair.user, tau, st.fair_sampler_calls);
        triples.push_back({e.domain, e.pair.user, e.pair.item, neg});
      }
    }
    for (RowGradients& g : grads) g.Clear();
    const std::uint64_t estimator_before =
        check_partition_ ? estimator_.Checksum() : 0;

    const BatchObjective obj = BatchGradientsImpl(
        backbone_, estimator_, triples, positives, ds_.groups, config_.l2_reg,
        config_.gamma, flags.use_redistribution, grads, &ranking);
    if (!std::isfinite(obj.loss_total)) {
      throw NumericalError("non-finite loss at epoch " +
                           std::to_string(epoch_) + ", batch " +
                           std::to_string(st.n_batches));
    }
    for (std::size_t k = 0; k < triples.size(); ++k) {
      if (triples[k].domain == Domain::kTarget) {
        tracker_.Accumulate(ds_.groups[triples[k].user], ranking[k]);
      }
    }

    adam_.BeginStep();
    for (int t = 0; t < kNumTables; ++t) {
      if (grads[t].empty()) continue;
      adam_.ApplyRows(handles_[t], backbone_.mutable_table(static_cast<Table>(t)),
                      grads[t], config_.learning_rate);
    }
    if (check_partition_) {
      ++partition_checks_;
      if (estimator_.Checksum() != estimator_before) ++partition_violations_;
    }

    st.loss_total += obj.loss_total;
    st.loss_rec += obj.loss_rec;
    st.loss_redist += obj.loss_redist;
    st.n_samples += static_cast<std::int64_t>(end - begin);
    ++st.n_batches;
    if (config_.record_batches) {
      st.batches.push_back({obj.loss_total, obj.loss_rec, obj.loss_redist});
    }
    if (config_.record_trace) {
      st.trace.insert(st.trace.end(), triples.begin(), triples.end());
    }
  }
  if (st.n_batches > 0) {
    const auto nb = static_cast<double>(st.n_batches);
    st.loss_total /= nb;
    st.loss_rec /= nb;
    st.loss_redist /= nb;
  }
  if (!backbone_.AllFinite()) {
    throw NumericalError("non-finite parameters after epoch " +
                         std::to_string(epoch_));
  }

  st.ema = tracker_.EndEpoch();
  st.alpha_g0 = tracker_.Alpha(Group::kG0);

  if (flags.use_estimator_loss) {
    const std::uint64_t backbone_before =
        check_partition_ ? backbone_.Checksum() : 0;
    st.estimator_loss = EstimatorStep(estimator_, *snapshot,
                                      backbone_.UserTargetTable(),
                                      estimator_rng_);
    if (!std::isfinite(*st.estimator_loss)) {
      throw NumericalError("non-finite estimator loss at epoch " +
                           std::to_string(epoch_));
    }
    if (check_partition_) {
      ++partition_checks_;
      if (backbone_.Checksum() != backbone_before) ++partition_violations_;
    }
  }
  if (config_.cross_domain && ds_.NumOverlapping() > 0) {
    st.gain = EstimateGain(backbone_, estimator_, split_.target_train,
                           ds_.groups);
  }
  st.val_ndcg10 = ValidationNdcg(backbone_, ds_, split_, 10);
  st.backbone_checksum = backbone_.Checksum();
  st.estimator_checksum = estimator_.Checksum();
  st.seconds = std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_time)
                   .count();
  ++epoch_;
  return st;
}

TrainedModel Train(const CrossDomainDataset& ds, const SplitDataset& split,
                   const TrainConfig& config, bool check_partition) {
  Trainer trainer(ds, split, config);
  trainer.set_check_partition(check_partition);
  TrainedModel model{trainer.backbone(), trainer.estimator(),
                     trainer.tracker(), trainer.optimizer(), {}, -1, 0.0,
                     0, 0};
  double best = -std::numeric_limits<double>::infinity();
  for (std::int32_t e = 0; e < config.epochs; ++e) {
    EpochStats st = trainer.TrainEpoch();
    const double val = st.val_ndcg10;
    model.log.push_back(std::move(st));
    if (val > best) {
      best = val;
      model.best_epoch = e;
      model.best_val_ndcg10 = val;
      model.backbone = trainer.backbone();
      model.estimator = trainer.estimator();
      model.tracker = trainer.tracker();
      model.optimizer = trainer.optimizer();
    } else if (e - model.best_epoch >= config.patience) {
      break;
    }
  }
  model.partition_violations = trainer.partition_violations();
  model.partition_checks = trainer.partition_checks();
  return model;
}

nlohmann::ordered_json CheckpointSidecar(const TrainedModel& model,
                                         const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["format"] = "xdfair-checkpoint";
  j["version"] = 1;
  j["best_epoch"] = model.best_epoch;
  j["best_val_ndcg10"] = model.best_val_ndcg10;
  j["epochs_run"] = model.log.size();
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : config.ToKeyValues()) cfg[k] = v;
  j["config"] = std::move(cfg);
  const GroupLossTracker::State ts = model.tracker.state();
  j["tracker"] = {{"beta", ts.beta},
                  {"epochs", ts.epochs},
                  {"ema", {ts.ema[0], ts.ema[1]}},
                  {"initialized", {ts.initialized[0], ts.initialized[1]}}};
  const Adam& adam = model.optimizer;
  nlohmann::ordered_json opt;
  opt["beta1"] = adam.config().beta1;
  opt["beta2"] = adam.config().beta2;
  opt["epsilon"] = adam.config().epsilon;
  opt["step"] = adam.step();
  nlohmann::ordered_json moments = nlohmann::ordered_json::array();
  for (int h = 0; h < adam.num_parameters(); ++h) {
    moments.push_back({{"rows", adam.first_moment(h).rows()},
                       {"cols", adam.first_moment(h).cols()},
                       {"m_hash", HashMatrix(adam.first_moment(h), 0)},
                       {"v_hash", HashMatrix(adam.second_moment(h), 0)}});
  }
  opt["moments"] = std::move(moments);
  j["optimizer"] = std::move(opt);
  j["backbone_checksum"] = model.backbone.Checksum();
  j["estimator_checksum"] = model.estimator.Checksum();
  return j;
}

void WriteOptimizerState(const std::filesystem::path& path, const Adam& adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  auto put = [&out](const auto v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  auto put_matrix = [&out](const RowMatrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  };
  out.write("CDFO", 4);
  put(std::uint32_t{1});
  put(static_cast<std::int64_t>(adam.step()));
  put(static_cast<std::uint32_t>(adam.num_parameters()));
  for (int h = 0; h < adam.num_parameters(); ++h) {
    put(static_cast<std::uint64_t>(adam.first_moment(h).rows()));
    put(static_cast<std::uint64_t>(adam.first_moment(h).cols()));
    put_matrix(adam.first_moment(h));
    put_matrix(adam.second_moment(h));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void ReadOptimizerState(const std::filesystem::path& path, Adam& adam) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  auto get = [&in, &path](auto& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
      throw DataError(path.string() + ": truncated optimizer state");
    }
  };
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "CDFO") {
    throw DataError(path.string() + ": not an optimizer state file");
  }
  std::uint32_t version = 0;
  std::int64_t step = 0;
  std::uint32_t n = 0;
  get(version);
  if (version != 1) throw DataError(path.string() + ": unsupported version");
  get(step);
  get(n);
  if (static_cast<int>(n) != adam.num_parameters()) {
    throw DataError(path.string() + ": parameter count mismatch");
  }
  std::vector<RowMatrix> m(n);
  std::vector<RowMatrix> v(n);
  for (std::uint32_t h = 0; h < n; ++h) {
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    get(rows);
    get(cols);
    const RowMatrix& ref = adam.first_moment(static_cast<int>(h));
    if (rows != static_cast<std::uint64_t>(ref.rows()) ||
        cols != static_cast<std::uint64_t>(ref.cols())) {
      throw DataError(path.string() + ": moment shape mismatch");
    }
    for (RowMatrix* target : {&m[h], &v[h]}) {
      target->resize(ref.rows(), ref.cols());
      if (!in.read(reinterpret_cast<char*>(target->data()),
                   static_cast<std::streamsize>(target->size() *
                                                sizeof(double)))) {
        throw DataError(path.string() + ": truncated optimizer state");
      }
    }
  }
  adam.Restore(step, std::move(m), std::move(v));
}

void WriteRunLog(const std::filesystem::path& path,
                 std::span<const EpochStats> log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const EpochStats& st : log) out << st.ToJson().dump() << "\n";
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace xdfair
