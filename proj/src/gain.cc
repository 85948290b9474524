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

#include "xdfair/gain.h"

#include <cmath>

namespace xdfair {
namespace {

struct ClampedLog {
  double p;       // clamped probability
  double dlog;    // d log(p) / d score, zero inside the clamp
};

ClampedLog LogSigmoidTerm(double score) {
  const double s = Sigmoid(score);
  if (s < kProbFloor) return {kProbFloor, 0.0};
  if (s > 1.0 - kProbFloor) return {1.0 - kProbFloor, 0.0};
  return {s, 1.0 - s};
}

// Forward state for the overlapping-user positives of a batch.
struct GainBatch {
  std::vector<std::int32_t> users;
  std::vector<std::int32_t> items;
  std::vector<int> group;
  RowMatrix inputs;  // [u_t ; u_s]
  RowMatrix fused;
  Mlp::Cache cache;
  std::vector<ClampedLog> joint, source, target;
  GainReport report;
};

GainBatch ForwardGain(const Backbone& backbone, const GainEstimator& estimator,
                      std::span<const Interaction> positives,
                      std::span<const Group> groups, bool keep_cache) {
  GainBatch b;
  for (const Interaction& p : positives) {
    if (!backbone.IsOverlapping(p.user)) continue;
    b.users.push_back(p.user);
    b.items.push_back(p.item);
    b.group.push_back(GroupIndex(groups[p.user]));
  }
  const auto n = static_cast<Eigen::Index>(b.users.size());
  if (n == 0) return b;
  const int d = backbone.dim();
  b.inputs.resize(n, 2 * d);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::int32_t u = b.users[k];
    b.inputs.row(k).head(d) = backbone.UserRow(backbone.TargetUserRow(u));
    b.inputs.row(k).tail(d) = backbone.UserRow(backbone.SourceRowOfTarget(u));
  }
  b.fused = estimator.network().Forward(b.inputs,
                                        keep_cache ? &b.cache : nullptr);

  std::array<double, 2> sum{0.0, 0.0};
  b.joint.resize(n);
  b.source.resize(n);
  b.target.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto item = backbone.ItemRow(Domain::kTarget, b.items[k]);
    b.joint[k] = LogSigmoidTerm(b.fused.row(k).dot(item));
    b.source[k] = LogSigmoidTerm(b.inputs.row(k).tail(d).dot(item));
    b.target[k] = LogSigmoidTerm(b.inputs.row(k).head(d).dot(item));
    const double log_ratio = std::log(b.joint[k].p) -
                             std::log(b.source[k].p) -
                             std::log(b.target[k].p);
    sum[b.group[k]] += log_ratio;
    ++b.report.n_samples[b.group[k]];
  }
  for (int g = 0; g < 2; ++g) {
    if (b.report.n_samples[g] > 0) {
      b.report.delta_i[g] =
          sum[g] / static_cast<double>(b.report.n_samples[g]);
    }
  }
  const double gap = b.report.delta_i[0] - b.report.delta_i[1];
  b.report.redistribution_loss = gap * gap;
  return b;
}

}  // namespace

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double ClampProbability(double p) {
  return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor);
}

GainEstimator::GainEstimator(int dim, EstimatorConfig config,
                             std::uint64_t seed)
    : dim_(dim), config_(std::move(config)) {
  if (dim < 1) throw InvalidArgument("estimator dimension must be >= 1");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) {
    throw UsageError("estimator_dropout must lie in [0, 1)");
  }
  std::vector<int> widths{2 * dim};
  widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
  widths.push_back(dim);
  network_ = Mlp(widths, seed);
  for (int l = 0; l < network_.num_layers(); ++l) {
    weight_handles_.push_back(optimizer_.AddParameter(
        network_.weights()[l].rows(), network_.weights()[l].cols()));
    bias_handles_.push_back(optimizer_.AddParameter(
        network_.biases()[l].rows(), network_.biases()[l].cols()));
  }
}

Eigen::RowVectorXd GainEstimator::Fuse(
    const Eigen::Ref<const Eigen::RowVectorXd>& user_target,
    const Eigen::Ref<const Eigen::RowVectorXd>& user_source) const {
  RowMatrix x(1, 2 * dim_);
  x.row(0).head(dim_) = user_target;
  x.row(0).tail(dim_) = user_source;
  return network_.Forward(x).row(0);
}

double ProbSource(const Backbone& backbone, std::int32_t target_user,
                  std::int32_t target_item) {
  return ClampProbability(Sigmoid(backbone.UserSourceVector(target_user).dot(
      backbone.TargetItemVector(target_item))));
}

double ProbTarget(const Backbone& backbone, std::int32_t target_user,
                  std::int32_t target_item) {
  return ClampProbability(Sigmoid(backbone.Score(target_user, target_item)));
}

double ProbJoint(const Backbone& backbone, const GainEstimator& estimator,
                 std::int32_t target_user, std::int32_t target_item) {
  const Eigen::RowVectorXd fused =
      estimator.Fuse(backbone.UserTargetVector(target_user),
                     backbone.UserSourceVector(target_user));
  return ClampProbability(
      Sigmoid(fused.dot(backbone.TargetItemVector(target_item))));
}

GainReport EstimateGain(const Backbone& backbone,
                        const GainEstimator& estimator,
                        std::span<const Interaction> target_positives,
                        std::span<const Group> groups) {
  return ForwardGain(backbone, estimator, target_positives, groups, false)
      .report;
}

GainReport AccumulateRedistributionGradient(
    const Backbone& backbone, const GainEstimator& estimator,
    std::span<const Interaction> target_positives,
    std::span<const Group> groups, double scale, RowGradients& user_grad,
    RowGradients& target_item_grad) {
  GainBatch b = ForwardGain(backbone, estimator, target_positives, groups,
                            /*keep_cache=*/true);
  if (!b.report.both_groups() || scale == 0.0) return b.report;

  const int d = backbone.dim();
  const auto n = static_cast<Eigen::Index>(b.users.size());
  const double gap = b.report.delta_i[0] - b.report.delta_i[1];
  // d(penalty)/d(log_ratio_k) = +-2 gap / n_g.
  const double coef[2] = {
      scale * 2.0 * gap / static_cast<double>(b.report.n_samples[0]),
      -scale * 2.0 * gap / static_cast<double>(b.report.n_samples[1])};

  RowMatrix grad_fused(n, d);
  RowMatrix grad_inputs = RowMatrix::Zero(n, 2 * d);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double c = coef[b.group[k]];
    const auto item = backbone.ItemRow(Domain::kTarget, b.items[k]);
    const double cj = c * b.joint[k].dlog;
    const double cs = -c * b.source[k].dlog;
    const double ct = -c * b.target[k].dlog;
    grad_fused.row(k) = cj * item;
    grad_inputs.row(k).head(d) = ct * item;
    grad_inputs.row(k).tail(d) = cs * item;
    target_item_grad.Row(b.items[k]) +=
        cj * b.fused.row(k) + cs * b.inputs.row(k).tail(d) +
        ct * b.inputs.row(k).head(d);
  }
  grad_inputs += estimator.network().Backward(b.cache, grad_fused, nullptr);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::int32_t u = b.users[k];
    user_grad.Row(backbone.TargetUserRow(u)) += grad_inputs.row(k).head(d);
    user_grad.Row(backbone.SourceRowOfTarget(u)) += grad_inputs.row(k).tail(d);
  }
  return b.report;
}

EpochSnapshot EpochSnapshot::Take(const Backbone& backbone) {
  EpochSnapshot s;
  const std::int32_t n = backbone.num_target_users();
  s.user_target = backbone.UserTargetTable();
  s.user_source = RowMatrix::Zero(n, backbone.dim());
  for (std::int32_t u = 0; u < n; ++u) {
    if (!backbone.IsOverlapping(u)) continue;
    s.user_source.row(u) = backbone.UserRow(backbone.SourceRowOfTarget(u));
    s.overlapping.push_back(u);
  }
  return s;
}

double EstimatorStep(GainEstimator& estimator, const EpochSnapshot& snapshot,
                     const RowMatrix& live_user_target, Rng& rng) {
  if (snapshot.overlapping.empty()) {
    throw InvalidArgument("gain module requires overlap");
  }
  const int d = estimator.dim();
  std::vector<std::int32_t> order = snapshot.overlapping;
  Shuffle(order.begin(), order.end(), rng);
  const auto batch_size =
      static_cast<std::size_t>(std::max(1, estimator.config().batch_size));

  Mlp& net = estimator.mutable_network();
  Adam& adam = estimator.optimizer();
  const double lr = estimator.config().learning_rate;
  double total_loss = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const auto n = static_cast<Eigen::Index>(end - start);
    RowMatrix x(n, 2 * d);
    RowMatrix y(n, d);
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::int32_t u = order[start + static_cast<std::size_t>(k)];
      x.row(k).head(d) = snapshot.user_target.row(u);
      x.row(k).tail(d) = snapshot.user_source.row(u);
      y.row(k) = live_user_target.row(u);
    }
    Mlp::Cache cache;
    const RowMatrix out =
        net.Forward(x, &cache, &rng, estimator.config().dropout);
    const RowMatrix diff = out - y;
    total_loss += diff.squaredNorm();
    const RowMatrix grad_out = (2.0 / static_cast<double>(n)) * diff;
    Mlp::Gradients grads;
    net.Backward(cache, grad_out, &grads);
    adam.BeginStep();
    for (int l = 0; l < net.num_layers(); ++l) {
      adam.ApplyDense(estimator.weight_handles()[l], net.weights()[l],
                      grads.weights[l], lr);
      adam.ApplyDense(estimator.bias_handles()[l], net.biases()[l],
                      grads.biases[l], lr);
    }
  }
  return total_loss / static_cast<double>(order.size());
}

}  // namespace xdfair
