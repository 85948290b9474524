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

#include "xdfair/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "xdfair/config.h"
#include "xdfair/rng.h"

namespace xdfair {
namespace {

RowMatrix GaussianMatrix(std::int32_t rows, std::int32_t cols, Rng& rng) {
  RowMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = StandardNormal(rng);
  }
  return m;
}

// Assigns exactly round(split * n) users to g0, clamped so both groups exist
// whenever n >= 2.
std::vector<Group> AssignGroups(std::int32_t n, double split, Rng& rng) {
  std::vector<std::int32_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Shuffle(perm.begin(), perm.end(), rng);
  std::int32_t n_g0 = static_cast<std::int32_t>(std::lround(split * n));
  if (n >= 2) n_g0 = std::clamp(n_g0, 1, n - 1);
  std::vector<Group> groups(static_cast<std::size_t>(n), Group::kG1);
  for (std::int32_t k = 0; k < n_g0; ++k) groups[perm[k]] = Group::kG0;
  return groups;
}

// Top `count` items of `affinity` + `noise_scale` * noise, ties to lower id.
void AppendTopItems(std::int32_t user, const Eigen::VectorXd& affinity,
                    const Eigen::VectorXd& noise, double noise_scale,
                    std::int32_t count, std::vector<Interaction>& out) {
  const Eigen::VectorXd noisy = affinity + noise_scale * noise;
  std::vector<std::int32_t> order(static_cast<std::size_t>(noisy.size()));
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + count, order.end(),
                    [&](std::int32_t a, std::int32_t b) {
                      if (noisy[a] != noisy[b]) return noisy[a] > noisy[b];
                      return a < b;
                    });
  for (std::int32_t k = 0; k < count; ++k) out.push_back({user, order[k]});
}

}  // namespace

void SynthConfig::Validate() const {
  if (n_users_source <= 0 || n_users_target <= 0 || n_items_source <= 0 ||
      n_items_target <= 0 || latent_dim <= 0 || interactions_per_user <= 0) {
    throw UsageError("synthetic config: counts must be positive");
  }
  if (overlap_fraction < 0.0 || overlap_fraction > 1.0) {
    throw UsageError("synthetic config: overlap_fraction must be in [0, 1]");
  }
  if (group_split <= 0.0 || group_split >= 1.0) {
    throw UsageError("synthetic config: group_split must be in (0, 1)");
  }
  if (source_disparity < 1.0) {
    throw UsageError("synthetic config: source_disparity must be >= 1");
  }
  if (domain_shift < 0.0 || domain_shift > 1.0) {
    throw UsageError("synthetic config: domain_shift must be in [0, 1]");
  }
  if (base_noise < 0.0) {
    throw UsageError("synthetic config: base_noise must be >= 0");
  }
  if (interactions_per_user > n_items_source ||
      interactions_per_user > n_items_target) {
    throw UsageError(
        "synthetic config: interactions_per_user exceeds the item count");
  }
  const auto n_overlap =
      static_cast<std::int32_t>(std::lround(overlap_fraction * n_users_target));
  if (n_overlap > n_users_source) {
    throw UsageError(
        "synthetic config: overlapping users exceed n_users_source");
  }
}

SynthConfig SynthConfig::FromKeyValues(const KeyValues& kv) {
  RejectUnknownKeys(kv,
                    {"n_users_source", "n_users_target", "overlap_fraction",
                     "n_items_source", "n_items_target", "latent_dim",
                     "group_split", "source_disparity", "domain_shift",
                     "interactions_per_user", "base_noise", "rng_seed"},
                    "synthetic config");
  SynthConfig cfg;
  ReadKey(kv, "n_users_source", cfg.n_users_source);
  ReadKey(kv, "n_users_target", cfg.n_users_target);
  ReadKey(kv, "overlap_fraction", cfg.overlap_fraction);
  ReadKey(kv, "n_items_source", cfg.n_items_source);
  ReadKey(kv, "n_items_target", cfg.n_items_target);
  ReadKey(kv, "latent_dim", cfg.latent_dim);
  ReadKey(kv, "group_split", cfg.group_split);
  ReadKey(kv, "source_disparity", cfg.source_disparity);
  ReadKey(kv, "domain_shift", cfg.domain_shift);
  ReadKey(kv, "interactions_per_user", cfg.interactions_per_user);
  ReadKey(kv, "base_noise", cfg.base_noise);
  ReadKey(kv, "rng_seed", cfg.rng_seed);
  return cfg;
}

KeyValues SynthConfig::ToKeyValues() const {
  return {
      {"n_users_source", std::to_string(n_users_source)},
      {"n_users_target", std::to_string(n_users_target)},
      {"overlap_fraction", FormatDouble(overlap_fraction)},
      {"n_items_source", std::to_string(n_items_source)},
      {"n_items_target", std::to_string(n_items_target)},
      {"latent_dim", std::to_string(latent_dim)},
      {"group_split", FormatDouble(group_split)},
      {"source_disparity", FormatDouble(source_disparity)},
      {"domain_shift", FormatDouble(domain_shift)},
      {"interactions_per_user", std::to_string(interactions_per_user)},
      {"base_noise", FormatDouble(base_noise)},
      {"rng_seed", std::to_string(rng_seed)},
  };
}

double SyntheticWorld::SourceAffinity(std::int32_t user,
                                      std::int32_t item) const {
  return source_user_taste.row(user).dot(source_items.row(item)) /
         std::sqrt(static_cast<double>(source_items.cols()));
}

double SyntheticWorld::TargetAffinity(std::int32_t user,
                                      std::int32_t item) const {
  return target_user_taste.row(user).dot(target_items.row(item)) /
         std::sqrt(static_cast<double>(target_items.cols()));
}

SyntheticWorld GenerateSyntheticWorld(const SynthConfig& cfg) {
  cfg.Validate();
  const std::uint64_t root = cfg.rng_seed;
  const std::int32_t k = cfg.latent_dim;
  const std::int32_t n_t = cfg.n_users_target;
  const std::int32_t n_s = cfg.n_users_source;
  const auto n_overlap =
      static_cast<std::int32_t>(std::lround(cfg.overlap_fraction * n_t));
  const std::int32_t n_source_only = n_s - n_overlap;

  SyntheticWorld world;
  CrossDomainDataset& ds = world.dataset;

  // Who overlaps: the first n_overlap entries of a permutation of target
  // users become source users 0..n_overlap-1.
  Rng structure_rng(DeriveSeed(root, "synth/structure"));
  std::vector<std::int32_t> perm(static_cast<std::size_t>(n_t));
  std::iota(perm.begin(), perm.end(), 0);
  Shuffle(perm.begin(), perm.end(), structure_rng);
  ds.overlap.assign(static_cast<std::size_t>(n_t), -1);
  std::vector<std::int32_t> source_to_target(static_cast<std::size_t>(n_s), -1);
  for (std::int32_t s = 0; s < n_overlap; ++s) {
    ds.overlap[perm[s]] = s;
    source_to_target[s] = perm[s];
  }

  Rng group_rng(DeriveSeed(root, "synth/groups"));
  ds.groups = AssignGroups(n_t, cfg.group_split, group_rng);
  const std::vector<Group> source_only_groups =
      AssignGroups(n_source_only, cfg.group_split, group_rng);
  ds.source_groups.assign(static_cast<std::size_t>(n_s), -1);
  for (std::int32_t s = 0; s < n_s; ++s) {
    const Group g = s < n_overlap ? ds.groups[source_to_target[s]]
                                  : source_only_groups[s - n_overlap];
    ds.source_groups[s] = static_cast<std::int8_t>(GroupIndex(g));
  }

  Rng latent_rng(DeriveSeed(root, "synth/latent"));
  world.target_user_taste = GaussianMatrix(n_t, k, latent_rng);
  const RowMatrix source_only_taste =
      GaussianMatrix(n_source_only, k, latent_rng);
  const RowMatrix source_specific = GaussianMatrix(n_s, k, latent_rng);
  world.target_items = GaussianMatrix(cfg.n_items_target, k, latent_rng);
  world.source_items = GaussianMatrix(cfg.n_items_source, k, latent_rng);

  const double theta = cfg.domain_shift * std::numbers::pi / 2.0;
  world.source_user_taste.resize(n_s, k);
  for (std::int32_t s = 0; s < n_s; ++s) {
    const Eigen::RowVectorXd base =
        s < n_overlap
            ? Eigen::RowVectorXd(world.target_user_taste.row(source_to_target[s]))
            : Eigen::RowVectorXd(source_only_taste.row(s - n_overlap));
    world.source_user_taste.row(s) =
        std::cos(theta) * base + std::sin(theta) * source_specific.row(s);
  }

  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  Rng target_noise_rng(DeriveSeed(root, "synth/target_noise"));
  Rng source_noise_rng(DeriveSeed(root, "synth/source_noise"));

  ds.target.n_users = n_t;
  ds.target.n_items = cfg.n_items_target;
  Eigen::VectorXd noise(cfg.n_items_target);
  for (std::int32_t u = 0; u < n_t; ++u) {
    const Eigen::VectorXd affinity =
        (world.target_items * world.target_user_taste.row(u).transpose()) *
        inv_sqrt_k;
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
      noise[i] = StandardNormal(target_noise_rng);
    }
    AppendTopItems(u, affinity, noise, cfg.base_noise,
                   cfg.interactions_per_user, ds.target.interactions);
  }

  ds.source.n_users = n_s;
  ds.source.n_items = cfg.n_items_source;
  noise.resize(cfg.n_items_source);
  for (std::int32_t s = 0; s < n_s; ++s) {
    const Eigen::VectorXd affinity =
        (world.source_items * world.source_user_taste.row(s).transpose()) *
        inv_sqrt_k;
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
      noise[i] = StandardNormal(source_noise_rng);
    }
    const double scale =
        cfg.base_noise *
        (ds.source_groups[s] == GroupIndex(Group::kG1) ? cfg.source_disparity
                                                       : 1.0);
    AppendTopItems(s, affinity, noise, scale, cfg.interactions_per_user,
                   ds.source.interactions);
  }

  // Raw ids: persons share "u<n>" across domains when they overlap.
  for (std::int32_t u = 0; u < n_t; ++u) {
    ds.target_users.Intern("u" + std::to_string(u));
  }
  for (std::int32_t s = 0; s < n_s; ++s) {
    const std::int32_t person =
        s < n_overlap ? source_to_target[s] : n_t + (s - n_overlap);
    ds.source_users.Intern("u" + std::to_string(person));
  }
  for (std::int32_t i = 0; i < cfg.n_items_target; ++i) {
    ds.target_items.Intern("t" + std::to_string(i));
  }
  for (std::int32_t i = 0; i < cfg.n_items_source; ++i) {
    ds.source_items.Intern("s" + std::to_string(i));
  }
  ds.Validate();
  return world;
}

}  // namespace xdfair
