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

#include <cstdint>
#include <map>
#include <string>

#include "xdfair/common.h"
#include "xdfair/dataset.h"

namespace xdfair {

// Two-domain latent-factor world with controllable group disparity.
//
// Every person has a latent taste z ~ N(0, I). Target-domain affinity is
// z . v_i / sqrt(k) plus N(0, base_noise^2) noise. In the source domain the
// taste is rotated towards an independent per-user direction by an angle of
// domain_shift * pi/2, and the noise of group g1 is multiplied by
// source_disparity. Each user's positives are the top interactions_per_user
// items by noisy affinity.
struct SynthConfig {
  std::int32_t n_users_source = 2000;
  std::int32_t n_users_target = 2000;
  double overlap_fraction = 0.5;
  std::int32_t n_items_source = 1000;
  std::int32_t n_items_target = 1000;
  std::int32_t latent_dim = 16;
  // Fraction of users assigned to g0.
  double group_split = 0.5;
  double source_disparity = 1.0;
  double domain_shift = 0.0;
  std::int32_t interactions_per_user = 20;
  double base_noise = 0.5;
  std::uint64_t rng_seed = 42;

  void Validate() const;

  // Reads keys named exactly like the fields; unknown keys are rejected.
  static SynthConfig FromKeyValues(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> ToKeyValues() const;
};

struct SyntheticWorld {
  CrossDomainDataset dataset;
  // Noise-free affinities' ingredients, indexed by dense ids.
  RowMatrix target_user_taste;  // n_users_target x k
  RowMatrix source_user_taste;  // n_users_source x k (after domain rotation)
  RowMatrix target_items;       // n_items_target x k
  RowMatrix source_items;       // n_items_source x k

  // Noise-free affinity of a source user for a source item.
  double SourceAffinity(std::int32_t user, std::int32_t item) const;
  double TargetAffinity(std::int32_t user, std::int32_t item) const;
};

SyntheticWorld GenerateSyntheticWorld(const SynthConfig& cfg);

inline CrossDomainDataset GenerateSynthetic(const SynthConfig& cfg) {
  return GenerateSyntheticWorld(cfg).dataset;
}

}  // namespace xdfair
