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
#include <random>
#include <string_view>

namespace xdfair {

// Every randomized component owns one of these, seeded through DeriveSeed so
// that a single root seed fixes the whole run.
using Rng = std::mt19937_64;

// Stable (platform independent) hash of (root, component) into a seed.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view component);

// splitmix64 finalizer.
std::uint64_t MixBits(std::uint64_t x);

// Uniform integer in [0, n). Implemented on top of the raw engine output so
// draws are identical across standard library implementations.
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n);

// Uniform double in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// Standard normal draw (Box-Muller on UniformUnit, one value per call).
double StandardNormal(Rng& rng);

template <typename It>
void Shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    const auto j = static_cast<decltype(i)>(
        UniformIndex(rng, static_cast<std::uint64_t>(i + 1)));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace xdfair
