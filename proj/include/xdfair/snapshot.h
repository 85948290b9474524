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
#include <filesystem>

#include "xdfair/backbone.h"
#include "xdfair/common.h"

namespace xdfair {

// On-disk embedding snapshot, little-endian:
//   "CDFA" | u32 version | 4 x (u64 rows | u64 cols | rows*cols f32 row-major)
// Table order: user_source, user_target, item_source, item_target.
struct EmbeddingSnapshot {
  static constexpr std::uint32_t kVersion = 1;

  RowMatrix user_source;
  RowMatrix user_target;
  RowMatrix item_source;
  RowMatrix item_target;
};

EmbeddingSnapshot TakeSnapshot(const Backbone& backbone);

void WriteSnapshot(const std::filesystem::path& path,
                   const EmbeddingSnapshot& snapshot);
EmbeddingSnapshot ReadSnapshot(const std::filesystem::path& path);

}  // namespace xdfair
