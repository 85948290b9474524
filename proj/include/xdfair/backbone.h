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
#include <string>
#include <vector>

#include "xdfair/common.h"
#include "xdfair/dataset.h"

namespace xdfair {

enum class SharingMode {
  // One user row per person; overlapping users share it across domains (CMF).
  kShared,
  // Independent source and target user tables.
  kDual,
};

SharingMode ParseSharingMode(const std::string& name);
std::string SharingModeName(SharingMode mode);

// Trainable tables. User rows live in a single storage table; the
// per-domain views are index indirections into it, which is what makes
// shared-mode aliasing exact.
enum class Table : int { kUser = 0, kSourceItem = 1, kTargetItem = 2 };
inline constexpr int kNumTables = 3;

using ConstRow = Eigen::Block<const RowMatrix, 1, Eigen::Dynamic, true>;
using MutableRow = Eigen::Block<RowMatrix, 1, Eigen::Dynamic, true>;

class Backbone {
 public:
  // Gaussian(0, 0.1) entries, deterministic under `seed`.
  static Backbone Init(const CrossDomainDataset& ds, int dim, SharingMode mode,
                       std::uint64_t seed);

  int dim() const { return dim_; }
  SharingMode mode() const { return mode_; }
  std::int32_t num_target_users() const {
    return static_cast<std::int32_t>(target_row_.size());
  }
  std::int32_t num_source_users() const {
    return static_cast<std::int32_t>(source_row_.size());
  }
  std::int32_t num_target_items() const {
    return static_cast<std::int32_t>(tables_[2].rows());
  }
  std::int32_t num_source_items() const {
    return static_cast<std::int32_t>(tables_[1].rows());
  }

  // Storage rows. SourceRowOfTarget is -1 for non-overlapping users.
  std::int32_t TargetUserRow(std::int32_t target_user) const {
    return target_row_[target_user];
  }
  std::int32_t SourceUserRow(std::int32_t source_user) const {
    return source_row_[source_user];
  }
  std::int32_t SourceRowOfTarget(std::int32_t target_user) const {
    return source_row_of_target_[target_user];
  }
  bool IsOverlapping(std::int32_t target_user) const {
    return source_row_of_target_[target_user] >= 0;
  }

  // Checked views.
  ConstRow UserTargetVector(std::int32_t target_user) const;
  // The overlapping user's source-domain representation. Throws for users
  // without a source identity.
  ConstRow UserSourceVector(std::int32_t target_user) const;
  ConstRow SourceUserVector(std::int32_t source_user) const;
  ConstRow TargetItemVector(std::int32_t item) const;
  ConstRow SourceItemVector(std::int32_t item) const;

  // Inner-product scores with range checks.
  double Score(std::int32_t target_user, std::int32_t target_item) const;
  double ScoreSource(std::int32_t source_user, std::int32_t source_item) const;

  const RowMatrix& table(Table t) const {
    return tables_[static_cast<int>(t)];
  }
  RowMatrix& mutable_table(Table t) { return tables_[static_cast<int>(t)]; }

  // Unchecked row access for hot loops.
  ConstRow UserRow(std::int32_t storage_row) const {
    return tables_[0].row(storage_row);
  }
  ConstRow ItemRow(Domain d, std::int32_t item) const {
    return tables_[d == Domain::kSource ? 1 : 2].row(item);
  }

  // Dense per-domain user tables, materialized through the indirection.
  RowMatrix UserTargetTable() const;
  RowMatrix UserSourceTable() const;

  // Overwrites the parameters from per-domain tables (snapshot reload). In
  // shared mode an overlapping user's row is taken from the target table.
  void LoadTables(const RowMatrix& user_source, const RowMatrix& user_target,
                  const RowMatrix& item_source, const RowMatrix& item_target);

  bool AllFinite() const;
  // Hash of every parameter bit.
  std::uint64_t Checksum() const;

 private:
  Backbone() = default;

  int dim_ = 0;
  SharingMode mode_ = SharingMode::kShared;
  std::array<RowMatrix, kNumTables> tables_;
  std::vector<std::int32_t> target_row_;
  std::vector<std::int32_t> source_row_;
  std::vector<std::int32_t> source_row_of_target_;
};

std::uint64_t HashMatrix(const RowMatrix& m, std::uint64_t seed);

}  // namespace xdfair
