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

#include "xdfair/backbone.h"

#include <cmath>
#include <cstring>

#include "xdfair/rng.h"

namespace xdfair {
namespace {

constexpr double kInitStddev = 0.1;

void FillGaussian(RowMatrix& m, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = kInitStddev * StandardNormal(rng);
    }
  }
}

void CheckIndex(std::int32_t id, std::int32_t n, const char* what) {
  if (id < 0 || id >= n) {
    throw InvalidArgument(std::string(what) + " id " + std::to_string(id) +
                          " out of range [0, " + std::to_string(n) + ")");
  }
}

}  // namespace

SharingMode ParseSharingMode(const std::string& name) {
  if (name == "shared" || name == "shared-user" || name == "cmf") {
    return SharingMode::kShared;
  }
  if (name == "dual") return SharingMode::kDual;
  throw UsageError("unknown backbone mode '" + name + "'");
}

std::string SharingModeName(SharingMode mode) {
  return mode == SharingMode::kShared ? "shared" : "dual";
}

Backbone Backbone::Init(const CrossDomainDataset& ds, int dim,
                        SharingMode mode, std::uint64_t seed) {
  if (dim < 1) throw InvalidArgument("embedding dimension must be >= 1");
  Backbone b;
  b.dim_ = dim;
  b.mode_ = mode;
  const std::int32_t n_s = ds.source.n_users;
  const std::int32_t n_t = ds.target.n_users;

  b.source_row_.resize(static_cast<std::size_t>(n_s));
  for (std::int32_t s = 0; s < n_s; ++s) b.source_row_[s] = s;
  b.target_row_.resize(static_cast<std::size_t>(n_t));
  b.source_row_of_target_.assign(static_cast<std::size_t>(n_t), -1);
  std::int32_t next_row = n_s;
  for (std::int32_t u = 0; u < n_t; ++u) {
    const std::int32_t s = ds.overlap[u];
    if (s >= 0) b.source_row_of_target_[u] = s;
    if (mode == SharingMode::kShared && s >= 0) {
      b.target_row_[u] = s;
    } else {
      b.target_row_[u] = next_row++;
    }
  }

  Rng rng(seed);
  b.tables_[0].resize(next_row, dim);
  b.tables_[1].resize(ds.source.n_items, dim);
  b.tables_[2].resize(ds.target.n_items, dim);
  for (RowMatrix& t : b.tables_) FillGaussian(t, rng);
  return b;
}

ConstRow Backbone::UserTargetVector(std::int32_t target_user) const {
  CheckIndex(target_user, num_target_users(), "target user");
  return tables_[0].row(target_row_[target_user]);
}

ConstRow Backbone::UserSourceVector(std::int32_t target_user) const {
  CheckIndex(target_user, num_target_users(), "target user");
  const std::int32_t row = source_row_of_target_[target_user];
  if (row < 0) {
    throw InvalidArgument("target user " + std::to_string(target_user) +
                          " has no source-domain identity");
  }
  return tables_[0].row(row);
}

ConstRow Backbone::SourceUserVector(std::int32_t source_user) const {
  CheckIndex(source_user, num_source_users(), "source user");
  return tables_[0].row(source_row_[source_user]);
}

ConstRow Backbone::TargetItemVector(std::int32_t item) const {
  CheckIndex(item, num_target_items(), "target item");
  return tables_[2].row(item);
}

ConstRow Backbone::SourceItemVector(std::int32_t item) const {
  CheckIndex(item, num_source_items(), "source item");
  return tables_[1].row(item);
}

double Backbone::Score(std::int32_t target_user,
                       std::int32_t target_item) const {
  return UserTargetVector(target_user).dot(TargetItemVector(target_item));
}

double Backbone::ScoreSource(std::int32_t source_user,
                             std::int32_t source_item) const {
  return SourceUserVector(source_user).dot(SourceItemVector(source_item));
}

RowMatrix Backbone::UserTargetTable() const {
  RowMatrix out(num_target_users(), dim_);
  for (std::int32_t u = 0; u < num_target_users(); ++u) {
    out.row(u) = tables_[0].row(target_row_[u]);
  }
  return out;
}

RowMatrix Backbone::UserSourceTable() const {
  RowMatrix out(num_source_users(), dim_);
  for (std::int32_t s = 0; s < num_source_users(); ++s) {
    out.row(s) = tables_[0].row(source_row_[s]);
  }
  return out;
}

void Backbone::LoadTables(const RowMatrix& user_source,
                          const RowMatrix& user_target,
                          const RowMatrix& item_source,
                          const RowMatrix& item_target) {
  auto check = [&](const RowMatrix& m, Eigen::Index rows, const char* name) {
    if (m.rows() != rows || m.cols() != dim_) {
      throw DataError(std::string("snapshot table '") + name +
                      "' has shape " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + ", expected " +
                      std::to_string(rows) + "x" + std::to_string(dim_));
    }
  };
  check(user_source, num_source_users(), "user_source");
  check(user_target, num_target_users(), "user_target");
  check(item_source, num_source_items(), "item_source");
  check(item_target, num_target_items(), "item_target");
  for (std::int32_t s = 0; s < num_source_users(); ++s) {
    tables_[0].row(source_row_[s]) = user_source.row(s);
  }
  for (std::int32_t u = 0; u < num_target_users(); ++u) {
    tables_[0].row(target_row_[u]) = user_target.row(u);
  }
  tables_[1] = item_source;
  tables_[2] = item_target;
}

bool Backbone::AllFinite() const {
  for (const RowMatrix& t : tables_) {
    if (!t.allFinite()) return false;
  }
  return true;
}

std::uint64_t HashMatrix(const RowMatrix& m, std::uint64_t seed) {
  std::uint64_t h = MixBits(seed ^ static_cast<std::uint64_t>(m.rows()) ^
                            (static_cast<std::uint64_t>(m.cols()) << 32));
  const double* data = m.data();
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    std::uint64_t bits;
    std::memcpy(&bits, data + k, sizeof(bits));
    h = MixBits(h ^ bits);
  }
  return h;
}

std::uint64_t Backbone::Checksum() const {
  std::uint64_t h = 0;
  for (const RowMatrix& t : tables_) h = HashMatrix(t, h);
  return h;
}

}  // namespace xdfair
