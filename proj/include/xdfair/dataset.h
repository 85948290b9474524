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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xdfair/common.h"

namespace xdfair {

struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Dense re-indexing of raw string identifiers in first-seen order.
class IdMap {
 public:
  std::int32_t Intern(const std::string& raw);
  std::optional<std::int32_t> Find(const std::string& raw) const;
  const std::string& Raw(std::int32_t dense) const { return raw_.at(dense); }
  std::int32_t size() const { return static_cast<std::int32_t>(raw_.size()); }
  const std::vector<std::string>& raw_ids() const { return raw_; }

  // Identity map "0".."n-1".
  static IdMap Identity(std::int32_t n);

 private:
  std::vector<std::string> raw_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct InteractionLog {
  std::vector<Interaction> pairs;
  IdMap users;
  IdMap items;
};

// Reads a TSV with a header naming `user_id` and `item_id` columns (any
// position; other columns ignored). Duplicate pairs are dropped. With
// `id_remap` raw ids are densified in first-seen order; otherwise they must be
// non-negative integers and are used verbatim.
InteractionLog LoadInteractions(const std::filesystem::path& path,
                                bool id_remap);

void WriteInteractions(const std::filesystem::path& path,
                       std::span<const Interaction> pairs, const IdMap& users,
                       const IdMap& items);

struct AttributeTable {
  std::unordered_map<std::string, Group> groups;
  // Raw attribute values for g0 and g1.
  std::string labels[2];
  // Users in file order, for writing back.
  std::vector<std::string> order;
};

// Reads a TSV with `user_id` and `attribute` columns. Exactly two distinct
// attribute values must occur; the lexicographically smaller becomes g0.
AttributeTable LoadAttributes(const std::filesystem::path& path);

void WriteAttributes(const std::filesystem::path& path,
                     const AttributeTable& table);

struct DomainData {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  std::vector<Interaction> interactions;
};

struct CrossDomainDataset {
  DomainData source;
  DomainData target;
  // target user -> source user, or -1 for non-overlapping users.
  std::vector<std::int32_t> overlap;
  // Group of every target user.
  std::vector<Group> groups;
  // Group of source users where known (-1 otherwise).
  std::vector<std::int8_t> source_groups;

  IdMap source_users;
  IdMap target_users;
  IdMap source_items;
  IdMap target_items;

  bool IsOverlapping(std::int32_t target_user) const {
    return overlap[target_user] >= 0;
  }
  std::int32_t NumOverlapping() const;
  const DomainData& domain(Domain d) const {
    return d == Domain::kSource ? source : target;
  }

  // Throws DataError describing the first violated invariant.
  void Validate() const;
};

// Joins two interaction logs by shared raw user id. Every target user must
// carry an attribute; source users pick one up when present.
CrossDomainDataset AssembleDataset(InteractionLog source, InteractionLog target,
                                   const AttributeTable& attributes);

AttributeTable AttributesOf(const CrossDomainDataset& ds);

struct SplitDataset {
  std::vector<Interaction> source_train;
  std::vector<Interaction> source_val;
  std::vector<Interaction> target_train;
  std::vector<Interaction> target_val;
  std::vector<Interaction> target_test;

  friend bool operator==(const SplitDataset&, const SplitDataset&) = default;
};

// Per-user shuffle then floor-ratio split: source 8:2 (remainder to val),
// target 8:1:1 (remainder to train). Every user with interactions keeps at
// least one training interaction.
SplitDataset SplitPerUser(const CrossDomainDataset& ds, std::uint64_t seed);

// Compressed per-user sorted item lists.
class UserItemIndex {
 public:
  UserItemIndex() = default;
  UserItemIndex(std::int32_t n_users, std::span<const Interaction> pairs);

  std::span<const std::int32_t> Items(std::int32_t user) const {
    return {items_.data() + offsets_[user],
            items_.data() + offsets_[user + 1]};
  }
  bool Contains(std::int32_t user, std::int32_t item) const;
  std::int32_t Count(std::int32_t user) const {
    return static_cast<std::int32_t>(offsets_[user + 1] - offsets_[user]);
  }
  std::int32_t n_users() const {
    return static_cast<std::int32_t>(offsets_.size()) - 1;
  }

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<std::int32_t> items_;
};

}  // namespace xdfair
