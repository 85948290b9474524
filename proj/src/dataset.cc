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

#include "xdfair/dataset.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "xdfair/rng.h"

namespace xdfair {
namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

void StripCr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct TsvTable {
  std::vector<std::string> header;
  // (line number, fields)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

TsvTable ReadTsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  TsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    StripCr(line);
    if (line.empty()) continue;
    if (!have_header) {
      table.header = SplitTabs(line);
      have_header = true;
      continue;
    }
    table.rows.emplace_back(line_no, SplitTabs(line));
  }
  if (!have_header) throw DataError(path.string() + ": missing header");
  return table;
}

std::size_t ColumnIndex(const TsvTable& table, const std::string& name,
                        const std::filesystem::path& path) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError(path.string() + ": missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

std::int32_t ParseDenseId(const std::string& s, const std::filesystem::path& path,
                          std::size_t line_no) {
  std::int32_t v = -1;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw DataError(path.string() + ":" + std::to_string(line_no) +
                    ": expected non-negative integer id, got '" + s + "'");
  }
  return v;
}

std::string RowError(const std::filesystem::path& path, std::size_t line_no,
                     const std::string& what) {
  return path.string() + ":" + std::to_string(line_no) + ": " + what;
}

}  // namespace

std::int32_t IdMap::Intern(const std::string& raw) {
  const auto [it, inserted] =
      index_.try_emplace(raw, static_cast<std::int32_t>(raw_.size()));
  if (inserted) raw_.push_back(raw);
  return it->second;
}

std::optional<std::int32_t> IdMap::Find(const std::string& raw) const {
  const auto it = index_.find(raw);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

IdMap IdMap::Identity(std::int32_t n) {
  IdMap map;
  for (std::int32_t i = 0; i < n; ++i) map.Intern(std::to_string(i));
  return map;
}

InteractionLog LoadInteractions(const std::filesystem::path& path,
                                bool id_remap) {
  const TsvTable table = ReadTsv(path);
  const std::size_t user_col = ColumnIndex(table, "user_id", path);
  const std::size_t item_col = ColumnIndex(table, "item_id", path);
  const std::size_t needed = std::max(user_col, item_col) + 1;

  InteractionLog log;
  std::unordered_set<std::uint64_t> seen;
  std::int32_t max_user = -1;
  std::int32_t max_item = -1;
  for (const auto& [line_no, fields] : table.rows) {
    if (fields.size() < needed) {
      throw DataError(RowError(path, line_no, "expected at least " +
                                                  std::to_string(needed) +
                                                  " columns"));
    }
    const std::string& raw_user = fields[user_col];
    const std::string& raw_item = fields[item_col];
    if (raw_user.empty() || raw_item.empty()) {
      throw DataError(RowError(path, line_no, "empty id"));
    }
    Interaction pair;
    if (id_remap) {
      pair.user = log.users.Intern(raw_user);
      pair.item = log.items.Intern(raw_item);
    } else {
      pair.user = ParseDenseId(raw_user, path, line_no);
      pair.item = ParseDenseId(raw_item, path, line_no);
      max_user = std::max(max_user, pair.user);
      max_item = std::max(max_item, pair.item);
    }
    const std::uint64_t key =
        (static_cast<std::uint64_t>(pair.user) << 32) |
        static_cast<std::uint32_t>(pair.item);
    if (seen.insert(key).second) log.pairs.push_back(pair);
  }
  if (log.pairs.empty()) throw DataError(path.string() + ": no interactions");
  if (!id_remap) {
    log.users = IdMap::Identity(max_user + 1);
    log.items = IdMap::Identity(max_item + 1);
  }
  return log;
}

void WriteInteractions(const std::filesystem::path& path,
                       std::span<const Interaction> pairs, const IdMap& users,
                       const IdMap& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "user_id\titem_id\n";
  for (const Interaction& p : pairs) {
    out << users.Raw(p.user) << '\t' << items.Raw(p.item) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

AttributeTable LoadAttributes(const std::filesystem::path& path) {
  const TsvTable table = ReadTsv(path);
  const std::size_t user_col = ColumnIndex(table, "user_id", path);
  const std::size_t attr_col = ColumnIndex(table, "attribute", path);
  const std::size_t needed = std::max(user_col, attr_col) + 1;

  std::map<std::string, std::string> raw;  // user -> attribute value
  std::vector<std::string> order;
  for (const auto& [line_no, fields] : table.rows) {
    if (fields.size() < needed) {
      throw DataError(RowError(path, line_no, "expected at least " +
                                                  std::to_string(needed) +
                                                  " columns"));
    }
    const std::string& user = fields[user_col];
    const std::string& value = fields[attr_col];
    const auto [it, inserted] = raw.emplace(user, value);
    if (inserted) {
      order.push_back(user);
    } else if (it->second != value) {
      throw DataError(RowError(path, line_no,
                               "conflicting attribute for user '" + user +
                                   "': '" + it->second + "' vs '" + value +
                                   "'"));
    }
  }
  std::vector<std::string> values;
  for (const auto& [user, value] : raw) values.push_back(value);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.size() != 2) {
    throw DataError(path.string() + ": expected exactly 2 distinct attribute "
                                    "values, found " +
                    std::to_string(values.size()));
  }
  AttributeTable out;
  out.labels[0] = values[0];
  out.labels[1] = values[1];
  out.order = std::move(order);
  for (const auto& [user, value] : raw) {
    out.groups.emplace(user, value == values[0] ? Group::kG0 : Group::kG1);
  }
  return out;
}

void WriteAttributes(const std::filesystem::path& path,
                     const AttributeTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "user_id\tattribute\n";
  for (const std::string& user : table.order) {
    out << user << '\t' << table.labels[GroupIndex(table.groups.at(user))]
        << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::int32_t CrossDomainDataset::NumOverlapping() const {
  return static_cast<std::int32_t>(
      std::count_if(overlap.begin(), overlap.end(),
                    [](std::int32_t s) { return s >= 0; }));
}

void CrossDomainDataset::Validate() const {
  for (const Domain d : {Domain::kSource, Domain::kTarget}) {
    const DomainData& data = domain(d);
    const char* name = d == Domain::kSource ? "source" : "target";
    std::vector<std::uint64_t> keys;
    keys.reserve(data.interactions.size());
    for (const Interaction& p : data.interactions) {
      if (p.user < 0 || p.user >= data.n_users || p.item < 0 ||
          p.item >= data.n_items) {
        throw DataError(std::string(name) + " interaction out of range");
      }
      keys.push_back((static_cast<std::uint64_t>(p.user) << 32) |
                     static_cast<std::uint32_t>(p.item));
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
      throw DataError(std::string(name) + " has duplicate (user, item) pairs");
    }
  }
  if (static_cast<std::int32_t>(overlap.size()) != target.n_users) {
    throw DataError("overlap map size differs from target user count");
  }
  std::vector<char> used(static_cast<std::size_t>(source.n_users), 0);
  for (const std::int32_t s : overlap) {
    if (s < 0) continue;
    if (s >= source.n_users) throw DataError("overlap maps out of range");
    if (used[s]) throw DataError("overlap map is not injective");
    used[s] = 1;
  }
  if (static_cast<std::int32_t>(groups.size()) != target.n_users) {
    throw DataError("every target user needs a group label");
  }
  bool present[2] = {false, false};
  for (const Group g : groups) present[GroupIndex(g)] = true;
  if (!present[0] || !present[1]) {
    throw DataError("target users must span exactly two groups");
  }
  if (!source_groups.empty() &&
      static_cast<std::int32_t>(source_groups.size()) != source.n_users) {
    throw DataError("source group vector has wrong size");
  }
}

CrossDomainDataset AssembleDataset(InteractionLog source, InteractionLog target,
                                   const AttributeTable& attributes) {
  CrossDomainDataset ds;
  ds.source.n_users = source.users.size();
  ds.source.n_items = source.items.size();
  ds.source.interactions = std::move(source.pairs);
  ds.target.n_users = target.users.size();
  ds.target.n_items = target.items.size();
  ds.target.interactions = std::move(target.pairs);

  ds.overlap.assign(static_cast<std::size_t>(ds.target.n_users), -1);
  ds.groups.resize(static_cast<std::size_t>(ds.target.n_users));
  for (std::int32_t u = 0; u < ds.target.n_users; ++u) {
    const std::string& raw = target.users.Raw(u);
    if (const auto s = source.users.Find(raw)) ds.overlap[u] = *s;
    const auto it = attributes.groups.find(raw);
    if (it == attributes.groups.end()) {
      throw DataError("target user '" + raw + "' has no attribute");
    }
    ds.groups[u] = it->second;
  }
  ds.source_groups.assign(static_cast<std::size_t>(ds.source.n_users), -1);
  for (std::int32_t s = 0; s < ds.source.n_users; ++s) {
    const auto it = attributes.groups.find(source.users.Raw(s));
    if (it != attributes.groups.end()) {
      ds.source_groups[s] = static_cast<std::int8_t>(GroupIndex(it->second));
    }
  }
  ds.source_users = std::move(source.users);
  ds.target_users = std::move(target.users);
  ds.source_items = std::move(source.items);
  ds.target_items = std::move(target.items);
  ds.Validate();
  return ds;
}

AttributeTable AttributesOf(const CrossDomainDataset& ds) {
  AttributeTable table;
  table.labels[0] = "g0";
  table.labels[1] = "g1";
  for (std::int32_t u = 0; u < ds.target.n_users; ++u) {
    const std::string& raw = ds.target_users.Raw(u);
    table.groups.emplace(raw, ds.groups[u]);
    table.order.push_back(raw);
  }
  for (std::int32_t s = 0; s < ds.source.n_users; ++s) {
    if (ds.source_groups.empty() || ds.source_groups[s] < 0) continue;
    const std::string& raw = ds.source_users.Raw(s);
    if (table.groups.emplace(raw, static_cast<Group>(ds.source_groups[s]))
            .second) {
      table.order.push_back(raw);
    }
  }
  return table;
}

namespace {

std::vector<std::vector<std::int32_t>> BucketByUser(const DomainData& data) {
  std::vector<std::vector<std::int32_t>> buckets(
      static_cast<std::size_t>(data.n_users));
  for (const Interaction& p : data.interactions) {
    buckets[p.user].push_back(p.item);
  }
  return buckets;
}

}  // namespace

SplitDataset SplitPerUser(const CrossDomainDataset& ds, std::uint64_t seed) {
  SplitDataset split;
  Rng rng(DeriveSeed(seed, "split"));

  auto source = BucketByUser(ds.source);
  for (std::int32_t u = 0; u < ds.source.n_users; ++u) {
    auto& items = source[u];
    Shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    std::size_t n_train = n * 8 / 10;
    if (n_train == 0 && n > 0) n_train = 1;
    for (std::size_t k = 0; k < n; ++k) {
      auto& dst = k < n_train ? split.source_train : split.source_val;
      dst.push_back({u, items[k]});
    }
  }

  auto target = BucketByUser(ds.target);
  for (std::int32_t u = 0; u < ds.target.n_users; ++u) {
    auto& items = target[u];
    Shuffle(items.begin(), items.end(), rng);
    const std::size_t n = items.size();
    const std::size_t n_val = n / 10;
    const std::size_t n_test = n / 10;
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t k = 0; k < n; ++k) {
      if (k < n_train) {
        split.target_train.push_back({u, items[k]});
      } else if (k < n_train + n_val) {
        split.target_val.push_back({u, items[k]});
      } else {
        split.target_test.push_back({u, items[k]});
      }
    }
  }
  return split;
}

UserItemIndex::UserItemIndex(std::int32_t n_users,
                             std::span<const Interaction> pairs) {
  offsets_.assign(static_cast<std::size_t>(n_users) + 1, 0);
  for (const Interaction& p : pairs) ++offsets_[p.user + 1];
  for (std::size_t u = 0; u < static_cast<std::size_t>(n_users); ++u) {
    offsets_[u + 1] += offsets_[u];
  }
  items_.resize(pairs.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Interaction& p : pairs) items_[cursor[p.user]++] = p.item;
  for (std::int32_t u = 0; u < n_users; ++u) {
    std::sort(items_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]),
              items_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]));
  }
}

bool UserItemIndex::Contains(std::int32_t user, std::int32_t item) const {
  const auto items = Items(user);
  return std::binary_search(items.begin(), items.end(), item);
}

}  // namespace xdfair
