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

#include "xdfair/snapshot.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace xdfair {
namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot IO assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'D', 'F', 'A'};

template <typename T>
void Put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T Get(std::ifstream& in, const std::filesystem::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError(path.string() + ": truncated snapshot");
  }
  return value;
}

void PutTable(std::ofstream& out, const RowMatrix& m) {
  Put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  Put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  std::vector<float> buf(static_cast<std::size_t>(m.size()));
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    buf[k] = static_cast<float>(m.data()[k]);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

RowMatrix GetTable(std::ifstream& in, const std::filesystem::path& path) {
  const auto rows = Get<std::uint64_t>(in, path);
  const auto cols = Get<std::uint64_t>(in, path);
  if (rows > (1ULL << 31) || cols > (1ULL << 20)) {
    throw DataError(path.string() + ": implausible table shape");
  }
  std::vector<float> buf(rows * cols);
  if (!in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw DataError(path.string() + ": truncated snapshot");
  }
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t k = 0; k < buf.size(); ++k) m.data()[k] = buf[k];
  return m;
}

}  // namespace

EmbeddingSnapshot TakeSnapshot(const Backbone& backbone) {
  return {backbone.UserSourceTable(), backbone.UserTargetTable(),
          backbone.table(Table::kSourceItem),
          backbone.table(Table::kTargetItem)};
}

void WriteSnapshot(const std::filesystem::path& path,
                   const EmbeddingSnapshot& snapshot) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(out, EmbeddingSnapshot::kVersion);
  PutTable(out, snapshot.user_source);
  PutTable(out, snapshot.user_target);
  PutTable(out, snapshot.item_source);
  PutTable(out, snapshot.item_target);
  if (!out) throw DataError("write failed: " + path.string());
}

EmbeddingSnapshot ReadSnapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": not an embedding snapshot");
  }
  const auto version = Get<std::uint32_t>(in, path);
  if (version != EmbeddingSnapshot::kVersion) {
    throw DataError(path.string() + ": unsupported snapshot version " +
                    std::to_string(version));
  }
  EmbeddingSnapshot s;
  s.user_source = GetTable(in, path);
  s.user_target = GetTable(in, path);
  s.item_source = GetTable(in, path);
  s.item_target = GetTable(in, path);
  return s;
}

}  // namespace xdfair
