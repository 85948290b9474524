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
#include <map>
#include <set>
#include <string>
#include <vector>

namespace xdfair {

using KeyValues = std::map<std::string, std::string>;

// Flat `key = value` text; `#` starts a comment; blank lines ignored.
KeyValues ParseKeyValueText(const std::string& text);
KeyValues ReadKeyValueFile(const std::filesystem::path& path);

// Typed readers. A missing key leaves `out` untouched; a malformed value
// throws UsageError naming the key.
void ReadKey(const KeyValues& kv, const std::string& key, double& out);
void ReadKey(const KeyValues& kv, const std::string& key, std::int32_t& out);
void ReadKey(const KeyValues& kv, const std::string& key, std::uint64_t& out);
void ReadKey(const KeyValues& kv, const std::string& key, bool& out);
void ReadKey(const KeyValues& kv, const std::string& key, std::string& out);
void ReadKey(const KeyValues& kv, const std::string& key,
             std::vector<std::int32_t>& out);

std::vector<double> ParseDoubleList(const std::string& text);
std::vector<std::int32_t> ParseIntList(const std::string& text);

// Throws UsageError for keys outside `known`.
void RejectUnknownKeys(const KeyValues& kv, const std::set<std::string>& known,
                       const std::string& context);

std::string FormatDouble(double v);

}  // namespace xdfair
