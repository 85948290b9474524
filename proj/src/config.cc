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

#include "xdfair/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "xdfair/common.h"

namespace xdfair {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const std::string* Lookup(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

Error BadValue(const std::string& key, const std::string& value) {
  return UsageError("invalid value for '" + key + "': '" + value + "'");
}

template <typename T>
bool ParseNumber(const std::string& s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

KeyValues ParseKeyValueText(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(line_no) +
                       ": empty key");
    }
    kv[key] = Trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues ReadKeyValueFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseKeyValueText(buffer.str());
}

void ReadKey(const KeyValues& kv, const std::string& key, double& out) {
  const std::string* v = Lookup(kv, key);
  if (v == nullptr) return;
  double parsed = 0;
  if (!ParseNumber(*v, parsed)) throw BadValue(key, *v);
  out = parsed;
}

void ReadKey(const KeyValues& kv, const std::string& key, std::int32_t& out) {
  const std::string* v = Lookup(kv, key);
  if (v == nullptr) return;
  std::int32_t parsed = 0;
  if (!ParseNumber(*v, parsed)) throw BadValue(key, *v);
  out = parsed;
}

void ReadKey(const KeyValues& kv, const std::string& key, std::uint64_t& out) {
  const std::string* v = Lookup(kv, key);
  if (v == nullptr) return;
  std::uint64_t parsed = 0;
  if (!ParseNumber(*v, parsed)) throw BadValue(key, *v);
  out = parsed;
}

void ReadKey(const KeyValues& kv, const std::string& key, bool& out) {
  const std::string* v = Lookup(kv, key);
  if (v == nullptr) return;
  if (*v == "true" || *v == "1" || *v == "on") {
    out = true;
  } else if (*v == "false" || *v == "0" || *v == "off") {
    out = false;
  } else {
    throw BadValue(key, *v);
  }
}

void ReadKey(const KeyValues& kv, const std::string& key, std::string& out) {
  if (const std::string* v = Lookup(kv, key)) out = *v;
}

void ReadKey(const KeyValues& kv, const std::string& key,
             std::vector<std::int32_t>& out) {
  const std::string* v = Lookup(kv, key);
  if (v == nullptr) return;
  try {
    out = ParseIntList(*v);
  } catch (const Error&) {
    throw BadValue(key, *v);
  }
}

std::vector<double> ParseDoubleList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    double v = 0;
    if (!ParseNumber(item, v)) throw UsageError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::int32_t> ParseIntList(const std::string& text) {
  std::vector<std::int32_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (item.empty()) continue;
    std::int32_t v = 0;
    if (!ParseNumber(item, v)) throw UsageError("bad integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void RejectUnknownKeys(const KeyValues& kv, const std::set<std::string>& known,
                       const std::string& context) {
  for (const auto& [key, value] : kv) {
    if (!known.contains(key)) {
      throw UsageError(context + ": unknown key '" + key + "'");
    }
  }
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace xdfair
