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
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xdfair/config.h"
#include "xdfair/dataset.h"
#include "xdfair/metrics.h"
#include "xdfair/synthetic.h"
#include "xdfair/trainer.h"

namespace xdfair {

// Fully resolved settings of one command: defaults, then the config file,
// then `--set key=value` overrides, then dedicated flags.
struct RunConfig {
  std::uint64_t seed = 42;
  // Exactly one data source.
  std::optional<SynthConfig> synth;
  std::filesystem::path source_path;
  std::filesystem::path target_path;
  std::filesystem::path attributes_path;
  bool id_remap = true;
  TrainConfig train;
  std::vector<std::int32_t> ks{10, 20};

  // Resolved key/value form, written into run directories.
  KeyValues ToKeyValues() const;
};

// Builds a RunConfig from merged key/values and the root seed. Throws
// UsageError for unknown keys or a missing or ambiguous data source.
RunConfig ResolveRunConfig(const KeyValues& kv, std::uint64_t seed);

struct LoadedData {
  CrossDomainDataset dataset;
  SplitDataset split;
};

LoadedData LoadData(const RunConfig& config);

struct RunResult {
  TrainedModel model;
  EvaluationReport report;
};

RunResult TrainAndEvaluate(const LoadedData& data, const TrainConfig& train,
                           const std::vector<std::int32_t>& ks);

// The five ablation variants in table order.
std::vector<std::pair<std::string, AblationFlags>> AblationVariants();

// Parses a comma list of components to disable: none, alpha, fs, redist,
// est, all.
AblationFlags ParseAblation(const std::string& text);

// Header `variant` then Recall@K..., NDCG@K..., UGF(Recall@K)...,
// UGF(NDCG@K)...; one row per report.
std::string MetricTableCsv(const std::string& first_column,
                           const std::vector<std::string>& labels,
                           const std::vector<EvaluationReport>& reports);

// Writes the user id map of a dataset next to a snapshot:
// `domain<TAB>row<TAB>user_id`.
void WriteIdMap(const std::filesystem::path& path,
                const CrossDomainDataset& ds);

// Entry point. Returns the process exit code: 0 ok, 1 usage, 2 data,
// 3 numerical failure.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace xdfair
