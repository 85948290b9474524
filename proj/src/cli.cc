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

#include "xdfair/cli.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xdfair/snapshot.h"
#include "xdfair/theory.h"

namespace xdfair {
namespace fs = std::filesystem;
namespace {

const std::set<std::string>& SynthKeys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    for (const auto& [key, value] : SynthConfig().ToKeyValues()) k.insert(key);
    return k;
  }();
  return keys;
}

const std::set<std::string>& DataKeys() {
  static const std::set<std::string> keys{"synthetic", "source", "target",
                                          "attributes", "id_remap", "ks"};
  return keys;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string KeyValueText(const KeyValues& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

void EnsureDir(const fs::path& dir) {
  if (dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

std::string Pretty(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<std::int32_t> WithCutoff(std::vector<std::int32_t> ks,
                                     std::int32_t k) {
  if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
  std::sort(ks.begin(), ks.end());
  return ks;
}

Backbone BackboneFromSnapshot(const CrossDomainDataset& ds,
                              const EmbeddingSnapshot& snap,
                              SharingMode mode) {
  if (snap.user_target.rows() != ds.target.n_users ||
      snap.user_source.rows() != ds.source.n_users ||
      snap.item_target.rows() != ds.target.n_items ||
      snap.item_source.rows() != ds.source.n_items) {
    throw DataError("snapshot shapes do not match the dataset");
  }
  Backbone b = Backbone::Init(ds, static_cast<int>(snap.user_target.cols()),
                              mode, 0);
  b.LoadTables(snap.user_source, snap.user_target, snap.item_source,
               snap.item_target);
  return b;
}

std::string DatasetSummary(const CrossDomainDataset& ds) {
  std::ostringstream s;
  auto line = [&s](const char* name, const DomainData& d) {
    const double density =
        static_cast<double>(d.interactions.size()) /
        (static_cast<double>(d.n_users) * static_cast<double>(d.n_items));
    s << name << ": users=" << d.n_users << " items=" << d.n_items
      << " interactions=" << d.interactions.size()
      << " density=" << FormatDouble(density) << "\n";
  };
  line("source", ds.source);
  line("target", ds.target);
  std::int64_t g[2] = {0, 0};
  for (const Group x : ds.groups) ++g[GroupIndex(x)];
  s << "overlapping users: " << ds.NumOverlapping() << "\n";
  s << "target groups: g0=" << g[0] << " g1=" << g[1] << "\n";
  return s.str();
}

nlohmann::ordered_json StatsJson(const CrossDomainDataset& ds) {
  std::int64_t g[2] = {0, 0};
  for (const Group x : ds.groups) ++g[GroupIndex(x)];
  auto dom = [](const DomainData& d) {
    return nlohmann::ordered_json{{"users", d.n_users},
                                  {"items", d.n_items},
                                  {"interactions", d.interactions.size()}};
  };
  return {{"source", dom(ds.source)},
          {"target", dom(ds.target)},
          {"overlapping_users", ds.NumOverlapping()},
          {"target_groups", {{"g0", g[0]}, {"g1", g[1]}}}};
}

struct IdMapEntry {
  std::vector<std::string> target;
  std::vector<std::string> source;
};

IdMapEntry ReadIdMap(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  IdMapEntry m;
  std::string line;
  std::getline(in, line);
  if (line != "domain\trow\tuser_id") {
    throw DataError(path.string() + ": unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string domain, row, raw;
    if (!std::getline(fields, domain, '\t') || !std::getline(fields, row, '\t') ||
        !std::getline(fields, raw)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed line");
    }
    auto& v = domain == "target" ? m.target : m.source;
    if (domain != "target" && domain != "source") {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": unknown domain " + domain);
    }
    if (row != std::to_string(v.size())) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": rows out of order");
    }
    v.push_back(raw);
  }
  return m;
}

// Shared per-command state parsed from the command line.
struct Invocation {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  fs::path out;
  bool quiet = false;
  std::vector<std::string> sets;
};

KeyValues MergedKeyValues(const Invocation& inv, KeyValues base = {}) {
  if (!inv.config_path.empty()) {
    for (const auto& [k, v] : ReadKeyValueFile(inv.config_path)) base[k] = v;
  }
  for (const std::string& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--set expects key=value, got '" + s + "'");
    }
    const KeyValues one = ParseKeyValueText(s);
    for (const auto& [k, v] : one) base[k] = v;
  }
  return base;
}

std::uint64_t ResolveSeed(const Invocation& inv, KeyValues& kv) {
  std::uint64_t seed = 42;
  ReadKey(kv, "seed", seed);
  if (inv.seed.has_value()) seed = *inv.seed;
  kv.erase("seed");
  return seed;
}

int CmdSynth(const Invocation& inv, std::ostream& out) {
  KeyValues kv = MergedKeyValues(inv);
  const std::uint64_t seed = ResolveSeed(inv, kv);
  kv.erase("synthetic");
  RejectUnknownKeys(kv, SynthKeys(), "synth");
  SynthConfig cfg = SynthConfig::FromKeyValues(kv);
  if (kv.count("rng_seed") == 0) cfg.rng_seed = seed;
  cfg.Validate();
  if (inv.out.empty()) throw UsageError("--out is required");
  const CrossDomainDataset ds = GenerateSynthetic(cfg);
  EnsureDir(inv.out);
  WriteInteractions(inv.out / "source.tsv", ds.source.interactions,
                    ds.source_users, ds.source_items);
  WriteInteractions(inv.out / "target.tsv", ds.target.interactions,
                    ds.target_users, ds.target_items);
  WriteAttributes(inv.out / "attributes.tsv", AttributesOf(ds));
  nlohmann::ordered_json manifest;
  nlohmann::ordered_json config;
  for (const auto& [k, v] : cfg.ToKeyValues()) config[k] = v;
  manifest["config"] = std::move(config);
  manifest["files"] = {"source.tsv", "target.tsv", "attributes.tsv"};
  manifest["stats"] = StatsJson(ds);
  WriteText(inv.out / "manifest.json", Pretty(manifest));
  if (!inv.quiet) out << DatasetSummary(ds);
  return 0;
}

void WriteRun(const fs::path& dir, const RunConfig& rc, const LoadedData& data,
              const RunResult& result) {
  WriteText(dir / "config.txt", KeyValueText(rc.ToKeyValues()));
  WriteRunLog(dir / "run_log.jsonl", result.model.log);
  WriteSnapshot(dir / "snapshot.bin", TakeSnapshot(result.model.backbone));
  WriteIdMap(dir / "id_map.tsv", data.dataset);
  WriteOptimizerState(dir / "optimizer.bin", result.model.optimizer);
  WriteText(dir / "checkpoint.json",
            Pretty(CheckpointSidecar(result.model, rc.train)));
  WriteText(dir / "report.json", Pretty(result.report.ToJson()));
  WriteText(dir / "report.csv", result.report.ToCsv());
}

void PrintLog(const RunResult& r, std::ostream& out) {
  for (const EpochStats& st : r.model.log) {
    out << "epoch " << st.epoch << " loss " << FormatDouble(st.loss_total)
        << " val_ndcg10 " << FormatDouble(st.val_ndcg10) << "\n";
  }
  for (const std::string& m : r.report.metric_names) {
    out << m << " " << FormatDouble(r.report.overall.at(m)) << "  UGF "
        << FormatDouble(r.report.ugf.at(m)) << "\n";
  }
}

int CmdTrain(const Invocation& inv, const std::string& ablate,
             std::ostream& out) {
  KeyValues kv = MergedKeyValues(inv);
  const std::uint64_t seed = ResolveSeed(inv, kv);
  RunConfig rc = ResolveRunConfig(kv, seed);
  if (!ablate.empty()) rc.train.flags = ParseAblation(ablate);
  rc.train.Validate();
  if (inv.out.empty()) throw UsageError("--out is required");
  const LoadedData data = LoadData(rc);
  const RunResult result = TrainAndEvaluate(data, rc.train, rc.ks);
  EnsureDir(inv.out);
  WriteRun(inv.out, rc, data, result);
  if (!inv.quiet) PrintLog(result, out);
  return 0;
}

int CmdEval(const Invocation& inv, const fs::path& checkpoint,
            std::ostream& out) {
  if (checkpoint.empty()) throw UsageError("--checkpoint is required");
  const fs::path dir =
      fs::is_directory(checkpoint) ? checkpoint : checkpoint.parent_path();
  const fs::path snap_path =
      fs::is_directory(checkpoint) ? checkpoint / "snapshot.bin" : checkpoint;
  KeyValues kv = MergedKeyValues(inv, ReadKeyValueFile(dir / "config.txt"));
  const std::uint64_t seed = ResolveSeed(inv, kv);
  const RunConfig rc = ResolveRunConfig(kv, seed);
  const LoadedData data = LoadData(rc);
  const Backbone backbone =
      BackboneFromSnapshot(data.dataset, ReadSnapshot(snap_path), rc.train.mode);
  const EvaluationReport report =
      Evaluate(backbone, data.dataset, data.split, EvalPhase::kTest, rc.ks);
  if (inv.out.empty()) {
    out << Pretty(report.ToJson());
    return 0;
  }
  EnsureDir(inv.out);
  WriteText(inv.out / "report.json", Pretty(report.ToJson()));
  WriteText(inv.out / "report.csv", report.ToCsv());
  if (!inv.quiet) out << Pretty(report.ToJson());
  return 0;
}

int CmdAblate(const Invocation& inv, std::ostream& out) {
  KeyValues kv = MergedKeyValues(inv);
  const std::uint64_t seed = ResolveSeed(inv, kv);
  RunConfig rc = ResolveRunConfig(kv, seed);
  rc.train.Validate();
  if (inv.out.empty()) throw UsageError("--out is required");
  const LoadedData data = LoadData(rc);
  std::vector<std::string> names;
  std::vector<EvaluationReport> reports;
  nlohmann::ordered_json summary;
  for (const auto& [name, flags] : AblationVariants()) {
    TrainConfig cfg = rc.train;
    cfg.flags = flags;
    const RunResult r = TrainAndEvaluate(data, cfg, rc.ks);
    std::int64_t fair_calls = 0;
    for (const EpochStats& st : r.model.log) fair_calls += st.fair_sampler_calls;
    summary[name] = {{"fair_sampler_calls", fair_calls},
                     {"best_epoch", r.model.best_epoch},
                     {"report", r.report.ToJson()}};
    names.push_back(name);
    reports.push_back(r.report);
    if (!inv.quiet) {
      out << name << ": Recall@10 "
          << FormatDouble(r.report.overall.count("Recall@10")
                              ? r.report.overall.at("Recall@10")
                              : 0.0)
          << "\n";
    }
  }
  EnsureDir(inv.out);
  WriteText(inv.out / "config.txt", KeyValueText(rc.ToKeyValues()));
  WriteText(inv.out / "ablation.csv", MetricTableCsv("variant", names, reports));
  WriteText(inv.out / "ablation.json", Pretty(summary));
  return 0;
}

int CmdSweep(const Invocation& inv, const std::string& axis,
             const std::string& values_text, std::ostream& out) {
  if (axis != "candidate_size" && axis != "epsilon" && axis != "gamma") {
    throw UsageError("unknown sweep axis '" + axis +
                     "' (expected candidate_size, epsilon or gamma)");
  }
  const std::vector<double> values = ParseDoubleList(values_text);
  if (values.empty()) throw UsageError("--values must list at least one value");
  KeyValues kv = MergedKeyValues(inv);
  const std::uint64_t seed = ResolveSeed(inv, kv);
  RunConfig rc = ResolveRunConfig(kv, seed);
  rc.ks = WithCutoff(rc.ks, 10);
  std::vector<TrainConfig> configs;
  for (const double v : values) {
    TrainConfig cfg = rc.train;
    if (axis == "candidate_size") {
      if (v != std::floor(v)) throw UsageError("candidate_size must be integral");
      cfg.sampler.candidate_size = static_cast<std::int32_t>(v);
    } else if (axis == "epsilon") {
      cfg.sampler.epsilon = v;
    } else {
      cfg.gamma = v;
    }
    cfg.Validate();
    configs.push_back(cfg);
  }
  if (inv.out.empty()) throw UsageError("--out is required");
  const LoadedData data = LoadData(rc);
  std::ostringstream csv;
  csv << "value,Recall@10,NDCG@10,UGF(Recall@10),UGF(NDCG@10)\n";
  for (std::size_t k = 0; k < values.size(); ++k) {
    const RunResult r = TrainAndEvaluate(data, configs[k], rc.ks);
    const auto& rep = r.report;
    csv << FormatDouble(values[k]) << "," << FormatDouble(rep.overall.at("Recall@10"))
        << "," << FormatDouble(rep.overall.at("NDCG@10")) << ","
        << FormatDouble(rep.ugf.at("Recall@10")) << ","
        << FormatDouble(rep.ugf.at("NDCG@10")) << "\n";
    if (!inv.quiet) {
      out << axis << "=" << FormatDouble(values[k]) << " UGF(Recall@10) "
          << FormatDouble(rep.ugf.at("Recall@10")) << "\n";
    }
  }
  EnsureDir(inv.out);
  WriteText(inv.out / "config.txt", KeyValueText(rc.ToKeyValues()));
  WriteText(inv.out / "sweep.csv", csv.str());
  return 0;
}

struct TheoryArgs {
  fs::path snapshot;
  fs::path attrs;
  std::optional<double> baseline;
  double lo = 1.0;
  std::string lf = "auto";
  std::int32_t subsample_n = 256;
  std::int32_t repetitions = 8;
};

int CmdTheory(const Invocation& inv, const TheoryArgs& args,
              std::ostream& out) {
  if (args.snapshot.empty()) throw UsageError("--snapshot is required");
  if (args.attrs.empty()) throw UsageError("--attrs is required");
  TheoryOptions opt;
  opt.lo = args.lo;
  if (!(opt.lo > 0.0)) throw UsageError("--lo must be positive");
  if (args.lf != "auto") {
    const std::vector<double> v = ParseDoubleList(args.lf);
    if (v.size() != 1 || !(v[0] > 0.0)) {
      throw UsageError("--lf expects 'auto' or a positive number");
    }
    opt.lf = v[0];
  }
  opt.baseline_ugf = args.baseline;
  opt.w1.subsample_n = args.subsample_n;
  opt.w1.repetitions = args.repetitions;
  if (opt.w1.subsample_n < 1 || opt.w1.repetitions < 1) {
    throw UsageError("--subsample-n and --repetitions must be >= 1");
  }
  KeyValues kv = MergedKeyValues(inv);
  opt.seed = ResolveSeed(inv, kv);

  const EmbeddingSnapshot snap = ReadSnapshot(args.snapshot);
  const AttributeTable attrs = LoadAttributes(args.attrs);
  const IdMapEntry ids = ReadIdMap(args.snapshot.parent_path() / "id_map.tsv");
  if (static_cast<Eigen::Index>(ids.target.size()) != snap.user_target.rows() ||
      static_cast<Eigen::Index>(ids.source.size()) != snap.user_source.rows()) {
    throw DataError("id map does not match the snapshot");
  }
  std::vector<Group> target_groups;
  for (const std::string& raw : ids.target) {
    const auto it = attrs.groups.find(raw);
    if (it == attrs.groups.end()) {
      throw DataError("target user " + raw + " has no attribute");
    }
    target_groups.push_back(it->second);
  }
  std::vector<std::int8_t> source_groups;
  for (const std::string& raw : ids.source) {
    const auto it = attrs.groups.find(raw);
    source_groups.push_back(
        it == attrs.groups.end() ? -1 : static_cast<std::int8_t>(it->second));
  }
  const TheoryReport report =
      AnalyzeSnapshot(snap, target_groups, source_groups, opt);
  if (inv.out.empty()) {
    out << Pretty(report.ToJson());
    return 0;
  }
  EnsureDir(inv.out);
  WriteText(inv.out / "bound.json", Pretty(report.ToJson()));
  if (!inv.quiet) out << Pretty(report.ToJson());
  return 0;
}

}  // namespace

KeyValues RunConfig::ToKeyValues() const {
  KeyValues kv = train.ToKeyValues();
  kv["seed"] = std::to_string(seed);
  std::string k;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    k += (i > 0 ? "," : "") + std::to_string(ks[i]);
  }
  kv["ks"] = k;
  if (synth.has_value()) {
    kv["synthetic"] = "true";
    for (const auto& [key, v] : synth->ToKeyValues()) kv[key] = v;
  } else {
    kv["source"] = source_path.string();
    kv["target"] = target_path.string();
    kv["attributes"] = attributes_path.string();
    kv["id_remap"] = id_remap ? "true" : "false";
  }
  return kv;
}

RunConfig ResolveRunConfig(const KeyValues& kv, std::uint64_t seed) {
  std::set<std::string> known = TrainConfig::Keys();
  known.insert(SynthKeys().begin(), SynthKeys().end());
  known.insert(DataKeys().begin(), DataKeys().end());
  RejectUnknownKeys(kv, known, "config");

  RunConfig rc;
  rc.seed = seed;
  bool synthetic = false;
  ReadKey(kv, "synthetic", synthetic);
  KeyValues synth_kv;
  for (const auto& [k, v] : kv) {
    if (SynthKeys().count(k) != 0) synth_kv[k] = v;
  }
  synthetic = synthetic || !synth_kv.empty();
  const bool files = kv.count("source") != 0 || kv.count("target") != 0 ||
                     kv.count("attributes") != 0;
  if (synthetic && files) {
    throw UsageError("choose either data files or synthetic data, not both");
  }
  if (!synthetic && !files) {
    throw UsageError(
        "no data source: set source/target/attributes or synthetic = true");
  }
  if (synthetic) {
    SynthConfig cfg = SynthConfig::FromKeyValues(synth_kv);
    if (synth_kv.count("rng_seed") == 0) cfg.rng_seed = seed;
    cfg.Validate();
    rc.synth = cfg;
  } else {
    for (const char* key : {"source", "target", "attributes"}) {
      if (kv.count(key) == 0 || kv.at(key).empty()) {
        throw UsageError(std::string("missing data file key '") + key + "'");
      }
    }
    rc.source_path = kv.at("source");
    rc.target_path = kv.at("target");
    rc.attributes_path = kv.at("attributes");
    ReadKey(kv, "id_remap", rc.id_remap);
  }
  rc.train.Apply(kv);
  rc.train.seed = seed;
  rc.train.sampler.seed = seed;
  ReadKey(kv, "ks", rc.ks);
  if (rc.ks.empty()) throw UsageError("ks must list at least one cutoff");
  for (const std::int32_t k : rc.ks) {
    if (k < 1) throw UsageError("ks entries must be >= 1");
  }
  return rc;
}

LoadedData LoadData(const RunConfig& config) {
  LoadedData data;
  if (config.synth.has_value()) {
    data.dataset = GenerateSynthetic(*config.synth);
  } else {
    for (const fs::path& p :
         {config.source_path, config.target_path, config.attributes_path}) {
      if (!fs::exists(p)) throw DataError("file not found: " + p.string());
    }
    InteractionLog source = LoadInteractions(config.source_path, config.id_remap);
    InteractionLog target = LoadInteractions(config.target_path, config.id_remap);
    const AttributeTable attrs = LoadAttributes(config.attributes_path);
    data.dataset = AssembleDataset(std::move(source), std::move(target), attrs);
  }
  data.split = SplitPerUser(data.dataset, DeriveSeed(config.seed, "split"));
  return data;
}

RunResult TrainAndEvaluate(const LoadedData& data, const TrainConfig& train,
                           const std::vector<std::int32_t>& ks) {
  TrainedModel model = Train(data.dataset, data.split, train);
  EvaluationReport report = Evaluate(model.backbone, data.dataset, data.split,
                                     EvalPhase::kTest, ks);
  return {std::move(model), std::move(report)};
}

std::vector<std::pair<std::string, AblationFlags>> AblationVariants() {
  AblationFlags full;
  AblationFlags no_alpha = full;
  no_alpha.use_alpha = false;
  AblationFlags no_fs = full;
  no_fs.use_fair_sampling = false;
  AblationFlags no_redist = full;
  no_redist.use_redistribution = false;
  AblationFlags no_est = full;
  no_est.use_estimator_loss = false;
  return {{"full", full},
          {"w/o alpha", no_alpha},
          {"w/o FS", no_fs},
          {"w/o L_redist", no_redist},
          {"w/o L_est", no_est}};
}

AblationFlags ParseAblation(const std::string& text) {
  AblationFlags flags;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part == "none") continue;
    if (part == "all") {
      flags = AblationFlags::AllOff();
    } else if (part == "alpha") {
      flags.use_alpha = false;
    } else if (part == "fs") {
      flags.use_fair_sampling = false;
    } else if (part == "redist") {
      flags.use_redistribution = false;
    } else if (part == "est") {
      flags.use_estimator_loss = false;
    } else {
      throw UsageError("unknown ablation component '" + part +
                       "' (expected none, alpha, fs, redist, est or all)");
    }
  }
  return flags;
}

std::string MetricTableCsv(const std::string& first_column,
                           const std::vector<std::string>& labels,
                           const std::vector<EvaluationReport>& reports) {
  if (labels.size() != reports.size()) {
    throw InvalidArgument("one label per report required");
  }
  std::ostringstream csv;
  csv << first_column;
  if (reports.empty()) return csv.str() + "\n";
  const std::vector<std::string>& names = reports.front().metric_names;
  for (const std::string& m : names) csv << "," << m;
  for (const std::string& m : names) csv << ",UGF(" << m << ")";
  csv << "\n";
  for (std::size_t r = 0; r < reports.size(); ++r) {
    if (reports[r].metric_names != names) {
      throw InvalidArgument("reports use different metrics");
    }
    csv << labels[r];
    for (const std::string& m : names) {
      csv << "," << FormatDouble(reports[r].overall.at(m));
    }
    for (const std::string& m : names) {
      csv << "," << FormatDouble(reports[r].ugf.at(m));
    }
    csv << "\n";
  }
  return csv.str();
}

void WriteIdMap(const fs::path& path, const CrossDomainDataset& ds) {
  std::string text = "domain\trow\tuser_id\n";
  for (std::int32_t u = 0; u < ds.target.n_users; ++u) {
    text += "target\t" + std::to_string(u) + "\t" + ds.target_users.Raw(u) + "\n";
  }
  for (std::int32_t u = 0; u < ds.source.n_users; ++u) {
    text += "source\t" + std::to_string(u) + "\t" + ds.source_users.Raw(u) + "\n";
  }
  WriteText(path, text);
}

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Fairness-aware cross-domain recommendation toolkit", "xdfair"};
  app.require_subcommand(1);
  app.fallthrough();
  Invocation inv;
  std::uint64_t seed_flag = 0;
  std::string out_dir;
  app.add_option("--config", inv.config_path, "key = value config file");
  auto* seed_opt = app.add_option("--seed", seed_flag, "root seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--quiet", inv.quiet, "suppress progress output");
  app.add_option("--set", inv.sets, "override a config key (key=value)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  auto* train = app.add_subcommand("train", "train and evaluate one model");
  std::string ablate;
  train->add_option("--ablate", ablate,
                    "components to disable: none, alpha, fs, redist, est, all");
  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "run directory or snapshot");
  auto* ablation = app.add_subcommand("ablate", "run the ablation variants");
  auto* sweep = app.add_subcommand("sweep", "single-axis hyperparameter sweep");
  std::string axis;
  std::string values;
  sweep->add_option("--axis", axis, "candidate_size, epsilon or gamma")
      ->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  auto* theory = app.add_subcommand("theory", "fairness bound report");
  TheoryArgs targs;
  std::string snapshot_path;
  std::string attrs_path;
  double baseline = 0.0;
  theory->add_option("--snapshot", snapshot_path, "embedding snapshot file");
  theory->add_option("--attrs", attrs_path, "attributes TSV");
  auto* baseline_opt =
      theory->add_option("--baseline-ugf", baseline, "baseline UGF");
  theory->add_option("--lo", targs.lo, "metric Lipschitz constant");
  theory->add_option("--lf", targs.lf, "auto or a positive number");
  theory->add_option("--subsample-n", targs.subsample_n, "W1 subsample size");
  theory->add_option("--repetitions", targs.repetitions, "W1 repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (seed_opt->count() > 0) inv.seed = seed_flag;
  inv.out = out_dir;

  try {
    if (synth->parsed()) return CmdSynth(inv, out);
    if (train->parsed()) return CmdTrain(inv, ablate, out);
    if (eval->parsed()) return CmdEval(inv, checkpoint, out);
    if (ablation->parsed()) return CmdAblate(inv, out);
    if (sweep->parsed()) return CmdSweep(inv, axis, values, out);
    if (theory->parsed()) {
      targs.snapshot = snapshot_path;
      targs.attrs = attrs_path;
      if (baseline_opt->count() > 0) targs.baseline = baseline;
      return CmdTheory(inv, targs, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kData:
        return 2;
      case ErrorKind::kNumerical:
        return 3;
      case ErrorKind::kUsage:
      case ErrorKind::kInvalidArgument:
        return 1;
    }
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace xdfair
