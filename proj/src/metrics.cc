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

#include "xdfair/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "xdfair/config.h"

namespace xdfair {
namespace {

std::vector<std::int32_t> Eligible(std::size_t n,
                                   std::span<const std::int32_t> excluded) {
  std::vector<std::int32_t> out;
  out.reserve(n);
  std::size_t e = 0;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(n); ++i) {
    while (e < excluded.size() && excluded[e] < i) ++e;
    if (e < excluded.size() && excluded[e] == i) continue;
    out.push_back(i);
  }
  return out;
}

struct ByScore {
  std::span<const double> scores;
  bool operator()(std::int32_t a, std::int32_t b) const {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  }
};

std::vector<std::int32_t> MergeSorted(
    std::span<const UserItemIndex* const> indices, std::int32_t user) {
  std::vector<std::int32_t> out;
  for (const UserItemIndex* idx : indices) {
    const auto items = idx->Items(user);
    out.insert(out.end(), items.begin(), items.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void CheckK(std::int32_t k) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

}  // namespace

std::vector<std::int32_t> RankItems(std::span<const double> scores,
                                    std::span<const std::int32_t> excluded) {
  std::vector<std::int32_t> order = Eligible(scores.size(), excluded);
  std::sort(order.begin(), order.end(), ByScore{scores});
  return order;
}

std::vector<std::int32_t> TopK(std::span<const double> scores,
                               std::span<const std::int32_t> excluded,
                               std::int32_t k) {
  CheckK(k);
  std::vector<std::int32_t> order = Eligible(scores.size(), excluded);
  const auto take = std::min<std::size_t>(order.size(), k);
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    ByScore{scores});
  order.resize(take);
  return order;
}

std::vector<std::int32_t> RankItems(
    const Backbone& backbone, std::int32_t target_user,
    std::span<const UserItemIndex* const> exclude) {
  const Eigen::VectorXd scores =
      backbone.table(Table::kTargetItem) *
      backbone.UserTargetVector(target_user).transpose();
  const std::vector<std::int32_t> excluded = MergeSorted(exclude, target_user);
  return RankItems(std::span<const double>(scores.data(), scores.size()),
                   excluded);
}

double RecallAtK(std::span<const std::int32_t> ranked,
                 std::span<const std::int32_t> relevant, std::int32_t k) {
  CheckK(k);
  if (relevant.empty()) throw InvalidArgument("recall needs relevant items");
  std::vector<std::int32_t> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  const std::size_t n = std::min<std::size_t>(ranked.size(), k);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(rel.begin(), rel.end(), ranked[r])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

double NdcgAtK(std::span<const std::int32_t> ranked,
               std::span<const std::int32_t> relevant, std::int32_t k) {
  CheckK(k);
  if (relevant.empty()) throw InvalidArgument("ndcg needs relevant items");
  std::vector<std::int32_t> rel(relevant.begin(), relevant.end());
  std::sort(rel.begin(), rel.end());
  const std::size_t n = std::min<std::size_t>(ranked.size(), k);
  double dcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(rel.begin(), rel.end(), ranked[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(rel.size(), k);
  for (std::size_t r = 0; r < ideal; ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / idcg;
}

double Ugf(double metric_g0, double metric_g1) {
  return std::abs(metric_g0 - metric_g1);
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("paired t-test needs equal-length samples");
  }
  if (a.size() < 2) throw InvalidArgument("paired t-test needs >= 2 pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) mean += a[k] - b[k];
  mean /= n;
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double dev = a[k] - b[k] - mean;
    ss += dev * dev;
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  if (sd == 0.0 || !std::isfinite(sd)) {
    if (mean == 0.0) return {0.0, 1.0};
    return {mean > 0 ? INFINITY : -INFINITY, 0.0};
  }
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(n - 1.0);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.p = std::min(1.0, r.p);
  return r;
}

EvaluationReport Evaluate(const Backbone& backbone,
                          const CrossDomainDataset& ds,
                          const SplitDataset& split, EvalPhase phase,
                          std::vector<std::int32_t> ks) {
  if (ks.empty()) throw InvalidArgument("no cutoffs requested");
  for (const std::int32_t k : ks) CheckK(k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  const std::int32_t n_users = ds.target.n_users;
  const std::int32_t n_items = ds.target.n_items;
  const std::int32_t max_k = ks.back();

  const UserItemIndex train(n_users, split.target_train);
  const UserItemIndex val(n_users, split.target_val);
  const UserItemIndex test(n_users, split.target_test);
  const UserItemIndex& relevant = phase == EvalPhase::kTest ? test : val;
  std::vector<const UserItemIndex*> exclude{&train};
  if (phase == EvalPhase::kTest) exclude.push_back(&val);

  EvaluationReport report;
  report.ks = ks;
  for (const std::int32_t k : ks) {
    report.metric_names.push_back("Recall@" + std::to_string(k));
  }
  for (const std::int32_t k : ks) {
    report.metric_names.push_back("NDCG@" + std::to_string(k));
  }
  for (const std::string& m : report.metric_names) report.per_user[m] = {};

  const RowMatrix& items = backbone.table(Table::kTargetItem);
  Eigen::VectorXd scores(n_items);
  for (std::int32_t u = 0; u < n_users; ++u) {
    const auto rel = relevant.Items(u);
    if (rel.empty()) continue;
    scores.noalias() = items * backbone.UserTargetVector(u).transpose();
    const std::vector<std::int32_t> excluded = MergeSorted(exclude, u);
    const std::vector<std::int32_t> top = TopK(
        std::span<const double>(scores.data(), scores.size()), excluded,
        max_k);
    report.users.push_back(u);
    ++report.n_users[GroupIndex(ds.groups[u])];
    for (const std::int32_t k : ks) {
      report.per_user["Recall@" + std::to_string(k)].push_back(
          RecallAtK(top, rel, k));
      report.per_user["NDCG@" + std::to_string(k)].push_back(
          NdcgAtK(top, rel, k));
    }
  }
  if (report.n_users[0] == 0 || report.n_users[1] == 0) {
    throw DataError("evaluation needs users from both groups");
  }

  for (const std::string& m : report.metric_names) {
    const std::vector<double>& values = report.per_user[m];
    std::array<double, 2> sum{0.0, 0.0};
    for (std::size_t k = 0; k < values.size(); ++k) {
      sum[GroupIndex(ds.groups[report.users[k]])] += values[k];
    }
    const std::array<double, 2> group_mean{
        sum[0] / static_cast<double>(report.n_users[0]),
        sum[1] / static_cast<double>(report.n_users[1])};
    report.overall[m] = Mean(values);
    report.per_group[m] = group_mean;
    report.ugf[m] = Ugf(group_mean[0], group_mean[1]);
  }
  return report;
}

double ValidationNdcg(const Backbone& backbone, const CrossDomainDataset& ds,
                      const SplitDataset& split, std::int32_t k) {
  CheckK(k);
  const std::int32_t n_users = ds.target.n_users;
  const UserItemIndex train(n_users, split.target_train);
  const UserItemIndex val(n_users, split.target_val);
  const RowMatrix& items = backbone.table(Table::kTargetItem);
  Eigen::VectorXd scores(ds.target.n_items);
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int32_t u = 0; u < n_users; ++u) {
    const auto rel = val.Items(u);
    if (rel.empty()) continue;
    scores.noalias() = items * backbone.UserTargetVector(u).transpose();
    const std::vector<std::int32_t> top = TopK(
        std::span<const double>(scores.data(), scores.size()), train.Items(u),
        k);
    total += NdcgAtK(top, rel, k);
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

nlohmann::ordered_json EvaluationReport::ToJson() const {
  nlohmann::ordered_json j;
  j["n_users"] = {{"g0", n_users[0]}, {"g1", n_users[1]}};
  nlohmann::ordered_json metrics;
  for (const std::string& m : metric_names) {
    metrics[m] = {{"overall", overall.at(m)},
                  {"g0", per_group.at(m)[0]},
                  {"g1", per_group.at(m)[1]},
                  {"ugf", ugf.at(m)}};
  }
  j["metrics"] = std::move(metrics);
  return j;
}

std::string EvaluationReport::ToCsv() const {
  std::ostringstream out;
  out << "metric,scope,value\n";
  for (const std::string& m : metric_names) {
    out << m << ",overall," << FormatDouble(overall.at(m)) << "\n";
    out << m << ",g0," << FormatDouble(per_group.at(m)[0]) << "\n";
    out << m << ",g1," << FormatDouble(per_group.at(m)[1]) << "\n";
    out << m << ",ugf," << FormatDouble(ugf.at(m)) << "\n";
  }
  return out.str();
}

nlohmann::ordered_json ReportComparison::ToJson() const {
  nlohmann::ordered_json j;
  j["accuracy_improvement"] = accuracy_improvement;
  j["fairness_improvement"] = fairness_improvement;
  j["accuracy_change"] = accuracy_change;
  j["fairness_change"] = fairness_change;
  j["p_values"] = p_values;
  return j;
}

ReportComparison CompareReports(const EvaluationReport& candidate,
                                const EvaluationReport& baseline) {
  if (candidate.metric_names != baseline.metric_names) {
    throw InvalidArgument("reports use different metrics");
  }
  ReportComparison c;
  double acc = 0.0;
  double fair = 0.0;
  for (const std::string& m : candidate.metric_names) {
    const double base = baseline.overall.at(m);
    const double rel =
        base == 0.0 ? 0.0 : (candidate.overall.at(m) - base) / base;
    c.accuracy_change[m] = rel;
    acc += rel;
    const double base_ugf = baseline.ugf.at(m);
    const double rel_ugf =
        base_ugf == 0.0 ? 0.0 : (base_ugf - candidate.ugf.at(m)) / base_ugf;
    c.fairness_change["UGF(" + m + ")"] = rel_ugf;
    fair += rel_ugf;

    // Pair per-user values over the users evaluated in both reports.
    std::vector<double> a;
    std::vector<double> b;
    const auto& va = candidate.per_user.at(m);
    const auto& vb = baseline.per_user.at(m);
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < candidate.users.size() && j < baseline.users.size()) {
      if (candidate.users[i] < baseline.users[j]) {
        ++i;
      } else if (candidate.users[i] > baseline.users[j]) {
        ++j;
      } else {
        a.push_back(va[i++]);
        b.push_back(vb[j++]);
      }
    }
    if (a.size() >= 2) c.p_values[m] = PairedTTest(a, b).p;
  }
  const auto n = static_cast<double>(candidate.metric_names.size());
  c.accuracy_improvement = acc / n;
  c.fairness_improvement = fair / n;
  return c;
}

}  // namespace xdfair
