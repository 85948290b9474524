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

#include "xdfair/theory.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

#include "xdfair/rng.h"

namespace xdfair {
namespace {

RowMatrix PairwiseDistances(const RowMatrix& a, const RowMatrix& b) {
  RowMatrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      d(i, j) = (a.row(i) - b.row(j)).norm();
    }
  }
  return d;
}

RowMatrix Subsample(const RowMatrix& points, Eigen::Index n, Rng& rng) {
  if (n == points.rows()) return points;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first n entries are a uniform subset.
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto j = k + static_cast<Eigen::Index>(UniformIndex(
                           rng, static_cast<std::uint64_t>(points.rows() - k)));
    std::swap(idx[k], idx[j]);
  }
  RowMatrix out(n, points.cols());
  for (Eigen::Index k = 0; k < n; ++k) out.row(k) = points.row(idx[k]);
  return out;
}

Eigen::VectorXd RandomUnit(Eigen::Index dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) v[k] = StandardNormal(rng);
  const double n = v.norm();
  if (n == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

RowMatrix ApplyMap(const RowMatrix& points, const VectorMap& map) {
  RowMatrix out;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd y = map(points.row(i).transpose());
    if (i == 0) out.resize(points.rows(), y.size());
    out.row(i) = y.transpose();
  }
  return out;
}

nlohmann::ordered_json RademacherJson(const RademacherEstimate& r) {
  return {{"complexity", r.complexity},
          {"gain_class", r.gain_class},
          {"sign_vectors", r.sign_vectors},
          {"exhaustive", r.exhaustive}};
}

}  // namespace

double MinCostAssignment(const RowMatrix& cost, std::vector<int>* assignment) {
  if (cost.rows() != cost.cols()) {
    throw InvalidArgument("assignment needs a square cost matrix");
  }
  const int n = static_cast<int>(cost.rows());
  if (n == 0) {
    if (assignment != nullptr) assignment->clear();
    return 0.0;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, row_to_col[i]);
  if (assignment != nullptr) *assignment = std::move(row_to_col);
  return total;
}

double ExactWasserstein1(const RowMatrix& a, const RowMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("empty cloud");
  if (a.rows() != b.rows()) {
    throw InvalidArgument("exact W1 needs equal-size clouds");
  }
  if (a.cols() != b.cols()) throw InvalidArgument("cloud dimension mismatch");
  return MinCostAssignment(PairwiseDistances(a, b)) /
         static_cast<double>(a.rows());
}

double Wasserstein1(const RowMatrix& a, const RowMatrix& b,
                    const W1Config& config) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("empty cloud");
  if (a.cols() != b.cols()) throw InvalidArgument("cloud dimension mismatch");
  if (config.subsample_n < 1 || config.repetitions < 1) {
    throw InvalidArgument("W1 needs subsample_n >= 1 and repetitions >= 1");
  }
  const Eigen::Index n =
      std::min<Eigen::Index>({a.rows(), b.rows(), config.subsample_n});
  if (a.rows() == n && b.rows() == n) return ExactWasserstein1(a, b);
  const Eigen::Index common = std::lcm(a.rows(), b.rows());
  if (common <= config.subsample_n) {
    return ExactWasserstein1(a.replicate(common / a.rows(), 1),
                             b.replicate(common / b.rows(), 1));
  }
  Rng rng(config.seed);
  double total = 0.0;
  for (std::int32_t r = 0; r < config.repetitions; ++r) {
    const RowMatrix sa = Subsample(a, n, rng);
    const RowMatrix sb = Subsample(b, n, rng);
    total += ExactWasserstein1(sa, sb);
  }
  return total / config.repetitions;
}

double CloudScale(const RowMatrix& points) {
  if (points.rows() == 0) return 0.0;
  const Eigen::RowVectorXd centroid = points.colwise().mean();
  return std::sqrt((points.rowwise() - centroid).squaredNorm() /
                   static_cast<double>(points.rows()));
}

RowMatrix EmbeddingCloud::Select(std::optional<Domain> d,
                                 std::optional<Group> g) const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if (d.has_value() && domain[i] != *d) continue;
    if (g.has_value() && group[i] != *g) continue;
    rows.push_back(i);
  }
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), points.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = points.row(rows[k]);
  }
  return out;
}

void EmbeddingCloud::Add(const Eigen::Ref<const Eigen::RowVectorXd>& p,
                         Domain d, Group g) {
  if (points.rows() > 0 && p.size() != points.cols()) {
    throw InvalidArgument("cloud dimension mismatch");
  }
  points.conservativeResize(points.rows() + 1, p.size());
  points.row(points.rows() - 1) = p;
  domain.push_back(d);
  group.push_back(g);
}

EmbeddingCloud CloudFromSnapshot(
    const EmbeddingSnapshot& snapshot, const std::vector<Group>& target_groups,
    const std::vector<std::int8_t>& source_groups) {
  if (static_cast<Eigen::Index>(target_groups.size()) !=
      snapshot.user_target.rows()) {
    throw DataError("target group labels do not match the snapshot");
  }
  if (static_cast<Eigen::Index>(source_groups.size()) !=
      snapshot.user_source.rows()) {
    throw DataError("source group labels do not match the snapshot");
  }
  EmbeddingCloud cloud;
  const Eigen::Index d = snapshot.user_target.cols();
  Eigen::Index n_source = 0;
  for (const std::int8_t g : source_groups) n_source += g >= 0 ? 1 : 0;
  cloud.points.resize(snapshot.user_target.rows() + n_source, d);
  Eigen::Index row = 0;
  for (std::size_t u = 0; u < target_groups.size(); ++u) {
    cloud.points.row(row++) = snapshot.user_target.row(static_cast<Eigen::Index>(u));
    cloud.domain.push_back(Domain::kTarget);
    cloud.group.push_back(target_groups[u]);
  }
  for (std::size_t u = 0; u < source_groups.size(); ++u) {
    if (source_groups[u] < 0) continue;
    cloud.points.row(row++) = snapshot.user_source.row(static_cast<Eigen::Index>(u));
    cloud.domain.push_back(Domain::kSource);
    cloud.group.push_back(static_cast<Group>(source_groups[u]));
  }
  if (!cloud.points.allFinite()) throw DataError("non-finite embeddings");
  return cloud;
}

PreservationVerdict PreservationCheck(double rhs, double baseline_ugf) {
  return {rhs <= baseline_ugf, baseline_ugf - rhs};
}

double BoundReport::DecompositionSum() const {
  return w1_source_groups + delta_target[0] + delta_target[1] +
         delta_source[0] + delta_source[1] + 2.0 * domain_shift;
}

nlohmann::ordered_json BoundReport::ToJson() const {
  nlohmann::ordered_json j;
  j["w1_source_groups"] = w1_source_groups;
  j["delta_t_g0"] = delta_target[0];
  j["delta_t_g1"] = delta_target[1];
  j["delta_s_g0"] = delta_source[0];
  j["delta_s_g1"] = delta_source[1];
  j["delta_ts"] = domain_shift;
  j["lo"] = lo;
  j["lf"] = lf;
  j["rhs"] = rhs;
  j["w1_target_groups"] = w1_target_groups;
  j["chain_slack"] = chain_slack;
  j["mc_tolerance"] = mc_tolerance;
  j["chain_holds"] = chain_holds;
  j["scale"] = scale;
  if (measured_ugf.has_value()) {
    j["measured_ugf"] = *measured_ugf;
    j["measured_ugf_within_bound"] =
        *measured_ugf <= lo * lf * (w1_target_groups + mc_tolerance);
  } else {
    j["measured_ugf"] = nullptr;
  }
  if (baseline_ugf.has_value() && preservation.has_value()) {
    j["baseline_ugf"] = *baseline_ugf;
    j["preserved"] = preservation->preserved;
    j["margin"] = preservation->margin;
  } else {
    j["baseline_ugf"] = nullptr;
    j["preserved"] = nullptr;
    j["margin"] = nullptr;
  }
  j["subsample_n"] = subsample_n;
  j["repetitions"] = repetitions;
  j["note"] =
      "lo is supplied, not estimated: ranking metrics are not Lipschitz in "
      "embedding space";
  return j;
}

BoundReport GroupGapBound(const EmbeddingCloud& cloud, double lo, double lf,
                          const W1Config& config) {
  if (!(lo > 0.0) || !(lf > 0.0)) {
    throw InvalidArgument("Lipschitz constants must be positive");
  }
  const RowMatrix t_all = cloud.Select(Domain::kTarget, std::nullopt);
  const RowMatrix s_all = cloud.Select(Domain::kSource, std::nullopt);
  std::array<RowMatrix, 2> t_g;
  std::array<RowMatrix, 2> s_g;
  for (int g = 0; g < 2; ++g) {
    t_g[g] = cloud.Select(Domain::kTarget, static_cast<Group>(g));
    s_g[g] = cloud.Select(Domain::kSource, static_cast<Group>(g));
    const char* name = GroupName(static_cast<Group>(g));
    if (t_g[g].rows() == 0) {
      throw DataError(std::string("no target users in group ") + name);
    }
    if (s_g[g].rows() == 0) {
      throw DataError(std::string("no source users in group ") + name);
    }
  }
  auto w1 = [&config](const RowMatrix& a, const RowMatrix& b,
                      const char* term) {
    W1Config c = config;
    c.seed = DeriveSeed(config.seed, term);
    return Wasserstein1(a, b, c);
  };

  BoundReport r;
  r.lo = lo;
  r.lf = lf;
  r.subsample_n = config.subsample_n;
  r.repetitions = config.repetitions;
  r.w1_source_groups = w1(s_g[0], s_g[1], "w1/source_groups");
  r.delta_target[0] = w1(t_g[0], t_all, "w1/delta_t0");
  r.delta_target[1] = w1(t_g[1], t_all, "w1/delta_t1");
  r.delta_source[0] = w1(s_g[0], s_all, "w1/delta_s0");
  r.delta_source[1] = w1(s_g[1], s_all, "w1/delta_s1");
  r.domain_shift = w1(t_all, s_all, "w1/domain_shift");
  r.rhs = lo * lf * r.DecompositionSum();
  r.w1_target_groups = w1(t_g[0], t_g[1], "w1/target_groups");
  r.scale = CloudScale(cloud.points);
  r.mc_tolerance = kMonteCarloSlack * r.scale;
  r.chain_slack = r.DecompositionSum() - r.w1_target_groups;
  r.chain_holds = r.chain_slack >= -r.mc_tolerance;
  return r;
}

void AttachBaseline(BoundReport& report, double baseline_ugf) {
  report.baseline_ugf = baseline_ugf;
  report.preservation = PreservationCheck(report.rhs, baseline_ugf);
}

double ProbeGap(const RowMatrix& a, const RowMatrix& b, const VectorMap& map,
                std::int32_t n_directions, std::uint64_t seed) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("empty cloud");
  const RowMatrix fa = ApplyMap(a, map);
  const RowMatrix fb = ApplyMap(b, map);
  const Eigen::RowVectorXd diff = fa.colwise().mean() - fb.colwise().mean();
  double best = diff.cwiseAbs().maxCoeff();
  Rng rng(seed);
  for (std::int32_t k = 0; k < n_directions; ++k) {
    const Eigen::VectorXd w = RandomUnit(diff.size(), rng);
    best = std::max(best, std::abs(diff.dot(w.transpose())));
  }
  return best;
}

RademacherEstimate EstimateRademacher(const RowMatrix& values,
                                      std::int32_t n_sign_draws,
                                      std::uint64_t seed) {
  if (values.rows() < 1 || values.cols() < 1) {
    throw InvalidArgument("rademacher needs >= 1 function and sample");
  }
  if (n_sign_draws < 1) throw InvalidArgument("n_sign_draws must be >= 1");
  const auto n = static_cast<double>(values.cols());
  Rng rng(seed);
  Eigen::VectorXd sigma(values.cols());
  double total = 0.0;
  for (std::int32_t draw = 0; draw < n_sign_draws; ++draw) {
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      sigma[i] = (rng() >> 63) != 0 ? 1.0 : -1.0;
    }
    total += (values * sigma).maxCoeff() / n;
  }
  RademacherEstimate r;
  r.complexity = total / n_sign_draws;
  r.gain_class = 2.0 * r.complexity;
  r.sign_vectors = n_sign_draws;
  return r;
}

RademacherEstimate ExhaustiveRademacher(const RowMatrix& values) {
  if (values.rows() < 1 || values.cols() < 1) {
    throw InvalidArgument("rademacher needs >= 1 function and sample");
  }
  if (values.cols() > 24) {
    throw InvalidArgument("exhaustive enumeration limited to n <= 24");
  }
  const auto n = static_cast<int>(values.cols());
  const std::uint64_t count = 1ULL << n;
  Eigen::VectorXd sigma(n);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (int i = 0; i < n; ++i) sigma[i] = (mask >> i) & 1 ? 1.0 : -1.0;
    total += (values * sigma).maxCoeff() / n;
  }
  RademacherEstimate r;
  r.complexity = total / static_cast<double>(count);
  r.gain_class = 2.0 * r.complexity;
  r.sign_vectors = static_cast<std::int64_t>(count);
  r.exhaustive = true;
  return r;
}

double DeviationBound(double rademacher, double bound_b, std::int64_t n,
                      double delta) {
  if (!(bound_b > 0.0)) throw InvalidArgument("B must be positive");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidArgument("delta must lie in (0, 1)");
  }
  return 2.0 * rademacher +
         bound_b * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double LipschitzEstimate(const VectorMap& map, const RowMatrix& cloud,
                         std::int32_t n_pairs, std::uint64_t seed) {
  if (cloud.rows() < 2) throw InvalidArgument("need >= 2 points");
  if (n_pairs < 1) throw InvalidArgument("n_pairs must be >= 1");
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(cloud.rows());
  double best = 0.0;
  bool any = false;
  for (std::int32_t k = 0; k < n_pairs; ++k) {
    const auto i = static_cast<Eigen::Index>(UniformIndex(rng, n));
    auto j = static_cast<Eigen::Index>(UniformIndex(rng, n - 1));
    if (j >= i) ++j;
    const double dz = (cloud.row(i) - cloud.row(j)).norm();
    if (dz == 0.0) continue;
    const double df = (map(cloud.row(i).transpose()) -
                       map(cloud.row(j).transpose()))
                          .norm();
    best = std::max(best, df / dz);
    any = true;
  }
  if (!any) throw InvalidArgument("all sampled pairs are degenerate");
  return best;
}

nlohmann::ordered_json TheoryReport::ToJson() const {
  nlohmann::ordered_json j;
  j["bound"] = bound.ToJson();
  j["lf_sampled"] = lf_sampled;
  j["lf_spectral"] = lf_spectral;
  j["n_target"] = {{"g0", n_target[0]}, {"g1", n_target[1]}};
  j["delta"] = delta;
  j["rademacher"] = {{"g0", RademacherJson(rademacher[0])},
                     {"g1", RademacherJson(rademacher[1])}};
  j["deviation_bound"] = {{"g0", deviation[0]}, {"g1", deviation[1]}};
  return j;
}

TheoryReport AnalyzeSnapshot(const EmbeddingSnapshot& snapshot,
                             const std::vector<Group>& target_groups,
                             const std::vector<std::int8_t>& source_groups,
                             const TheoryOptions& options) {
  const EmbeddingCloud cloud =
      CloudFromSnapshot(snapshot, target_groups, source_groups);
  const RowMatrix& items = snapshot.item_target;
  const VectorMap score_map = [&items](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(items * z);
  };

  TheoryReport report;
  report.delta = options.delta;
  const RowMatrix t_all = cloud.Select(Domain::kTarget, std::nullopt);
  report.lf_spectral =
      items.size() == 0
          ? 0.0
          : Eigen::JacobiSVD<Eigen::MatrixXd>(items).singularValues()(0);
  report.lf_sampled =
      LipschitzEstimate(score_map, t_all, options.lipschitz_pairs,
                        DeriveSeed(options.seed, "theory/lipschitz"));
  double lf = options.lf.value_or(report.lf_spectral);
  if (!(lf > 0.0)) lf = 1.0;

  W1Config w1 = options.w1;
  w1.seed = DeriveSeed(options.seed, "theory/w1");
  report.bound = GroupGapBound(cloud, options.lo, lf, w1);
  report.bound.measured_ugf = ProbeGap(
      cloud.Select(Domain::kTarget, Group::kG0),
      cloud.Select(Domain::kTarget, Group::kG1), score_map,
      options.probe_directions, DeriveSeed(options.seed, "theory/probes"));
  if (options.baseline_ugf.has_value()) {
    AttachBaseline(report.bound, *options.baseline_ugf);
  }

  // Surrogate class: sigmoid scores against a sampled item subset.
  Rng item_rng(DeriveSeed(options.seed, "theory/items"));
  std::vector<Eigen::Index> chosen(static_cast<std::size_t>(items.rows()));
  std::iota(chosen.begin(), chosen.end(), 0);
  Shuffle(chosen.begin(), chosen.end(), item_rng);
  chosen.resize(std::min<std::size_t>(
      chosen.size(), static_cast<std::size_t>(options.rademacher_items)));
  if (chosen.empty()) throw DataError("snapshot has no target items");
  for (int g = 0; g < 2; ++g) {
    const RowMatrix pts = cloud.Select(Domain::kTarget, static_cast<Group>(g));
    report.n_target[g] = pts.rows();
    RowMatrix values(static_cast<Eigen::Index>(chosen.size()), pts.rows());
    for (std::size_t h = 0; h < chosen.size(); ++h) {
      const Eigen::VectorXd s = pts * items.row(chosen[h]).transpose();
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        values(static_cast<Eigen::Index>(h), i) = 1.0 / (1.0 + std::exp(-s[i]));
      }
    }
    report.rademacher[g] = EstimateRademacher(
        values, options.sign_draws,
        DeriveSeed(options.seed, g == 0 ? "theory/rad0" : "theory/rad1"));
    report.deviation[g] = DeviationBound(report.rademacher[g].complexity, 1.0,
                                         pts.rows(), options.delta);
  }
  return report;
}

}  // namespace xdfair
