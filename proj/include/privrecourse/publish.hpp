// Copyright 2026 The PrivRecourse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/kmeans.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/privacy.hpp"
#include "privrecourse/random.hpp"

namespace privrecourse {

enum class PublishMethod { kDpCluster, kRecordPerturbation, kNone };

NLOHMANN_JSON_SERIALIZE_ENUM(PublishMethod, {
                                                {PublishMethod::kDpCluster, "dp_cluster"},
                                                {PublishMethod::kRecordPerturbation,
                                                 "record_perturbation"},
                                                {PublishMethod::kNone, "none"},
                                            })

// A DP point set in the encoded space. Coordinates are clipped to [0,1].
struct PublishedPoints {
  PointSet points;
  PublishMethod method = PublishMethod::kNone;
  PrivacyBudget budget_spent;
  std::size_t k = 0;
  std::uint64_t seed = 0;
};

// Laplace scale of the released coordinate sums. kPerCoordinate charges
// sensitivity 1 to every coordinate; kL1 charges the whole vector its L1
// sensitivity (one per logical feature), which is the stricter bound.
enum class SumSensitivity { kPerCoordinate, kL1 };

NLOHMANN_JSON_SERIALIZE_ENUM(SumSensitivity, {
                                                 {SumSensitivity::kPerCoordinate, "per_coordinate"},
                                                 {SumSensitivity::kL1, "l1"},
                                             })

struct ClusterParams {
  std::size_t k = 500;
  int iterations = 10;
  std::size_t internal_k = 5;
  double epsilon_k = 1.0;
  double exp_fraction = 0.75;
  double laplace_fraction = 0.25;
  SumSensitivity sum_sensitivity = SumSensitivity::kPerCoordinate;

  void Validate() const {
    if (k < 1) Fail(ErrorCode::kInvalidArgument, "K must be >= 1");
    if (iterations < 1) Fail(ErrorCode::kInvalidArgument, "T must be >= 1");
    if (internal_k < 1) Fail(ErrorCode::kInvalidArgument, "internal_k must be >= 1");
    if (!(epsilon_k > 0.0) || !std::isfinite(epsilon_k)) {
      Fail(ErrorCode::kInvalidBudget, "epsilon_k must be finite and > 0");
    }
    if (!(exp_fraction > 0.0) || !(laplace_fraction > 0.0) ||
        std::abs(exp_fraction + laplace_fraction - 1.0) > 1e-12) {
      Fail(ErrorCode::kInvalidArgument, "budget split must be positive and sum to 1");
    }
  }

  // Exponential-mechanism budget of one update iteration.
  double selection_epsilon() const {
    return exp_fraction * epsilon_k / static_cast<double>(iterations);
  }
  // The release reserves laplace_fraction of every iteration's allotment;
  // all of it is spent in the single final release.
  double release_epsilon() const { return laplace_fraction * epsilon_k; }
};

// Which records served as centers along the way; every entry is a row
// index into the input dataset.
struct ClusterTrace {
  std::vector<std::size_t> initial;
  std::vector<std::vector<std::size_t>> iterations;
  std::vector<std::size_t> final_counts;
};

namespace detail {

inline void ClipUnit(std::span<double> x) {
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace detail

// Convergent DP k-means. Each iteration assigns records to the nearest
// center, then per cluster:
//   target  = mean of the assigned records (the Lloyd update)
//   zone    = assigned records inside the ball spanned by the current
//             center and the target (all assigned records at iteration 1)
//   subzone = one of internal_k plain k-means cells of the zone, drawn with
//             probability proportional to its size
//   center  = a record of the subzone chosen by the exponential mechanism
//             with utility -|record - target|, sensitivity 1.
// Because the new center lies in the ball, its distance to the previous
// center can only shrink from one iteration to the next. The released
// point per cluster is noisy_sum / max(noisy_count, 1) under the final
// assignment.
inline PublishedPoints ConvergentDpCluster(const Dataset& ds, const ClusterParams& params,
                                           Rng& rng, BudgetAccountant& acc,
                                           ClusterTrace* trace = nullptr) {
  params.Validate();
  const std::size_t n = ds.size();
  if (params.k > n) {
    Fail(ErrorCode::kTooManyClusters,
         "K=" + std::to_string(params.k) + " exceeds N=" + std::to_string(n));
  }
  const PrivacyBudget cost{params.epsilon_k, 0.0};
  if (!acc.CanSpend(cost)) {
    Fail(ErrorCode::kBudgetExceeded, "clustering would exceed the privacy cap");
  }
  const std::size_t width = ds.width();
  const auto& rows = ds.rows;

  std::vector<std::size_t> center_ids = SampleWithoutReplacement(n, params.k, rng);
  if (trace != nullptr) {
    *trace = ClusterTrace{};
    trace->initial = center_ids;
  }
  auto centers_of = [&](const std::vector<std::size_t>& ids) {
    PointSet c(width);
    for (auto id : ids) c.Append(rows.row(id));
    return c;
  };

  const double select_eps = params.selection_epsilon();
  for (int t = 0; t < params.iterations; ++t) {
    const PointSet centers = centers_of(center_ids);
    const auto assignment = AssignToCenters(rows, centers);
    std::vector<std::vector<std::size_t>> members(params.k);
    for (std::size_t i = 0; i < n; ++i) members[assignment[i]].push_back(i);

    std::vector<std::size_t> next_ids = center_ids;
    for (std::size_t c = 0; c < params.k; ++c) {
      const auto& m = members[c];
      if (m.empty()) continue;
      Record target(width, 0.0);
      for (auto i : m) {
        const auto x = rows.row(i);
        for (std::size_t d = 0; d < width; ++d) target[d] += x[d];
      }
      for (double& v : target) v /= static_cast<double>(m.size());

      std::vector<std::size_t> zone;
      if (t == 0) {
        zone = m;
      } else {
        const auto current = centers.row(c);
        const Record mid = Midpoint(current, target);
        const double radius = 0.5 * L2(current, target);
        const double limit = radius * radius * (1.0 + 1e-12) + 1e-18;
        for (auto i : m) {
          if (SquaredL2(rows.row(i), mid) <= limit) zone.push_back(i);
        }
      }
      if (zone.empty()) continue;

      PointSet zone_points(width);
      for (auto i : zone) zone_points.Append(rows.row(i));
      const auto cells = LloydKMeans(zone_points, params.internal_k, 20, rng);
      const std::size_t cell_count = cells.centers.size();
      std::vector<double> weights(cell_count, 0.0);
      for (auto a : cells.assignment) weights[a] += 1.0;
      for (double& w : weights) w /= static_cast<double>(zone.size());
      const std::size_t cell = SampleIndex(weights, rng);

      std::vector<std::size_t> candidates;
      std::vector<double> utilities;
      for (std::size_t z = 0; z < zone.size(); ++z) {
        if (cells.assignment[z] != cell) continue;
        candidates.push_back(zone[z]);
        utilities.push_back(-L2(rows.row(zone[z]), target));
      }
      next_ids[c] = candidates[ExponentialMechanism(utilities, 1.0, select_eps, rng)];
    }
    center_ids = std::move(next_ids);
    if (trace != nullptr) trace->iterations.push_back(center_ids);
  }

  // Release. Count and coordinate sums split the release budget evenly.
  // Under kL1 one record moves the sum vector by at most the number of
  // logical features (continuous coordinates lie in [0,1], one-hot blocks
  // sum to 1).
  const double count_eps = 0.5 * params.release_epsilon();
  const double sum_eps = 0.5 * params.release_epsilon();
  const double sum_sensitivity = params.sum_sensitivity == SumSensitivity::kL1
                                     ? static_cast<double>(ds.schema.features.size())
                                     : 1.0;
  const PointSet final_centers = centers_of(center_ids);
  const auto assignment = AssignToCenters(rows, final_centers);
  PointSet sums(params.k, width);
  std::vector<std::size_t> counts(params.k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = sums.mutable_row(assignment[i]);
    const auto x = rows.row(i);
    for (std::size_t d = 0; d < width; ++d) s[d] += x[d];
    ++counts[assignment[i]];
  }
  PublishedPoints out;
  out.points = PointSet(width);
  out.method = PublishMethod::kDpCluster;
  out.k = params.k;
  Record released(width);
  for (std::size_t c = 0; c < params.k; ++c) {
    const double noisy_count = LaplaceMechanism(static_cast<double>(counts[c]), 1.0, count_eps, rng);
    for (std::size_t d = 0; d < width; ++d) {
      released[d] = LaplaceMechanism(sums.row(c)[d], sum_sensitivity, sum_eps, rng);
    }
    if (counts[c] == 0) {
      const auto kept = final_centers.row(c);
      std::copy(kept.begin(), kept.end(), released.begin());
    } else {
      const double denom = std::max(noisy_count, 1.0);
      for (double& v : released) v /= denom;
    }
    detail::ClipUnit(released);
    out.points.Append(released);
  }
  if (trace != nullptr) trace->final_counts = counts;
  acc.Spend("publish:dp_cluster", cost);
  out.budget_spent = cost;
  return out;
}

// Baseline: every record is perturbed independently. The budget is split
// evenly across logical features; a continuous coordinate gets Laplace noise
// with sensitivity 1, a one-hot block gets per-coordinate noise with L1
// sensitivity 2. Results are clipped to [0,1].
inline PublishedPoints RecordPerturbation(const Dataset& ds, double epsilon_k, Rng& rng,
                                          BudgetAccountant& acc) {
  if (!(epsilon_k > 0.0) || !std::isfinite(epsilon_k)) {
    Fail(ErrorCode::kInvalidBudget, "epsilon_k must be finite and > 0");
  }
  const PrivacyBudget cost{epsilon_k, 0.0};
  if (!acc.CanSpend(cost)) {
    Fail(ErrorCode::kBudgetExceeded, "perturbation would exceed the privacy cap");
  }
  const auto& schema = ds.schema;
  const double per_feature = epsilon_k / static_cast<double>(schema.features.size());
  const auto blocks = schema.Blocks();
  PublishedPoints out;
  out.points = PointSet(ds.width());
  out.method = PublishMethod::kRecordPerturbation;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Record r = ds.rows.copy_row(i);
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      const double sensitivity =
          schema.features[f].kind == FeatureKind::kContinuous ? 1.0 : 2.0;
      for (std::size_t d = 0; d < blocks[f].width; ++d) {
        auto& v = r[blocks[f].offset + d];
        v = LaplaceMechanism(v, sensitivity, per_feature, rng);
      }
    }
    detail::ClipUnit(r);
    out.points.Append(r);
  }
  acc.Spend("publish:record_perturbation", cost);
  out.budget_spent = cost;
  out.k = out.points.size();
  return out;
}

// Non-private publisher: the records themselves (used for the FACE reference).
inline PublishedPoints PublishRaw(const Dataset& ds) {
  PublishedPoints out;
  out.points = ds.rows;
  out.method = PublishMethod::kNone;
  out.k = ds.size();
  return out;
}

// ---- serialization: one point per CSV row plus a JSON sidecar ----

inline void WritePointsCsv(std::ostream& os, const PointSet& points,
                           const std::vector<std::string>& columns) {
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n" << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = points.row(i);
    for (std::size_t d = 0; d < r.size(); ++d) os << (d ? "," : "") << r[d];
    os << "\n";
  }
}

inline PointSet ReadPointsCsv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) Fail(ErrorCode::kParseError, "empty points file");
  const std::size_t width = detail::SplitCsvLine(line).size();
  PointSet out(width);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (detail::Trim(line).empty()) continue;
    const auto cells = detail::SplitCsvLine(line);
    if (cells.size() != width) {
      Fail(ErrorCode::kParseError, "points row " + std::to_string(row) + " has wrong width");
    }
    Record r(width);
    for (std::size_t d = 0; d < width; ++d) {
      try {
        r[d] = std::stod(cells[d]);
      } catch (const std::exception&) {
        Fail(ErrorCode::kParseError, "points row " + std::to_string(row) + ": bad number");
      }
    }
    out.Append(r);
    ++row;
  }
  return out;
}

inline nlohmann::json Sidecar(const PublishedPoints& p) {
  return {{"method", p.method},
          {"budget", p.budget_spent},
          {"k", p.k},
          {"seed", p.seed},
          {"count", p.points.size()},
          {"width", p.points.width()}};
}

inline void SavePublishedPoints(const PublishedPoints& p, const std::vector<std::string>& columns,
                                const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path);
  if (!csv) Fail(ErrorCode::kIoError, "cannot write '" + csv_path + "'");
  WritePointsCsv(csv, p.points, columns);
  std::ofstream js(json_path);
  if (!js) Fail(ErrorCode::kIoError, "cannot write '" + json_path + "'");
  js << Sidecar(p).dump(2) << "\n";
}

inline PublishedPoints LoadPublishedPoints(const std::string& csv_path,
                                           const std::string& json_path) {
  std::ifstream csv(csv_path);
  if (!csv) Fail(ErrorCode::kStageDependencyError, "missing '" + csv_path + "'");
  std::ifstream js(json_path);
  if (!js) Fail(ErrorCode::kStageDependencyError, "missing '" + json_path + "'");
  PublishedPoints p;
  p.points = ReadPointsCsv(csv);
  const auto meta = nlohmann::json::parse(js);
  p.method = meta.at("method").get<PublishMethod>();
  p.budget_spent = meta.at("budget").get<PrivacyBudget>();
  p.k = meta.at("k").get<std::size_t>();
  p.seed = meta.at("seed").get<std::uint64_t>();
  return p;
}

}  // namespace privrecourse
