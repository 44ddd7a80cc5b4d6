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
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/density.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/graph.hpp"
#include "privrecourse/model.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/recourse.hpp"

namespace privrecourse {

// Mean log-likelihood of the path steps Z_1..Z_p under rho_d; the raw
// query is not part of the sum.
inline double PDensity(const RecoursePath& path, const DensityModel& rho_d) {
  if (path.step_count() == 0) Fail(ErrorCode::kInvalidArgument, "empty path");
  double s = 0.0;
  for (std::size_t i = 0; i < path.step_count(); ++i) s += rho_d.LogDensity(path.steps.row(i));
  return s / static_cast<double>(path.step_count());
}

inline double NearestL1(RecordView x, const PointSet& reference) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < reference.size(); ++i) best = std::min(best, L1(x, reference.row(i)));
  return best;
}

// Mean L1 distance from each step to its nearest training record.
inline double PDistanceManifold(const RecoursePath& path, const PointSet& training) {
  if (training.empty()) Fail(ErrorCode::kInsufficientData, "empty training set");
  if (path.step_count() == 0) Fail(ErrorCode::kInvalidArgument, "empty path");
  double s = 0.0;
  for (std::size_t i = 0; i < path.step_count(); ++i) s += NearestL1(path.steps.row(i), training);
  return s / static_cast<double>(path.step_count());
}

// (sum_{i<p} d(Z_i, Z_{i+1}) + d(Z, Z_1)) / p
inline double PDistance(const RecoursePath& path, Norm norm) {
  const std::size_t p = path.step_count();
  if (p == 0) Fail(ErrorCode::kInvalidArgument, "empty path");
  double s = Distance(norm, path.query, path.steps.row(0));
  for (std::size_t i = 0; i + 1 < p; ++i) {
    s += Distance(norm, path.steps.row(i), path.steps.row(i + 1));
  }
  return s / static_cast<double>(p);
}

// Fraction of the k L2-nearest reference records (ties by index) that the
// model labels favorable.
template <Classifier C>
double Ynn(RecordView cfe, const PointSet& reference, const C& model, std::size_t k) {
  if (k == 0) Fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (k > reference.size()) {
    Fail(ErrorCode::kInsufficientData, "yNN needs " + std::to_string(k) + " neighbours, have " +
                                           std::to_string(reference.size()));
  }
  std::vector<std::pair<double, std::size_t>> d(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) d[i] = {SquaredL2(cfe, reference.row(i)), i};
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::size_t fav = 0;
  for (std::size_t i = 0; i < k; ++i) fav += model.Predict(reference.row(d[i].second)) == kFavorable;
  return static_cast<double>(fav) / static_cast<double>(k);
}

// Number of changed features that could individually be reverted to the
// query value without losing the favorable prediction. Features are the
// logical schema features when `blocks` is given (one-hot blocks revert as a
// unit), otherwise single coordinates.
template <Classifier C>
std::size_t Redundancy(RecordView query, RecordView cfe, const C& model,
                       const std::vector<FeatureBlock>& blocks = {}) {
  RequireSameWidth(query, cfe);
  if (model.Predict(cfe) != kFavorable) {
    Fail(ErrorCode::kNotACounterfactual, "cfe is not predicted favorable");
  }
  std::vector<FeatureBlock> units = blocks;
  if (units.empty()) {
    for (std::size_t i = 0; i < cfe.size(); ++i) units.push_back({i, 1});
  }
  std::size_t redundant = 0;
  Record probe(cfe.begin(), cfe.end());
  for (const auto& b : units) {
    bool changed = false;
    for (std::size_t d = 0; d < b.width; ++d) {
      changed = changed || std::abs(cfe[b.offset + d] - query[b.offset + d]) > kL0Tolerance;
    }
    if (!changed) continue;
    for (std::size_t d = 0; d < b.width; ++d) probe[b.offset + d] = query[b.offset + d];
    if (model.Predict(probe) == kFavorable) ++redundant;
    for (std::size_t d = 0; d < b.width; ++d) probe[b.offset + d] = cfe[b.offset + d];
  }
  return redundant;
}

// Structural checks on a returned path; an empty result means valid.
template <Classifier C>
std::vector<std::string> PathViolations(const RecourseGraph& g, const RecoursePath& path,
                                        const FeatureSchema& schema, const C& model) {
  std::vector<std::string> v;
  const std::size_t p = path.step_count();
  if (p == 0) return {"empty path"};
  for (std::size_t i = 0; i < p; ++i) {
    const Label l = model.Predict(path.steps.row(i));
    if (i + 1 < p && l == kFavorable) v.push_back("interior step " + std::to_string(i) + " is favorable");
    if (i + 1 == p && l != kFavorable) v.push_back("endpoint is not favorable");
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < p; ++i) {
    const auto a = path.steps.row(i);
    const auto b = path.steps.row(i + 1);
    const Edge* e = g.FindEdge(path.node_ids[i], path.node_ids[i + 1]);
    if (e == nullptr) {
      v.push_back("step " + std::to_string(i) + " is not an edge");
    } else {
      total += e->weight;
    }
    if (!(L2(a, b) < g.config.d_th)) v.push_back("step " + std::to_string(i) + " exceeds d_th");
    const Direction d = ConstraintCheck(a, b, schema);
    if (d != Direction::kBoth && d != Direction::kForwardOnly) {
      v.push_back("step " + std::to_string(i) + " violates a constraint");
    }
  }
  if (std::abs(total - path.total_weight) > 1e-9 * std::max(1.0, std::abs(total))) {
    v.push_back("total weight does not match edge sum");
  }
  return v;
}

struct MetricsRow {
  std::size_t query_id = 0;
  bool success = false;
  std::string failure;
  double pdensity = 0.0;
  double pdistance_manifold = 0.0;
  double pl0 = 0.0;
  double pl1 = 0.0;
  double pl2 = 0.0;
  double ynn = 0.0;
  double redundancy = 0.0;
  std::size_t path_length = 0;
  double seconds = 0.0;
  std::size_t violations = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  std::size_t cfe_count() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.success; }));
  }
  double success_rate() const {
    return rows.empty() ? 0.0 : static_cast<double>(cfe_count()) / static_cast<double>(rows.size());
  }
  std::size_t total_violations() const {
    std::size_t s = 0;
    for (const auto& r : rows) s += r.violations;
    return s;
  }

  // Mean of a field over successful rows only.
  template <typename Field>
  double Mean(Field field) const {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (!r.success) continue;
      s += static_cast<double>(r.*field);
      ++n;
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(n);
  }

  nlohmann::json Aggregates() const {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"queries", rows.size()},
            {"cfe_count", cfe_count()},
            {"success_rate", success_rate()},
            {"pdensity", num(Mean(&MetricsRow::pdensity))},
            {"pdistance_manifold", num(Mean(&MetricsRow::pdistance_manifold))},
            {"pl1", num(Mean(&MetricsRow::pl1))},
            {"pl2", num(Mean(&MetricsRow::pl2))},
            {"pl0", num(Mean(&MetricsRow::pl0))},
            {"redundancy", num(Mean(&MetricsRow::redundancy))},
            {"ynn", num(Mean(&MetricsRow::ynn))},
            {"path_length", num(Mean(&MetricsRow::path_length))},
            {"seconds", num(Mean(&MetricsRow::seconds))},
            {"violations", total_violations()}};
  }

  void WriteCsv(std::ostream& os) const {
    os << "query_id,success,failure,pdensity,pdistance_manifold,pl0,pl1,pl2,ynn,redundancy,"
          "path_length,seconds\n"
       << std::setprecision(10);
    for (const auto& r : rows) {
      os << r.query_id << "," << (r.success ? 1 : 0) << "," << r.failure << "," << r.pdensity
         << "," << r.pdistance_manifold << "," << r.pl0 << "," << r.pl1 << "," << r.pl2 << ","
         << r.ynn << "," << r.redundancy << "," << r.path_length << "," << r.seconds << "\n";
    }
  }
};

struct EvaluationOptions {
  std::size_t ynn_k = 5;
  // Record wall-clock time per query; off makes reports byte-reproducible.
  bool timing = true;
};

// Rows of `ds` the model labels unfavorable: the query pool for recourse.
template <Classifier C>
PointSet UnfavorableQueries(const PointSet& rows, const C& model) {
  PointSet out(rows.width());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (model.Predict(rows.row(i)) != kFavorable) out.Append(rows.row(i));
  }
  return out;
}

// Answers every query against the published graph and scores it. Failed
// queries are recorded with success=false and do not abort the batch.
// `training` is the private reference data used only for scoring
// (rho_d and the nearest-neighbour term), never for answering.
template <Classifier C>
MetricsReport EvaluateBatch(const PointSet& queries, const RecourseGraph& g, const C& model,
                            const FeatureSchema& schema, const DensityModel& rho_d,
                            const PointSet& training, const EvaluationOptions& opts = {}) {
  MetricsReport report;
  const auto blocks = schema.Blocks();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    MetricsRow row;
    row.query_id = q;
    const auto z = queries.row(q);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const RecoursePath path = ShortestRecourse(g, z);
      const auto t1 = std::chrono::steady_clock::now();
      row.seconds = opts.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
      row.success = true;
      row.path_length = path.step_count();
      row.pdensity = PDensity(path, rho_d);
      row.pdistance_manifold = PDistanceManifold(path, training);
      row.pl0 = PDistance(path, Norm::kL0);
      row.pl1 = PDistance(path, Norm::kL1);
      row.pl2 = PDistance(path, Norm::kL2);
      row.ynn = Ynn(path.endpoint(), training, model, opts.ynn_k);
      row.redundancy = static_cast<double>(Redundancy(z, path.endpoint(), model, blocks));
      row.violations = PathViolations(g, path, schema, model).size();
    } catch (const Error& e) {
      row.success = false;
      row.failure = std::string(e.name());
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace privrecourse
