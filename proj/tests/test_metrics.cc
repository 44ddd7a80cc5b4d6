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

#include <gtest/gtest.h>

#include <cmath>

#include "privrecourse/metrics.hpp"
#include "test_support.hpp"

namespace privrecourse {
namespace {

RecoursePath MakePath(Record query, const std::vector<std::vector<double>>& steps) {
  RecoursePath p;
  p.query = std::move(query);
  p.steps = PointSet(p.query.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    p.steps.Append(steps[i]);
    p.node_ids.push_back(i);
  }
  return p;
}

TEST(Metrics, PDensityAtLoneSupportPoint) {
  const DensityModel rho(PointSet::FromRows({{0.2, 0.4}}), 1.0);
  EXPECT_NEAR(PDensity(MakePath({0, 0}, {{0.2, 0.4}}), rho), -std::log(2 * M_PI), 1e-12);
}

TEST(Metrics, PDensityAveragesLogDensities) {
  const DensityModel rho(PointSet::FromRows({{0.0, 0.0}}), 1.0);
  // log N(x; 0, I) = -log(2 pi) - |x|^2 / 2 at |x|^2 = 0, 1, 4.
  const auto p = MakePath({0, 0}, {{0, 0}, {1, 0}, {0, 2}});
  EXPECT_NEAR(PDensity(p, rho), -std::log(2 * M_PI) - (0.0 + 0.5 + 2.0) / 3.0, 1e-12);
}

TEST(Metrics, PDistanceManifoldUsesNearestRecord) {
  const PointSet train = PointSet::FromRows({{0.5, 0.5}, {0.9, 0.9}});
  EXPECT_NEAR(PDistanceManifold(MakePath({0, 0}, {{0.55, 0.45}}), train), 0.1, 1e-12);
  EXPECT_NEAR(PDistanceManifold(MakePath({0, 0}, {{0.55, 0.45}, {0.9, 0.9}}), train), 0.05,
              1e-12);
  EXPECT_THROW(PDistanceManifold(MakePath({0, 0}, {{0.5, 0.5}}), PointSet(2)), Error);
}

TEST(Metrics, PDistanceHandExample) {
  const auto p = MakePath({0, 0}, {{0, 0.2}, {0, 0.5}});
  EXPECT_NEAR(PDistance(p, Norm::kL1), 0.25, 1e-12);
  EXPECT_NEAR(PDistance(p, Norm::kL2), 0.25, 1e-12);
  EXPECT_NEAR(PDistance(p, Norm::kL0), 1.0, 1e-12);
}

TEST(Metrics, NormOrderingOnRandomPaths) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::vector<double>> steps(1 + rng.Index(5), std::vector<double>(4));
    for (auto& s : steps) {
      for (double& v : s) v = rng.Uniform();
    }
    const auto p = MakePath({rng.Uniform(), rng.Uniform(), rng.Uniform(), rng.Uniform()}, steps);
    EXPECT_LE(PDistance(p, Norm::kL2), PDistance(p, Norm::kL1) + 1e-12);
    EXPECT_LE(PDistance(p, Norm::kL0), 4.0);
  }
}

TEST(Metrics, L0IgnoresTinyChanges) {
  const auto p = MakePath({0, 0}, {{1e-12, 0.3}});
  EXPECT_EQ(PDistance(p, Norm::kL0), 1.0);
}

TEST(Metrics, YnnCountsFavorableNeighbours) {
  const auto model = testing::LinearRule({1.0}, -0.5);
  const PointSet ref = PointSet::FromRows({{0.6}, {0.7}, {0.8}, {0.4}, {0.0}});
  EXPECT_DOUBLE_EQ(Ynn(std::vector<double>{0.65}, ref, model, 4), 0.75);
  EXPECT_DOUBLE_EQ(Ynn(std::vector<double>{0.65}, ref, model, 1), 1.0);
  EXPECT_THROW(Ynn(std::vector<double>{0.65}, ref, model, 6), Error);
}

TEST(Metrics, RedundancyHandModel) {
  // Feature 0 has zero weight; only feature 1 matters.
  const auto model = testing::LinearRule({0.0, 1.0}, -0.5);
  const std::vector<double> query{0.1, 0.2}, cfe{0.9, 0.8};
  EXPECT_EQ(Redundancy(query, cfe, model), 1u);
  const std::vector<double> only_needed{0.1, 0.8};
  EXPECT_EQ(Redundancy(query, only_needed, model), 0u);
  try {
    Redundancy(query, query, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotACounterfactual);
  }
}

TEST(Metrics, RedundancyRevertsOneHotBlocksTogether) {
  const auto model = testing::LinearRule({1.0, 0.0, 0.0}, -0.5);
  const std::vector<double> query{0.1, 1, 0}, cfe{0.9, 0, 1};
  EXPECT_EQ(Redundancy(query, cfe, model), 2u);
  EXPECT_EQ(Redundancy(query, cfe, model, {{0, 1}, {1, 2}}), 1u);
}

TEST(Metrics, PathViolationsFlagsBrokenPaths) {
  RecourseGraph g;
  g.nodes = PointSet::FromRows({{0.1, 0.1}, {0.3, 0.1}, {0.9, 0.9}});
  g.adjacency = {{{1, 0.5}}, {{0, 0.5}}, {}};
  g.is_candidate = {false, true, true};
  g.config.d_th = 0.4;
  const auto model = testing::LinearRule({1.0, 0.0}, -0.2);
  auto schema = testing::UnitSchema(2);
  RecoursePath good;
  good.query = {0.1, 0.1};
  good.node_ids = {0, 1};
  good.steps = PointSet::FromRows({{0.1, 0.1}, {0.3, 0.1}});
  good.total_weight = 0.5;
  EXPECT_TRUE(PathViolations(g, good, schema, model).empty());

  schema.features[0].constraint = Constraint::kNonIncreasing;
  EXPECT_EQ(PathViolations(g, good, schema, model).size(), 1u);
  schema.features[0].constraint = Constraint::kNone;

  RecoursePath far = good;
  far.node_ids = {0, 2};
  far.steps = PointSet::FromRows({{0.1, 0.1}, {0.9, 0.9}});
  // Not an edge, too long, and the weight does not match.
  EXPECT_EQ(PathViolations(g, far, schema, model).size(), 3u);
}

TEST(Metrics, EvaluateBatchRecordsFailuresAndAggregates) {
  RecourseGraph g;
  g.nodes = PointSet::FromRows({{0.1, 0.1}, {0.3, 0.1}, {0.0, 0.9}});
  g.adjacency = {{{1, 0.5}}, {{0, 0.5}}, {}};
  const auto model = testing::LinearRule({1.0, 0.0}, -0.2);
  g.is_candidate = {false, true, false};
  const auto schema = testing::UnitSchema(2);
  const auto rho = FitKde(g.nodes, 0.1);
  const PointSet queries = PointSet::FromRows({{0.1, 0.12}, {0.0, 0.95}});
  const auto report = EvaluateBatch(queries, g, model, schema, rho, g.nodes, {1, false});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].success);
  EXPECT_FALSE(report.rows[1].success);
  EXPECT_EQ(report.rows[1].failure, "NoRecourse");
  EXPECT_EQ(report.cfe_count(), 1u);
  EXPECT_DOUBLE_EQ(report.success_rate(), 0.5);
  EXPECT_EQ(report.total_violations(), 0u);
  EXPECT_NEAR(report.Mean(&MetricsRow::pl1), (0.02 + 0.2) / 2, 1e-12);
  EXPECT_EQ(report.Aggregates()["cfe_count"], 1);
}

}  // namespace
}  // namespace privrecourse
