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

#include <functional>
#include <set>
#include <tuple>

#include "privrecourse/recourse.hpp"
#include "test_support.hpp"

namespace privrecourse {
namespace {

using testing::AllRecoursePaths;
using testing::RandomDigraph;

RecourseGraph HandGraph(const std::vector<std::vector<double>>& pos, std::vector<bool> candidate,
                        const std::vector<std::tuple<NodeId, NodeId, double>>& edges) {
  RecourseGraph g;
  g.nodes = PointSet(pos.front().size());
  for (const auto& p : pos) g.nodes.Append(p);
  g.is_candidate = std::move(candidate);
  g.adjacency.assign(pos.size(), {});
  for (const auto& [a, b, w] : edges) g.adjacency[a].push_back({b, w});
  return g;
}

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(StartNode, SkipsNearerFavorableNode) {
  const auto g = HandGraph({{0.0, 0.0}, {0.1, 0.0}, {0.5, 0.0}}, {true, false, false}, {});
  EXPECT_EQ(NearestStartNode(g, std::vector<double>{0.0, 0.0}), 1u);
}

TEST(StartNode, TiesGoToLowestId) {
  const auto g = HandGraph({{0.0, 0.0}, {0.2, 0.0}, {-0.2, 0.0}}, {true, false, false}, {});
  EXPECT_EQ(NearestStartNode(g, std::vector<double>{0.0, 0.0}), 1u);
}

TEST(Recourse, TwoHopBeatsDirectEdge) {
  const auto g = HandGraph({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}},
                           {false, false, false, false, true},
                           {{0, 4, 0.5}, {0, 1, 0.2}, {1, 4, 0.2}, {0, 2, 0.3}, {2, 3, 0.3}});
  const auto p = ShortestRecourse(g, std::vector<double>{0, 0});
  EXPECT_EQ(p.node_ids, (std::vector<NodeId>{0, 1, 4}));
  EXPECT_NEAR(p.total_weight, 0.4, 1e-15);
  EXPECT_EQ(p.step_count(), 3u);
  EXPECT_EQ(p.endpoint_id(), 4u);
  EXPECT_EQ(p.query, (Record{0, 0}));
}

TEST(Recourse, CandidatesAreTerminal) {
  // The only route to candidate 3 passes through candidate 1, so the answer
  // stops at 1.
  const auto g = HandGraph({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {false, true, false, true},
                           {{0, 1, 5.0}, {1, 3, 0.1}, {0, 2, 0.1}});
  const auto p = ShortestRecourse(g, std::vector<double>{0, 0});
  EXPECT_EQ(p.node_ids, (std::vector<NodeId>{0, 1}));
}

TEST(Recourse, EqualWeightPrefersFewerHopsThenLowerEndpoint) {
  const auto g = HandGraph({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {false, false, true, true},
                           {{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 2.0}});
  EXPECT_EQ(ShortestRecourse(g, std::vector<double>{0, 0}).node_ids,
            (std::vector<NodeId>{0, 3}));
  const auto h = HandGraph({{0, 0}, {1, 0}, {2, 0}}, {false, true, true},
                           {{0, 2, 1.0}, {0, 1, 1.0}});
  EXPECT_EQ(ShortestRecourse(h, std::vector<double>{0, 0}).node_ids,
            (std::vector<NodeId>{0, 1}));
}

TEST(Recourse, ErrorKinds) {
  const auto none = HandGraph({{0, 0}, {1, 0}}, {false, false}, {{0, 1, 1.0}});
  EXPECT_EQ(CodeOf([&] { ShortestRecourse(none, std::vector<double>{0, 0}); }),
            ErrorCode::kNoCandidates);
  const auto all = HandGraph({{0, 0}, {1, 0}}, {true, true}, {{0, 1, 1.0}});
  EXPECT_EQ(CodeOf([&] { ShortestRecourse(all, std::vector<double>{0, 0}); }),
            ErrorCode::kNoStartNode);
  const auto cut = HandGraph({{0, 0}, {1, 0}}, {false, true}, {{1, 0, 1.0}});
  EXPECT_EQ(CodeOf([&] { ShortestRecourse(cut, std::vector<double>{0, 0}); }),
            ErrorCode::kNoRecourse);
  EXPECT_EQ(CodeOf([&] { ShortestRecourse(cut, std::vector<double>{0}); }),
            ErrorCode::kDimensionError);
}

TEST(Recourse, MatchesBruteForceOnRandomGraphs) {
  Rng rng(2024);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng.Index(7);
    const bool ints = rep % 2 == 1;
    const auto g = RandomDigraph(rng, n, 0.45, ints);
    const NodeId source = 0;
    const auto z = g.nodes.copy_row(source);
    const auto brute = AllRecoursePaths(g, source);
    if (brute.empty()) {
      EXPECT_EQ(CodeOf([&] { ShortestRecourse(g, z); }), ErrorCode::kNoRecourse);
      continue;
    }
    const auto p = ShortestRecourse(g, z);
    EXPECT_EQ(p.node_ids, brute.front().nodes) << "rep " << rep;
    EXPECT_EQ(p.total_weight, brute.front().weight) << "rep " << rep;
  }
}

TEST(DiverseRecourse, MatchesRankedEnumeration) {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng.Index(6);
    const auto g = RandomDigraph(rng, n, 0.5, rep % 3 == 0);
    const auto z = g.nodes.copy_row(0);
    const auto brute = AllRecoursePaths(g, 0);
    if (brute.empty()) continue;
    const std::size_t k = 1 + rng.Index(5);
    const auto paths = DiverseRecourse(g, z, k);
    ASSERT_EQ(paths.size(), std::min(k, brute.size())) << "rep " << rep;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      EXPECT_EQ(paths[i].node_ids, brute[i].nodes) << "rep " << rep << " rank " << i;
      EXPECT_EQ(paths[i].total_weight, brute[i].weight);
    }
  }
}

TEST(DiverseRecourse, FirstPathIsTheShortest) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = RandomDigraph(rng, 8, 0.4, false);
    const auto z = g.nodes.copy_row(0);
    if (AllRecoursePaths(g, 0).empty()) continue;
    EXPECT_EQ(DiverseRecourse(g, z, 3).front().node_ids, ShortestRecourse(g, z).node_ids);
  }
  EXPECT_THROW(DiverseRecourse(RandomDigraph(rng, 3, 1.0, false), std::vector<double>{0, 0}, 0),
               Error);
}

TEST(Recourse, ScalingWeightsKeepsThePath) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    auto g = RandomDigraph(rng, 8, 0.4, false);
    const auto z = g.nodes.copy_row(0);
    if (AllRecoursePaths(g, 0).empty()) continue;
    const auto before = ShortestRecourse(g, z).node_ids;
    for (auto& adj : g.adjacency) {
      for (auto& e : adj) e.weight *= 4.0;
    }
    EXPECT_EQ(ShortestRecourse(g, z).node_ids, before);
  }
}

TEST(Recourse, PathInvariants) {
  Rng rng(8);
  for (int rep = 0; rep < 200; ++rep) {
    const auto g = RandomDigraph(rng, 8, 0.35, false);
    const auto z = g.nodes.copy_row(0);
    if (AllRecoursePaths(g, 0).empty()) continue;
    for (const auto& p : DiverseRecourse(g, z, 4)) {
      std::set<NodeId> seen(p.node_ids.begin(), p.node_ids.end());
      EXPECT_EQ(seen.size(), p.node_ids.size());
      EXPECT_TRUE(g.is_candidate[p.endpoint_id()]);
      double w = 0.0;
      for (std::size_t i = 0; i + 1 < p.step_count(); ++i) {
        EXPECT_FALSE(g.is_candidate[p.node_ids[i]]);
        const Edge* e = g.FindEdge(p.node_ids[i], p.node_ids[i + 1]);
        ASSERT_NE(e, nullptr);
        w += e->weight;
      }
      EXPECT_EQ(w, p.total_weight);
      EXPECT_EQ(p.steps.row(p.step_count() - 1)[0], g.nodes.row(p.endpoint_id())[0]);
    }
  }
}

}  // namespace
}  // namespace privrecourse
