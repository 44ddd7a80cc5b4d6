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
#include <compare>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/graph.hpp"
#include "privrecourse/model.hpp"
#include "privrecourse/points.hpp"

namespace privrecourse {

// A recourse answer: the query, then nodes Z_1..Z_p with Z_p the
// counterfactual. The query itself is never a graph node.
struct RecoursePath {
  Record query;
  std::vector<NodeId> node_ids;
  PointSet steps;
  double total_weight = 0.0;

  std::size_t step_count() const { return node_ids.size(); }
  RecordView endpoint() const { return steps.row(steps.size() - 1); }
  NodeId endpoint_id() const { return node_ids.back(); }
};

// Z_1: the nearest non-candidate node under L2, lowest id on ties.
inline NodeId NearestStartNode(const RecourseGraph& g, RecordView z) {
  std::optional<NodeId> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_candidate[i]) continue;
    const double d = SquaredL2(z, g.nodes.row(i));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (!best) Fail(ErrorCode::kNoStartNode, "every node is predicted favorable");
  return *best;
}

namespace detail {

// Path ranking: total weight, then node count, then endpoint id, then the
// lexicographically smaller node sequence.
struct PathKey {
  double weight = 0.0;
  std::vector<NodeId> nodes;

  bool operator<(const PathKey& o) const {
    if (weight != o.weight) return weight < o.weight;
    if (nodes.size() != o.nodes.size()) return nodes.size() < o.nodes.size();
    if (nodes.back() != o.nodes.back()) return nodes.back() < o.nodes.back();
    return nodes < o.nodes;
  }
  bool operator==(const PathKey& o) const { return nodes == o.nodes; }
};

// Edge ban keyed by (from, to); `to == sink` bans stopping at `from`.
using EdgeBan = std::set<std::pair<NodeId, NodeId>>;

// Best path from `source` to any candidate, where candidates are terminal
// (never expanded). The source starts at weight `base_weight` so sums are
// accumulated left to right along the full path, exactly as a brute-force
// enumeration would. Labels are ranked by (weight, node count, node
// sequence); sequences are only materialized to break exact ties.
inline std::optional<PathKey> BestPathToCandidate(const RecourseGraph& g, NodeId source,
                                                  double base_weight,
                                                  const std::vector<bool>& banned_nodes,
                                                  const EdgeBan& banned_edges) {
  const std::size_t n = g.node_count();
  const NodeId sink = n;
  constexpr NodeId kNone = static_cast<NodeId>(-1);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> hops(n, 0);
  std::vector<NodeId> pred(n, kNone);
  std::vector<bool> settled(n, false);
  auto sequence = [&](NodeId v) {
    std::vector<NodeId> seq;
    for (NodeId x = v; x != kNone; x = pred[x]) seq.push_back(x);
    std::reverse(seq.begin(), seq.end());
    return seq;
  };
  dist[source] = base_weight;
  hops[source] = 1;
  using Entry = std::tuple<double, std::size_t, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  pq.emplace(base_weight, 1, source);
  std::optional<PathKey> best;
  while (!pq.empty()) {
    const auto [d, h, u] = pq.top();
    pq.pop();
    if (settled[u] || d != dist[u] || h != hops[u]) continue;
    settled[u] = true;
    if (g.is_candidate[u]) {
      if (u != source && !banned_edges.contains({u, sink})) {
        PathKey k{dist[u], sequence(u)};
        if (!best || k < *best) best = std::move(k);
      }
      continue;
    }
    for (const auto& e : g.adjacency[u]) {
      const NodeId v = e.to;
      if (settled[v] || banned_nodes[v] || banned_edges.contains({u, v})) continue;
      const double nd = dist[u] + e.weight;
      const std::size_t nh = hops[u] + 1;
      bool improve = pred[v] == kNone && v != source;
      if (!improve) {
        if (nd != dist[v]) {
          improve = nd < dist[v];
        } else if (nh != hops[v]) {
          improve = nh < hops[v];
        } else {
          auto cand = sequence(u);
          cand.push_back(v);
          improve = cand < sequence(v);
        }
      }
      if (improve) {
        dist[v] = nd;
        hops[v] = nh;
        pred[v] = u;
        pq.emplace(nd, nh, v);
      }
    }
  }
  return best;
}

inline double SumWeights(const RecourseGraph& g, const std::vector<NodeId>& nodes) {
  double w = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const Edge* e = g.FindEdge(nodes[i], nodes[i + 1]);
    w += e->weight;
  }
  return w;
}

inline RecoursePath MakePath(const RecourseGraph& g, RecordView z, const PathKey& key) {
  RecoursePath p;
  p.query.assign(z.begin(), z.end());
  p.node_ids = key.nodes;
  p.steps = PointSet(g.nodes.width());
  for (auto id : key.nodes) p.steps.Append(g.nodes.row(id));
  p.total_weight = key.weight;
  return p;
}

inline void RequireCandidates(const RecourseGraph& g) {
  if (std::find(g.is_candidate.begin(), g.is_candidate.end(), true) == g.is_candidate.end()) {
    Fail(ErrorCode::kNoCandidates, "graph has no favorable candidate nodes");
  }
}

}  // namespace detail

// One single-source Dijkstra from Z_1 with candidates as terminals. The
// answer equals the best of per-candidate shortest paths, ranked by
// (total weight, node count, endpoint id).
inline RecoursePath ShortestRecourse(const RecourseGraph& g, RecordView z) {
  if (z.size() != g.nodes.width()) Fail(ErrorCode::kDimensionError, "query width mismatch");
  detail::RequireCandidates(g);
  const NodeId start = NearestStartNode(g, z);
  const std::vector<bool> none(g.node_count(), false);
  auto best = detail::BestPathToCandidate(g, start, 0.0, none, {});
  if (!best) Fail(ErrorCode::kNoRecourse, "no candidate reachable from node " + std::to_string(start));
  return detail::MakePath(g, z, *best);
}

// Up to k loopless paths from Z_1 to candidates in ranking order (Yen's
// deviation search over the graph extended with a virtual sink behind every
// candidate).
inline std::vector<RecoursePath> DiverseRecourse(const RecourseGraph& g, RecordView z,
                                                 std::size_t k) {
  if (k < 1) Fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (z.size() != g.nodes.width()) Fail(ErrorCode::kDimensionError, "query width mismatch");
  detail::RequireCandidates(g);
  const NodeId start = NearestStartNode(g, z);
  const std::size_t n = g.node_count();
  const NodeId sink = n;
  std::vector<bool> banned(n, false);
  auto first = detail::BestPathToCandidate(g, start, 0.0, banned, {});
  if (!first) Fail(ErrorCode::kNoRecourse, "no candidate reachable from node " + std::to_string(start));

  std::vector<detail::PathKey> accepted{*first};
  std::set<detail::PathKey> pending;
  while (accepted.size() < k) {
    // Extended node sequence of the last accepted path, sink included.
    std::vector<NodeId> last = accepted.back().nodes;
    last.push_back(sink);
    for (std::size_t i = 0; i + 1 < last.size(); ++i) {
      const NodeId spur = last[i];
      if (spur == sink) break;
      const std::vector<NodeId> root(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      detail::EdgeBan bans;
      for (const auto& a : accepted) {
        std::vector<NodeId> ext = a.nodes;
        ext.push_back(sink);
        if (ext.size() > i + 1 && std::equal(root.begin(), root.end(), ext.begin())) {
          bans.insert({ext[i], ext[i + 1]});
        }
      }
      std::fill(banned.begin(), banned.end(), false);
      for (std::size_t r = 0; r < i; ++r) banned[root[r]] = true;
      const double root_weight = detail::SumWeights(g, root);
      auto spur_path = detail::BestPathToCandidate(g, spur, root_weight, banned, bans);
      if (!spur_path) continue;
      detail::PathKey total;
      total.nodes.assign(root.begin(), root.end() - 1);
      total.nodes.insert(total.nodes.end(), spur_path->nodes.begin(), spur_path->nodes.end());
      total.weight = spur_path->weight;
      if (std::find(accepted.begin(), accepted.end(), total) == accepted.end()) {
        pending.insert(std::move(total));
      }
    }
    if (pending.empty()) break;
    accepted.push_back(*pending.begin());
    pending.erase(pending.begin());
  }
  std::vector<RecoursePath> out;
  for (const auto& key : accepted) out.push_back(detail::MakePath(g, z, key));
  return out;
}

// Human-readable path: encoded and raw-unit rows, predicted labels, weight.
template <Classifier C>
nlohmann::json PathToJson(const RecoursePath& path, const FeatureSchema& schema, const C& model,
                          double seconds) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < path.step_count(); ++i) {
    const auto x = path.steps.row(i);
    steps.push_back({{"node_id", path.node_ids[i]},
                     {"encoded", Record(x.begin(), x.end())},
                     {"raw", InverseTransform(schema, x)},
                     {"label", model.Predict(x) == kFavorable ? "favorable" : "unfavorable"}});
  }
  nlohmann::json names = nlohmann::json::array();
  for (const auto& f : schema.features) names.push_back(f.name);
  return {{"features", names},
          {"query", {{"encoded", path.query},
                     {"raw", InverseTransform(schema, path.query)},
                     {"label", model.Predict(path.query) == kFavorable ? "favorable" : "unfavorable"}}},
          {"steps", steps},
          {"step_count", path.step_count()},
          {"total_weight", path.total_weight},
          {"seconds", seconds}};
}

}  // namespace privrecourse
