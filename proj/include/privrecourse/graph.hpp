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
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/density.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/model.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/publish.hpp"

namespace privrecourse {

struct GraphConfig {
  double d_th = 0.4;
  double density_floor = 1e-12;
  double weight_scale = 1.0;

  void Validate() const {
    if (!(d_th > 0.0)) Fail(ErrorCode::kInvalidArgument, "d_th must be > 0");
    if (!(density_floor > 0.0)) Fail(ErrorCode::kInvalidArgument, "density_floor must be > 0");
    if (!(weight_scale > 0.0)) Fail(ErrorCode::kInvalidArgument, "weight_scale must be > 0");
  }
};

using NodeId = std::size_t;

struct Edge {
  NodeId to = 0;
  double weight = 0.0;
};

// Weighted digraph over published points plus the candidate counterfactual
// set (nodes the model labels favorable).
struct RecourseGraph {
  PointSet nodes;
  std::vector<std::vector<Edge>> adjacency;
  std::vector<bool> is_candidate;
  GraphConfig config;
  std::string favorable_label = "1";
  PublishMethod method = PublishMethod::kNone;
  PrivacyBudget budget;
  std::string schema_fingerprint;

  std::size_t node_count() const { return nodes.size(); }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& a : adjacency) e += a.size();
    return e;
  }

  std::vector<NodeId> candidates() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < is_candidate.size(); ++i) {
      if (is_candidate[i]) out.push_back(i);
    }
    return out;
  }

  // Start-node pool: every node that is not a candidate.
  std::vector<NodeId> non_candidates() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < is_candidate.size(); ++i) {
      if (!is_candidate[i]) out.push_back(i);
    }
    return out;
  }

  const Edge* FindEdge(NodeId from, NodeId to) const {
    for (const auto& e : adjacency[from]) {
      if (e.to == to) return &e;
    }
    return nullptr;
  }
};

enum class Direction { kBoth, kForwardOnly, kBackwardOnly, kNone };

inline constexpr double kConstraintTolerance = 1e-9;

// Which traversal directions between two records respect every actionability
// constraint. "Forward" is from -> to.
inline Direction ConstraintCheck(RecordView from, RecordView to, const FeatureSchema& schema) {
  RequireSameWidth(from, to);
  bool forward = true;
  bool backward = true;
  const auto blocks = schema.Blocks();
  for (std::size_t f = 0; f < schema.features.size(); ++f) {
    const auto& spec = schema.features[f];
    const auto& b = blocks[f];
    switch (spec.constraint) {
      case Constraint::kNone:
        break;
      case Constraint::kNonDecreasing:
        forward = forward && to[b.offset] >= from[b.offset] - kConstraintTolerance;
        backward = backward && from[b.offset] >= to[b.offset] - kConstraintTolerance;
        break;
      case Constraint::kNonIncreasing:
        forward = forward && to[b.offset] <= from[b.offset] + kConstraintTolerance;
        backward = backward && from[b.offset] <= to[b.offset] + kConstraintTolerance;
        break;
      case Constraint::kImmutable:
        for (std::size_t d = 0; d < b.width; ++d) {
          if (std::abs(to[b.offset + d] - from[b.offset + d]) > kConstraintTolerance) {
            return Direction::kNone;
          }
        }
        break;
    }
  }
  if (forward && backward) return Direction::kBoth;
  if (forward) return Direction::kForwardOnly;
  if (backward) return Direction::kBackwardOnly;
  return Direction::kNone;
}

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
template <typename Body>
void ParallelFor(std::size_t n, Body&& body) {
  const std::size_t threads =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline double EdgeWeight(RecordView a, RecordView b, const DensityModel& density,
                         const GraphConfig& cfg) {
  const Record mid = Midpoint(a, b);
  return cfg.weight_scale * L2(a, b) / DensityFloor(density, mid, cfg.density_floor);
}

// Connects every pair closer than d_th in each direction the constraints
// allow; pairs allowed in neither direction get no edge. Weight is
// scale * L2 / max(density(midpoint), floor), identical in both directions.
template <Classifier C>
RecourseGraph BuildGraph(const PublishedPoints& pts, const GraphConfig& cfg,
                         const DensityModel& density, const FeatureSchema& schema,
                         const C& model) {
  cfg.Validate();
  const PointSet& nodes = pts.points;
  if (nodes.empty()) Fail(ErrorCode::kInvalidArgument, "graph needs at least one node");
  if (density.dimension() != nodes.width()) {
    Fail(ErrorCode::kDimensionError, "density dimension does not match nodes");
  }
  const std::size_t n = nodes.size();
  RecourseGraph g;
  g.nodes = nodes;
  g.adjacency.assign(n, {});
  g.config = cfg;
  g.method = pts.method;
  g.budget = pts.budget_spent;
  g.favorable_label = schema.favorable_label;
  g.schema_fingerprint = schema.Fingerprint();
  // Pairs are scored in parallel into per-row buffers and merged in index
  // order, so the result does not depend on the thread count.
  struct PairEdge {
    NodeId j;
    Direction dir;
    double weight;
  };
  std::vector<std::vector<PairEdge>> rows(n);
  ParallelFor(n, [&](NodeId i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (!(L2(nodes.row(i), nodes.row(j)) < cfg.d_th)) continue;
      const Direction dir = ConstraintCheck(nodes.row(i), nodes.row(j), schema);
      if (dir == Direction::kNone) continue;
      rows[i].push_back({j, dir, EdgeWeight(nodes.row(i), nodes.row(j), density, cfg)});
    }
  });
  for (NodeId i = 0; i < n; ++i) {
    for (const auto& pe : rows[i]) {
      if (pe.dir == Direction::kBoth || pe.dir == Direction::kForwardOnly) {
        g.adjacency[i].push_back({pe.j, pe.weight});
      }
      if (pe.dir == Direction::kBoth || pe.dir == Direction::kBackwardOnly) {
        g.adjacency[pe.j].push_back({i, pe.weight});
      }
    }
  }
  for (auto& adj : g.adjacency) {
    std::sort(adj.begin(), adj.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  }
  g.is_candidate.resize(n);
  for (NodeId i = 0; i < n; ++i) g.is_candidate[i] = model.Predict(nodes.row(i)) == kFavorable;
  return g;
}

// Weakly connected components, each sorted, ordered by smallest member.
inline std::vector<std::vector<NodeId>> ConnectedComponents(const RecourseGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](NodeId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (NodeId i = 0; i < n; ++i) {
    for (const auto& e : g.adjacency[i]) {
      const NodeId a = find(i), b = find(e.to);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<std::vector<NodeId>> groups;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (NodeId i = 0; i < n; ++i) {
    const NodeId r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return groups;
}

// ---- serialization: node CSV, edge list CSV, JSON manifest ----

inline void SaveGraph(const RecourseGraph& g, const std::vector<std::string>& columns,
                      const std::string& nodes_csv, const std::string& edges_csv,
                      const std::string& manifest_json) {
  {
    std::ofstream os(nodes_csv);
    if (!os) Fail(ErrorCode::kIoError, "cannot write '" + nodes_csv + "'");
    WritePointsCsv(os, g.nodes, columns);
  }
  {
    std::ofstream os(edges_csv);
    if (!os) Fail(ErrorCode::kIoError, "cannot write '" + edges_csv + "'");
    os << "from_id,to_id,weight\n" << std::setprecision(17);
    for (NodeId i = 0; i < g.node_count(); ++i) {
      for (const auto& e : g.adjacency[i]) os << i << "," << e.to << "," << e.weight << "\n";
    }
  }
  nlohmann::json m = {{"d_th", g.config.d_th},
                      {"density_floor", g.config.density_floor},
                      {"weight_scale", g.config.weight_scale},
                      {"favorable_label", g.favorable_label},
                      {"candidate_ids", g.candidates()},
                      {"node_count", g.node_count()},
                      {"edge_count", g.edge_count()},
                      {"method", g.method},
                      {"budget", g.budget},
                      {"schema_fingerprint", g.schema_fingerprint}};
  std::ofstream os(manifest_json);
  if (!os) Fail(ErrorCode::kIoError, "cannot write '" + manifest_json + "'");
  os << m.dump(2) << "\n";
}

inline RecourseGraph LoadGraph(const std::string& nodes_csv, const std::string& edges_csv,
                               const std::string& manifest_json) {
  std::ifstream ns(nodes_csv), es(edges_csv), ms(manifest_json);
  if (!ns || !es || !ms) {
    Fail(ErrorCode::kStageDependencyError, "graph artifacts missing (run build-graph first)");
  }
  RecourseGraph g;
  g.nodes = ReadPointsCsv(ns);
  const auto m = nlohmann::json::parse(ms);
  g.config.d_th = m.at("d_th").get<double>();
  g.config.density_floor = m.at("density_floor").get<double>();
  g.config.weight_scale = m.at("weight_scale").get<double>();
  g.favorable_label = m.at("favorable_label").get<std::string>();
  g.method = m.at("method").get<PublishMethod>();
  g.budget = m.at("budget").get<PrivacyBudget>();
  g.schema_fingerprint = m.value("schema_fingerprint", std::string());
  const std::size_t n = g.nodes.size();
  g.adjacency.assign(n, {});
  g.is_candidate.assign(n, false);
  for (auto id : m.at("candidate_ids").get<std::vector<NodeId>>()) {
    if (id >= n) Fail(ErrorCode::kParseError, "candidate id out of range");
    g.is_candidate[id] = true;
  }
  std::string line;
  std::getline(es, line);
  while (std::getline(es, line)) {
    if (detail::Trim(line).empty()) continue;
    const auto cells = detail::SplitCsvLine(line);
    if (cells.size() != 3) Fail(ErrorCode::kParseError, "bad edge row '" + line + "'");
    const auto from = static_cast<NodeId>(std::stoull(cells[0]));
    const auto to = static_cast<NodeId>(std::stoull(cells[1]));
    if (from >= n || to >= n) Fail(ErrorCode::kParseError, "edge endpoint out of range");
    g.adjacency[from].push_back({to, std::stod(cells[2])});
  }
  return g;
}

}  // namespace privrecourse
