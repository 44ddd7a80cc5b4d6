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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/data.hpp"
#include "privrecourse/density.hpp"
#include "privrecourse/error.hpp"
#include "privrecourse/graph.hpp"
#include "privrecourse/metrics.hpp"
#include "privrecourse/model.hpp"
#include "privrecourse/privacy.hpp"
#include "privrecourse/publish.hpp"
#include "privrecourse/recourse.hpp"

namespace privrecourse {

enum class DensitySource { kPublished, kExternal };

NLOHMANN_JSON_SERIALIZE_ENUM(DensitySource, {
                                                {DensitySource::kPublished, "published"},
                                                {DensitySource::kExternal, "external"},
                                            })

struct PipelineConfig {
  FeatureSchema schema;
  std::string train_csv;
  std::string test_csv;  // empty: split train_csv with test_fraction
  double test_fraction = 0.2;
  std::size_t graph_sample_n = 2000;
  std::size_t query_sample_n = 300;
  std::uint64_t seed = 0;
  PrivacyBudget cap{2.0, 0.0};

  LogisticOptions model;
  double epsilon_f = 1.0;

  PublishMethod method = PublishMethod::kDpCluster;
  ClusterParams cluster;

  GraphConfig graph;
  DensitySource density_source = DensitySource::kPublished;
  std::optional<double> graph_bandwidth;

  std::size_t recourse_k = 1;
  std::size_t ynn_k = 5;
  std::optional<double> metric_bandwidth;
  // Per-query wall-clock time in the metrics; off makes them reproducible.
  bool record_timing = true;

  double epsilon_k() const { return cluster.epsilon_k; }

  // Total the run will spend; checked against the cap before any data is
  // read.
  PrivacyBudget planned_spend() const {
    PrivacyBudget b{epsilon_f, 0.0};
    if (method != PublishMethod::kNone) b.epsilon += cluster.epsilon_k;
    return b;
  }
};

namespace detail {

inline std::optional<double> OptionalDouble(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

inline std::string ResolvePath(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

// Relative paths in the config resolve against `base_dir`.
inline PipelineConfig ConfigFromJson(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = ".") {
  PipelineConfig c;
  if (j.contains("schema_path")) {
    std::ifstream in(detail::ResolvePath(base_dir, j["schema_path"].get<std::string>()));
    if (!in) Fail(ErrorCode::kIoError, "cannot open schema file");
    c.schema = nlohmann::json::parse(in).get<FeatureSchema>();
  } else {
    c.schema = j.at("schema").get<FeatureSchema>();
  }
  c.train_csv = detail::ResolvePath(base_dir, j.at("train_csv").get<std::string>());
  c.test_csv = detail::ResolvePath(base_dir, j.value("test_csv", std::string()));
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.graph_sample_n = j.value("graph_sample_n", c.graph_sample_n);
  c.query_sample_n = j.value("query_sample_n", c.query_sample_n);
  c.seed = j.value("seed", c.seed);
  if (j.contains("privacy_cap")) c.cap = j["privacy_cap"].get<PrivacyBudget>();
  if (j.contains("model")) {
    const auto& m = j["model"];
    c.model.l2_strength = m.value("l2_strength", c.model.l2_strength);
    c.model.max_iters = m.value("max_iters", c.model.max_iters);
    c.model.tol = m.value("tol", c.model.tol);
    c.epsilon_f = m.value("epsilon_f", c.epsilon_f);
  }
  if (j.contains("publish")) {
    const auto& p = j["publish"];
    c.method = p.value("method", c.method);
    c.cluster.k = p.value("k", c.cluster.k);
    c.cluster.iterations = p.value("iterations", c.cluster.iterations);
    c.cluster.internal_k = p.value("internal_k", c.cluster.internal_k);
    c.cluster.epsilon_k = p.value("epsilon_k", c.cluster.epsilon_k);
    c.cluster.exp_fraction = p.value("exp_fraction", c.cluster.exp_fraction);
    c.cluster.laplace_fraction = p.value("laplace_fraction", c.cluster.laplace_fraction);
    c.cluster.sum_sensitivity = p.value("sum_sensitivity", c.cluster.sum_sensitivity);
  }
  if (j.contains("graph")) {
    const auto& g = j["graph"];
    c.graph.d_th = g.value("d_th", c.graph.d_th);
    c.graph.density_floor = g.value("density_floor", c.graph.density_floor);
    c.graph.weight_scale = g.value("weight_scale", c.graph.weight_scale);
    c.density_source = g.value("density_source", c.density_source);
    c.graph_bandwidth = detail::OptionalDouble(g, "bandwidth");
  }
  if (j.contains("recourse")) c.recourse_k = j["recourse"].value("k", c.recourse_k);
  if (j.contains("metrics")) {
    c.ynn_k = j["metrics"].value("ynn_k", c.ynn_k);
    c.metric_bandwidth = detail::OptionalDouble(j["metrics"], "bandwidth");
    c.record_timing = j["metrics"].value("timing", c.record_timing);
  }
  if (!(c.epsilon_f > 0.0)) Fail(ErrorCode::kInvalidBudget, "epsilon_f must be > 0");
  if (c.method == PublishMethod::kDpCluster) c.cluster.Validate();
  if (c.method == PublishMethod::kRecordPerturbation && !(c.cluster.epsilon_k > 0.0)) {
    Fail(ErrorCode::kInvalidBudget, "epsilon_k must be > 0");
  }
  c.graph.Validate();
  return c;
}

inline nlohmann::json ConfigToJson(const PipelineConfig& c) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"schema", c.schema},
          {"train_csv", c.train_csv},
          {"test_csv", c.test_csv},
          {"test_fraction", c.test_fraction},
          {"graph_sample_n", c.graph_sample_n},
          {"query_sample_n", c.query_sample_n},
          {"seed", c.seed},
          {"privacy_cap", c.cap},
          {"model",
           {{"l2_strength", c.model.l2_strength},
            {"max_iters", c.model.max_iters},
            {"tol", c.model.tol},
            {"epsilon_f", c.epsilon_f}}},
          {"publish",
           {{"method", c.method},
            {"k", c.cluster.k},
            {"iterations", c.cluster.iterations},
            {"internal_k", c.cluster.internal_k},
            {"epsilon_k", c.cluster.epsilon_k},
            {"exp_fraction", c.cluster.exp_fraction},
            {"laplace_fraction", c.cluster.laplace_fraction},
            {"sum_sensitivity", c.cluster.sum_sensitivity}}},
          {"graph",
           {{"d_th", c.graph.d_th},
            {"density_floor", c.graph.density_floor},
            {"weight_scale", c.graph.weight_scale},
            {"density_source", c.density_source},
            {"bandwidth", opt(c.graph_bandwidth)}}},
          {"recourse", {{"k", c.recourse_k}}},
          {"metrics",
           {{"ynn_k", c.ynn_k},
            {"bandwidth", opt(c.metric_bandwidth)},
            {"timing", c.record_timing}}}};
}

inline PipelineConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kParseError, std::string("config: ") + e.what());
  }
  return ConfigFromJson(j, std::filesystem::path(path).parent_path());
}

inline std::string ConfigHash(const PipelineConfig& c) {
  const std::string s = ConfigToJson(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// Encoded dataset CSV: encoded columns plus a 0/1 "favorable" column.
inline void SaveEncoded(const Dataset& ds, const std::string& path) {
  std::ofstream os(path);
  if (!os) Fail(ErrorCode::kIoError, "cannot write '" + path + "'");
  const auto names = ds.schema.EncodedColumnNames();
  for (const auto& n : names) os << n << ",";
  os << "favorable\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.rows.row(i)) os << v << ",";
    os << ds.labels[i] << "\n";
  }
}

inline Dataset LoadEncoded(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kStageDependencyError, "missing '" + path + "' (run prepare first)");
  PointSet all = ReadPointsCsv(in);
  const std::size_t w = schema.encoded_width();
  if (all.width() != w + 1) Fail(ErrorCode::kSchemaMismatch, "'" + path + "' has the wrong width");
  Dataset ds{schema, PointSet(w), {}};
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto r = all.row(i);
    ds.rows.Append(r.first(w));
    ds.labels.push_back(r[w] != 0.0 ? kFavorable : kUnfavorable);
  }
  return ds;
}

// Artifact layout of one output directory.
struct ArtifactPaths {
  std::filesystem::path dir;

  std::string file(const char* name) const { return (dir / name).string(); }
  std::string train() const { return file("train.csv"); }
  std::string test() const { return file("test.csv"); }
  std::string graph_sample() const { return file("graph_sample.csv"); }
  std::string model() const { return file("model.json"); }
  std::string points() const { return file("points.csv"); }
  std::string points_meta() const { return file("points.json"); }
  std::string nodes() const { return file("graph_nodes.csv"); }
  std::string edges() const { return file("graph_edges.csv"); }
  std::string graph_manifest() const { return file("graph.json"); }
  std::string privacy_report() const { return file("privacy_report.json"); }
  std::string metrics_csv() const { return file("metrics.csv"); }
  std::string metrics_json() const { return file("metrics.json"); }
  std::string resolved_config() const { return file("resolved_config.json"); }
  std::string manifest(const std::string& stage) const {
    return (dir / (stage + ".manifest.json")).string();
  }
};

enum class Stage { kPrepare, kTrainModel, kPublishPoints, kBuildGraph, kQuery, kEvaluate, kReport };

inline std::string StageName(Stage s) {
  switch (s) {
    case Stage::kPrepare: return "prepare";
    case Stage::kTrainModel: return "train-model";
    case Stage::kPublishPoints: return "publish-points";
    case Stage::kBuildGraph: return "build-graph";
    case Stage::kQuery: return "query";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
  }
  return "?";
}

inline std::optional<Stage> ParseStage(const std::string& name) {
  for (Stage s : {Stage::kPrepare, Stage::kTrainModel, Stage::kPublishPoints, Stage::kBuildGraph,
                  Stage::kQuery, Stage::kEvaluate, Stage::kReport}) {
    if (StageName(s) == name) return s;
  }
  return std::nullopt;
}

// Runs pipeline stages against one output directory. Every randomized stage
// draws from its own stream derived from (seed, stage), so rerunning a stage
// with the same config reproduces its artifacts byte for byte.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::filesystem::path out_dir)
      : config_(std::move(config)), paths_{std::move(out_dir)} {
    std::filesystem::create_directories(paths_.dir);
  }

  const PipelineConfig& config() const { return config_; }
  const ArtifactPaths& paths() const { return paths_; }

  // Refuses configurations whose planned spend exceeds the cap.
  void CheckBudgetPlan() const {
    BudgetAccountant plan(config_.cap);
    if (!plan.CanSpend(config_.planned_spend())) {
      const auto p = config_.planned_spend();
      Fail(ErrorCode::kBudgetExceeded,
           "planned spend epsilon=" + std::to_string(p.epsilon) + " exceeds cap epsilon=" +
               std::to_string(config_.cap.epsilon));
    }
  }

  void Prepare() {
    CheckBudgetPlan();
    WriteJson(paths_.resolved_config(), ConfigToJson(config_));
    const Dataset full = Preprocess(LoadCsv(config_.train_csv, config_.schema));
    Dataset train, test, sample;
    if (config_.test_csv.empty()) {
      auto split = StratifiedSplitAndSample(full, config_.test_fraction, config_.graph_sample_n,
                                            StageSeed("prepare"));
      train = std::move(split.train);
      test = std::move(split.test);
      sample = std::move(split.graph_sample);
    } else {
      train = full;
      test = Preprocess(LoadCsv(config_.test_csv, config_.schema));
      sample = SampleRows(train, config_.graph_sample_n, StageSeed("prepare"));
    }
    if (config_.query_sample_n > 0 && config_.query_sample_n < test.size()) {
      test = SampleRows(test, config_.query_sample_n, StageSeed("prepare:test"));
    }
    SaveEncoded(train, paths_.train());
    SaveEncoded(test, paths_.test());
    SaveEncoded(sample, paths_.graph_sample());
    WriteManifest("prepare", {{"train_rows", train.size()},
                              {"test_rows", test.size()},
                              {"graph_sample_rows", sample.size()}});
  }

  LogisticModel TrainModel() {
    CheckBudgetPlan();
    BudgetAccountant acc = LoadLedger("model");
    const Dataset train = LoadEncoded(paths_.train(), config_.schema);
    Rng rng(StageSeed("train-model"));
    LogisticModel m = TrainDpLogistic(train, config_.model, config_.epsilon_f, rng, acc);
    WriteJson(paths_.model(), ToJson(m));
    SaveLedger(acc);
    WriteManifest("train-model", {{"train_accuracy", Accuracy(m, train)}});
    return m;
  }

  PublishedPoints PublishPoints() {
    CheckBudgetPlan();
    BudgetAccountant acc = LoadLedger("publish:");
    const Dataset sample = LoadEncoded(paths_.graph_sample(), config_.schema);
    Rng rng(StageSeed("publish-points"));
    PublishedPoints pts;
    switch (config_.method) {
      case PublishMethod::kDpCluster:
        pts = ConvergentDpCluster(sample, config_.cluster, rng, acc);
        break;
      case PublishMethod::kRecordPerturbation:
        pts = RecordPerturbation(sample, config_.cluster.epsilon_k, rng, acc);
        break;
      case PublishMethod::kNone:
        pts = PublishRaw(sample);
        break;
    }
    pts.seed = config_.seed;
    SavePublishedPoints(pts, config_.schema.EncodedColumnNames(), paths_.points(),
                        paths_.points_meta());
    SaveLedger(acc);
    WriteManifest("publish-points", {{"points", pts.points.size()}});
    return pts;
  }

  RecourseGraph BuildGraphStage() {
    const PublishedPoints pts = LoadPublishedPoints(paths_.points(), paths_.points_meta());
    const LogisticModel model = LoadModel();
    const PointSet support = config_.density_source == DensitySource::kPublished
                                 ? pts.points
                                 : LoadEncoded(paths_.graph_sample(), config_.schema).rows;
    const DensityModel density = FitKde(support, config_.graph_bandwidth);
    RecourseGraph g = BuildGraph(pts, config_.graph, density, config_.schema, model);
    SaveGraph(g, config_.schema.EncodedColumnNames(), paths_.nodes(), paths_.edges(),
              paths_.graph_manifest());
    WriteManifest("build-graph", {{"nodes", g.node_count()},
                                  {"edges", g.edge_count()},
                                  {"candidates", g.candidates().size()},
                                  {"components", ConnectedComponents(g).size()},
                                  {"bandwidth", density.bandwidth()}});
    return g;
  }

  // Answers one query given in raw units. Reads only published artifacts.
  std::vector<RecoursePath> Query(RecordView raw_query) const {
    const RecourseGraph g = LoadGraph(paths_.nodes(), paths_.edges(), paths_.graph_manifest());
    const LogisticModel model = LoadModel();
    const Record z = PreprocessRecord(config_.schema, raw_query);
    return DiverseRecourse(g, z, config_.recourse_k);
  }

  // Query answering reads only the published graph and model; the encoded
  // graph sample serves as the scoring reference (rho_d and nearest
  // neighbours), and test.csv supplies the queries.
  MetricsReport Evaluate() {
    const RecourseGraph g = LoadGraph(paths_.nodes(), paths_.edges(), paths_.graph_manifest());
    const LogisticModel model = LoadModel();
    const Dataset test = LoadEncoded(paths_.test(), config_.schema);
    const Dataset reference = LoadEncoded(paths_.graph_sample(), config_.schema);
    const DensityModel rho_d = FitKde(reference.rows, config_.metric_bandwidth);
    const PointSet queries = UnfavorableQueries(test.rows, model);
    MetricsReport report = EvaluateBatch(queries, g, model, config_.schema, rho_d, reference.rows,
                                         {config_.ynn_k, config_.record_timing});
    std::ofstream csv(paths_.metrics_csv());
    report.WriteCsv(csv);
    nlohmann::json agg = report.Aggregates();
    agg["method"] = g.method;
    agg["rho_d_bandwidth"] = rho_d.bandwidth();
    WriteJson(paths_.metrics_json(), agg);
    WriteManifest("evaluate", agg);
    return report;
  }

  nlohmann::json Report() const {
    std::ifstream pr(paths_.privacy_report());
    if (!pr) Fail(ErrorCode::kStageDependencyError, "missing privacy report");
    nlohmann::json out = {{"privacy", nlohmann::json::parse(pr)}};
    std::ifstream mj(paths_.metrics_json());
    if (mj) out["metrics"] = nlohmann::json::parse(mj);
    return out;
  }

  LogisticModel LoadModel() const {
    std::ifstream in(paths_.model());
    if (!in) Fail(ErrorCode::kStageDependencyError, "missing model (run train-model first)");
    LogisticModel m = LogisticModelFromJson(nlohmann::json::parse(in));
    if (m.input_width() != config_.schema.encoded_width()) {
      Fail(ErrorCode::kSchemaMismatch, "model width does not match schema");
    }
    return m;
  }

  BudgetAccountant Ledger() const {
    std::ifstream in(paths_.privacy_report());
    if (!in) return BudgetAccountant(config_.cap);
    return BudgetAccountant::FromReport(nlohmann::json::parse(in));
  }

 private:
  std::uint64_t StageSeed(const std::string& stage) const {
    std::uint64_t h = config_.seed ^ 0x9E3779B97F4A7C15ULL;
    for (unsigned char c : stage) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  // Existing ledger minus entries written by a previous run of the same
  // stage, so a rerun replaces rather than double counts its spend.
  BudgetAccountant LoadLedger(const std::string& label_prefix) const {
    const BudgetAccountant old = Ledger();
    BudgetAccountant acc(config_.cap);
    for (const auto& e : old.ledger()) {
      if (e.label.rfind(label_prefix, 0) == 0) continue;
      acc.Spend(e.label, e.spent);
    }
    return acc;
  }

  void SaveLedger(const BudgetAccountant& acc) const {
    WriteJson(paths_.privacy_report(), acc.Report());
  }

  void WriteManifest(const std::string& stage, const nlohmann::json& extra) const {
    nlohmann::json m = {{"stage", stage},
                        {"seed", config_.seed},
                        {"config_hash", ConfigHash(config_)},
                        {"ledger", Ledger().Report()},
                        {"details", extra}};
    WriteJson(paths_.manifest(stage), m);
  }

  static void WriteJson(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) Fail(ErrorCode::kIoError, "cannot write '" + path + "'");
    os << j.dump(2) << "\n";
  }

  PipelineConfig config_;
  ArtifactPaths paths_;
};

}  // namespace privrecourse
