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

// Command-line harness: one subcommand per pipeline stage plus `all`.
//
//   privrecourse <stage> --config cfg.json [--seed N] [--out DIR]
//
// Exit code 0 on success; on failure a JSON object {"error", "message"} is
// written to stderr and the exit code is 1.

#include <chrono>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "privrecourse/privrecourse.hpp"

namespace pr = privrecourse;

namespace {

std::vector<double> ParseRawQuery(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : pr::detail::SplitCsvLine(text)) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      pr::Fail(pr::ErrorCode::kParseError, "query value '" + cell + "' is not a number");
    }
  }
  return out;
}

// Table-style rendering: the query row, then each path step in raw units.
void PrintPathTable(const pr::RecoursePath& path, const pr::FeatureSchema& schema,
                    const pr::LogisticModel& model, std::ostream& os) {
  const int width = 16;
  os << std::left << std::setw(10) << "row";
  for (const auto& f : schema.features) os << std::setw(width) << f.name;
  os << "label\n";
  auto print_row = [&](const std::string& tag, pr::RecordView x) {
    const auto raw = pr::InverseTransform(schema, x);
    os << std::setw(10) << tag;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      std::ostringstream cell;
      const auto& f = schema.features[k];
      if (f.kind == pr::FeatureKind::kCategorical) {
        cell << f.categories[static_cast<std::size_t>(raw[k])];
      } else {
        cell << std::setprecision(6) << raw[k];
      }
      os << std::setw(width) << cell.str();
    }
    os << (model.Predict(x) == pr::kFavorable ? "favorable" : "unfavorable") << "\n";
  };
  print_row("query", path.query);
  for (std::size_t i = 0; i < path.step_count(); ++i) {
    const std::string tag = i + 1 == path.step_count() ? "CFE" : "Z" + std::to_string(i + 1);
    print_row(tag, path.steps.row(i));
  }
  os << "total weight " << path.total_weight << ", " << path.step_count() << " steps\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private graph-based recourse"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string raw_query;
  std::optional<std::size_t> test_row;
  bool json_output = false;

  const std::vector<std::string> stages = {"prepare",  "train-model", "publish-points",
                                           "build-graph", "query",    "evaluate",
                                           "report",   "all"};
  for (const auto& name : stages) {
    auto* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->add_option("--config", config_path, "pipeline config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "artifact directory");
    if (name == "query") {
      auto* raw = sub->add_option("--raw", raw_query, "comma-separated query in raw units");
      auto* row = sub->add_option("--test-row", test_row, "use row N of the prepared test set");
      raw->excludes(row);
      sub->add_flag("--json", json_output, "print the path as JSON");
    }
  }

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    pr::PipelineConfig config = pr::LoadConfig(config_path);
    if (seed) config.seed = *seed;
    pr::Pipeline pipeline(config, out_dir);

    auto run = [&](const std::string& s) {
      if (s == "prepare") {
        pipeline.Prepare();
      } else if (s == "train-model") {
        const auto m = pipeline.TrainModel();
        std::cout << "model trained (" << m.input_width() << " inputs)\n";
      } else if (s == "publish-points") {
        const auto p = pipeline.PublishPoints();
        std::cout << "published " << p.points.size() << " points\n";
      } else if (s == "build-graph") {
        const auto g = pipeline.BuildGraphStage();
        std::cout << "graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges, "
                  << g.candidates().size() << " candidates\n";
      } else if (s == "evaluate") {
        const auto r = pipeline.Evaluate();
        std::cout << r.Aggregates().dump(2) << "\n";
      } else if (s == "report") {
        std::cout << pipeline.Report().dump(2) << "\n";
      }
    };

    if (stage == "all") {
      for (const char* s : {"prepare", "train-model", "publish-points", "build-graph", "evaluate",
                            "report"}) {
        std::cout << "== " << s << "\n";
        run(s);
      }
    } else if (stage == "query") {
      std::vector<double> raw;
      if (test_row) {
        const auto test = pr::LoadEncoded(pipeline.paths().test(), config.schema);
        if (*test_row >= test.size()) pr::Fail(pr::ErrorCode::kInvalidArgument, "test row out of range");
        raw = pr::InverseTransform(config.schema, test.rows.row(*test_row));
      } else if (!raw_query.empty()) {
        raw = ParseRawQuery(raw_query);
      } else {
        pr::Fail(pr::ErrorCode::kInvalidArgument, "query needs --raw or --test-row");
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto paths = pipeline.Query(raw);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const auto model = pipeline.LoadModel();
      if (json_output) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& p : paths) out.push_back(pr::PathToJson(p, config.schema, model, secs));
        std::cout << out.dump(2) << "\n";
      } else {
        for (std::size_t i = 0; i < paths.size(); ++i) {
          if (paths.size() > 1) std::cout << "path " << i + 1 << "\n";
          PrintPathTable(paths[i], config.schema, model, std::cout);
        }
      }
    } else {
      run(stage);
    }
  } catch (const pr::Error& e) {
    nlohmann::json err = {{"error", std::string(e.name())}, {"message", e.what()}, {"stage", stage}};
    if (e.code() == pr::ErrorCode::kBudgetExceeded) {
      try {
        pr::PipelineConfig config = pr::LoadConfig(config_path);
        err["ledger"] = pr::Pipeline(config, out_dir).Ledger().Report();
        err["planned"] = config.planned_spend();
      } catch (const std::exception&) {
      }
    }
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "Internal"}, {"message", e.what()}, {"stage", stage}}.dump()
              << "\n";
    return 1;
  }
  return 0;
}
