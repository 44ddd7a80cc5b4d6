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

// Library walk-through on the bundled toy data: private model, DP cluster
// publication, graph, and one recourse query, without the staged harness.
//
//   toy_recourse [path/to/toy.csv]

#include <iostream>

#include "privrecourse/privrecourse.hpp"

namespace pr = privrecourse;

int main(int argc, char** argv) {
  const std::string csv = argc > 1 ? argv[1] : "data/toy/toy.csv";
  pr::FeatureSchema schema;
  schema.features = {{"income", pr::FeatureKind::kContinuous, 0, 100},
                     {"savings", pr::FeatureKind::kContinuous, 0, 50}};
  schema.features[1].constraint = pr::Constraint::kNonDecreasing;
  schema.label_column = "decision";
  schema.favorable_label = "approved";

  try {
    const pr::Dataset data = pr::Preprocess(pr::LoadCsv(csv, schema));
    pr::BudgetAccountant acc({2.0, 0.0});
    pr::Rng rng(9);

    const auto model = pr::TrainDpLogistic(data, {.l2_strength = 0.1}, 1.0, rng, acc);
    pr::ClusterParams params;
    params.k = 40;
    const auto points = pr::ConvergentDpCluster(data, params, rng, acc);
    const auto density = pr::FitKde(points.points);
    const auto graph = pr::BuildGraph(points, {}, density, schema, model);

    const pr::Record query = pr::PreprocessRecord(schema, std::vector<double>{30, 10});
    const auto path = pr::ShortestRecourse(graph, query);
    std::cout << "query (30, 10) -> ";
    for (std::size_t i = 0; i < path.step_count(); ++i) {
      const auto raw = pr::InverseTransform(schema, path.steps.row(i));
      std::cout << (i ? " -> " : "") << "(" << raw[0] << ", " << raw[1] << ")";
    }
    std::cout << "\nspent epsilon " << acc.total().epsilon << "\n";
  } catch (const pr::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
