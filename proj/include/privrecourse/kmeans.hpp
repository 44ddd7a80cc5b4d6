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

#include <cstddef>
#include <limits>
#include <vector>

#include "privrecourse/data.hpp"
#include "privrecourse/points.hpp"
#include "privrecourse/random.hpp"

namespace privrecourse {

// Index of the nearest center under L2; ties go to the lowest index.
inline std::size_t NearestCenter(RecordView x, const PointSet& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = SquaredL2(x, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::vector<std::size_t> AssignToCenters(const PointSet& points, const PointSet& centers) {
  std::vector<std::size_t> assignment(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    assignment[i] = NearestCenter(points.row(i), centers);
  }
  return assignment;
}

struct KMeansResult {
  PointSet centers;
  std::vector<std::size_t> assignment;
};

// Plain (non-private) Lloyd iterations from distinct random points. Used to
// split a convergent zone into subzones. Empty clusters keep their center.
inline KMeansResult LloydKMeans(const PointSet& points, std::size_t k, int max_iters, Rng& rng) {
  k = std::min(k, points.size());
  PointSet centers(points.width());
  for (auto i : SampleWithoutReplacement(points.size(), k, rng)) centers.Append(points.row(i));
  std::vector<std::size_t> assignment = AssignToCenters(points, centers);
  for (int it = 0; it < max_iters; ++it) {
    PointSet sums(k, points.width());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto s = sums.mutable_row(assignment[i]);
      const auto x = points.row(i);
      for (std::size_t d = 0; d < x.size(); ++d) s[d] += x[d];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto dst = centers.mutable_row(c);
      const auto s = sums.row(c);
      for (std::size_t d = 0; d < s.size(); ++d) dst[d] = s[d] / static_cast<double>(counts[c]);
    }
    auto next = AssignToCenters(points, centers);
    if (next == assignment) break;
    assignment = std::move(next);
  }
  return {std::move(centers), std::move(assignment)};
}

}  // namespace privrecourse
