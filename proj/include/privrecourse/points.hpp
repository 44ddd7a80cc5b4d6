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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "privrecourse/error.hpp"

namespace privrecourse {

using Record = std::vector<double>;
using RecordView = std::span<const double>;

// Dense row-major matrix of records sharing one width.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t width) : width_(width) {}
  PointSet(std::size_t rows, std::size_t width)
      : width_(width), values_(rows * width, 0.0) {}

  static PointSet FromRows(const std::vector<Record>& rows) {
    if (rows.empty()) return PointSet();
    PointSet out(rows.front().size());
    for (const auto& r : rows) out.Append(r);
    return out;
  }

  std::size_t size() const { return width_ == 0 ? 0 : values_.size() / width_; }
  std::size_t width() const { return width_; }
  bool empty() const { return size() == 0; }

  RecordView row(std::size_t i) const {
    return RecordView(values_.data() + i * width_, width_);
  }
  std::span<double> mutable_row(std::size_t i) {
    return std::span<double>(values_.data() + i * width_, width_);
  }
  Record copy_row(std::size_t i) const {
    auto r = row(i);
    return Record(r.begin(), r.end());
  }

  void Append(RecordView r) {
    if (width_ == 0 && values_.empty()) width_ = r.size();
    if (r.size() != width_) {
      Fail(ErrorCode::kDimensionError,
           "row width " + std::to_string(r.size()) + " != " +
               std::to_string(width_));
    }
    values_.insert(values_.end(), r.begin(), r.end());
  }

  const std::vector<double>& values() const { return values_; }

  bool operator==(const PointSet&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<double> values_;
};

inline void RequireSameWidth(RecordView a, RecordView b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kDimensionError, "records of width " +
                                         std::to_string(a.size()) + " and " +
                                         std::to_string(b.size()));
  }
}

inline double SquaredL2(RecordView a, RecordView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double L2(RecordView a, RecordView b) { return std::sqrt(SquaredL2(a, b)); }

inline double L1(RecordView a, RecordView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Coordinates differing by more than this count toward L0.
inline constexpr double kL0Tolerance = 1e-9;

inline double L0(RecordView a, RecordView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kL0Tolerance) s += 1.0;
  }
  return s;
}

enum class Norm { kL0, kL1, kL2 };

inline double Distance(Norm norm, RecordView a, RecordView b) {
  switch (norm) {
    case Norm::kL0: return L0(a, b);
    case Norm::kL1: return L1(a, b);
    case Norm::kL2: return L2(a, b);
  }
  return L2(a, b);
}

inline Record Midpoint(RecordView a, RecordView b) {
  Record m(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m[i] = 0.5 * (a[i] + b[i]);
  return m;
}

}  // namespace privrecourse
