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
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "privrecourse/error.hpp"
#include "privrecourse/points.hpp"

namespace privrecourse {

// Isotropic Gaussian kernel density estimate with one scalar bandwidth.
class DensityModel {
 public:
  DensityModel(PointSet support, double bandwidth)
      : support_(std::move(support)), bandwidth_(bandwidth) {
    if (support_.empty()) Fail(ErrorCode::kEmptySupport, "density needs >= 1 support point");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
      Fail(ErrorCode::kInvalidArgument, "bandwidth must be positive");
    }
    const double d = static_cast<double>(dimension());
    log_norm_ = -0.5 * d * std::log(2.0 * M_PI * bandwidth_ * bandwidth_) -
                std::log(static_cast<double>(support_.size()));
  }

  const PointSet& support() const { return support_; }
  double bandwidth() const { return bandwidth_; }
  std::size_t dimension() const { return support_.width(); }

  // log((1/n) sum_i N(x; p_i, h^2 I)), evaluated with log-sum-exp.
  double LogDensity(RecordView x) const {
    if (x.size() != dimension()) {
      Fail(ErrorCode::kDimensionError, "density of dimension " + std::to_string(dimension()) +
                                           " queried with width " + std::to_string(x.size()));
    }
    const double inv_two_h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
    // Streaming log-sum-exp: `sum` is kept relative to the running maximum.
    double max_arg = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t i = 0; i < support_.size(); ++i) {
      const double e = -SquaredL2(x, support_.row(i)) * inv_two_h2;
      if (e <= max_arg) {
        // exp underflows to exactly 0 below about -745.
        if (e - max_arg > -750.0) sum += std::exp(e - max_arg);
      } else {
        sum = sum * std::exp(max_arg - e) + 1.0;
        max_arg = e;
      }
    }
    return log_norm_ + max_arg + std::log(sum);
  }

  double Density(RecordView x) const { return std::exp(LogDensity(x)); }

 private:
  PointSet support_;
  double bandwidth_;
  double log_norm_ = 0.0;
};

inline constexpr double kMinBandwidthScale = 1e-3;

// Scott's rule: n^(-1/(d+4)) times the mean per-coordinate standard
// deviation, the latter floored at 1e-3.
inline double ScottBandwidth(const PointSet& points) {
  const std::size_t n = points.size();
  const std::size_t d = points.width();
  double mean_sd = 0.0;
  if (n > 1) {
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += points.row(i)[k];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = points.row(i)[k] - mean;
        var += diff * diff;
      }
      mean_sd += std::sqrt(var / static_cast<double>(n - 1));
    }
    mean_sd /= static_cast<double>(d);
  }
  mean_sd = std::max(mean_sd, kMinBandwidthScale);
  return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0)) * mean_sd;
}

inline DensityModel FitKde(const PointSet& points, std::optional<double> bandwidth = std::nullopt) {
  if (points.empty()) Fail(ErrorCode::kEmptySupport, "cannot fit a density on zero points");
  return DensityModel(points, bandwidth.value_or(ScottBandwidth(points)));
}

inline double DensityFloor(const DensityModel& m, RecordView x, double floor) {
  if (!(floor > 0.0)) Fail(ErrorCode::kInvalidArgument, "density floor must be > 0");
  return std::max(m.Density(x), floor);
}

}  // namespace privrecourse
