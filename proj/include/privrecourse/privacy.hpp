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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrecourse/error.hpp"
#include "privrecourse/random.hpp"

namespace privrecourse {

struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  void Validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      Fail(ErrorCode::kInvalidBudget, "epsilon must be finite and >= 0");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) {
      Fail(ErrorCode::kInvalidBudget, "delta must lie in [0, 1]");
    }
  }

  bool operator==(const PrivacyBudget&) const = default;
};

inline void to_json(nlohmann::json& j, const PrivacyBudget& b) {
  j = nlohmann::json{{"epsilon", b.epsilon}, {"delta", b.delta}};
}
inline void from_json(const nlohmann::json& j, PrivacyBudget& b) {
  j.at("epsilon").get_to(b.epsilon);
  b.delta = j.value("delta", 0.0);
  b.Validate();
}

struct LedgerEntry {
  std::string label;
  PrivacyBudget spent;
};

// Sequential-composition ledger. Totals are the elementwise sum of entries
// and may never exceed the cap; a refused spend leaves the ledger untouched.
class BudgetAccountant {
 public:
  // Relative slack on cap comparisons so that e.g. ten spends of 0.1 fit
  // under a cap of 1.0.
  static constexpr double kCapSlack = 1e-12;

  BudgetAccountant() : cap_{std::numeric_limits<double>::infinity(), 0.0} {}
  explicit BudgetAccountant(PrivacyBudget cap) : cap_(cap) {
    if (!(cap.epsilon >= 0.0) || !(cap.delta >= 0.0 && cap.delta <= 1.0)) {
      Fail(ErrorCode::kInvalidBudget, "invalid cap");
    }
  }

  const PrivacyBudget& cap() const { return cap_; }
  const std::vector<LedgerEntry>& ledger() const { return ledger_; }

  PrivacyBudget total() const {
    PrivacyBudget t;
    for (const auto& e : ledger_) {
      t.epsilon += e.spent.epsilon;
      t.delta += e.spent.delta;
    }
    return t;
  }

  PrivacyBudget remaining() const {
    const auto t = total();
    return {cap_.epsilon - t.epsilon, cap_.delta - t.delta};
  }

  bool CanSpend(const PrivacyBudget& budget) const {
    const auto t = total();
    const double eps = t.epsilon + budget.epsilon;
    const double del = t.delta + budget.delta;
    return eps <= cap_.epsilon * (1.0 + kCapSlack) + kCapSlack &&
           del <= cap_.delta * (1.0 + kCapSlack) + kCapSlack * (cap_.delta > 0.0);
  }

  void Spend(const std::string& label, const PrivacyBudget& budget) {
    budget.Validate();
    if (!CanSpend(budget)) {
      const auto t = total();
      Fail(ErrorCode::kBudgetExceeded,
           "spend '" + label + "' of (" + std::to_string(budget.epsilon) + ", " +
               std::to_string(budget.delta) + ") on top of (" + std::to_string(t.epsilon) +
               ", " + std::to_string(t.delta) + ") exceeds cap (" +
               std::to_string(cap_.epsilon) + ", " + std::to_string(cap_.delta) + ")");
    }
    ledger_.push_back({label, budget});
  }

  // JSON privacy report: one row per spend plus totals and the cap.
  nlohmann::json Report() const {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& e : ledger_) {
      steps.push_back({{"label", e.label}, {"epsilon", e.spent.epsilon},
                       {"delta", e.spent.delta}});
    }
    nlohmann::json cap = {{"epsilon", cap_.epsilon}, {"delta", cap_.delta}};
    if (!std::isfinite(cap_.epsilon)) cap["epsilon"] = nullptr;
    return {{"steps", steps}, {"total", total()}, {"cap", cap}};
  }

  static BudgetAccountant FromReport(const nlohmann::json& j) {
    PrivacyBudget cap{std::numeric_limits<double>::infinity(), 0.0};
    if (j.contains("cap")) {
      if (!j["cap"]["epsilon"].is_null()) cap.epsilon = j["cap"]["epsilon"].get<double>();
      cap.delta = j["cap"].value("delta", 0.0);
    }
    BudgetAccountant acc(cap);
    for (const auto& s : j.at("steps")) {
      acc.Spend(s.at("label").get<std::string>(),
                {s.at("epsilon").get<double>(), s.value("delta", 0.0)});
    }
    return acc;
  }

 private:
  PrivacyBudget cap_;
  std::vector<LedgerEntry> ledger_;
};

// Laplace(0, scale) by inverse CDF from a single uniform draw.
inline double SampleLaplace(double scale, Rng& rng) {
  const double u = rng.Uniform() - 0.5;
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return -scale * sign * std::log1p(-2.0 * std::abs(u));
}

inline double LaplaceMechanism(double value, double sensitivity, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    Fail(ErrorCode::kInvalidBudget, "Laplace mechanism needs epsilon > 0");
  }
  if (!(sensitivity > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "Laplace mechanism needs sensitivity > 0");
  }
  return value + SampleLaplace(sensitivity / epsilon, rng);
}

// Selection probabilities proportional to exp(epsilon * u / (2 * sensitivity)),
// max-shifted before exponentiation.
inline std::vector<double> ExponentialMechanismProbabilities(std::span<const double> utilities,
                                                             double sensitivity,
                                                             double epsilon) {
  if (utilities.empty()) Fail(ErrorCode::kEmptyCandidates, "no candidates");
  if (!(epsilon > 0.0)) Fail(ErrorCode::kInvalidBudget, "exponential mechanism needs epsilon > 0");
  if (!(sensitivity > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "exponential mechanism needs sensitivity > 0");
  }
  double max_u = -std::numeric_limits<double>::infinity();
  for (double u : utilities) {
    if (!std::isfinite(u)) Fail(ErrorCode::kInvalidUtility, "non-finite utility");
    max_u = std::max(max_u, u);
  }
  const double scale = epsilon / (2.0 * sensitivity);
  std::vector<double> p(utilities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    p[i] = std::exp(scale * (utilities[i] - max_u));
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

inline std::size_t SampleIndex(std::span<const double> probabilities, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (u < acc) return i;
  }
  // Rounding left u above the final partial sum; fall back to the last
  // index with nonzero mass.
  for (std::size_t i = probabilities.size(); i > 0; --i) {
    if (probabilities[i - 1] > 0.0) return i - 1;
  }
  return probabilities.size() - 1;
}

inline std::size_t ExponentialMechanism(std::span<const double> utilities, double sensitivity,
                                        double epsilon, Rng& rng) {
  const auto p = ExponentialMechanismProbabilities(utilities, sensitivity, epsilon);
  return SampleIndex(p, rng);
}

}  // namespace privrecourse
