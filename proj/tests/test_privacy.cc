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

#include <cmath>

#include "privrecourse/privacy.hpp"
#include "test_support.hpp"

namespace privrecourse {
namespace {

TEST(Laplace, EmpiricalMomentsMatchScale) {
  Rng rng(1);
  const int n = 100000;
  double sum = 0.0, sq = 0.0, abs_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = SampleLaplace(2.0, rng);
    sum += x;
    sq += x * x;
    abs_sum += std::abs(x);
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 0.05);
  EXPECT_NEAR(sq / n - mean * mean, 8.0, 0.4);
  EXPECT_NEAR(abs_sum / n, 2.0, 0.05);
}

TEST(Laplace, MedianIsTheValue) {
  Rng rng(2);
  int above = 0;
  for (int i = 0; i < 20000; ++i) above += LaplaceMechanism(3.0, 1.0, 0.5, rng) > 3.0;
  EXPECT_NEAR(above / 20000.0, 0.5, 0.02);
}

TEST(Laplace, TailProbabilityMatchesCdf) {
  Rng rng(8);
  // P(|X| > t) = exp(-t / b).
  const double b = 1.5, t = 2.0;
  int tail = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) tail += std::abs(SampleLaplace(b, rng)) > t;
  EXPECT_NEAR(static_cast<double>(tail) / n, std::exp(-t / b), 0.005);
}

TEST(Laplace, RejectsBadParameters) {
  Rng rng(0);
  EXPECT_THROW(LaplaceMechanism(0, 1, 0, rng), Error);
  EXPECT_THROW(LaplaceMechanism(0, 1, -1, rng), Error);
  EXPECT_THROW(LaplaceMechanism(0, 1, std::numeric_limits<double>::infinity(), rng), Error);
  EXPECT_THROW(LaplaceMechanism(0, 0, 1, rng), Error);
  try {
    LaplaceMechanism(0, 1, 0, rng);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidBudget);
  }
}

TEST(Exponential, ProbabilitiesFollowClosedForm) {
  const std::vector<double> u{1.0, 0.0};
  const auto p = ExponentialMechanismProbabilities(u, 1.0, 2.0);
  EXPECT_NEAR(p[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-12);
  EXPECT_NEAR(p[0], 0.7311, 1e-4);
}

TEST(Exponential, ProbabilityRatioBoundedByEpsilon) {
  // Shifting one utility by the sensitivity moves any probability by at most
  // a factor exp(epsilon).
  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> u(6);
    for (double& x : u) x = rng.Uniform() * 4 - 2;
    const double eps = 0.1 + rng.Uniform() * 3;
    const double sens = 0.5 + rng.Uniform();
    std::vector<double> v = u;
    for (double& x : v) x += (rng.Uniform() * 2 - 1) * sens;
    const auto p = ExponentialMechanismProbabilities(u, sens, eps);
    const auto q = ExponentialMechanismProbabilities(v, sens, eps);
    for (std::size_t i = 0; i < u.size(); ++i) {
      EXPECT_LE(p[i] / q[i], std::exp(eps) * (1 + 1e-9));
    }
  }
}

TEST(Exponential, LargeUtilitiesDoNotOverflow) {
  const std::vector<double> u{1e6, 1e6 - 1, -1e6};
  const auto p = ExponentialMechanismProbabilities(u, 1.0, 2.0);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
  EXPECT_NEAR(p[0] / p[1], std::exp(1.0), 1e-9);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Exponential, EmpiricalFrequencies) {
  Rng rng(5);
  const std::vector<double> u{0.0, 1.0, 2.0};
  const auto p = ExponentialMechanismProbabilities(u, 1.0, 1.0);
  std::vector<int> hits(3, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++hits[ExponentialMechanism(u, 1.0, 1.0, rng)];
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(hits[i] / static_cast<double>(n), p[i], 0.01);
}

TEST(Exponential, ErrorKinds) {
  const std::vector<double> empty;
  const std::vector<double> bad{0.0, std::nan("")};
  try {
    ExponentialMechanismProbabilities(empty, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidates);
  }
  try {
    ExponentialMechanismProbabilities(bad, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidUtility);
  }
}

TEST(Accountant, SequentialCompositionSums) {
  BudgetAccountant acc({2.0, 0.0});
  acc.Spend("a", {0.5, 0.0});
  acc.Spend("b", {1.5, 0.0});
  EXPECT_DOUBLE_EQ(acc.total().epsilon, 2.0);
  EXPECT_DOUBLE_EQ(acc.remaining().epsilon, 0.0);
  EXPECT_EQ(acc.ledger().size(), 2u);
}

TEST(Accountant, ManySmallSpendsFitExactCap) {
  BudgetAccountant acc({1.0, 0.0});
  for (int i = 0; i < 10; ++i) acc.Spend("step", {0.1, 0.0});
  EXPECT_FALSE(acc.CanSpend({1e-6, 0.0}));
}

TEST(Accountant, RefusalIsAtomic) {
  Rng rng(6);
  for (int rep = 0; rep < 100; ++rep) {
    BudgetAccountant acc({1.0 + rng.Uniform(), 0.0});
    for (int i = 0; i < 20; ++i) {
      const auto before = acc.Report().dump();
      const PrivacyBudget b{rng.Uniform() * 0.5, 0.0};
      const bool allowed = acc.CanSpend(b);
      try {
        acc.Spend("s", b);
        EXPECT_TRUE(allowed);
      } catch (const Error& e) {
        EXPECT_FALSE(allowed);
        EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
        EXPECT_EQ(acc.Report().dump(), before);
      }
      EXPECT_LE(acc.total().epsilon, acc.cap().epsilon * (1 + 1e-12));
    }
  }
}

TEST(Accountant, DeltaCapOfZeroRejectsAnyDelta) {
  BudgetAccountant acc({10.0, 0.0});
  EXPECT_THROW(acc.Spend("d", {0.1, 1e-9}), Error);
  EXPECT_TRUE(acc.ledger().empty());
}

TEST(Accountant, InvalidBudgetsAreRejected) {
  BudgetAccountant acc;
  EXPECT_THROW(acc.Spend("neg", {-1.0, 0.0}), Error);
  EXPECT_THROW(acc.Spend("delta", {0.1, 2.0}), Error);
  EXPECT_THROW(BudgetAccountant({-1.0, 0.0}), Error);
}

TEST(Accountant, ReportRoundTrip) {
  BudgetAccountant acc({3.0, 0.0});
  acc.Spend("model", {1.0, 0.0});
  acc.Spend("publish:dp_cluster", {1.0, 0.0});
  const auto back = BudgetAccountant::FromReport(acc.Report());
  EXPECT_EQ(back.Report(), acc.Report());
  EXPECT_EQ(back.cap(), acc.cap());
  const auto uncapped = BudgetAccountant::FromReport(BudgetAccountant().Report());
  EXPECT_TRUE(std::isinf(uncapped.cap().epsilon));
}

}  // namespace
}  // namespace privrecourse
