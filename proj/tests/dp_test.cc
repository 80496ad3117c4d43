// Copyright 2026 The Tracesynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "tracesynth/dp.h"

#include <cmath>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "tracesynth/random.h"

namespace tracesynth {
namespace {

using ::testing::HasSubstr;

TEST(LaplaceTest, MedianIsZero) {
  EXPECT_EQ(LaplaceFromUniform(0.5, 1.0), 0.0);
  EXPECT_EQ(LaplaceFromUniform(0.5, 7.0), 0.0);
}

TEST(LaplaceTest, InverseCdfClosedForm) {
  // Oracle: the Laplace(0, b) quantile at u > 1/2 is -b ln(2(1 - u)).
  EXPECT_NEAR(LaplaceFromUniform(0.9, 1.0), -std::log(0.2), 1e-12);
  EXPECT_NEAR(LaplaceFromUniform(0.9, 1.0), 1.60944, 1e-5);
  for (double u : {0.01, 0.2, 0.4, 0.6, 0.75, 0.999}) {
    const double b = 2.5;
    const double expected =
        u < 0.5 ? b * std::log(2 * u) : -b * std::log(2 * (1 - u));
    EXPECT_NEAR(LaplaceFromUniform(u, b), expected, 1e-12) << u;
  }
}

TEST(LaplaceTest, AntisymmetricInU) {
  for (double u : {0.05, 0.3, 0.45}) {
    EXPECT_NEAR(LaplaceFromUniform(u, 3), -LaplaceFromUniform(1 - u, 3), 1e-12);
  }
}

TEST(LaplaceTest, NonPositiveScaleIsError) {
  Rng rng(1);
  EXPECT_EQ(LaplaceNoise(0.0, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_FALSE(LaplaceNoise(-1.0, rng).ok());
  EXPECT_FALSE(LaplaceNoise(std::nan(""), rng).ok());
  EXPECT_TRUE(LaplaceNoise(1.0, rng).ok());
}

TEST(LaplaceTest, EmpiricalMomentsAtScaleTwo) {
  Rng rng(2021);
  constexpr int kN = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < kN; ++i) {
    const double x = *LaplaceNoise(2.0, rng);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / kN;
  const double var = sum2 / kN - mean * mean;
  EXPECT_GE(mean, -0.04);
  EXPECT_LE(mean, 0.04);
  EXPECT_GE(var, 7.6);
  EXPECT_LE(var, 8.4);
}

// Property: the mean of 1e5 noisy copies of c lies in the CLT band
// c +- 5 * b * sqrt(2) / sqrt(1e5).
TEST(LaplaceTest, NoisyCountSanityBand) {
  constexpr int kN = 100000;
  for (double c : {0.0, 3.0, 250.0}) {
    for (double b : {0.5, 1.0, 4.0}) {
      Rng rng(DeriveSeed(static_cast<uint64_t>(c * 10), static_cast<uint64_t>(b * 10)));
      double sum = 0;
      for (int i = 0; i < kN; ++i) sum += c + SampleLaplace(b, rng);
      const double band = 5 * b * std::sqrt(2.0) / std::sqrt(double{kN});
      EXPECT_NEAR(sum / kN, c, band) << "c=" << c << " b=" << b;
    }
  }
}

TEST(LaplaceTest, DeterministicForSeed) {
  Rng a(77), b(77);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(*LaplaceNoise(1.5, a), *LaplaceNoise(1.5, b));
  }
}

TEST(BudgetWeightsTest, Valid) {
  absl::StatusOr<BudgetWeights> w = BudgetWeights::Create({0.1, 0.2, 0.3, 0.4});
  ASSERT_TRUE(w.ok());
  EXPECT_DOUBLE_EQ((*w)[Feature::kTrip], 0.3);
  EXPECT_EQ(BudgetWeights::Equal().values(),
            (std::array<double, 4>{0.25, 0.25, 0.25, 0.25}));
}

TEST(BudgetWeightsTest, SumNotOneNamesCondition) {
  absl::StatusOr<BudgetWeights> w = BudgetWeights::Create({0.5, 0.5, 0.5, 0.5});
  ASSERT_FALSE(w.ok());
  EXPECT_THAT(w.status().message(), HasSubstr("sum"));
}

TEST(BudgetWeightsTest, OpenIntervalBounds) {
  absl::StatusOr<BudgetWeights> zero = BudgetWeights::Create({0, 0.5, 0.25, 0.25});
  ASSERT_FALSE(zero.ok());
  EXPECT_THAT(zero.status().message(), HasSubstr("w1"));
  EXPECT_FALSE(BudgetWeights::Create({1, 0, 0, 0}).ok());
  EXPECT_FALSE(BudgetWeights::Create({-0.1, 0.4, 0.4, 0.3}).ok());
}

TEST(SplitBudgetTest, EqualWeights) {
  absl::StatusOr<BudgetAllocation> a = SplitBudget(1.0, BudgetWeights::Equal());
  ASSERT_TRUE(a.ok());
  for (int i = 0; i < kNumFeatures; ++i) EXPECT_DOUBLE_EQ(a->per_feature[i], 0.25);
  EXPECT_EQ(a->epsilon_total, 1.0);
}

TEST(SplitBudgetTest, ScalarMultiplication) {
  absl::StatusOr<BudgetAllocation> a =
      SplitBudget(2.0, *BudgetWeights::Create({0.1, 0.2, 0.3, 0.4}));
  ASSERT_TRUE(a.ok());
  EXPECT_NEAR((*a)[Feature::kGrid], 0.2, 1e-15);
  EXPECT_NEAR((*a)[Feature::kMarkov], 0.4, 1e-15);
  EXPECT_NEAR((*a)[Feature::kTrip], 0.6, 1e-15);
  EXPECT_NEAR((*a)[Feature::kLength], 0.8, 1e-15);
}

TEST(SplitBudgetTest, NonPositiveEpsilonIsError) {
  EXPECT_FALSE(SplitBudget(0.0, BudgetWeights::Equal()).ok());
  EXPECT_FALSE(SplitBudget(-1.0, BudgetWeights::Equal()).ok());
}

// Property: parts never sum above epsilon and are within 1e-9 of it.
TEST(SplitBudgetTest, NeverExceedsEpsilon) {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    std::array<double, 4> v;
    double sum = 0;
    for (double& x : v) sum += (x = rng.Uniform(0.01, 1));
    // Build the weights so they sum to 1 within rounding.
    for (double& x : v) x /= sum;
    v[3] = 1.0 - v[0] - v[1] - v[2];
    absl::StatusOr<BudgetWeights> w = BudgetWeights::Create(v);
    if (!w.ok()) continue;
    const double eps = rng.Uniform(1e-3, 100);
    absl::StatusOr<BudgetAllocation> a = SplitBudget(eps, *w);
    ASSERT_TRUE(a.ok());
    double total = 0;
    for (double part : a->per_feature) total += part;
    EXPECT_LE(total, eps);
    EXPECT_NEAR(total, eps, 1e-9 * std::max(1.0, eps));
  }
}

TEST(PrivacyLedgerTest, TotalIsSumOfEntries) {
  PrivacyLedger ledger;
  ledger.Record("grid", 0.25);
  ledger.Record("markov", 0.5);
  PrivacyLedger other;
  other.Record("trip", 0.125);
  ledger.Append(other);
  ASSERT_EQ(ledger.entries().size(), 3u);
  EXPECT_EQ(ledger.entries()[2].label, "trip");
  EXPECT_DOUBLE_EQ(ledger.total(), 0.875);
}

}  // namespace
}  // namespace tracesynth
