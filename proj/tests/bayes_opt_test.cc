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

#include "tracesynth/bayes_opt.h"

#include <cmath>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace tracesynth {
namespace {

using ::testing::HasSubstr;

// Smooth bowl with its minimum at w* = (0.1, 0.2, 0.3, 0.4).
absl::StatusOr<std::vector<double>> Bowl(const BudgetWeights& w, uint64_t) {
  const std::array<double, 4> target = {0.1, 0.2, 0.3, 0.4};
  double e = 0;
  for (int i = 0; i < 4; ++i) e += (w[i] - target[i]) * (w[i] - target[i]);
  return std::vector<double>{e, e};
}

OptimizerConfig SmallConfig(int explorations, int iterations) {
  OptimizerConfig c;
  c.explorations = explorations;
  c.iterations = iterations;
  c.seed = 17;
  c.random_candidates = 300;
  c.gp.restarts = 3;
  c.gp.max_evaluations = 60;
  return c;
}

TEST(ToSimplexTest, Examples) {
  BudgetWeights w = *ToSimplex({{1, 1, 1, 1}});
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(w[i], 0.25);
  w = *ToSimplex({{1, 2, 3, 4}});
  EXPECT_NEAR(w[0], 0.1, 1e-15);
  EXPECT_NEAR(w[3], 0.4, 1e-15);
  absl::StatusOr<BudgetWeights> bad = ToSimplex({{0, 1, 1, 1}});
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("v1"));
  EXPECT_FALSE(ToSimplex({{1, -2, 1, 1}}).ok());
}

TEST(OptimizerConfigTest, Defaults) {
  OptimizerConfig c;
  EXPECT_EQ(c.explorations, 100);
  EXPECT_EQ(c.iterations, 100);
  OptimizationState s{c};
  EXPECT_EQ(s.planned(), 200);
  EXPECT_TRUE(ValidateOptimizerConfig(c).ok());
  c.trials = 0;
  EXPECT_FALSE(ValidateOptimizerConfig(c).ok());
}

// Property: random and perturbed points are valid weights.
TEST(SimplexSamplingTest, AlwaysValid) {
  Rng rng(3);
  for (int i = 0; i < 5000; ++i) {
    BudgetWeights w = RandomSimplexPoint(rng);
    BudgetWeights p = PerturbWeights(w, 0.3, rng);
    for (const BudgetWeights* v : {&w, &p}) {
      double sum = 0;
      for (double x : v->values()) {
        ASSERT_GT(x, 0.0);
        ASSERT_LT(x, 1.0);
        sum += x;
      }
      ASSERT_NEAR(sum, 1.0, 1e-9);
      ASSERT_TRUE(BudgetWeights::Create(v->values()).ok());
    }
  }
}

TEST(OptimizeTest, ExplorationOnly) {
  std::vector<Observation> seen;
  absl::StatusOr<OptimizationState> s = Optimize(
      Bowl, SmallConfig(7, 0), [&](const Observation& o) { seen.push_back(o); });
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_EQ(s->observations.size(), 7u);
  EXPECT_EQ(seen.size(), 7u);
  for (const Observation& o : seen) EXPECT_EQ(o.phase, Phase::kExploration);
}

TEST(OptimizeTest, SinkSeesScheduleInOrder) {
  std::vector<Observation> seen;
  OptimizationState s = *Optimize(Bowl, SmallConfig(5, 5), [&](const Observation& o) {
    seen.push_back(o);
  });
  ASSERT_EQ(seen.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(seen[i].iteration, i + 1);
    EXPECT_EQ(seen[i].phase, i < 5 ? Phase::kExploration : Phase::kOptimization);
    EXPECT_EQ(seen[i].trial_errors.size(), 2u);
  }
  EXPECT_EQ(s.completed_explorations, 5);
  EXPECT_EQ(s.completed_iterations, 5);
}

TEST(OptimizeTest, FindsBowlMinimum) {
  OptimizationState s = *Optimize(Bowl, SmallConfig(15, 25));
  ASSERT_TRUE(s.best.has_value());
  // Oracle: the best random exploration point.
  double best_explore = 1e9;
  for (int i = 0; i < 15; ++i) {
    best_explore = std::min(best_explore, s.observations[i].error);
  }
  EXPECT_LE(s.best->error, best_explore);
  EXPECT_LT(s.best->error, 5e-3);
}

// Property: the incumbent never gets worse and is the minimum seen.
TEST(OptimizeTest, IncumbentIsRunningMinimum) {
  double running = 1e9;
  std::vector<double> best_so_far;
  OptimizationState s = *Optimize(Bowl, SmallConfig(6, 6), [&](const Observation& o) {
    running = std::min(running, o.error);
    best_so_far.push_back(running);
  });
  for (size_t i = 1; i < best_so_far.size(); ++i) {
    EXPECT_LE(best_so_far[i], best_so_far[i - 1]);
  }
  EXPECT_EQ(s.best->error, running);
}

TEST(OptimizeTest, EvaluationSeedsFollowSchedule) {
  std::vector<uint64_t> seeds;
  auto record = [&](const BudgetWeights& w, uint64_t seed) {
    seeds.push_back(seed);
    return Bowl(w, seed);
  };
  ASSERT_TRUE(Optimize(record, SmallConfig(3, 2)).ok());
  ASSERT_EQ(seeds.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(seeds[k], DeriveSeed(17, k + 1)) << k;
}

TEST(OptimizeTest, DeterministicForSeed) {
  OptimizationState a = *Optimize(Bowl, SmallConfig(4, 4));
  OptimizationState b = *Optimize(Bowl, SmallConfig(4, 4));
  ASSERT_EQ(a.observations.size(), b.observations.size());
  for (size_t i = 0; i < a.observations.size(); ++i) {
    EXPECT_EQ(a.observations[i].weights.values(), b.observations[i].weights.values());
  }
}

TEST(OptimizeTest, SkipsOccasionalFailures) {
  int calls = 0;
  auto flaky = [&](const BudgetWeights& w, uint64_t seed)
      -> absl::StatusOr<std::vector<double>> {
    if (++calls % 5 == 0) return absl::InternalError("boom");
    return Bowl(w, seed);
  };
  int sunk = 0;
  OptimizationState s =
      *Optimize(flaky, SmallConfig(5, 5), [&](const Observation&) { ++sunk; });
  EXPECT_EQ(s.failures, 2);
  EXPECT_EQ(sunk, 8);
  EXPECT_EQ(s.Successful().size(), 8u);
  EXPECT_EQ(s.observations.size(), 10u);
}

TEST(OptimizeTest, AbortsWhenTooManyFail) {
  int calls = 0;
  auto flaky = [&](const BudgetWeights& w, uint64_t seed)
      -> absl::StatusOr<std::vector<double>> {
    if (++calls % 2 == 0) return absl::InternalError("boom");
    return Bowl(w, seed);
  };
  absl::StatusOr<OptimizationState> s = Optimize(flaky, SmallConfig(5, 5));
  ASSERT_FALSE(s.ok());
  EXPECT_THAT(s.status().message(), HasSubstr("boom"));
  EXPECT_THAT(s.status().message(), HasSubstr("20%"));
}

}  // namespace
}  // namespace tracesynth
