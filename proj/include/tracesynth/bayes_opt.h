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

// Bayesian optimization of the budget weights.
//
// The search runs in two phases. Exploration evaluates uniformly random
// points of the weight simplex. Optimization then repeatedly fits a GP
// surrogate (Matern-5/2, inputs w1..w3 since w4 is implied) to every
// successful observation and evaluates the candidate with the largest
// expected improvement among random simplex points and perturbations of the
// incumbent.

#ifndef TRACESYNTH_BAYES_OPT_H_
#define TRACESYNTH_BAYES_OPT_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "tracesynth/dp.h"
#include "tracesynth/gaussian_process.h"
#include "tracesynth/random.h"

namespace tracesynth {

// Unnormalized positive parameters; the optimizer's view of the simplex.
struct RawParams {
  std::array<double, 4> v = {1.0, 1.0, 1.0, 1.0};
};

absl::StatusOr<BudgetWeights> ToSimplex(const RawParams& raw);

enum class Phase { kExploration, kOptimization };

const char* PhaseName(Phase phase);

struct Observation {
  BudgetWeights weights = BudgetWeights::Equal();
  double error = 0.0;
  std::vector<double> trial_errors;
  Phase phase = Phase::kExploration;
  // 1-based position in the overall evaluation schedule.
  int iteration = 0;
  bool failed = false;
  std::string failure;
};

struct OptimizerConfig {
  int explorations = 100;
  int iterations = 100;
  int trials = 3;
  uint64_t seed = 0;
  int random_candidates = 1000;
  int incumbent_perturbations = 50;
  double perturbation_sigma = 0.05;
  double max_failure_fraction = 0.2;
  GpFitOptions gp;
};

absl::Status ValidateOptimizerConfig(const OptimizerConfig& config);

// Returns the per-trial errors of one evaluation at `weights`. Evaluation
// number k of a run receives DeriveSeed(config.seed, k).
using Objective = std::function<absl::StatusOr<std::vector<double>>(
    const BudgetWeights& weights, uint64_t evaluation_seed)>;

using ProgressSink = std::function<void(const Observation&)>;

struct OptimizationState {
  OptimizerConfig config;
  // Successful and failed evaluations in schedule order.
  std::vector<Observation> observations;
  std::optional<Observation> best;
  int completed_explorations = 0;
  int completed_iterations = 0;
  int failures = 0;
  std::optional<GpHyperparameters> last_hyperparameters;

  int planned() const { return config.explorations + config.iterations; }
  // Successful observations only.
  std::vector<Observation> Successful() const;
};

// Uniform-random simplex point: v ~ U(0.01, 1)^4, normalized.
BudgetWeights RandomSimplexPoint(Rng& rng);

// Incumbent perturbed by N(0, sigma^2) per coordinate, kept positive and
// renormalized.
BudgetWeights PerturbWeights(const BudgetWeights& w, double sigma, Rng& rng);

// Wraps an objective's trial errors into an Observation (error = mean).
Observation MakeObservation(const BudgetWeights& weights,
                            std::vector<double> trial_errors, Phase phase,
                            int iteration);

// Runs exploration then optimization. The sink sees each successful
// observation as soon as it completes. Fails if more than
// max_failure_fraction of the planned evaluations fail.
absl::StatusOr<OptimizationState> Optimize(const Objective& objective,
                                           const OptimizerConfig& config,
                                           const ProgressSink& sink = {});

// Input row used by the surrogate (w1, w2, w3).
Eigen::VectorXd SurrogateInput(const BudgetWeights& w);

}  // namespace tracesynth

#endif  // TRACESYNTH_BAYES_OPT_H_
