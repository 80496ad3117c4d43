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

// End-to-end runs: budget split -> synopsis -> synthetic dataset, the
// objective the optimizer minimizes, and the optimize-then-release flow
// shared by the CLI and the service.

#ifndef TRACESYNTH_PIPELINE_H_
#define TRACESYNTH_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <memory>

#include "absl/status/statusor.h"
#include "tracesynth/bayes_opt.h"
#include "tracesynth/dp.h"
#include "tracesynth/metrics.h"
#include "tracesynth/synopsis.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {

inline constexpr int kDefaultGridN = 4;

struct SynthesisResult {
  Dataset synthetic;
  PrivacyLedger ledger;
  int cell_count = 0;
};

// One pipeline run. `traces` defaults to |real|. Reproducible from
// (real, epsilon, weights, grid_n, seed).
absl::StatusOr<SynthesisResult> Synthesize(const Dataset& real, double epsilon,
                                           const BudgetWeights& weights,
                                           int grid_n, uint64_t seed,
                                           int traces = 0);

// Err(D, D_syn) averaged over `trials` independent pipeline runs. Trial t
// uses DeriveSeed(seed, t). Each trial's epsilon is charged to `ledger`.
class PipelineObjective {
 public:
  PipelineObjective(const Dataset& real, const MetricEvaluator& evaluator,
                    double epsilon, MetricId metric, int grid_n, int trials);

  absl::StatusOr<std::vector<double>> TrialErrors(const BudgetWeights& weights,
                                                  uint64_t seed);

  Objective AsObjective();

  const PrivacyLedger& ledger() const { return ledger_; }

 private:
  const Dataset& real_;
  const MetricEvaluator& evaluator_;
  double epsilon_;
  MetricId metric_;
  int grid_n_;
  int trials_;
  int evaluations_ = 0;
  PrivacyLedger ledger_;
};

absl::StatusOr<Observation> EvaluateObjective(
    const Dataset& real, double epsilon, const BudgetWeights& weights,
    const MetricId& metric, int trials, uint64_t seed,
    int grid_n = kDefaultGridN, PrivacyLedger* ledger = nullptr);

struct OptimizationRequest {
  double epsilon = 1.0;
  MetricId metric = BuiltinMetric::kQuery;
  int grid_n = kDefaultGridN;
  OptimizerConfig optimizer;
  MetricConfig metrics;
};

struct OptimizationResult {
  OptimizationState state;
  BudgetWeights best_weights = BudgetWeights::Equal();
  // Regenerated once at the best weights with a fresh seed, rounded to file
  // precision so `report` describes exactly what gets written out.
  Dataset synthetic;
  uint64_t release_seed = 0;
  MetricReport report;
  // Every optimization trial plus the final release.
  PrivacyLedger ledger;
};

uint64_t ReleaseSeed(uint64_t seed);

// `on_release` runs after the search, before the final regeneration.
absl::StatusOr<OptimizationResult> OptimizeAndSynthesize(
    const Dataset& real, const OptimizationRequest& request,
    const ProgressSink& sink = {},
    const std::function<void()>& on_release = {});

}  // namespace tracesynth

#endif  // TRACESYNTH_PIPELINE_H_
