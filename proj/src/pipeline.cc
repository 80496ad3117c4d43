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

#include "tracesynth/pipeline.h"

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tracesynth/generator.h"

namespace tracesynth {

namespace {

constexpr uint64_t kSynopsisStream = 1;
constexpr uint64_t kGenerationStream = 2;
constexpr uint64_t kReleaseStream = 0x5E1EA5E;

}  // namespace

absl::StatusOr<SynthesisResult> Synthesize(const Dataset& real, double epsilon,
                                           const BudgetWeights& weights,
                                           int grid_n, uint64_t seed,
                                           int traces) {
  if (real.empty()) {
    return absl::InvalidArgumentError("empty dataset: nothing to synthesize");
  }
  absl::StatusOr<BudgetAllocation> allocation = SplitBudget(epsilon, weights);
  if (!allocation.ok()) return allocation.status();
  const Rng root(seed);
  Rng synopsis_rng = root.Fork(kSynopsisStream);
  absl::StatusOr<Synopsis> synopsis =
      BuildSynopsis(real, *allocation, grid_n, synopsis_rng);
  if (!synopsis.ok()) return synopsis.status();
  const int n = traces > 0 ? traces : static_cast<int>(real.cardinality());
  absl::StatusOr<Dataset> synthetic =
      SynthesizeDataset(*synopsis, n, root.Fork(kGenerationStream));
  if (!synthetic.ok()) return synthetic.status();
  return SynthesisResult{*std::move(synthetic), std::move(synopsis->ledger),
                         synopsis->grid.cell_count()};
}

PipelineObjective::PipelineObjective(const Dataset& real,
                                     const MetricEvaluator& evaluator,
                                     double epsilon, MetricId metric,
                                     int grid_n, int trials)
    : real_(real),
      evaluator_(evaluator),
      epsilon_(epsilon),
      metric_(std::move(metric)),
      grid_n_(grid_n),
      trials_(trials) {}

absl::StatusOr<std::vector<double>> PipelineObjective::TrialErrors(
    const BudgetWeights& weights, uint64_t seed) {
  if (trials_ < 1) return absl::InvalidArgumentError("trials must be >= 1");
  ++evaluations_;
  std::vector<double> errors;
  errors.reserve(trials_);
  for (int t = 0; t < trials_; ++t) {
    absl::StatusOr<SynthesisResult> run =
        Synthesize(real_, epsilon_, weights, grid_n_,
                   DeriveSeed(seed, static_cast<uint64_t>(t)));
    if (!run.ok()) {
      return absl::Status(run.status().code(),
                          absl::StrCat("trial ", t, ": ", run.status().message()));
    }
    ledger_.Record(absl::StrCat("evaluation ", evaluations_, " trial ", t),
                   epsilon_);
    absl::StatusOr<double> error = evaluator_.Evaluate(run->synthetic, metric_);
    if (!error.ok()) {
      return absl::Status(error.status().code(),
                          absl::StrCat("trial ", t, ": ", error.status().message()));
    }
    errors.push_back(*error);
  }
  return errors;
}

Objective PipelineObjective::AsObjective() {
  return [this](const BudgetWeights& w, uint64_t seed) {
    return TrialErrors(w, seed);
  };
}

absl::StatusOr<Observation> EvaluateObjective(
    const Dataset& real, double epsilon, const BudgetWeights& weights,
    const MetricId& metric, int trials, uint64_t seed, int grid_n,
    PrivacyLedger* ledger) {
  absl::StatusOr<std::unique_ptr<MetricEvaluator>> evaluator =
      MetricEvaluator::Create(real);
  if (!evaluator.ok()) return evaluator.status();
  PipelineObjective objective(real, **evaluator, epsilon, metric, grid_n,
                              trials);
  absl::StatusOr<std::vector<double>> errors =
      objective.TrialErrors(weights, seed);
  if (!errors.ok()) return errors.status();
  if (ledger != nullptr) ledger->Append(objective.ledger());
  return MakeObservation(weights, *std::move(errors), Phase::kExploration, 0);
}

uint64_t ReleaseSeed(uint64_t seed) { return DeriveSeed(seed, kReleaseStream); }

absl::StatusOr<OptimizationResult> OptimizeAndSynthesize(
    const Dataset& real, const OptimizationRequest& request,
    const ProgressSink& sink, const std::function<void()>& on_release) {
  absl::StatusOr<std::unique_ptr<MetricEvaluator>> evaluator =
      MetricEvaluator::Create(real, request.metrics);
  if (!evaluator.ok()) return evaluator.status();
  PipelineObjective objective(real, **evaluator, request.epsilon,
                              request.metric, request.grid_n,
                              request.optimizer.trials);
  absl::StatusOr<OptimizationState> state =
      Optimize(objective.AsObjective(), request.optimizer, sink);
  if (!state.ok()) return state.status();

  if (on_release) on_release();

  OptimizationResult result;
  result.best_weights = state->best->weights;
  result.state = *std::move(state);
  result.release_seed = ReleaseSeed(request.optimizer.seed);
  absl::StatusOr<SynthesisResult> release =
      Synthesize(real, request.epsilon, result.best_weights, request.grid_n,
                 result.release_seed);
  if (!release.ok()) return release.status();
  absl::StatusOr<Dataset> released = RoundTrip(release->synthetic);
  if (!released.ok()) return released.status();
  result.synthetic = *std::move(released);
  absl::StatusOr<MetricReport> report =
      (*evaluator)->EvaluateAll(result.synthetic);
  if (!report.ok()) return report.status();
  result.report = *std::move(report);
  result.ledger = objective.ledger();
  result.ledger.Record("release", request.epsilon);
  return result;
}

}  // namespace tracesynth
