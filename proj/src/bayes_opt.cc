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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tracesynth {

namespace {

// Stream ids for the optimizer's own randomness, disjoint from evaluation
// indices (which start at 1).
constexpr uint64_t kExplorationStream = 0xE0000000ULL;
constexpr uint64_t kAcquisitionStream = 0xA0000000ULL;
constexpr uint64_t kSurrogateStream = 0x60000000ULL;
constexpr double kMinRaw = 1e-3;

BudgetWeights Normalize(std::array<double, 4> v) {
  const double sum = v[0] + v[1] + v[2] + v[3];
  for (double& x : v) x /= sum;
  // Land the sum on 1 within rounding by absorbing the residual in the
  // largest coordinate.
  const int largest =
      static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  double others = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (i != largest) others += v[i];
  }
  v[largest] = 1.0 - others;
  absl::StatusOr<BudgetWeights> w = BudgetWeights::Create(v);
  return w.ok() ? *w : BudgetWeights::Equal();
}

}  // namespace

absl::StatusOr<BudgetWeights> ToSimplex(const RawParams& raw) {
  for (int i = 0; i < 4; ++i) {
    if (!(raw.v[i] > 0) || !std::isfinite(raw.v[i])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "raw parameter v", i + 1, " = ", raw.v[i], " must be > 0"));
    }
  }
  const double sum = raw.v[0] + raw.v[1] + raw.v[2] + raw.v[3];
  std::array<double, 4> w;
  for (int i = 0; i < 4; ++i) w[i] = raw.v[i] / sum;
  for (double x : w) {
    if (!(x > 0 && x < 1)) {
      return absl::InvalidArgumentError(
          "raw parameters too unbalanced to yield weights strictly in (0, 1)");
    }
  }
  return Normalize(w);
}

const char* PhaseName(Phase phase) {
  return phase == Phase::kExploration ? "exploration" : "optimization";
}

absl::Status ValidateOptimizerConfig(const OptimizerConfig& config) {
  if (config.explorations < 2) {
    return absl::InvalidArgumentError("explorations must be >= 2");
  }
  if (config.iterations < 0) {
    return absl::InvalidArgumentError("iterations must be >= 0");
  }
  if (config.trials < 1) {
    return absl::InvalidArgumentError("trials must be >= 1");
  }
  if (config.random_candidates < 1 || config.incumbent_perturbations < 0) {
    return absl::InvalidArgumentError("candidate counts out of range");
  }
  return absl::OkStatus();
}

std::vector<Observation> OptimizationState::Successful() const {
  std::vector<Observation> ok;
  for (const Observation& o : observations) {
    if (!o.failed) ok.push_back(o);
  }
  return ok;
}

BudgetWeights RandomSimplexPoint(Rng& rng) {
  std::array<double, 4> v;
  for (double& x : v) x = rng.Uniform(0.01, 1.0);
  return Normalize(v);
}

BudgetWeights PerturbWeights(const BudgetWeights& w, double sigma, Rng& rng) {
  std::array<double, 4> v;
  for (int i = 0; i < 4; ++i) {
    v[i] = std::max(kMinRaw, w[i] + sigma * rng.StandardNormal());
  }
  return Normalize(v);
}

Eigen::VectorXd SurrogateInput(const BudgetWeights& w) {
  Eigen::VectorXd x(3);
  x << w[0], w[1], w[2];
  return x;
}

Observation MakeObservation(const BudgetWeights& weights,
                            std::vector<double> trial_errors, Phase phase,
                            int iteration) {
  Observation o;
  o.weights = weights;
  o.error = trial_errors.empty()
                ? 0.0
                : std::accumulate(trial_errors.begin(), trial_errors.end(),
                                  0.0) /
                      static_cast<double>(trial_errors.size());
  o.trial_errors = std::move(trial_errors);
  o.phase = phase;
  o.iteration = iteration;
  return o;
}

namespace {

// Chooses the next point to evaluate by maximizing expected improvement over
// a candidate set. Returns nullopt when no surrogate can be fit.
std::optional<BudgetWeights> ProposeNext(OptimizationState& state,
                                         Rng& acquisition_rng,
                                         Rng& surrogate_rng) {
  const std::vector<Observation> ok = state.Successful();
  if (ok.size() < 2) return std::nullopt;
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(ok.size()), 3);
  Eigen::VectorXd targets(static_cast<Eigen::Index>(ok.size()));
  for (size_t i = 0; i < ok.size(); ++i) {
    inputs.row(static_cast<Eigen::Index>(i)) =
        SurrogateInput(ok[i].weights).transpose();
    targets(static_cast<Eigen::Index>(i)) = ok[i].error;
  }
  absl::StatusOr<GpModel> model =
      GpModel::Fit(inputs, targets, surrogate_rng, state.config.gp,
                   state.last_hyperparameters);
  if (!model.ok()) return std::nullopt;
  state.last_hyperparameters = model->hyperparameters();

  // Noisy objective: the incumbent is the lowest posterior mean among
  // observed points rather than the lowest (noise-favoured) raw error.
  double incumbent = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    incumbent = std::min(incumbent, model->Predict(inputs.row(i).transpose()).mean);
  }

  std::vector<BudgetWeights> candidates;
  candidates.reserve(state.config.random_candidates +
                     state.config.incumbent_perturbations);
  for (int i = 0; i < state.config.random_candidates; ++i) {
    candidates.push_back(RandomSimplexPoint(acquisition_rng));
  }
  for (int i = 0; i < state.config.incumbent_perturbations; ++i) {
    candidates.push_back(PerturbWeights(state.best->weights,
                                        state.config.perturbation_sigma,
                                        acquisition_rng));
  }
  size_t argmax = 0;
  double best_ei = -1.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double ei =
        ExpectedImprovement(*model, SurrogateInput(candidates[i]), incumbent);
    if (ei > best_ei) {
      best_ei = ei;
      argmax = i;
    }
  }
  return candidates[argmax];
}

}  // namespace

absl::StatusOr<OptimizationState> Optimize(const Objective& objective,
                                           const OptimizerConfig& config,
                                           const ProgressSink& sink) {
  if (absl::Status s = ValidateOptimizerConfig(config); !s.ok()) return s;
  if (!objective) return absl::InvalidArgumentError("objective is empty");

  OptimizationState state;
  state.config = config;
  Rng exploration_rng(DeriveSeed(config.seed, kExplorationStream));
  Rng acquisition_rng(DeriveSeed(config.seed, kAcquisitionStream));
  Rng surrogate_rng(DeriveSeed(config.seed, kSurrogateStream));
  const int planned = state.planned();
  std::string last_failure;

  for (int iteration = 1; iteration <= planned; ++iteration) {
    const Phase phase = iteration <= config.explorations ? Phase::kExploration
                                                         : Phase::kOptimization;
    BudgetWeights weights = BudgetWeights::Equal();
    if (phase == Phase::kExploration) {
      weights = RandomSimplexPoint(exploration_rng);
    } else {
      std::optional<BudgetWeights> proposal =
          state.best.has_value()
              ? ProposeNext(state, acquisition_rng, surrogate_rng)
              : std::nullopt;
      weights = proposal.has_value() ? *proposal
                                     : RandomSimplexPoint(acquisition_rng);
    }

    absl::StatusOr<std::vector<double>> errors = objective(
        weights, DeriveSeed(config.seed, static_cast<uint64_t>(iteration)));
    if (errors.ok() && errors->empty()) {
      errors = absl::InternalError("objective returned no trial errors");
    }
    Observation obs =
        errors.ok() ? MakeObservation(weights, *std::move(errors), phase,
                                      iteration)
                    : MakeObservation(weights, {}, phase, iteration);
    if (!errors.ok()) {
      obs.failed = true;
      obs.failure = std::string(errors.status().message());
      last_failure = obs.failure;
      ++state.failures;
    }
    state.observations.push_back(obs);
    if (phase == Phase::kExploration) {
      ++state.completed_explorations;
    } else {
      ++state.completed_iterations;
    }

    if (obs.failed) {
      if (state.failures > config.max_failure_fraction * planned) {
        return absl::AbortedError(absl::StrCat(
            "optimization aborted: ", state.failures, " of ", iteration,
            " evaluations failed (limit ", config.max_failure_fraction * 100,
            "% of ", planned, "); last failure: ", last_failure));
      }
      continue;
    }
    if (!state.best.has_value() || obs.error < state.best->error) {
      state.best = obs;
    }
    if (sink) sink(obs);
  }
  if (!state.best.has_value()) {
    return absl::AbortedError(
        absl::StrCat("no evaluation succeeded; last failure: ", last_failure));
  }
  return state;
}

}  // namespace tracesynth
