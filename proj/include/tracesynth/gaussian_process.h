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

#ifndef TRACESYNTH_GAUSSIAN_PROCESS_H_
#define TRACESYNTH_GAUSSIAN_PROCESS_H_

#include <optional>

#include "Eigen/Cholesky"
#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "tracesynth/random.h"

namespace tracesynth {

// Matern-5/2 kernel with one length-scale per input dimension.
struct GpHyperparameters {
  Eigen::VectorXd length_scales;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;
};

double Matern52(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b,
                const GpHyperparameters& hyper);

struct GpFitOptions {
  int restarts = 8;
  // Nelder-Mead evaluation budget per restart.
  int max_evaluations = 120;
  double initial_jitter = 1e-8;
  double max_jitter = 1e-4;
  // Search box, natural units.
  double min_length_scale = 1e-2;
  double max_length_scale = 10.0;
  double min_signal_variance = 5e-2;
  double max_signal_variance = 20.0;
  double min_noise_variance = 1e-6;
  double max_noise_variance = 1.0;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Zero-mean GP regression on standardized targets. Predictions are reported
// in the original target units.
class GpModel {
 public:
  // Hyperparameters maximize the log marginal likelihood over a multi-start
  // Nelder-Mead search in log space. `warm_start`, if given, seeds the first
  // restart.
  static absl::StatusOr<GpModel> Fit(
      const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, Rng& rng,
      const GpFitOptions& options = {},
      const std::optional<GpHyperparameters>& warm_start = std::nullopt);

  // Conditions on fixed hyperparameters.
  static absl::StatusOr<GpModel> FitWithHyperparameters(
      const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
      const GpHyperparameters& hyper, const GpFitOptions& options = {});

  // Log marginal likelihood of standardized targets, or -infinity if the
  // kernel matrix cannot be factored.
  static double LogMarginalLikelihood(const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& standardized,
                                      const GpHyperparameters& hyper,
                                      double jitter);

  // Latent-function posterior (observation noise excluded).
  GpPrediction Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  GpPrediction PredictStandardized(
      const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  double target_mean() const { return y_mean_; }
  double target_scale() const { return y_scale_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }

 private:
  GpModel() = default;

  Eigen::MatrixXd inputs_;
  GpHyperparameters hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

// Closed-form expected improvement for minimization given posterior moments.
double ExpectedImprovement(double mean, double stddev, double best);

double ExpectedImprovement(const GpModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           double best);

}  // namespace tracesynth

#endif  // TRACESYNTH_GAUSSIAN_PROCESS_H_
