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

#include "tracesynth/gaussian_process.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tracesynth {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd KernelMatrix(const Eigen::MatrixXd& inputs,
                             const GpHyperparameters& hyper) {
  const Eigen::Index n = inputs.rows();
  const Eigen::MatrixXd scaled =
      inputs * hyper.length_scales.cwiseInverse().asDiagonal();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = hyper.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (scaled.row(i) - scaled.row(j)).norm();
      const double v = hyper.signal_variance *
                       (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) *
                       std::exp(-kSqrt5 * r);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

// Parameter vector layout: log length-scales, log signal variance, log noise
// variance.
Eigen::VectorXd Pack(const GpHyperparameters& h) {
  const Eigen::Index d = h.length_scales.size();
  Eigen::VectorXd theta(d + 2);
  theta.head(d) = h.length_scales.array().log().matrix();
  theta(d) = std::log(h.signal_variance);
  theta(d + 1) = std::log(h.noise_variance);
  return theta;
}

struct LogBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

LogBox MakeBox(Eigen::Index dims, const GpFitOptions& o) {
  LogBox box{Eigen::VectorXd(dims + 2), Eigen::VectorXd(dims + 2)};
  box.lower.head(dims).setConstant(std::log(o.min_length_scale));
  box.upper.head(dims).setConstant(std::log(o.max_length_scale));
  box.lower(dims) = std::log(o.min_signal_variance);
  box.upper(dims) = std::log(o.max_signal_variance);
  box.lower(dims + 1) = std::log(o.min_noise_variance);
  box.upper(dims + 1) = std::log(o.max_noise_variance);
  return box;
}

GpHyperparameters Unpack(const Eigen::VectorXd& theta, const LogBox& box) {
  const Eigen::VectorXd t = theta.cwiseMax(box.lower).cwiseMin(box.upper);
  const Eigen::Index d = t.size() - 2;
  GpHyperparameters h;
  h.length_scales = t.head(d).array().exp().matrix();
  h.signal_variance = std::exp(t(d));
  h.noise_variance = std::exp(t(d + 1));
  return h;
}

// Minimizes f over R^n starting from x0 with a budget of evaluations.
template <typename F>
Eigen::VectorXd NelderMead(F&& f, const Eigen::VectorXd& x0, double step,
                           int max_evaluations, double& best_value) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) simplex[i + 1](i) += step;
  int evaluations = 0;
  for (Eigen::Index i = 0; i <= n; ++i) {
    values[i] = f(simplex[i]);
    ++evaluations;
  }
  std::vector<int> order(n + 1);
  while (evaluations < max_evaluations) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return values[a] < values[b]; });
    const int best = order[0];
    const int worst = order[n];
    const int second_worst = order[n - 1];
    if (std::abs(values[worst] - values[best]) < 1e-7) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double fr = f(reflected);
    ++evaluations;
    if (fr < values[best]) {
      const Eigen::VectorXd expanded =
          centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(expanded);
      ++evaluations;
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
    } else if (fr < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = fr;
    } else {
      const bool outside = fr < values[worst];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = f(contracted);
      ++evaluations;
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          values[i] = f(simplex[i]);
          ++evaluations;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (values[i] < values[best]) best = i;
  }
  best_value = values[best];
  return simplex[best];
}

double StandardNormalPdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double StandardNormalCdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace

double Matern52(const Eigen::Ref<const Eigen::VectorXd>& a,
                const Eigen::Ref<const Eigen::VectorXd>& b,
                const GpHyperparameters& hyper) {
  const double r =
      (a - b).cwiseQuotient(hyper.length_scales).norm();
  return hyper.signal_variance * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) *
         std::exp(-kSqrt5 * r);
}

double GpModel::LogMarginalLikelihood(const Eigen::MatrixXd& inputs,
                                      const Eigen::VectorXd& standardized,
                                      const GpHyperparameters& hyper,
                                      double jitter) {
  Eigen::MatrixXd k = KernelMatrix(inputs, hyper);
  k.diagonal().array() += hyper.noise_variance + jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return kNegInf;
  const Eigen::VectorXd alpha = llt.solve(standardized);
  const double log_det =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(inputs.rows());
  const double lml = -0.5 * standardized.dot(alpha) - 0.5 * log_det -
                     0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(lml) ? lml : kNegInf;
}

absl::StatusOr<GpModel> GpModel::FitWithHyperparameters(
    const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
    const GpHyperparameters& hyper, const GpFitOptions& options) {
  if (inputs.rows() < 2 || inputs.rows() != targets.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("GP fit needs >= 2 matching observations, got ",
                     inputs.rows(), " inputs and ", targets.size(),
                     " targets"));
  }
  if (hyper.length_scales.size() != inputs.cols()) {
    return absl::InvalidArgumentError("length-scale dimension mismatch");
  }
  GpModel model;
  model.inputs_ = inputs;
  model.hyper_ = hyper;
  model.y_mean_ = targets.mean();
  const double var =
      (targets.array() - model.y_mean_).square().sum() /
      static_cast<double>(targets.size());
  model.y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd standardized =
      (targets.array() - model.y_mean_) / model.y_scale_;

  Eigen::MatrixXd k = KernelMatrix(inputs, hyper);
  k.diagonal().array() += hyper.noise_variance;
  for (double jitter = options.initial_jitter;
       jitter <= options.max_jitter * (1 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    model.chol_.compute(kj);
    if (model.chol_.info() == Eigen::Success) {
      model.jitter_ = jitter;
      model.alpha_ = model.chol_.solve(standardized);
      model.lml_ = LogMarginalLikelihood(inputs, standardized, hyper, jitter);
      return model;
    }
  }
  return absl::FailedPreconditionError(absl::StrCat(
      "kernel matrix is singular even with jitter ", options.max_jitter));
}

absl::StatusOr<GpModel> GpModel::Fit(
    const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets, Rng& rng,
    const GpFitOptions& options,
    const std::optional<GpHyperparameters>& warm_start) {
  if (inputs.rows() < 2 || inputs.rows() != targets.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("GP fit needs >= 2 matching observations, got ",
                     inputs.rows(), " inputs and ", targets.size(),
                     " targets"));
  }
  const Eigen::Index dims = inputs.cols();
  const double mean = targets.mean();
  const double var = (targets.array() - mean).square().sum() /
                     static_cast<double>(targets.size());
  const double scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd standardized = (targets.array() - mean) / scale;
  const LogBox box = MakeBox(dims, options);

  auto objective = [&](const Eigen::VectorXd& theta) {
    // Out-of-box points are penalized by their distance to the box so the
    // simplex is pulled back inside.
    const Eigen::VectorXd clipped =
        theta.cwiseMax(box.lower).cwiseMin(box.upper);
    const double excess = (theta - clipped).squaredNorm();
    const double lml = LogMarginalLikelihood(inputs, standardized,
                                             Unpack(clipped, box),
                                             options.initial_jitter);
    if (!std::isfinite(lml)) return std::numeric_limits<double>::max() / 4;
    return -lml + 1e3 * excess;
  };

  Eigen::VectorXd best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    Eigen::VectorXd start(dims + 2);
    if (restart == 0) {
      GpHyperparameters initial;
      if (warm_start.has_value() &&
          warm_start->length_scales.size() == dims) {
        initial = *warm_start;
      } else {
        initial.length_scales = Eigen::VectorXd::Constant(dims, 0.3);
        initial.signal_variance = 1.0;
        initial.noise_variance = 0.1;
      }
      start = Pack(initial).cwiseMax(box.lower).cwiseMin(box.upper);
    } else {
      for (Eigen::Index i = 0; i < start.size(); ++i) {
        start(i) = rng.Uniform(box.lower(i), box.upper(i));
      }
    }
    double value = 0.0;
    Eigen::VectorXd theta =
        NelderMead(objective, start, 0.5, options.max_evaluations, value);
    if (value < best_value) {
      best_value = value;
      best_theta = std::move(theta);
    }
  }
  return FitWithHyperparameters(inputs, targets, Unpack(best_theta, box),
                                options);
}

GpPrediction GpModel::PredictStandardized(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::Index n = inputs_.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k_star(i) = Matern52(inputs_.row(i).transpose(), x, hyper_);
  }
  GpPrediction p;
  p.mean = k_star.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(k_star);
  p.variance = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return p;
}

GpPrediction GpModel::Predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  GpPrediction p = PredictStandardized(x);
  p.mean = y_mean_ + y_scale_ * p.mean;
  p.variance *= y_scale_ * y_scale_;
  return p;
}

double ExpectedImprovement(double mean, double stddev, double best) {
  const double improvement = best - mean;
  if (!(stddev > 1e-12)) return std::max(0.0, improvement);
  const double z = improvement / stddev;
  const double ei =
      improvement * StandardNormalCdf(z) + stddev * StandardNormalPdf(z);
  return std::max(0.0, ei);
}

double ExpectedImprovement(const GpModel& model,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           double best) {
  const GpPrediction p = model.Predict(x);
  return ExpectedImprovement(p.mean, std::sqrt(p.variance), best);
}

}  // namespace tracesynth
