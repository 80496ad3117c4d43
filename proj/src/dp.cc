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

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tracesynth {

double LaplaceFromUniform(double u, double scale) {
  const double centered = u - 0.5;
  if (centered == 0.0) return 0.0;
  const double sign = centered > 0 ? 1.0 : -1.0;
  return -sign * scale * std::log(1.0 - 2.0 * std::abs(centered));
}

absl::StatusOr<double> LaplaceNoise(double scale, Rng& rng) {
  if (!(scale > 0) || !std::isfinite(scale)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace scale must be positive and finite, got ", scale));
  }
  return SampleLaplace(scale, rng);
}

const char* FeatureName(Feature feature) {
  switch (feature) {
    case Feature::kGrid:
      return "grid";
    case Feature::kMarkov:
      return "markov";
    case Feature::kTrip:
      return "trip";
    case Feature::kLength:
      return "length";
  }
  return "unknown";
}

absl::StatusOr<BudgetWeights> BudgetWeights::Create(
    std::array<double, 4> weights) {
  double sum = 0.0;
  for (int i = 0; i < kNumFeatures; ++i) {
    const double w = weights[i];
    if (!(w > 0.0 && w < 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "weight w", i + 1, " = ", w, " violates 0 < w < 1"));
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("weights sum to ", sum, ", expected 1"));
  }
  return BudgetWeights(weights);
}

BudgetWeights BudgetWeights::Equal() {
  return BudgetWeights({0.25, 0.25, 0.25, 0.25});
}

absl::StatusOr<BudgetAllocation> SplitBudget(double epsilon,
                                             const BudgetWeights& weights) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  BudgetAllocation allocation;
  allocation.epsilon_total = epsilon;
  double sum = 0.0;
  for (int i = 0; i < kNumFeatures; ++i) {
    allocation.per_feature[i] = epsilon * weights[i];
    sum += allocation.per_feature[i];
  }
  // Rounding may push the parts a few ulps above epsilon; shave the largest
  // part so the composed cost never exceeds the budget.
  if (sum > epsilon) {
    int largest = 0;
    for (int i = 1; i < kNumFeatures; ++i) {
      if (allocation.per_feature[i] > allocation.per_feature[largest]) {
        largest = i;
      }
    }
    while (sum > epsilon) {
      double& part = allocation.per_feature[largest];
      part = std::nextafter(part, 0.0);
      sum = 0.0;
      for (double p : allocation.per_feature) sum += p;
    }
  }
  return allocation;
}

void PrivacyLedger::Record(std::string label, double epsilon) {
  entries_.push_back({std::move(label), epsilon});
  total_ += epsilon;
}

void PrivacyLedger::Append(const PrivacyLedger& other) {
  for (const Entry& e : other.entries()) Record(e.label, e.epsilon);
}

}  // namespace tracesynth
