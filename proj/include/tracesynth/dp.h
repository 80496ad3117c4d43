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

// Laplace mechanism and privacy budget bookkeeping.
//
// The synthesis pipeline spends a total budget epsilon on four features:
// the adaptive grid, the Markov model, the trip distribution and the length
// distributions. Feature i receives w_i * epsilon, with every w_i in (0, 1)
// and the weights summing to one, so the four releases compose sequentially
// to exactly epsilon.

#ifndef TRACESYNTH_DP_H_
#define TRACESYNTH_DP_H_

#include <array>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "tracesynth/random.h"

namespace tracesynth {

inline constexpr double kWeightSumTolerance = 1e-9;

// Inverse-CDF Laplace(0, scale) sample for a given uniform u in (0, 1).
// Exposed separately so the transform can be checked at fixed u.
double LaplaceFromUniform(double u, double scale);

// One Laplace(0, scale) draw. scale must be positive.
absl::StatusOr<double> LaplaceNoise(double scale, Rng& rng);

// Unchecked variant for hot loops whose scale was validated upstream.
inline double SampleLaplace(double scale, Rng& rng) {
  return LaplaceFromUniform(rng.UniformOpen(), scale);
}

enum class Feature { kGrid = 0, kMarkov = 1, kTrip = 2, kLength = 3 };

inline constexpr int kNumFeatures = 4;

const char* FeatureName(Feature feature);

// Fractions of the privacy budget given to the four features.
class BudgetWeights {
 public:
  static absl::StatusOr<BudgetWeights> Create(std::array<double, 4> weights);
  static BudgetWeights Equal();

  double operator[](Feature f) const { return values_[static_cast<int>(f)]; }
  double operator[](int i) const { return values_[i]; }
  const std::array<double, 4>& values() const { return values_; }

  friend bool operator==(const BudgetWeights&, const BudgetWeights&) = default;

 private:
  explicit BudgetWeights(std::array<double, 4> values) : values_(values) {}

  std::array<double, 4> values_;
};

struct BudgetAllocation {
  double epsilon_total = 0.0;
  std::array<double, 4> per_feature = {};

  double operator[](Feature f) const {
    return per_feature[static_cast<int>(f)];
  }
};

absl::StatusOr<BudgetAllocation> SplitBudget(double epsilon,
                                             const BudgetWeights& weights);

// Running record of every mechanism invocation charged against the data.
class PrivacyLedger {
 public:
  struct Entry {
    std::string label;
    double epsilon;
  };

  void Record(std::string label, double epsilon);
  void Append(const PrivacyLedger& other);

  const std::vector<Entry>& entries() const { return entries_; }
  double total() const { return total_; }

 private:
  std::vector<Entry> entries_;
  double total_ = 0.0;
};

}  // namespace tracesynth

#endif  // TRACESYNTH_DP_H_
