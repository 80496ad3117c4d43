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

// Synthetic trace generation from a released synopsis. Nothing here touches
// the real dataset: the inputs are the synopsis, a trace count and a random
// source, so the output inherits the synopsis' privacy guarantee.
//
// Each trace is one trip: sample (start, end) from the trip distribution,
// sample a length for that trip, then walk the Markov chain with every step
// reweighted by the probability of still reaching `end` in the remaining
// steps (a Markov bridge), so the walk lands on `end` exactly.

#ifndef TRACESYNTH_GENERATOR_H_
#define TRACESYNTH_GENERATOR_H_

#include <utility>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "tracesynth/random.h"
#include "tracesynth/synopsis.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {

struct WalkPlan {
  CellId start;
  CellId end;
  int length = kMinLength;
};

// Powers M^1 .. M^max_power of a Markov transition matrix, extended on
// demand. Not thread-safe; each generation task owns its table.
class ReachabilityTable {
 public:
  explicit ReachabilityTable(const MarkovModel& markov,
                             int max_power = kMaxLength - 1);

  int max_power() const { return max_power_; }

  // M^k for 1 <= k <= max_power.
  const Eigen::MatrixXd& Power(int k);

  // Probability of being at `end` exactly `steps` transitions after `start`.
  double BridgeMass(CellId start, CellId end, int steps);

 private:
  const Eigen::MatrixXd& transition_;
  int max_power_;
  std::vector<Eigen::MatrixXd> powers_;  // powers_[k - 1] = M^k
};

std::pair<CellId, CellId> SampleTrip(const TripDistribution& trips, Rng& rng);

int SampleLength(const LengthDistribution& lengths, Rng& rng);

// Exactly plan.length cells from plan.start to plan.end. When the end cell
// cannot be reached in the planned number of steps, falls back to an
// unconstrained walk for the interior and forces the final cell.
std::vector<CellId> ConstrainedWalk(const MarkovModel& markov,
                                    ReachabilityTable& table,
                                    const WalkPlan& plan, Rng& rng);

// Uniform point inside the cell's rectangle.
Point CellToPoint(const AdaptiveGrid& grid, CellId cell, Rng& rng);

// Trace i is generated from rng.Fork(i), so output is independent of
// generation order.
absl::StatusOr<Dataset> SynthesizeDataset(const Synopsis& synopsis, int n,
                                          const Rng& rng);

}  // namespace tracesynth

#endif  // TRACESYNTH_GENERATOR_H_
