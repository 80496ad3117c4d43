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

#include "tracesynth/generator.h"

#include <algorithm>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace tracesynth {

namespace {

constexpr int kLengthRetries = 5;

// Inverse-CDF draw over unnormalized non-negative weights. Returns -1 when
// the weights carry no mass.
template <typename Weights>
int SampleIndex(const Weights& weights, Eigen::Index size, Rng& rng) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < size; ++i) total += weights[i];
  if (!(total > 0)) return -1;
  const double target = rng.UniformOpen() * total;
  double running = 0.0;
  int last_positive = -1;
  for (Eigen::Index i = 0; i < size; ++i) {
    if (weights[i] <= 0) continue;
    running += weights[i];
    last_positive = static_cast<int>(i);
    if (target < running) return last_positive;
  }
  return last_positive;
}

}  // namespace

ReachabilityTable::ReachabilityTable(const MarkovModel& markov, int max_power)
    : transition_(markov.transition()), max_power_(max_power) {
  powers_.reserve(max_power_);
  powers_.push_back(transition_);
}

const Eigen::MatrixXd& ReachabilityTable::Power(int k) {
  while (static_cast<int>(powers_.size()) < k) {
    Eigen::MatrixXd next = powers_.back() * transition_;
    powers_.push_back(std::move(next));
  }
  return powers_[k - 1];
}

double ReachabilityTable::BridgeMass(CellId start, CellId end, int steps) {
  if (steps == 0) return start == end ? 1.0 : 0.0;
  return Power(steps)(start.index, end.index);
}

std::pair<CellId, CellId> SampleTrip(const TripDistribution& trips, Rng& rng) {
  const std::span<const double> cdf = trips.cdf();
  const double target = rng.UniformOpen() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) --it;
  // Skip zero-mass pairs that share a cumulative value with their successor.
  int64_t index = it - cdf.begin();
  const std::span<const double> pmf = trips.pmf();
  while (pmf[index] <= 0 && index + 1 < static_cast<int64_t>(pmf.size())) {
    ++index;
  }
  const int cells = trips.cell_count();
  return {CellId{static_cast<int32_t>(index / cells)},
          CellId{static_cast<int32_t>(index % cells)}};
}

int SampleLength(const LengthDistribution& lengths, Rng& rng) {
  const LengthPmf pmf = lengths.Pmf();
  const int index = SampleIndex(pmf, static_cast<Eigen::Index>(pmf.size()), rng);
  return index < kMinLength ? kMinLength : index;
}

std::vector<CellId> ConstrainedWalk(const MarkovModel& markov,
                                    ReachabilityTable& table,
                                    const WalkPlan& plan, Rng& rng) {
  const int length = std::max(plan.length, kMinLength);
  std::vector<CellId> cells;
  cells.reserve(length);
  cells.push_back(plan.start);

  const Eigen::MatrixXd& transition = markov.transition();
  const Eigen::Index count = transition.rows();
  bool bridged = table.BridgeMass(plan.start, plan.end, length - 1) > 0;
  Eigen::VectorXd weights(count);
  for (int position = 1; position < length - 1; ++position) {
    const CellId current = cells.back();
    int next = -1;
    if (bridged) {
      const int remaining = length - 1 - position;
      weights = transition.row(current.index).transpose().cwiseProduct(
          table.Power(remaining).col(plan.end.index));
      next = SampleIndex(weights, count, rng);
      // Underflow can leave no reachable successor; finish unconstrained.
      if (next < 0) bridged = false;
    }
    if (!bridged) {
      weights = transition.row(current.index).transpose();
      next = SampleIndex(weights, count, rng);
      if (next < 0) next = current.index;
    }
    cells.push_back(CellId{next});
  }
  cells.push_back(plan.end);
  return cells;
}

Point CellToPoint(const AdaptiveGrid& grid, CellId cell, Rng& rng) {
  const Rect r = grid.CellRect(cell);
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Point p{rng.Uniform(r.min_x, r.max_x), rng.Uniform(r.min_y, r.max_y)};
    // Rounding at a shared edge can land on the neighbouring cell.
    if (grid.Locate(p) == cell) return p;
  }
  return Point{r.min_x + 0.5 * r.width(), r.min_y + 0.5 * r.height()};
}

absl::StatusOr<Dataset> SynthesizeDataset(const Synopsis& synopsis, int n,
                                          const Rng& rng) {
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("trace count must be >= 1, got ", n));
  }
  ReachabilityTable table(synopsis.markov);
  std::vector<Trace> traces;
  traces.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng trace_rng = rng.Fork(static_cast<uint64_t>(i));
    const auto [start, end] = SampleTrip(synopsis.trips, trace_rng);
    const LengthDistribution& law = synopsis.LengthFor(start, end);
    int length = SampleLength(law, trace_rng);
    for (int retry = 0;
         retry < kLengthRetries && table.BridgeMass(start, end, length - 1) <= 0;
         ++retry) {
      length = SampleLength(law, trace_rng);
    }
    const std::vector<CellId> cells = ConstrainedWalk(
        synopsis.markov, table, WalkPlan{start, end, length}, trace_rng);
    std::vector<Point> points;
    points.reserve(cells.size());
    for (CellId c : cells) {
      points.push_back(CellToPoint(synopsis.grid, c, trace_rng));
    }
    absl::StatusOr<Trace> trace = Trace::Create(std::move(points));
    if (!trace.ok()) return trace.status();
    traces.push_back(*std::move(trace));
  }
  return Dataset(std::move(traces));
}

}  // namespace tracesynth
