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

#include "tracesynth/synopsis.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "tracesynth/uniform_grid.h"

namespace tracesynth {

namespace {

absl::Status CheckEpsilon(double eps, const char* what) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        absl::StrCat(what, " budget must be positive and finite, got ", eps));
  }
  return absl::OkStatus();
}

void NormalizeInPlace(LengthPmf& pmf) {
  double total = 0.0;
  for (double v : pmf) total += v;
  if (total > 0) {
    for (double& v : pmf) v /= total;
  }
}

double L1Distance(const LengthPmf& a, const LengthPmf& b) {
  double d = 0.0;
  for (int k = 0; k <= kMaxLength; ++k) d += std::abs(a[k] - b[k]);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// AdaptiveGrid

AdaptiveGrid::AdaptiveGrid(const Rect& region, int top_n,
                           std::vector<int> subdivisions)
    : region_(region), top_n_(top_n), subdivisions_(std::move(subdivisions)) {
  offsets_.resize(subdivisions_.size() + 1, 0);
  for (size_t i = 0; i < subdivisions_.size(); ++i) {
    offsets_[i + 1] = offsets_[i] + subdivisions_[i] * subdivisions_[i];
  }
}

absl::StatusOr<AdaptiveGrid> AdaptiveGrid::Create(
    const Rect& region, int top_n, std::vector<int> subdivisions) {
  if (top_n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid N must be >= 1, got ", top_n));
  }
  if (!region.IsValid()) {
    return absl::InvalidArgumentError("grid region must have positive extent");
  }
  if (subdivisions.size() != static_cast<size_t>(top_n) * top_n) {
    return absl::InvalidArgumentError(
        absl::StrCat("expected ", top_n * top_n, " subdivisions, got ",
                     subdivisions.size()));
  }
  for (int m : subdivisions) {
    if (m < 1) {
      return absl::InvalidArgumentError("subdivision must be >= 1");
    }
  }
  return AdaptiveGrid(region, top_n, std::move(subdivisions));
}

Rect AdaptiveGrid::TopCellRect(int top) const {
  return UniformGrid(region_, top_n_).CellRect(top);
}

Rect AdaptiveGrid::CellRect(CellId cell) const {
  const auto it =
      std::upper_bound(offsets_.begin(), offsets_.end(), cell.index);
  const int top = static_cast<int>(it - offsets_.begin()) - 1;
  const int m = subdivisions_[top];
  const int local = cell.index - offsets_[top];
  return UniformGrid(TopCellRect(top), m).CellRect(local);
}

CellId AdaptiveGrid::Locate(const Point& p) const {
  const int col = SlotOf(p.x, region_.min_x, region_.max_x, top_n_);
  const int row = SlotOf(p.y, region_.min_y, region_.max_y, top_n_);
  const int top = row * top_n_ + col;
  const int m = subdivisions_[top];
  if (m == 1) return CellId{offsets_[top]};
  const Rect r = TopCellRect(top);
  const int sub_col = SlotOf(p.x, r.min_x, r.max_x, m);
  const int sub_row = SlotOf(p.y, r.min_y, r.max_y, m);
  return CellId{offsets_[top] + sub_row * m + sub_col};
}

std::vector<CellId> AdaptiveGrid::CollapsedCells(const Trace& trace) const {
  std::vector<CellId> cells;
  cells.reserve(trace.size());
  for (const Point& p : trace.points()) {
    const CellId c = Locate(p);
    if (cells.empty() || cells.back() != c) cells.push_back(c);
  }
  return cells;
}

std::vector<int> SubdivisionsFromDensities(std::span<const double> densities,
                                           int top_n) {
  double total = 0.0;
  for (double d : densities) total += std::max(0.0, d);
  total = std::max(1.0, total);
  const double scale =
      static_cast<double>(top_n) * top_n * kSubdivisionConstant / total;
  std::vector<int> subdivisions;
  subdivisions.reserve(densities.size());
  for (double d : densities) {
    const double m = std::round(std::sqrt(std::max(0.0, d) * scale));
    subdivisions.push_back(
        static_cast<int>(std::clamp(m, 1.0, double{kMaxSubdivision})));
  }
  return subdivisions;
}

std::vector<double> NormalizedDensities(const Dataset& dataset,
                                        const Rect& region, int top_n) {
  const UniformGrid top(region, top_n);
  std::vector<double> densities(top.cell_count(), 0.0);
  for (const Trace& trace : dataset.traces()) {
    const double share = 1.0 / static_cast<double>(trace.size());
    for (const Point& p : trace.points()) densities[top.CellOf(p)] += share;
  }
  return densities;
}

absl::StatusOr<AdaptiveGrid> BuildAdaptiveGrid(const Dataset& dataset,
                                               double eps_grid, int top_n,
                                               Rng& rng) {
  if (absl::Status s = CheckEpsilon(eps_grid, "grid"); !s.ok()) return s;
  if (top_n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("grid N must be >= 1, got ", top_n));
  }
  absl::StatusOr<Rect> region = BoundingBox(dataset);
  if (!region.ok()) return region.status();

  std::vector<double> noisy = NormalizedDensities(dataset, *region, top_n);
  const double scale = 1.0 / eps_grid;
  for (double& d : noisy) d = std::max(0.0, d + SampleLaplace(scale, rng));

  absl::StatusOr<AdaptiveGrid> grid = AdaptiveGrid::Create(
      *region, top_n, SubdivisionsFromDensities(noisy, top_n));
  if (!grid.ok()) return grid.status();
  grid->set_noisy_densities(std::move(noisy));
  return grid;
}

// ---------------------------------------------------------------------------
// Markov model

Eigen::MatrixXd TransitionCounts(const Dataset& dataset,
                                 const AdaptiveGrid& grid) {
  const int cells = grid.cell_count();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cells, cells);
  for (const Trace& trace : dataset.traces()) {
    const std::vector<CellId> seq = grid.CollapsedCells(trace);
    if (seq.size() < 2) continue;
    const double share = 1.0 / static_cast<double>(seq.size() - 1);
    for (size_t i = 1; i < seq.size(); ++i) {
      counts(seq[i - 1].index, seq[i].index) += share;
    }
  }
  return counts;
}

absl::StatusOr<MarkovModel> BuildMarkov(const Dataset& dataset,
                                        const AdaptiveGrid& grid,
                                        double eps_markov, Rng& rng) {
  if (absl::Status s = CheckEpsilon(eps_markov, "markov"); !s.ok()) return s;
  Eigen::MatrixXd m = TransitionCounts(dataset, grid);
  const double scale = 1.0 / eps_markov;
  const Eigen::Index cells = m.rows();
  for (Eigen::Index i = 0; i < cells; ++i) {
    for (Eigen::Index j = 0; j < cells; ++j) {
      m(i, j) = std::max(0.0, m(i, j) + SampleLaplace(scale, rng));
    }
  }
  for (Eigen::Index i = 0; i < cells; ++i) {
    const double row = m.row(i).sum();
    if (row > 0) {
      m.row(i) /= row;
    } else {
      m.row(i).setConstant(1.0 / static_cast<double>(cells));
    }
  }
  return MarkovModel(std::move(m));
}

// ---------------------------------------------------------------------------
// Trip distribution

TripDistribution::TripDistribution(int cell_count, std::vector<double> pmf)
    : cell_count_(cell_count), pmf_(std::move(pmf)), cdf_(pmf_.size()) {
  std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
}

absl::StatusOr<TripDistribution> TripDistribution::Create(
    int cell_count, std::vector<double> pmf) {
  if (cell_count < 1 ||
      pmf.size() != static_cast<size_t>(cell_count) * cell_count) {
    return absl::InvalidArgumentError("trip pmf must have cells^2 entries");
  }
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0) || !std::isfinite(p)) {
      return absl::InvalidArgumentError("trip pmf entries must be >= 0");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    return absl::InvalidArgumentError(
        absl::StrCat("trip pmf sums to ", total, ", expected 1"));
  }
  return TripDistribution(cell_count, std::move(pmf));
}

std::vector<double> TripCounts(const Dataset& dataset,
                               const AdaptiveGrid& grid) {
  const int cells = grid.cell_count();
  std::vector<double> counts(static_cast<size_t>(cells) * cells, 0.0);
  for (const Trace& trace : dataset.traces()) {
    counts[PairIndex(grid.Locate(trace.front()), grid.Locate(trace.back()),
                     cells)] += 1.0;
  }
  return counts;
}

absl::StatusOr<TripDistribution> BuildTripDistribution(
    const Dataset& dataset, const AdaptiveGrid& grid, double eps_trip,
    Rng& rng) {
  if (absl::Status s = CheckEpsilon(eps_trip, "trip"); !s.ok()) return s;
  std::vector<double> counts = TripCounts(dataset, grid);
  const double scale = 1.0 / eps_trip;
  double total = 0.0;
  for (double& c : counts) {
    c = std::max(0.0, c + SampleLaplace(scale, rng));
    total += c;
  }
  if (total > 0) {
    for (double& c : counts) c /= total;
  } else {
    std::fill(counts.begin(), counts.end(),
              1.0 / static_cast<double>(counts.size()));
  }
  // Renormalize once more so the stored pmf sums to 1 to within rounding.
  total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double& c : counts) c /= total;
  return TripDistribution::Create(grid.cell_count(), std::move(counts));
}

// ---------------------------------------------------------------------------
// Length distributions

const char* LengthKindName(LengthKind kind) {
  switch (kind) {
    case LengthKind::kUniform:
      return "uniform";
    case LengthKind::kPoisson:
      return "poisson";
    case LengthKind::kExponential:
      return "exponential";
  }
  return "unknown";
}

LengthPmf UniformLengthPmf(double mean) {
  const int upper = std::clamp(
      std::max(kMinLength, static_cast<int>(std::lround(2.0 * mean)) - 2),
      kMinLength, kMaxLength);
  LengthPmf pmf{};
  for (int k = kMinLength; k <= upper; ++k) {
    pmf[k] = 1.0 / static_cast<double>(upper - kMinLength + 1);
  }
  return pmf;
}

LengthPmf PoissonLengthPmf(double mean) {
  LengthPmf pmf{};
  // Unnormalized weights via the ratio recurrence, in log space to stay
  // finite for large means.
  double log_w = -mean;  // log P(0)
  double max_log = -std::numeric_limits<double>::infinity();
  std::array<double, kMaxLength + 1> logs{};
  for (int k = 1; k <= kMaxLength; ++k) {
    log_w += std::log(mean) - std::log(static_cast<double>(k));
    logs[k] = log_w;
    if (k >= kMinLength) max_log = std::max(max_log, log_w);
  }
  for (int k = kMinLength; k <= kMaxLength; ++k) {
    pmf[k] = std::exp(logs[k] - max_log);
  }
  NormalizeInPlace(pmf);
  return pmf;
}

LengthPmf GeometricLengthPmf(double mean) {
  LengthPmf pmf{};
  // Support starts at kMinLength: mean = kMinLength + (1 - p) / p.
  const double excess = mean - kMinLength;
  if (!(excess > 0)) {
    pmf[kMinLength] = 1.0;
    return pmf;
  }
  const double p = 1.0 / (excess + 1.0);
  double w = p;
  for (int k = kMinLength; k <= kMaxLength; ++k) {
    pmf[k] = w;
    w *= 1.0 - p;
  }
  NormalizeInPlace(pmf);
  return pmf;
}

int LengthDistribution::UniformUpper() const {
  if (fallback) return kMaxLength;
  return std::clamp(
      std::max(kMinLength, static_cast<int>(std::lround(2.0 * mean)) - 2),
      kMinLength, kMaxLength);
}

LengthPmf LengthDistribution::Pmf() const {
  if (fallback) {
    LengthPmf pmf{};
    for (int k = kMinLength; k <= kMaxLength; ++k) {
      pmf[k] = 1.0 / (kMaxLength - kMinLength + 1);
    }
    return pmf;
  }
  switch (kind) {
    case LengthKind::kUniform:
      return UniformLengthPmf(mean);
    case LengthKind::kPoisson:
      return PoissonLengthPmf(mean);
    case LengthKind::kExponential:
      return GeometricLengthPmf(mean);
  }
  return UniformLengthPmf(mean);
}

LengthDistribution LengthDistribution::FullUniform() {
  LengthDistribution d;
  d.kind = LengthKind::kUniform;
  d.mean = (kMinLength + kMaxLength) / 2.0;
  d.fallback = true;
  return d;
}

LengthDistribution FitLengthDistribution(const LengthPmf& histogram) {
  LengthPmf observed = histogram;
  double mass = 0.0;
  for (int k = kMinLength; k <= kMaxLength; ++k) {
    observed[k] = std::max(0.0, observed[k]);
    mass += observed[k];
  }
  observed[0] = observed[1] = 0.0;
  if (!(mass > 0)) return LengthDistribution::FullUniform();
  for (double& v : observed) v /= mass;

  double mean = 0.0;
  for (int k = kMinLength; k <= kMaxLength; ++k) mean += k * observed[k];

  constexpr LengthKind kCandidates[] = {
      LengthKind::kUniform, LengthKind::kPoisson, LengthKind::kExponential};
  LengthDistribution best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (LengthKind kind : kCandidates) {
    LengthDistribution candidate;
    candidate.kind = kind;
    candidate.mean = mean;
    const double d = L1Distance(candidate.Pmf(), observed);
    if (d < best_distance) {
      best_distance = d;
      best = candidate;
    }
  }
  return best;
}

std::vector<LengthPmf> LengthHistograms(const Dataset& dataset,
                                        const AdaptiveGrid& grid) {
  const int cells = grid.cell_count();
  std::vector<LengthPmf> histograms(static_cast<size_t>(cells) * cells,
                                    LengthPmf{});
  for (const Trace& trace : dataset.traces()) {
    const int64_t pair =
        PairIndex(grid.Locate(trace.front()), grid.Locate(trace.back()), cells);
    const int length = std::min(static_cast<int>(trace.size()), kMaxLength);
    histograms[pair][length] += 1.0;
  }
  return histograms;
}

absl::StatusOr<std::vector<LengthDistribution>> BuildLengthDistributions(
    const Dataset& dataset, const AdaptiveGrid& grid, double eps_len,
    Rng& rng, std::vector<LengthPmf>* noisy_histograms) {
  if (absl::Status s = CheckEpsilon(eps_len, "length"); !s.ok()) return s;
  std::vector<LengthPmf> histograms = LengthHistograms(dataset, grid);
  const double scale = 1.0 / eps_len;
  std::vector<LengthDistribution> fits;
  fits.reserve(histograms.size());
  for (LengthPmf& h : histograms) {
    for (int k = kMinLength; k <= kMaxLength; ++k) {
      h[k] = std::max(0.0, h[k] + SampleLaplace(scale, rng));
    }
    fits.push_back(FitLengthDistribution(h));
    if (noisy_histograms != nullptr) NormalizeInPlace(h);
  }
  if (noisy_histograms != nullptr) *noisy_histograms = std::move(histograms);
  return fits;
}

// ---------------------------------------------------------------------------

absl::StatusOr<Synopsis> BuildSynopsis(const Dataset& dataset,
                                       const BudgetAllocation& allocation,
                                       int top_n, Rng& rng) {
  if (dataset.empty()) {
    return absl::InvalidArgumentError("empty dataset: nothing to synthesize");
  }
  Rng grid_rng = rng.Fork(static_cast<uint64_t>(Feature::kGrid));
  Rng markov_rng = rng.Fork(static_cast<uint64_t>(Feature::kMarkov));
  Rng trip_rng = rng.Fork(static_cast<uint64_t>(Feature::kTrip));
  Rng length_rng = rng.Fork(static_cast<uint64_t>(Feature::kLength));

  absl::StatusOr<AdaptiveGrid> grid =
      BuildAdaptiveGrid(dataset, allocation[Feature::kGrid], top_n, grid_rng);
  if (!grid.ok()) return grid.status();
  absl::StatusOr<MarkovModel> markov = BuildMarkov(
      dataset, *grid, allocation[Feature::kMarkov], markov_rng);
  if (!markov.ok()) return markov.status();
  absl::StatusOr<TripDistribution> trips = BuildTripDistribution(
      dataset, *grid, allocation[Feature::kTrip], trip_rng);
  if (!trips.ok()) return trips.status();
  absl::StatusOr<std::vector<LengthDistribution>> lengths =
      BuildLengthDistributions(dataset, *grid, allocation[Feature::kLength],
                               length_rng);
  if (!lengths.ok()) return lengths.status();

  PrivacyLedger ledger;
  for (int i = 0; i < kNumFeatures; ++i) {
    ledger.Record(FeatureName(static_cast<Feature>(i)),
                  allocation.per_feature[i]);
  }
  return Synopsis{*std::move(grid), *std::move(markov), *std::move(trips),
                  *std::move(lengths), std::move(ledger)};
}

}  // namespace tracesynth
