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

// The differentially private synopsis of a trace dataset: a density-aware
// two-level grid, an order-1 Markov mobility model over its cells, the
// distribution of (start cell, end cell) trips, and one length distribution
// per trip. Each feature is released by the Laplace mechanism with its own
// share of the budget; every count query set is normalized so that adding or
// removing one whole trace moves at most one unit of L1 mass.

#ifndef TRACESYNTH_SYNOPSIS_H_
#define TRACESYNTH_SYNOPSIS_H_

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "Eigen/Core"
#include "absl/status/statusor.h"
#include "tracesynth/dp.h"
#include "tracesynth/random.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {

// Longest trip length represented by the length distributions. Longer traces
// are clipped for the length feature only.
inline constexpr int kMaxLength = 30;
inline constexpr int kMinLength = 2;
inline constexpr int kMaxSubdivision = 8;
inline constexpr double kSubdivisionConstant = 10.0;

struct CellId {
  int32_t index = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
};

// Index of the pair (start, end) in a cells x cells row-major layout.
inline int64_t PairIndex(CellId start, CellId end, int cell_count) {
  return static_cast<int64_t>(start.index) * cell_count + end.index;
}

class AdaptiveGrid {
 public:
  // `subdivisions[i]` splits top-level cell i (row-major from min_y) into
  // an M x M block.
  static absl::StatusOr<AdaptiveGrid> Create(const Rect& region, int top_n,
                                             std::vector<int> subdivisions);

  const Rect& region() const { return region_; }
  int top_n() const { return top_n_; }
  std::span<const int> subdivisions() const { return subdivisions_; }
  int cell_count() const { return offsets_.back(); }

  // Geometry of a cell; cells are half-open except along the region's max
  // edges.
  Rect CellRect(CellId cell) const;

  // Points outside the region are clamped onto its boundary first.
  CellId Locate(const Point& p) const;

  // Cell sequence of a trace with consecutive repeats removed.
  std::vector<CellId> CollapsedCells(const Trace& trace) const;

  // Noisy per-top-level-cell densities the subdivision was derived from.
  // Empty for grids created directly from subdivisions.
  std::span<const double> noisy_densities() const { return noisy_densities_; }
  void set_noisy_densities(std::vector<double> d) {
    noisy_densities_ = std::move(d);
  }

 private:
  AdaptiveGrid(const Rect& region, int top_n, std::vector<int> subdivisions);

  Rect TopCellRect(int top) const;

  Rect region_;
  int top_n_;
  std::vector<int> subdivisions_;
  std::vector<int> offsets_;  // prefix sums of M_i^2, size N^2 + 1
  std::vector<double> noisy_densities_;
};

// M_i = clamp(round(sqrt(d_i * n^2 * c / max(1, sum d))), 1, 8).
std::vector<int> SubdivisionsFromDensities(std::span<const double> densities,
                                           int top_n);

// Trace-normalized point mass per top-level cell of an n x n grid over
// `region`: each trace contributes 1/|T| per reading.
std::vector<double> NormalizedDensities(const Dataset& dataset,
                                        const Rect& region, int top_n);

absl::StatusOr<AdaptiveGrid> BuildAdaptiveGrid(const Dataset& dataset,
                                               double eps_grid, int top_n,
                                               Rng& rng);

class MarkovModel {
 public:
  explicit MarkovModel(Eigen::MatrixXd transition)
      : transition_(std::move(transition)) {}

  const Eigen::MatrixXd& transition() const { return transition_; }
  int cell_count() const { return static_cast<int>(transition_.rows()); }
  double operator()(CellId from, CellId to) const {
    return transition_(from.index, to.index);
  }

 private:
  Eigen::MatrixXd transition_;
};

// Trace-normalized transition mass: each trace with t > 0 transitions in its
// collapsed cell sequence adds 1/t per transition.
Eigen::MatrixXd TransitionCounts(const Dataset& dataset,
                                 const AdaptiveGrid& grid);

absl::StatusOr<MarkovModel> BuildMarkov(const Dataset& dataset,
                                        const AdaptiveGrid& grid,
                                        double eps_markov, Rng& rng);

// Probability mass over all cells x cells trips, stored row-major by start.
class TripDistribution {
 public:
  static absl::StatusOr<TripDistribution> Create(int cell_count,
                                                 std::vector<double> pmf);

  int cell_count() const { return cell_count_; }
  std::span<const double> pmf() const { return pmf_; }
  std::span<const double> cdf() const { return cdf_; }
  double operator()(CellId start, CellId end) const {
    return pmf_[PairIndex(start, end, cell_count_)];
  }

 private:
  TripDistribution(int cell_count, std::vector<double> pmf);

  int cell_count_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

// Number of traces per (first cell, last cell) pair.
std::vector<double> TripCounts(const Dataset& dataset,
                               const AdaptiveGrid& grid);

absl::StatusOr<TripDistribution> BuildTripDistribution(
    const Dataset& dataset, const AdaptiveGrid& grid, double eps_trip,
    Rng& rng);

// Index = trip length; entries below kMinLength are always zero.
using LengthPmf = std::array<double, kMaxLength + 1>;

enum class LengthKind { kUniform, kPoisson, kExponential };

const char* LengthKindName(LengthKind kind);

// Parametric trip-length law truncated to {2, ..., kMaxLength}.
struct LengthDistribution {
  LengthKind kind = LengthKind::kUniform;
  // Mean the candidate was instantiated with. For the uniform law the
  // support is {2, ..., UniformUpper()}.
  double mean = (kMinLength + kMaxLength) / 2.0;
  // Uniform over the full support when no length information survived noise.
  bool fallback = false;

  int UniformUpper() const;
  LengthPmf Pmf() const;

  static LengthDistribution FullUniform();
};

// Candidate pmfs for a given mean.
LengthPmf UniformLengthPmf(double mean);
LengthPmf PoissonLengthPmf(double mean);
LengthPmf GeometricLengthPmf(double mean);

// Goodness-of-fit selection on an already-noisy histogram: derives the mean
// and keeps the candidate with the smallest L1 distance. Pure
// post-processing. `histogram` need not be normalized; zero mass yields the
// full-support uniform fallback.
LengthDistribution FitLengthDistribution(const LengthPmf& histogram);

// Per-pair length histograms (lengths clipped to kMaxLength), row-major by
// pair index.
std::vector<LengthPmf> LengthHistograms(const Dataset& dataset,
                                        const AdaptiveGrid& grid);

// One noisy histogram per trip pair, each with the full eps_len (the pairs
// partition the dataset), then fit. If `noisy_histograms` is non-null it
// receives the clipped and normalized noisy histograms.
absl::StatusOr<std::vector<LengthDistribution>> BuildLengthDistributions(
    const Dataset& dataset, const AdaptiveGrid& grid, double eps_len,
    Rng& rng, std::vector<LengthPmf>* noisy_histograms = nullptr);

struct Synopsis {
  AdaptiveGrid grid;
  MarkovModel markov;
  TripDistribution trips;
  // Indexed by PairIndex(start, end).
  std::vector<LengthDistribution> lengths;
  PrivacyLedger ledger;

  const LengthDistribution& LengthFor(CellId start, CellId end) const {
    return lengths[PairIndex(start, end, grid.cell_count())];
  }
};

// Releases all four features; consumes exactly allocation.epsilon_total.
absl::StatusOr<Synopsis> BuildSynopsis(const Dataset& dataset,
                                       const BudgetAllocation& allocation,
                                       int top_n, Rng& rng);

}  // namespace tracesynth

#endif  // TRACESYNTH_SYNOPSIS_H_
