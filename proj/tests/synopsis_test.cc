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

#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "tracesynth/dp.h"
#include "tracesynth/random.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {
namespace {

using ::testing::ElementsAre;

constexpr double kHuge = 1e7;

Trace MakeTrace(std::vector<Point> points) {
  return *Trace::Create(std::move(points));
}

// 2x2 grid over [0,2]^2, no subdivision. Cells: 0 = bottom-left,
// 1 = bottom-right, 2 = top-left, 3 = top-right.
AdaptiveGrid FourCellGrid() {
  return *AdaptiveGrid::Create(Rect{0, 0, 2, 2}, 2, {1, 1, 1, 1});
}

constexpr Point kA{0.5, 0.5};
constexpr Point kB{1.5, 0.5};
constexpr Point kC{0.5, 1.5};
constexpr Point kD{1.5, 1.5};

TEST(AdaptiveGridTest, SubdivisionWorkedExample) {
  const std::vector<double> d = {0.02, 0.1, 0.1, 0.25};
  const std::vector<int> m = SubdivisionsFromDensities(d, 2);
  EXPECT_THAT(m, ElementsAre(1, 2, 2, 3));
  AdaptiveGrid grid = *AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 2, m);
  EXPECT_EQ(grid.cell_count(), 18);
}

TEST(AdaptiveGridTest, ZeroDensityKeepsOneCell) {
  EXPECT_THAT(SubdivisionsFromDensities(std::vector<double>{0, 0, 0, 0}, 2),
              ElementsAre(1, 1, 1, 1));
}

TEST(AdaptiveGridTest, SubdivisionCappedAtMaximum) {
  // All mass in one of 9 cells: sqrt(9 * 10) rounds to 9, capped to 8.
  const std::vector<int> m = SubdivisionsFromDensities(
      std::vector<double>{1000, 0, 0, 0, 0, 0, 0, 0, 0}, 3);
  EXPECT_EQ(m[0], kMaxSubdivision);
}

TEST(AdaptiveGridTest, LocateExamples) {
  AdaptiveGrid one = *AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 1, {1});
  EXPECT_EQ(one.cell_count(), 1);
  EXPECT_EQ(one.Locate({0.3, 0.9}).index, 0);
  EXPECT_EQ(one.Locate({1, 1}).index, 0);

  AdaptiveGrid four = FourCellGrid();
  EXPECT_EQ(four.Locate({1.5, 0.5}).index, 1);
  EXPECT_EQ(four.Locate({2, 2}).index, 3);
  EXPECT_EQ(four.Locate({1, 1}).index, 3);
  EXPECT_EQ(four.Locate({0, 0}).index, 0);
}

TEST(AdaptiveGridTest, RejectsBadShapes) {
  EXPECT_FALSE(AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 0, {}).ok());
  EXPECT_FALSE(AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 2, {1, 1, 1}).ok());
  EXPECT_FALSE(AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 1, {0}).ok());
  EXPECT_FALSE(AdaptiveGrid::Create(Rect{0, 0, 0, 1}, 1, {1}).ok());
}

// Property: every point lands in exactly one cell, and that cell's
// rectangle contains it.
TEST(AdaptiveGridTest, CellsTileRegion) {
  const Rect region{-3, 2, 5, 4};
  AdaptiveGrid grid =
      *AdaptiveGrid::Create(region, 3, {1, 2, 3, 4, 1, 2, 8, 1, 5});
  double area = 0;
  for (int c = 0; c < grid.cell_count(); ++c) area += grid.CellRect({c}).area();
  EXPECT_NEAR(area, region.area(), 1e-9);

  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Point p{rng.Uniform(region.min_x, region.max_x),
                  rng.Uniform(region.min_y, region.max_y)};
    const CellId cell = grid.Locate(p);
    ASSERT_GE(cell.index, 0);
    ASSERT_LT(cell.index, grid.cell_count());
    const Rect r = grid.CellRect(cell);
    ASSERT_TRUE(p.x >= r.min_x - 1e-12 && p.x <= r.max_x + 1e-12 &&
                p.y >= r.min_y - 1e-12 && p.y <= r.max_y + 1e-12);
    int containing = 0;
    for (int c = 0; c < grid.cell_count(); ++c) {
      const Rect q = grid.CellRect({c});
      if (p.x > q.min_x && p.x < q.max_x && p.y > q.min_y && p.y < q.max_y) {
        ++containing;
      }
    }
    ASSERT_LE(containing, 1);
  }
}

TEST(AdaptiveGridTest, CollapsedCellsDropsRepeats) {
  AdaptiveGrid grid = FourCellGrid();
  Trace t = MakeTrace({kA, {0.6, 0.4}, kB, kB, kD, kB});
  std::vector<int> seq;
  for (CellId c : grid.CollapsedCells(t)) seq.push_back(c.index);
  EXPECT_THAT(seq, ElementsAre(0, 1, 3, 1));
}

TEST(MarkovTest, SingleTransitionInNoiselessLimit) {
  std::vector<Trace> traces(100, MakeTrace({kA, kB}));
  Rng rng(1);
  MarkovModel m = *BuildMarkov(Dataset(traces), FourCellGrid(), kHuge, rng);
  EXPECT_NEAR(m({0}, {1}), 1.0, 1e-3);
}

TEST(MarkovTest, EvenSplit) {
  std::vector<Trace> traces;
  for (int i = 0; i < 50; ++i) {
    traces.push_back(MakeTrace({kA, kB}));
    traces.push_back(MakeTrace({kA, kC}));
  }
  Rng rng(2);
  MarkovModel m = *BuildMarkov(Dataset(traces), FourCellGrid(), kHuge, rng);
  EXPECT_NEAR(m({0}, {1}), 0.5, 1e-3);
  EXPECT_NEAR(m({0}, {2}), 0.5, 1e-3);
}

TEST(MarkovTest, TraceWeightsSumToOne) {
  // A trace with k transitions contributes 1/k to each.
  Dataset d({MakeTrace({kA, kB, kD, kC})});
  Eigen::MatrixXd counts = TransitionCounts(d, FourCellGrid());
  EXPECT_NEAR(counts.sum(), 1.0, 1e-12);
  EXPECT_NEAR(counts(0, 1), 1.0 / 3, 1e-12);
  EXPECT_NEAR(counts(3, 2), 1.0 / 3, 1e-12);
}

// Property: rows are distributions at any budget.
TEST(MarkovTest, RowsAreStochastic) {
  Dataset d = *GenerateToyDataset(200, Rect{0, 0, 1, 1}, 5);
  AdaptiveGrid grid = *AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 3,
                                            {1, 2, 1, 3, 2, 1, 1, 1, 2});
  for (double eps : {0.01, 1.0, 100.0}) {
    Rng rng(3);
    MarkovModel m = *BuildMarkov(d, grid, eps, rng);
    for (int r = 0; r < m.cell_count(); ++r) {
      EXPECT_NEAR(m.transition().row(r).sum(), 1.0, 1e-9);
      EXPECT_GE(m.transition().row(r).minCoeff(), 0.0);
    }
  }
}

TEST(MarkovTest, NonPositiveBudgetIsError) {
  Rng rng(1);
  EXPECT_FALSE(BuildMarkov(Dataset({MakeTrace({kA, kB})}), FourCellGrid(), 0,
                           rng)
                   .ok());
}

TEST(TripTest, SinglePair) {
  std::vector<Trace> traces(10, MakeTrace({kA, kC, kB}));
  Rng rng(4);
  TripDistribution trips =
      *BuildTripDistribution(Dataset(traces), FourCellGrid(), kHuge, rng);
  EXPECT_NEAR(trips({0}, {1}), 1.0, 1e-3);
}

TEST(TripTest, ThirtySeventySplit) {
  std::vector<Trace> traces;
  for (int i = 0; i < 30; ++i) traces.push_back(MakeTrace({kA, kB}));
  for (int i = 0; i < 70; ++i) traces.push_back(MakeTrace({kC, kD}));
  Rng rng(5);
  TripDistribution trips =
      *BuildTripDistribution(Dataset(traces), FourCellGrid(), kHuge, rng);
  EXPECT_NEAR(trips({0}, {1}), 0.3, 1e-3);
  EXPECT_NEAR(trips({2}, {3}), 0.7, 1e-3);
  const double total =
      std::accumulate(trips.pmf().begin(), trips.pmf().end(), 0.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(trips.cdf().back(), 1.0, 1e-12);
}

TEST(TripTest, CreateValidates) {
  EXPECT_FALSE(TripDistribution::Create(2, {0.5, 0.5}).ok());
  EXPECT_FALSE(TripDistribution::Create(1, {0.5}).ok());
  EXPECT_FALSE(TripDistribution::Create(1, {-1}).ok());
  EXPECT_TRUE(TripDistribution::Create(1, {1.0}).ok());
}

// Oracles for the three candidate laws on {2, ..., 30}, computed directly
// from their definitions.
LengthPmf OracleUniform(int upper) {
  LengthPmf p{};
  for (int k = 2; k <= upper; ++k) p[k] = 1.0 / (upper - 1);
  return p;
}

LengthPmf OraclePoisson(double mu) {
  LengthPmf p{};
  double total = 0;
  for (int k = 2; k <= 30; ++k) {
    p[k] = std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

LengthPmf OracleGeometric(double mu) {
  // Support {2, 3, ...} with mean mu: P(k) = q (1 - q)^(k - 2),
  // q = 1 / (mu - 1).
  const double q = 1.0 / (mu - 1.0);
  LengthPmf p{};
  double total = 0;
  for (int k = 2; k <= 30; ++k) total += p[k] = q * std::pow(1 - q, k - 2);
  for (double& v : p) v /= total;
  return p;
}

double L1(const LengthPmf& a, const LengthPmf& b) {
  double d = 0;
  for (size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

TEST(LengthTest, CandidatePmfsMatchDefinitions) {
  for (double mu : {2.5, 5.0, 11.3}) {
    EXPECT_LT(L1(PoissonLengthPmf(mu), OraclePoisson(mu)), 1e-9) << mu;
    EXPECT_LT(L1(GeometricLengthPmf(mu), OracleGeometric(mu)), 1e-9) << mu;
  }
  EXPECT_LT(L1(UniformLengthPmf(5.0), OracleUniform(8)), 1e-12);
}

TEST(LengthTest, SpikeSelectsClosestCandidate) {
  LengthPmf spike{};
  spike[5] = 1.0;
  const double du = L1(OracleUniform(8), spike);
  const double dp = L1(OraclePoisson(5.0), spike);
  const double dg = L1(OracleGeometric(5.0), spike);
  LengthKind expected = LengthKind::kUniform;
  double best = du;
  if (dp < best) best = dp, expected = LengthKind::kPoisson;
  if (dg < best) best = dg, expected = LengthKind::kExponential;

  LengthDistribution fit = FitLengthDistribution(spike);
  EXPECT_EQ(fit.kind, expected);
  EXPECT_EQ(fit.kind, LengthKind::kPoisson);
  EXPECT_DOUBLE_EQ(fit.mean, 5.0);
  EXPECT_FALSE(fit.fallback);
}

TEST(LengthTest, DecayingHistogramSelectsExponential) {
  LengthPmf h{};
  for (int k = 2; k <= 30; ++k) h[k] = 100 * std::pow(0.6, k - 2);
  EXPECT_EQ(FitLengthDistribution(h).kind, LengthKind::kExponential);
}

TEST(LengthTest, FlatHistogramSelectsUniform) {
  LengthPmf h{};
  for (int k = 2; k <= 20; ++k) h[k] = 3;
  EXPECT_EQ(FitLengthDistribution(h).kind, LengthKind::kUniform);
}

TEST(LengthTest, EmptyPairFallsBackToFullUniform) {
  LengthDistribution fit = FitLengthDistribution(LengthPmf{});
  EXPECT_TRUE(fit.fallback);
  EXPECT_EQ(fit.kind, LengthKind::kUniform);
  LengthPmf pmf = fit.Pmf();
  for (int k = 2; k <= 30; ++k) EXPECT_DOUBLE_EQ(pmf[k], 1.0 / 29);
}

TEST(LengthTest, LongTracesClipToMaximum) {
  std::vector<Point> pts(45, kA);
  pts.back() = kB;
  std::vector<LengthPmf> h =
      LengthHistograms(Dataset({MakeTrace(pts)}), FourCellGrid());
  EXPECT_EQ(h[PairIndex({0}, {1}, 4)][30], 1.0);
}

// Property: every fitted length law is a distribution on {2, ..., 30}.
TEST(LengthTest, AllPmfsAreDistributions) {
  Dataset d = *GenerateToyDataset(300, Rect{0, 0, 1, 1}, 9);
  AdaptiveGrid grid = *AdaptiveGrid::Create(Rect{0, 0, 1, 1}, 2, {1, 2, 2, 1});
  Rng rng(6);
  for (const LengthDistribution& l :
       *BuildLengthDistributions(d, grid, 0.5, rng)) {
    LengthPmf pmf = l.Pmf();
    EXPECT_EQ(pmf[0] + pmf[1], 0.0);
    EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-9);
  }
}

// Independent cell lookup: scan rectangles with half-open containment,
// closed on the region's max edges.
int OracleCell(const AdaptiveGrid& grid, const Point& p) {
  const Rect& region = grid.region();
  for (int c = 0; c < grid.cell_count(); ++c) {
    const Rect r = grid.CellRect({c});
    const bool in_x = p.x >= r.min_x &&
                      (p.x < r.max_x || (p.x == region.max_x && r.max_x >= region.max_x - 1e-12));
    const bool in_y = p.y >= r.min_y &&
                      (p.y < r.max_y || (p.y == region.max_y && r.max_y >= region.max_y - 1e-12));
    if (in_x && in_y) return c;
  }
  return -1;
}

TEST(SynopsisTest, NoiselessLimitMatchesBruteForce) {
  Dataset d = *GenerateToyDataset(400, Rect{0, 0, 1, 1}, 21);
  Rng rng(7);
  Synopsis s = *BuildSynopsis(d, *SplitBudget(4e7, BudgetWeights::Equal()),
                              4, rng);
  const AdaptiveGrid& grid = s.grid;
  const int cells = grid.cell_count();
  const double n = static_cast<double>(d.cardinality());

  // Top-level densities.
  std::vector<double> dens(16, 0.0);
  const Rect region = *BoundingBox(d);
  for (const Trace& t : d.traces()) {
    for (const Point& p : t.points()) {
      const int col = std::min(3, static_cast<int>((p.x - region.min_x) / region.width() * 4));
      const int row = std::min(3, static_cast<int>((p.y - region.min_y) / region.height() * 4));
      dens[row * 4 + col] += 1.0 / static_cast<double>(t.size());
    }
  }
  ASSERT_EQ(grid.noisy_densities().size(), 16u);
  for (int i = 0; i < 16; ++i) {
    EXPECT_NEAR(grid.noisy_densities()[i] / n, dens[i] / n, 1e-3);
  }

  // Markov, trips and lengths from one counting pass.
  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(cells, cells);
  std::vector<double> trips(static_cast<size_t>(cells) * cells, 0.0);
  std::map<int64_t, LengthPmf> lengths;
  for (const Trace& t : d.traces()) {
    std::vector<int> seq;
    for (const Point& p : t.points()) {
      const int c = OracleCell(grid, p);
      ASSERT_GE(c, 0);
      if (seq.empty() || seq.back() != c) seq.push_back(c);
    }
    for (size_t i = 1; i < seq.size(); ++i) {
      trans(seq[i - 1], seq[i]) += 1.0 / static_cast<double>(seq.size() - 1);
    }
    const int64_t pair = static_cast<int64_t>(seq.front()) * cells + seq.back();
    trips[pair] += 1.0 / n;
    lengths[pair][std::min<int>(static_cast<int>(t.size()), 30)] += 1.0;
  }
  for (int r = 0; r < cells; ++r) {
    const double mass = trans.row(r).sum();
    if (mass < 1.0) continue;  // too little signal for a 1e-3 comparison
    for (int c = 0; c < cells; ++c) {
      EXPECT_NEAR(s.markov({r}, {c}), trans(r, c) / mass, 1e-3)
          << r << "->" << c;
    }
  }
  for (size_t i = 0; i < trips.size(); ++i) {
    EXPECT_NEAR(s.trips.pmf()[i], trips[i], 1e-3);
  }
  for (const auto& [pair, hist] : lengths) {
    LengthDistribution fit = FitLengthDistribution(hist);
    EXPECT_EQ(s.lengths[pair].kind, fit.kind) << pair;
    EXPECT_NEAR(s.lengths[pair].mean, fit.mean, 1e-3) << pair;
  }
}

TEST(SynopsisTest, LedgerRecordsEachFeature) {
  Dataset d = *GenerateToyDataset(50, Rect{0, 0, 1, 1}, 2);
  Rng rng(8);
  BudgetAllocation a =
      *SplitBudget(0.7, *BudgetWeights::Create({0.1, 0.2, 0.3, 0.4}));
  Synopsis s = *BuildSynopsis(d, a, 4, rng);
  ASSERT_EQ(s.ledger.entries().size(), 4u);
  EXPECT_NEAR(s.ledger.total(), 0.7, 1e-12);
  EXPECT_NEAR(s.ledger.entries()[3].epsilon, 0.28, 1e-12);
}

TEST(SynopsisTest, EmptyDatasetIsError) {
  Rng rng(1);
  EXPECT_FALSE(
      BuildSynopsis(Dataset(), *SplitBudget(1, BudgetWeights::Equal()), 4, rng)
          .ok());
}

TEST(SynopsisTest, DeterministicForSeed) {
  Dataset d = *GenerateToyDataset(100, Rect{0, 0, 1, 1}, 3);
  BudgetAllocation a = *SplitBudget(1, BudgetWeights::Equal());
  Rng r1(99), r2(99);
  Synopsis s1 = *BuildSynopsis(d, a, 4, r1);
  Synopsis s2 = *BuildSynopsis(d, a, 4, r2);
  EXPECT_EQ(s1.markov.transition(), s2.markov.transition());
  EXPECT_TRUE(std::equal(s1.trips.pmf().begin(), s1.trips.pmf().end(),
                         s2.trips.pmf().begin()));
}

}  // namespace
}  // namespace tracesynth
