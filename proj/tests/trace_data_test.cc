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

#include "tracesynth/trace_data.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "absl/strings/str_format.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "tracesynth/random.h"
#include "tracesynth/uniform_grid.h"

namespace tracesynth {
namespace {

using ::testing::HasSubstr;

Dataset MakeDataset(std::vector<std::vector<Point>> traces) {
  std::vector<Trace> out;
  for (auto& points : traces) out.push_back(*Trace::Create(std::move(points)));
  return Dataset(std::move(out));
}

TEST(ParseDatasetTest, MinimalTrace) {
  absl::StatusOr<Dataset> d = ParseDataset("1.0,2.0;3.0,4.0\n");
  ASSERT_TRUE(d.ok()) << d.status();
  ASSERT_EQ(d->cardinality(), 1u);
  ASSERT_EQ(d->traces()[0].size(), 2u);
  EXPECT_EQ(d->traces()[0].front(), (Point{1.0, 2.0}));
  EXPECT_EQ(d->traces()[0].back(), (Point{3.0, 4.0}));
}

TEST(ParseDatasetTest, SkipsCommentsAndBlankLines) {
  absl::StatusOr<Dataset> d = ParseDataset("# comment\n1,1;2,2;3,3\n\n");
  ASSERT_TRUE(d.ok()) << d.status();
  ASSERT_EQ(d->cardinality(), 1u);
  EXPECT_EQ(d->traces()[0].size(), 3u);
}

TEST(ParseDatasetTest, PreservesOrderAndCountsLines) {
  absl::StatusOr<Dataset> d = ParseDataset("0,0;1,1\n5,5;4,4;3,3\n");
  ASSERT_TRUE(d.ok());
  ASSERT_EQ(d->cardinality(), 2u);
  EXPECT_EQ(d->traces()[1].points()[2], (Point{3, 3}));
}

TEST(ParseDatasetTest, SinglePointTraceRejectedWithLineNumber) {
  absl::StatusOr<Dataset> d = ParseDataset("1,1\n");
  ASSERT_FALSE(d.ok());
  EXPECT_EQ(d.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(d.status().message(), HasSubstr("line 1"));
  EXPECT_THAT(d.status().message(), HasSubstr("< 2"));
}

TEST(ParseDatasetTest, MalformedPairNamesLine) {
  absl::StatusOr<Dataset> d = ParseDataset("0,0;1,1\n# c\n1,x;2,2\n");
  ASSERT_FALSE(d.ok());
  EXPECT_THAT(d.status().message(), HasSubstr("line 3"));
}

TEST(ParseDatasetTest, MissingCommaIsError) {
  EXPECT_FALSE(ParseDataset("1 2;3,4\n").ok());
  EXPECT_FALSE(ParseDataset("1,2;;3,4\n").ok());
}

TEST(ParseDatasetTest, NonFiniteRejected) {
  EXPECT_FALSE(ParseDataset("nan,0;1,1\n").ok());
  EXPECT_FALSE(ParseDataset("inf,0;1,1\n").ok());
}

TEST(ParseDatasetTest, EmptyInputIsEmptyDatasetError) {
  absl::StatusOr<Dataset> d = ParseDataset("# only a comment\n\n");
  ASSERT_FALSE(d.ok());
  EXPECT_THAT(d.status().message(), HasSubstr("empty"));
  EXPECT_FALSE(ParseDataset("").ok());
}

TEST(ParseDatasetTest, AcceptsCrlfAndTrailingSeparator) {
  absl::StatusOr<Dataset> d = ParseDataset("1,2;3,4;\r\n");
  ASSERT_TRUE(d.ok()) << d.status();
  EXPECT_EQ(d->traces()[0].size(), 2u);
}

TEST(TraceTest, CreateRequiresTwoFinitePoints) {
  EXPECT_FALSE(Trace::Create({{0, 0}}).ok());
  EXPECT_FALSE(
      Trace::Create({{0, 0}, {std::numeric_limits<double>::quiet_NaN(), 1}})
          .ok());
  EXPECT_TRUE(Trace::Create({{0, 0}, {1, 1}}).ok());
}

TEST(TraceTest, TravelDistanceThreeFourFive) {
  EXPECT_DOUBLE_EQ(Trace::Create({{0, 0}, {3, 4}})->TravelDistance(), 5.0);
  EXPECT_DOUBLE_EQ(Trace::Create({{0, 0}, {3, 4}, {3, 0}})->TravelDistance(),
                   9.0);
}

TEST(SerializeTest, RoundTripOfParsedText) {
  const std::string text = "0.5,0.25;1.125,-3.5\n7,8;9,10;11,12\n";
  absl::StatusOr<Dataset> d = ParseDataset(text);
  ASSERT_TRUE(d.ok());
  absl::StatusOr<Dataset> again = ParseDataset(SerializeDataset(*d));
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*d, *again);
}

// Property: serialize(parse(t)) reparses to the same dataset for random
// well-formed inputs written at file precision.
TEST(SerializeTest, RoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    const int64_t traces = rng.UniformInt(1, 20);
    for (int64_t t = 0; t < traces; ++t) {
      const int64_t n = rng.UniformInt(2, 12);
      for (int64_t i = 0; i < n; ++i) {
        if (i > 0) text += ";";
        text += absl::StrFormat("%.6f,%.6f", rng.Uniform(-180, 180),
                                rng.Uniform(-90, 90));
      }
      text += "\n";
    }
    absl::StatusOr<Dataset> d = ParseDataset(text);
    ASSERT_TRUE(d.ok()) << d.status();
    EXPECT_EQ(SerializeDataset(*d), text);
    absl::StatusOr<Dataset> again = RoundTrip(*d);
    ASSERT_TRUE(again.ok());
    EXPECT_EQ(*again, *d);
  }
}

TEST(FileTest, WriteThenRead) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "trace_data_test.txt").string();
  const Dataset d = MakeDataset({{{0, 0}, {1, 1}}, {{2, 2}, {3, 3}, {4, 4}}});
  ASSERT_TRUE(WriteDatasetFile(d, path).ok());
  absl::StatusOr<Dataset> back = ReadDatasetFile(path);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, d);
  std::filesystem::remove(path);
  EXPECT_FALSE(ReadDatasetFile(path).ok());
}

TEST(BoundingBoxTest, TightHull) {
  absl::StatusOr<Rect> r = BoundingBox(MakeDataset({{{0, 0}, {1, 1}}}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, (Rect{0, 0, 1, 1}));
}

TEST(BoundingBoxTest, DegenerateDimensionExpanded) {
  absl::StatusOr<Rect> r = BoundingBox(MakeDataset({{{5, 5}, {5, 7}}}));
  ASSERT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r->min_x, 5 - 1e-9);
  EXPECT_DOUBLE_EQ(r->max_x, 5 + 1e-9);
  EXPECT_DOUBLE_EQ(r->min_y, 5);
  EXPECT_DOUBLE_EQ(r->max_y, 7);
  EXPECT_TRUE(r->IsValid());
}

TEST(BoundingBoxTest, MinMaxOverAllTraces) {
  absl::StatusOr<Rect> r =
      BoundingBox(MakeDataset({{{0, 0}, {2, 0}}, {{1, 3}, {1, 4}}}));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(*r, (Rect{0, 0, 2, 4}));
}

TEST(BoundingBoxTest, EmptyDatasetIsError) {
  EXPECT_FALSE(BoundingBox(Dataset()).ok());
}

TEST(BoundingBoxTest, ContainsEveryPoint) {
  absl::StatusOr<Dataset> d = GenerateToyDataset(300, Rect{-3, 2, 5, 9}, 4);
  ASSERT_TRUE(d.ok());
  absl::StatusOr<Rect> r = BoundingBox(*d);
  ASSERT_TRUE(r.ok());
  for (const Trace& t : d->traces()) {
    for (const Point& p : t.points()) EXPECT_TRUE(r->Contains(p));
  }
}

TEST(ToyDatasetTest, Deterministic) {
  EXPECT_EQ(*GenerateToyDataset(1, Rect{0, 0, 1, 1}, 7),
            *GenerateToyDataset(1, Rect{0, 0, 1, 1}, 7));
  EXPECT_EQ(*GenerateToyDataset(200, Rect{0, 0, 1, 1}, 7),
            *GenerateToyDataset(200, Rect{0, 0, 1, 1}, 7));
  EXPECT_NE(*GenerateToyDataset(200, Rect{0, 0, 1, 1}, 7),
            *GenerateToyDataset(200, Rect{0, 0, 1, 1}, 8));
}

TEST(ToyDatasetTest, CountContainmentAndLengths) {
  const Rect unit{0, 0, 1, 1};
  absl::StatusOr<Dataset> d = GenerateToyDataset(100, unit, 1);
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(d->cardinality(), 100u);
  for (const Trace& t : d->traces()) {
    EXPECT_GE(t.size(), 2u);
    EXPECT_LE(t.size(), 20u);
    for (const Point& p : t.points()) EXPECT_TRUE(unit.Contains(p));
  }
}

TEST(ToyDatasetTest, NonUniformDensityOnFourByFour) {
  absl::StatusOr<Dataset> d = GenerateToyDataset(1000, Rect{0, 0, 1, 1}, 1);
  ASSERT_TRUE(d.ok());
  // Brute-force cell counts, independent of UniformGrid.
  std::vector<int> counts(16, 0);
  for (const Trace& t : d->traces()) {
    for (const Point& p : t.points()) {
      const int col = std::min(3, static_cast<int>(p.x * 4));
      const int row = std::min(3, static_cast<int>(p.y * 4));
      ++counts[row * 4 + col];
    }
  }
  const int max = *std::max_element(counts.begin(), counts.end());
  const int min = *std::min_element(counts.begin(), counts.end());
  EXPECT_GT(max, 2 * std::max(min, 1));
}

TEST(ToyDatasetTest, InvalidArguments) {
  EXPECT_FALSE(GenerateToyDataset(0, Rect{0, 0, 1, 1}, 1).ok());
  EXPECT_FALSE(GenerateToyDataset(5, Rect{0, 0, 0, 1}, 1).ok());
}

TEST(UniformGridTest, SlotOfHalfOpenWithClosedTop) {
  EXPECT_EQ(SlotOf(0.0, 0, 1, 4), 0);
  EXPECT_EQ(SlotOf(0.25, 0, 1, 4), 1);
  EXPECT_EQ(SlotOf(0.2499, 0, 1, 4), 0);
  EXPECT_EQ(SlotOf(1.0, 0, 1, 4), 3);
  EXPECT_EQ(SlotOf(-5.0, 0, 1, 4), 0);
  EXPECT_EQ(SlotOf(7.0, 0, 1, 4), 3);
}

TEST(UniformGridTest, CellsTileRegion) {
  const UniformGrid grid(Rect{0, 0, 2, 2}, 2);
  EXPECT_EQ(grid.CellOf({1.5, 0.5}), 1);  // bottom-right
  EXPECT_EQ(grid.CellOf({2, 2}), 3);      // top-right, closed max edges
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Point p{rng.Uniform(0, 2), rng.Uniform(0, 2)};
    const int cell = grid.CellOf(p);
    EXPECT_TRUE(grid.CellRect(cell).Contains(p));
  }
}

TEST(UniformGridTest, CollapsedCellsDropsRepeats) {
  const UniformGrid grid(Rect{0, 0, 2, 2}, 2);
  const Trace t =
      *Trace::Create({{0.1, 0.1}, {0.2, 0.2}, {1.5, 0.5}, {1.6, 0.4}, {0.1, 0.1}});
  EXPECT_EQ(grid.CollapsedCells(t), (std::vector<int>{0, 1, 0}));
}

}  // namespace
}  // namespace tracesynth
