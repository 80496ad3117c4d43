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

// Location trace datasets: the in-memory model, the flat text file format and
// a deterministic toy generator used for desk-scale experiments.
//
// File format: one trace per line, `x,y;x,y;...;x,y`. Lines starting with `#`
// and blank lines are ignored; a trailing `;` is tolerated. The writer emits
// six decimal places and `\n` line endings.

#ifndef TRACESYNTH_TRACE_DATA_H_
#define TRACESYNTH_TRACE_DATA_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"

namespace tracesynth {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 1.0;
  double max_y = 1.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }
  // Closed containment test.
  bool Contains(const Point& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool IsValid() const { return min_x < max_x && min_y < max_y; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// An ordered sequence of at least two readings. Immutable.
class Trace {
 public:
  static absl::StatusOr<Trace> Create(std::vector<Point> points);

  std::span<const Point> points() const { return points_; }
  size_t size() const { return points_.size(); }
  const Point& front() const { return points_.front(); }
  const Point& back() const { return points_.back(); }

  // Sum of Euclidean distances between consecutive readings.
  double TravelDistance() const;

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  explicit Trace(std::vector<Point> points) : points_(std::move(points)) {}

  std::vector<Point> points_;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Trace> traces) : traces_(std::move(traces)) {}

  std::span<const Trace> traces() const { return traces_; }
  size_t cardinality() const { return traces_.size(); }
  bool empty() const { return traces_.empty(); }
  size_t TotalPoints() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Trace> traces_;
};

absl::StatusOr<Dataset> ParseDataset(absl::string_view text);
absl::StatusOr<Dataset> ReadDatasetFile(const std::string& path);

std::string SerializeDataset(const Dataset& dataset);
absl::Status WriteDatasetFile(const Dataset& dataset, const std::string& path);

// `dataset` as it reads back after SerializeDataset (coordinates rounded to
// the file precision).
absl::StatusOr<Dataset> RoundTrip(const Dataset& dataset);

// Tight hull of every point. A degenerate dimension is widened by 1e-9 on
// each side so downstream grids always have positive extent.
absl::StatusOr<Rect> BoundingBox(const Dataset& dataset);

// Random walks of length uniform in [2, 20] that drift towards one of three
// fixed attractors inside `region`, giving non-uniform density, trip and
// length structure. Pure function of its arguments.
absl::StatusOr<Dataset> GenerateToyDataset(int n_traces, const Rect& region,
                                           uint64_t seed);

}  // namespace tracesynth

#endif  // TRACESYNTH_TRACE_DATA_H_
