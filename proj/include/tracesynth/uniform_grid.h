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

#ifndef TRACESYNTH_UNIFORM_GRID_H_
#define TRACESYNTH_UNIFORM_GRID_H_

#include <vector>

#include "tracesynth/trace_data.h"

namespace tracesynth {

// Maps a coordinate onto one of `bins` half-open slots of [lo, hi], with the
// upper edge closed and out-of-range values clamped to the border slots.
int SlotOf(double value, double lo, double hi, int bins);

// n x n equal-sized cells over a rectangle. Cell index = row * n + column,
// row counted from min_y.
class UniformGrid {
 public:
  UniformGrid(const Rect& region, int n) : region_(region), n_(n) {}

  const Rect& region() const { return region_; }
  int n() const { return n_; }
  int cell_count() const { return n_ * n_; }

  int CellOf(const Point& p) const;
  Rect CellRect(int cell) const;

  // Cell sequence of a trace with consecutive repeats removed.
  std::vector<int> CollapsedCells(const Trace& trace) const;

 private:
  Rect region_;
  int n_;
};

}  // namespace tracesynth

#endif  // TRACESYNTH_UNIFORM_GRID_H_
