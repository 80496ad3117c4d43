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

#include "tracesynth/uniform_grid.h"

#include <algorithm>
#include <cmath>

namespace tracesynth {

int SlotOf(double value, double lo, double hi, int bins) {
  if (!(value > lo)) return 0;
  if (!(value < hi)) return bins - 1;
  const int slot = static_cast<int>(std::floor((value - lo) / (hi - lo) * bins));
  return std::clamp(slot, 0, bins - 1);
}

int UniformGrid::CellOf(const Point& p) const {
  const int col = SlotOf(p.x, region_.min_x, region_.max_x, n_);
  const int row = SlotOf(p.y, region_.min_y, region_.max_y, n_);
  return row * n_ + col;
}

Rect UniformGrid::CellRect(int cell) const {
  const int row = cell / n_;
  const int col = cell % n_;
  const double w = region_.width() / n_;
  const double h = region_.height() / n_;
  return Rect{region_.min_x + col * w, region_.min_y + row * h,
              col == n_ - 1 ? region_.max_x : region_.min_x + (col + 1) * w,
              row == n_ - 1 ? region_.max_y : region_.min_y + (row + 1) * h};
}

std::vector<int> UniformGrid::CollapsedCells(const Trace& trace) const {
  std::vector<int> cells;
  cells.reserve(trace.size());
  for (const Point& p : trace.points()) {
    const int c = CellOf(p);
    if (cells.empty() || cells.back() != c) cells.push_back(c);
  }
  return cells;
}

}  // namespace tracesynth
