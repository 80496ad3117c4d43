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
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "tracesynth/random.h"

namespace tracesynth {

namespace {

constexpr double kDegenerateExpansion = 1e-9;

absl::string_view Trim(absl::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool ParseReal(absl::string_view s, double& out) {
  s = Trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

absl::StatusOr<std::vector<Point>> ParseLine(absl::string_view line,
                                             size_t line_number) {
  std::vector<Point> points;
  size_t pos = 0;
  while (pos < line.size()) {
    size_t next = line.find(';', pos);
    if (next == absl::string_view::npos) next = line.size();
    absl::string_view pair = Trim(line.substr(pos, next - pos));
    pos = next + 1;
    if (pair.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": empty coordinate pair"));
    }
    const size_t comma = pair.find(',');
    Point p;
    if (comma == absl::string_view::npos ||
        !ParseReal(pair.substr(0, comma), p.x) ||
        !ParseReal(pair.substr(comma + 1), p.y)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "line ", line_number, ": malformed coordinate pair '", pair, "'"));
    }
    points.push_back(p);
  }
  return points;
}

}  // namespace

absl::StatusOr<Trace> Trace::Create(std::vector<Point> points) {
  if (points.size() < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("trace length ", points.size(), " < 2"));
  }
  for (const Point& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      return absl::InvalidArgumentError("trace contains non-finite point");
    }
  }
  return Trace(std::move(points));
}

double Trace::TravelDistance() const {
  double total = 0.0;
  for (size_t i = 1; i < points_.size(); ++i) {
    total += std::hypot(points_[i].x - points_[i - 1].x,
                        points_[i].y - points_[i - 1].y);
  }
  return total;
}

size_t Dataset::TotalPoints() const {
  size_t total = 0;
  for (const Trace& t : traces_) total += t.size();
  return total;
}

absl::StatusOr<Dataset> ParseDataset(absl::string_view text) {
  std::vector<Trace> traces;
  size_t line_number = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == absl::string_view::npos) eol = text.size();
    absl::string_view line = Trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_number;
    if (line.empty() || line.front() == '#') continue;
    absl::StatusOr<std::vector<Point>> points = ParseLine(line, line_number);
    if (!points.ok()) return points.status();
    if (points->size() < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": trace length ",
                       points->size(), " < 2"));
    }
    absl::StatusOr<Trace> trace = Trace::Create(*std::move(points));
    if (!trace.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_number, ": ", trace.status().message()));
    }
    traces.push_back(*std::move(trace));
  }
  if (traces.empty()) {
    return absl::InvalidArgumentError("empty dataset: no traces found");
  }
  return Dataset(std::move(traces));
}

absl::StatusOr<Dataset> ReadDatasetFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseDataset(buffer.str());
}

std::string SerializeDataset(const Dataset& dataset) {
  std::string out;
  for (const Trace& trace : dataset.traces()) {
    bool first = true;
    for (const Point& p : trace.points()) {
      if (!first) out.push_back(';');
      first = false;
      absl::StrAppendFormat(&out, "%.6f,%.6f", p.x, p.y);
    }
    out.push_back('\n');
  }
  return out;
}

absl::StatusOr<Dataset> RoundTrip(const Dataset& dataset) {
  return ParseDataset(SerializeDataset(dataset));
}

absl::Status WriteDatasetFile(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path));
  out << SerializeDataset(dataset);
  if (!out) return absl::InternalError(absl::StrCat("write failed: ", path));
  return absl::OkStatus();
}

absl::StatusOr<Rect> BoundingBox(const Dataset& dataset) {
  if (dataset.empty()) {
    return absl::InvalidArgumentError("empty dataset: no bounding box");
  }
  Rect r{std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity()};
  for (const Trace& t : dataset.traces()) {
    for (const Point& p : t.points()) {
      r.min_x = std::min(r.min_x, p.x);
      r.min_y = std::min(r.min_y, p.y);
      r.max_x = std::max(r.max_x, p.x);
      r.max_y = std::max(r.max_y, p.y);
    }
  }
  if (!(r.min_x < r.max_x)) {
    r.min_x -= kDegenerateExpansion;
    r.max_x += kDegenerateExpansion;
  }
  if (!(r.min_y < r.max_y)) {
    r.min_y -= kDegenerateExpansion;
    r.max_y += kDegenerateExpansion;
  }
  return r;
}

absl::StatusOr<Dataset> GenerateToyDataset(int n_traces, const Rect& region,
                                           uint64_t seed) {
  if (n_traces < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("n_traces must be >= 1, got ", n_traces));
  }
  if (!region.IsValid()) {
    return absl::InvalidArgumentError("region must have positive extent");
  }
  // Attractors in region-relative coordinates, with a skewed popularity and
  // a skewed origin/destination preference.
  constexpr Point kAttractors[3] = {{0.2, 0.25}, {0.75, 0.8}, {0.8, 0.2}};
  constexpr double kStartCdf[3] = {0.5, 0.8, 1.0};
  constexpr int kDestination[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  constexpr double kFirstChoice[3] = {0.7, 0.8, 0.5};
  constexpr double kSpread = 0.05;
  constexpr double kJitter = 0.02;
  // Bounded stride: short walks stay local and long ones reach the goal and
  // linger, so travel distance grows with length.
  constexpr double kStride = 0.06;

  auto to_region = [&](double rx, double ry) {
    rx = std::clamp(rx, 0.0, 1.0);
    ry = std::clamp(ry, 0.0, 1.0);
    return Point{region.min_x + rx * region.width(),
                 region.min_y + ry * region.height()};
  };

  Rng master(seed);
  std::vector<Trace> traces;
  traces.reserve(n_traces);
  for (int i = 0; i < n_traces; ++i) {
    Rng rng = master.Fork(static_cast<uint64_t>(i));
    const double pick = rng.UniformOpen();
    int from = 0;
    while (pick > kStartCdf[from]) ++from;
    const int to = rng.UniformOpen() < kFirstChoice[from]
                       ? kDestination[from][0]
                       : kDestination[from][1];
    const int length = static_cast<int>(rng.UniformInt(2, 20));

    double x = kAttractors[from].x + kSpread * rng.StandardNormal();
    double y = kAttractors[from].y + kSpread * rng.StandardNormal();
    const double goal_x = kAttractors[to].x + kSpread * rng.StandardNormal();
    const double goal_y = kAttractors[to].y + kSpread * rng.StandardNormal();

    std::vector<Point> points;
    points.reserve(length);
    x = std::clamp(x, 0.0, 1.0);
    y = std::clamp(y, 0.0, 1.0);
    points.push_back(to_region(x, y));
    for (int step = 1; step < length; ++step) {
      const double dx = goal_x - x;
      const double dy = goal_y - y;
      const double scale = std::min(1.0, kStride / std::max(std::hypot(dx, dy), 1e-12));
      x += scale * dx + kJitter * rng.StandardNormal();
      y += scale * dy + kJitter * rng.StandardNormal();
      x = std::clamp(x, 0.0, 1.0);
      y = std::clamp(y, 0.0, 1.0);
      points.push_back(to_region(x, y));
    }
    absl::StatusOr<Trace> trace = Trace::Create(std::move(points));
    if (!trace.ok()) return trace.status();
    traces.push_back(*std::move(trace));
  }
  return Dataset(std::move(traces));
}

}  // namespace tracesynth
