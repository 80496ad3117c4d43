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

// Utility loss between a real dataset D and a synthetic dataset D_syn.
//
// Built-in metrics:
//   query     mean relative error of range-count queries "how many traces
//             pass through rectangle X", with a sanity bound b = 0.01 |D|
//             in the denominator.
//   pattern   mean relative support error of the top-k contiguous cell
//             patterns (lengths 2..8) mined from D on an 8x8 grid.
//   trip      Jensen-Shannon divergence of (start cell, end cell) pmfs on a
//             6x6 grid.
//   distance  Jensen-Shannon divergence of travel-distance histograms with
//             20 equal buckets spanning D's longest trace.
// All metrics are 0 when D_syn equals D. Custom metrics can be registered by
// name and are evaluated alongside the built-ins.

#ifndef TRACESYNTH_METRICS_H_
#define TRACESYNTH_METRICS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "tracesynth/trace_data.h"
#include "tracesynth/uniform_grid.h"

namespace tracesynth {

// Jensen-Shannon divergence, base 2, in [0, 1]. Both inputs must have the
// same length and each sum to 1 within 1e-6.
absl::StatusOr<double> Jsd(std::span<const double> p, std::span<const double> q);

struct MetricConfig {
  int query_count = 200;
  double sanity_fraction = 0.01;
  uint64_t query_seed = 20210401;
  double query_min_side = 0.1;
  double query_max_side = 0.3;
  int pattern_k = 100;
  int pattern_min_length = 2;
  int pattern_max_length = 8;
  int pattern_grid = 8;
  int trip_grid = 6;
  int distance_buckets = 20;
};

enum class BuiltinMetric { kQuery, kPattern, kTrip, kDistance };

inline constexpr BuiltinMetric kBuiltinMetrics[] = {
    BuiltinMetric::kQuery, BuiltinMetric::kPattern, BuiltinMetric::kTrip,
    BuiltinMetric::kDistance};

const char* BuiltinMetricName(BuiltinMetric metric);

// A built-in metric or the name of a registered custom metric.
class MetricId {
 public:
  MetricId(BuiltinMetric builtin) : builtin_(builtin) {}  // NOLINT
  static MetricId Custom(std::string name) { return MetricId(std::move(name)); }

  bool is_builtin() const { return builtin_.has_value(); }
  BuiltinMetric builtin() const { return *builtin_; }
  std::string name() const;

  friend bool operator==(const MetricId&, const MetricId&) = default;

 private:
  explicit MetricId(std::string custom) : custom_(std::move(custom)) {}

  std::optional<BuiltinMetric> builtin_;
  std::string custom_;
};

using CustomMetricFn = std::function<absl::StatusOr<double>(
    const Dataset& real, const Dataset& synthetic, const MetricConfig& config)>;

// Process-wide registry of user-defined metrics.
class MetricRegistry {
 public:
  static MetricRegistry& Global();

  absl::Status Register(const std::string& name, CustomMetricFn fn);
  absl::Status Unregister(const std::string& name);
  const CustomMetricFn* Find(const std::string& name) const;
  std::vector<std::string> Names() const;

 private:
  std::map<std::string, CustomMetricFn> metrics_;
};

// Resolves "query", "pattern", "trip", "distance" or a registered custom
// name. The error message lists every valid name.
absl::StatusOr<MetricId> ParseMetricId(absl::string_view name);

struct MetricReport {
  double query_error = 0.0;
  double pattern_support_error = 0.0;
  double trip_error = 0.0;
  double travel_distance_error = 0.0;
  std::map<std::string, double> custom;

  double Get(BuiltinMetric metric) const;
};

// ----- Query error

struct RangeQuery {
  Rect rect;
};

std::vector<RangeQuery> GenerateQueryWorkload(const Rect& region, int count,
                                              uint64_t seed,
                                              double min_side = 0.1,
                                              double max_side = 0.3);

// Number of traces with at least one reading inside the (closed) rectangle.
int64_t CountTracesInRect(const Dataset& dataset, const Rect& rect);

double QueryRelativeError(double real_answer, double synthetic_answer,
                          double sanity_bound);

absl::StatusOr<double> QueryError(const Dataset& real,
                                  const Dataset& synthetic,
                                  std::span<const RangeQuery> workload,
                                  double sanity_fraction = 0.01);

// ----- Pattern mining

struct Pattern {
  std::vector<int> cells;

  friend auto operator<=>(const Pattern&, const Pattern&) = default;
};

struct PatternSupport {
  Pattern pattern;
  int64_t support = 0;
};

// Top-k contiguous patterns over already-collapsed cell sequences. Support is
// the number of sequences containing the pattern at least once; ties go to
// the shorter pattern, then to the lexicographically smaller one.
absl::StatusOr<std::vector<PatternSupport>> MineTopKPatterns(
    std::span<const std::vector<int>> sequences, int k, int min_length,
    int max_length);

absl::StatusOr<std::vector<PatternSupport>> MineTopKPatterns(
    const Dataset& dataset, const UniformGrid& grid, int k, int min_length,
    int max_length);

// Supports of the given patterns in `sequences`.
std::vector<int64_t> CountSupports(std::span<const std::vector<int>> sequences,
                                   std::span<const Pattern> patterns);

// Mean of |supp(D, P) - supp(D_syn, P)| / supp(D, P) over mined patterns.
double PatternRelativeError(std::span<const PatternSupport> mined,
                            std::span<const int64_t> synthetic_supports);

absl::StatusOr<double> PatternSupportError(const Dataset& real,
                                           const Dataset& synthetic,
                                           const UniformGrid& grid, int k,
                                           int min_length = 2,
                                           int max_length = 8);

// ----- Trip and travel distance

// Row-major (start cell, end cell) pmf over grid.cell_count()^2 pairs.
std::vector<double> TripPmf(const Dataset& dataset, const UniformGrid& grid);

absl::StatusOr<double> TripError(const Dataset& real, const Dataset& synthetic,
                                 int grid_n = 6);

// Trace counts per bucket [i*width, (i+1)*width); distances beyond the last
// bucket are clamped into it.
std::vector<double> DistanceHistogram(const Dataset& dataset,
                                      double bucket_width, int buckets);

// Largest travel distance in `dataset` divided by `buckets`; a dataset of
// stationary traces gets a width of 1 so every trace falls in bucket 0.
double DistanceBucketWidth(const Dataset& dataset, int buckets);

absl::StatusOr<double> TravelDistanceError(const Dataset& real,
                                           const Dataset& synthetic,
                                           int buckets = 20);

// ----- Point density

// bins x bins point counts over `region` (row-major from min_y), clamping
// outside points onto the border bins.
std::vector<double> PointHeatmap(const Dataset& dataset, const Rect& region,
                                 int bins);

// Caches everything derived from the real dataset (query workload and
// answers, mined patterns, trip pmf, distance buckets) so repeated
// evaluation of synthetic candidates only pays for the synthetic side.
class MetricEvaluator {
 public:
  static absl::StatusOr<std::unique_ptr<MetricEvaluator>> Create(
      const Dataset& real, const MetricConfig& config = {});

  const Dataset& real() const { return real_; }
  const MetricConfig& config() const { return config_; }
  const Rect& region() const { return region_; }
  std::span<const RangeQuery> workload() const { return workload_; }
  std::span<const PatternSupport> mined_patterns() const { return mined_; }
  std::span<const double> real_trip_pmf() const { return real_trip_pmf_; }
  std::span<const double> real_distance_histogram() const {
    return real_distance_histogram_;
  }
  double distance_bucket_width() const { return distance_width_; }

  absl::StatusOr<double> Evaluate(const Dataset& synthetic,
                                  const MetricId& metric) const;

  // All built-in metrics plus every registered custom metric. Errors are
  // annotated with the failing metric's name.
  absl::StatusOr<MetricReport> EvaluateAll(const Dataset& synthetic) const;

 private:
  MetricEvaluator(const Dataset& real, const MetricConfig& config)
      : real_(real), config_(config) {}

  absl::StatusOr<double> EvaluateBuiltin(const Dataset& synthetic,
                                         BuiltinMetric metric) const;

  const Dataset& real_;
  MetricConfig config_;
  Rect region_;
  std::vector<RangeQuery> workload_;
  std::vector<int64_t> real_answers_;
  std::vector<PatternSupport> mined_;
  absl::Status pattern_status_;
  std::vector<double> real_trip_pmf_;
  double distance_width_ = 1.0;
  std::vector<double> real_distance_histogram_;
};

absl::StatusOr<MetricReport> EvaluateAll(const Dataset& real,
                                         const Dataset& synthetic,
                                         const MetricConfig& config = {});

}  // namespace tracesynth

#endif  // TRACESYNTH_METRICS_H_
