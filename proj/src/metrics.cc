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

#include "tracesynth/metrics.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "tracesynth/random.h"

namespace tracesynth {

namespace {

constexpr double kPmfTolerance = 1e-6;
// Patterns are packed one byte per cell (cell + 1, so 0 marks "absent").
constexpr int kMaxPackedLength = 8;
constexpr int kMaxPackedCells = 254;

uint64_t PackPattern(std::span<const int> cells) {
  uint64_t key = 0;
  for (int c : cells) key = (key << 8) | static_cast<uint64_t>(c + 1);
  return key;
}

Pattern UnpackPattern(uint64_t key) {
  std::vector<int> reversed;
  while (key != 0) {
    reversed.push_back(static_cast<int>(key & 0xff) - 1);
    key >>= 8;
  }
  return Pattern{std::vector<int>(reversed.rbegin(), reversed.rend())};
}

// Distinct contiguous sub-sequences of `seq` with length in
// [min_length, max_length], packed.
void DistinctSubsequences(const std::vector<int>& seq, int min_length,
                          int max_length, std::vector<uint64_t>& out) {
  out.clear();
  const int n = static_cast<int>(seq.size());
  for (int begin = 0; begin < n; ++begin) {
    uint64_t key = 0;
    for (int len = 1; len <= max_length && begin + len <= n; ++len) {
      key = (key << 8) | static_cast<uint64_t>(seq[begin + len - 1] + 1);
      if (len >= min_length) out.push_back(key);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

absl::Status CheckPatternBounds(int k, int min_length, int max_length) {
  if (k < 1) return absl::InvalidArgumentError("pattern k must be >= 1");
  if (min_length < 2 || min_length > max_length ||
      max_length > kMaxPackedLength) {
    return absl::InvalidArgumentError(absl::StrCat(
        "pattern lengths must satisfy 2 <= min <= max <= ", kMaxPackedLength,
        ", got [", min_length, ", ", max_length, "]"));
  }
  return absl::OkStatus();
}

std::vector<std::vector<int>> CollapsedSequences(const Dataset& dataset,
                                                 const UniformGrid& grid) {
  std::vector<std::vector<int>> sequences;
  sequences.reserve(dataset.cardinality());
  for (const Trace& t : dataset.traces()) {
    sequences.push_back(grid.CollapsedCells(t));
  }
  return sequences;
}

absl::Status RequireNonEmpty(const Dataset& real, const Dataset& synthetic) {
  if (real.empty() || synthetic.empty()) {
    return absl::InvalidArgumentError("metric inputs must be non-empty");
  }
  return absl::OkStatus();
}

absl::Status Annotate(const absl::Status& status, absl::string_view metric) {
  return absl::Status(status.code(),
                      absl::StrCat(metric, ": ", status.message()));
}

}  // namespace

absl::StatusOr<double> Jsd(std::span<const double> p,
                           std::span<const double> q) {
  if (p.size() != q.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "JSD support mismatch: ", p.size(), " vs ", q.size(), " entries"));
  }
  double sum_p = 0.0;
  double sum_q = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0 || q[i] < 0) {
      return absl::InvalidArgumentError("JSD inputs must be non-negative");
    }
    sum_p += p[i];
    sum_q += q[i];
  }
  if (std::abs(sum_p - 1.0) > kPmfTolerance ||
      std::abs(sum_q - 1.0) > kPmfTolerance) {
    return absl::InvalidArgumentError(
        absl::StrCat("JSD inputs must sum to 1, got ", sum_p, " and ", sum_q));
  }
  double divergence = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) divergence += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) divergence += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return std::clamp(divergence, 0.0, 1.0);
}

const char* BuiltinMetricName(BuiltinMetric metric) {
  switch (metric) {
    case BuiltinMetric::kQuery:
      return "query";
    case BuiltinMetric::kPattern:
      return "pattern";
    case BuiltinMetric::kTrip:
      return "trip";
    case BuiltinMetric::kDistance:
      return "distance";
  }
  return "unknown";
}

std::string MetricId::name() const {
  return builtin_.has_value() ? BuiltinMetricName(*builtin_) : custom_;
}

MetricRegistry& MetricRegistry::Global() {
  static auto* registry = new MetricRegistry();
  return *registry;
}

absl::Status MetricRegistry::Register(const std::string& name,
                                      CustomMetricFn fn) {
  for (BuiltinMetric m : kBuiltinMetrics) {
    if (name == BuiltinMetricName(m)) {
      return absl::AlreadyExistsError(
          absl::StrCat("'", name, "' is a built-in metric"));
    }
  }
  if (name.empty() || !fn) {
    return absl::InvalidArgumentError("custom metric needs a name and body");
  }
  if (!metrics_.emplace(name, std::move(fn)).second) {
    return absl::AlreadyExistsError(
        absl::StrCat("metric '", name, "' already registered"));
  }
  return absl::OkStatus();
}

absl::Status MetricRegistry::Unregister(const std::string& name) {
  if (metrics_.erase(name) == 0) {
    return absl::NotFoundError(absl::StrCat("no metric '", name, "'"));
  }
  return absl::OkStatus();
}

const CustomMetricFn* MetricRegistry::Find(const std::string& name) const {
  auto it = metrics_.find(name);
  return it == metrics_.end() ? nullptr : &it->second;
}

std::vector<std::string> MetricRegistry::Names() const {
  std::vector<std::string> names;
  for (const auto& [name, fn] : metrics_) names.push_back(name);
  return names;
}

absl::StatusOr<MetricId> ParseMetricId(absl::string_view name) {
  for (BuiltinMetric m : kBuiltinMetrics) {
    if (name == BuiltinMetricName(m)) return MetricId(m);
  }
  const std::string key(name);
  if (MetricRegistry::Global().Find(key) != nullptr) {
    return MetricId::Custom(key);
  }
  std::vector<std::string> valid = {"query", "pattern", "trip", "distance"};
  for (std::string& custom : MetricRegistry::Global().Names()) {
    valid.push_back(std::move(custom));
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown metric '", name,
                   "'; valid metrics: ", absl::StrJoin(valid, ", ")));
}

double MetricReport::Get(BuiltinMetric metric) const {
  switch (metric) {
    case BuiltinMetric::kQuery:
      return query_error;
    case BuiltinMetric::kPattern:
      return pattern_support_error;
    case BuiltinMetric::kTrip:
      return trip_error;
    case BuiltinMetric::kDistance:
      return travel_distance_error;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Query error

std::vector<RangeQuery> GenerateQueryWorkload(const Rect& region, int count,
                                              uint64_t seed, double min_side,
                                              double max_side) {
  Rng rng(seed);
  std::vector<RangeQuery> workload;
  workload.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) {
    const double w = region.width() * rng.Uniform(min_side, max_side);
    const double h = region.height() * rng.Uniform(min_side, max_side);
    const double x = rng.Uniform(region.min_x, region.max_x - w);
    const double y = rng.Uniform(region.min_y, region.max_y - h);
    workload.push_back({Rect{x, y, x + w, y + h}});
  }
  return workload;
}

int64_t CountTracesInRect(const Dataset& dataset, const Rect& rect) {
  int64_t count = 0;
  for (const Trace& t : dataset.traces()) {
    for (const Point& p : t.points()) {
      if (rect.Contains(p)) {
        ++count;
        break;
      }
    }
  }
  return count;
}

double QueryRelativeError(double real_answer, double synthetic_answer,
                          double sanity_bound) {
  return std::abs(real_answer - synthetic_answer) /
         std::max(real_answer, sanity_bound);
}

absl::StatusOr<double> QueryError(const Dataset& real,
                                  const Dataset& synthetic,
                                  std::span<const RangeQuery> workload,
                                  double sanity_fraction) {
  if (absl::Status s = RequireNonEmpty(real, synthetic); !s.ok()) return s;
  if (workload.empty()) {
    return absl::InvalidArgumentError("query workload is empty");
  }
  const double bound = sanity_fraction * static_cast<double>(real.cardinality());
  double total = 0.0;
  for (const RangeQuery& q : workload) {
    total += QueryRelativeError(
        static_cast<double>(CountTracesInRect(real, q.rect)),
        static_cast<double>(CountTracesInRect(synthetic, q.rect)), bound);
  }
  return total / static_cast<double>(workload.size());
}

// ---------------------------------------------------------------------------
// Pattern mining

absl::StatusOr<std::vector<PatternSupport>> MineTopKPatterns(
    std::span<const std::vector<int>> sequences, int k, int min_length,
    int max_length) {
  if (absl::Status s = CheckPatternBounds(k, min_length, max_length); !s.ok()) {
    return s;
  }
  std::unordered_map<uint64_t, int64_t> support;
  std::vector<uint64_t> keys;
  for (const std::vector<int>& seq : sequences) {
    for (int c : seq) {
      if (c < 0 || c >= kMaxPackedCells) {
        return absl::InvalidArgumentError(absl::StrCat(
            "pattern cells must lie in [0, ", kMaxPackedCells, ")"));
      }
    }
    DistinctSubsequences(seq, min_length, max_length, keys);
    for (uint64_t key : keys) ++support[key];
  }

  std::vector<PatternSupport> all;
  all.reserve(support.size());
  for (const auto& [key, count] : support) {
    all.push_back({UnpackPattern(key), count});
  }
  auto better = [](const PatternSupport& a, const PatternSupport& b) {
    if (a.support != b.support) return a.support > b.support;
    if (a.pattern.cells.size() != b.pattern.cells.size()) {
      return a.pattern.cells.size() < b.pattern.cells.size();
    }
    return a.pattern.cells < b.pattern.cells;
  };
  const size_t keep = std::min(all.size(), static_cast<size_t>(k));
  std::partial_sort(all.begin(), all.begin() + keep, all.end(), better);
  all.resize(keep);
  return all;
}

absl::StatusOr<std::vector<PatternSupport>> MineTopKPatterns(
    const Dataset& dataset, const UniformGrid& grid, int k, int min_length,
    int max_length) {
  if (grid.cell_count() > kMaxPackedCells) {
    return absl::InvalidArgumentError(absl::StrCat(
        "pattern grid has ", grid.cell_count(), " cells; at most ",
        kMaxPackedCells, " supported"));
  }
  const std::vector<std::vector<int>> sequences =
      CollapsedSequences(dataset, grid);
  return MineTopKPatterns(sequences, k, min_length, max_length);
}

std::vector<int64_t> CountSupports(std::span<const std::vector<int>> sequences,
                                   std::span<const Pattern> patterns) {
  std::unordered_map<uint64_t, size_t> index;
  int min_length = kMaxPackedLength;
  int max_length = 0;
  for (size_t i = 0; i < patterns.size(); ++i) {
    index.emplace(PackPattern(patterns[i].cells), i);
    const int len = static_cast<int>(patterns[i].cells.size());
    min_length = std::min(min_length, len);
    max_length = std::max(max_length, len);
  }
  std::vector<int64_t> supports(patterns.size(), 0);
  if (patterns.empty()) return supports;
  std::vector<uint64_t> keys;
  for (const std::vector<int>& seq : sequences) {
    DistinctSubsequences(seq, min_length, max_length, keys);
    for (uint64_t key : keys) {
      auto it = index.find(key);
      if (it != index.end()) ++supports[it->second];
    }
  }
  return supports;
}

double PatternRelativeError(std::span<const PatternSupport> mined,
                            std::span<const int64_t> synthetic_supports) {
  double total = 0.0;
  for (size_t i = 0; i < mined.size(); ++i) {
    const double real = static_cast<double>(mined[i].support);
    total += std::abs(real - static_cast<double>(synthetic_supports[i])) / real;
  }
  return total / static_cast<double>(mined.size());
}

absl::StatusOr<double> PatternSupportError(const Dataset& real,
                                           const Dataset& synthetic,
                                           const UniformGrid& grid, int k,
                                           int min_length, int max_length) {
  if (absl::Status s = RequireNonEmpty(real, synthetic); !s.ok()) return s;
  absl::StatusOr<std::vector<PatternSupport>> mined =
      MineTopKPatterns(real, grid, k, min_length, max_length);
  if (!mined.ok()) return mined.status();
  if (mined->empty()) {
    return absl::FailedPreconditionError(
        "real dataset yields no patterns to evaluate");
  }
  std::vector<Pattern> patterns;
  for (const PatternSupport& ps : *mined) patterns.push_back(ps.pattern);
  const std::vector<int64_t> supports =
      CountSupports(CollapsedSequences(synthetic, grid), patterns);
  return PatternRelativeError(*mined, supports);
}

// ---------------------------------------------------------------------------
// Trip and travel distance

std::vector<double> TripPmf(const Dataset& dataset, const UniformGrid& grid) {
  const int cells = grid.cell_count();
  std::vector<double> pmf(static_cast<size_t>(cells) * cells, 0.0);
  if (dataset.empty()) return pmf;
  for (const Trace& t : dataset.traces()) {
    pmf[static_cast<size_t>(grid.CellOf(t.front())) * cells +
        grid.CellOf(t.back())] += 1.0;
  }
  for (double& p : pmf) p /= static_cast<double>(dataset.cardinality());
  return pmf;
}

absl::StatusOr<double> TripError(const Dataset& real, const Dataset& synthetic,
                                 int grid_n) {
  if (absl::Status s = RequireNonEmpty(real, synthetic); !s.ok()) return s;
  absl::StatusOr<Rect> region = BoundingBox(real);
  if (!region.ok()) return region.status();
  const UniformGrid grid(*region, grid_n);
  return Jsd(TripPmf(real, grid), TripPmf(synthetic, grid));
}

std::vector<double> DistanceHistogram(const Dataset& dataset,
                                      double bucket_width, int buckets) {
  std::vector<double> histogram(buckets, 0.0);
  for (const Trace& t : dataset.traces()) {
    const double d = t.TravelDistance();
    int bucket = static_cast<int>(std::floor(d / bucket_width));
    bucket = std::clamp(bucket, 0, buckets - 1);
    histogram[bucket] += 1.0;
  }
  return histogram;
}

double DistanceBucketWidth(const Dataset& dataset, int buckets) {
  double longest = 0.0;
  for (const Trace& t : dataset.traces()) {
    longest = std::max(longest, t.TravelDistance());
  }
  return longest > 0 ? longest / buckets : 1.0;
}

namespace {

std::vector<double> Normalized(std::vector<double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total > 0) {
    for (double& c : counts) c /= total;
  }
  return counts;
}

}  // namespace

absl::StatusOr<double> TravelDistanceError(const Dataset& real,
                                           const Dataset& synthetic,
                                           int buckets) {
  if (absl::Status s = RequireNonEmpty(real, synthetic); !s.ok()) return s;
  if (buckets < 1) return absl::InvalidArgumentError("buckets must be >= 1");
  const double width = DistanceBucketWidth(real, buckets);
  return Jsd(Normalized(DistanceHistogram(real, width, buckets)),
             Normalized(DistanceHistogram(synthetic, width, buckets)));
}

std::vector<double> PointHeatmap(const Dataset& dataset, const Rect& region,
                                 int bins) {
  const UniformGrid grid(region, bins);
  std::vector<double> counts(grid.cell_count(), 0.0);
  for (const Trace& t : dataset.traces()) {
    for (const Point& p : t.points()) counts[grid.CellOf(p)] += 1.0;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// MetricEvaluator

absl::StatusOr<std::unique_ptr<MetricEvaluator>> MetricEvaluator::Create(
    const Dataset& real, const MetricConfig& config) {
  if (real.empty()) {
    return absl::InvalidArgumentError("metric inputs must be non-empty");
  }
  if (config.query_count < 1 || config.trip_grid < 1 ||
      config.distance_buckets < 1 || config.pattern_grid < 1) {
    return absl::InvalidArgumentError("metric configuration out of range");
  }
  std::unique_ptr<MetricEvaluator> e(new MetricEvaluator(real, config));
  absl::StatusOr<Rect> region = BoundingBox(real);
  if (!region.ok()) return region.status();
  e->region_ = *region;

  e->workload_ = GenerateQueryWorkload(*region, config.query_count,
                                       config.query_seed, config.query_min_side,
                                       config.query_max_side);
  e->real_answers_.reserve(e->workload_.size());
  for (const RangeQuery& q : e->workload_) {
    e->real_answers_.push_back(CountTracesInRect(real, q.rect));
  }

  absl::StatusOr<std::vector<PatternSupport>> mined = MineTopKPatterns(
      real, UniformGrid(*region, config.pattern_grid), config.pattern_k,
      config.pattern_min_length, config.pattern_max_length);
  if (!mined.ok()) {
    e->pattern_status_ = mined.status();
  } else if (mined->empty()) {
    e->pattern_status_ = absl::FailedPreconditionError(
        "real dataset yields no patterns to evaluate");
  } else {
    e->mined_ = *std::move(mined);
  }

  e->real_trip_pmf_ = TripPmf(real, UniformGrid(*region, config.trip_grid));
  e->distance_width_ = DistanceBucketWidth(real, config.distance_buckets);
  e->real_distance_histogram_ = Normalized(
      DistanceHistogram(real, e->distance_width_, config.distance_buckets));
  return e;
}

absl::StatusOr<double> MetricEvaluator::EvaluateBuiltin(
    const Dataset& synthetic, BuiltinMetric metric) const {
  if (synthetic.empty()) {
    return absl::InvalidArgumentError("metric inputs must be non-empty");
  }
  switch (metric) {
    case BuiltinMetric::kQuery: {
      const double bound =
          config_.sanity_fraction * static_cast<double>(real_.cardinality());
      double total = 0.0;
      for (size_t i = 0; i < workload_.size(); ++i) {
        total += QueryRelativeError(
            static_cast<double>(real_answers_[i]),
            static_cast<double>(CountTracesInRect(synthetic, workload_[i].rect)),
            bound);
      }
      return total / static_cast<double>(workload_.size());
    }
    case BuiltinMetric::kPattern: {
      if (!pattern_status_.ok()) return pattern_status_;
      std::vector<Pattern> patterns;
      patterns.reserve(mined_.size());
      for (const PatternSupport& ps : mined_) patterns.push_back(ps.pattern);
      const std::vector<int64_t> supports = CountSupports(
          CollapsedSequences(synthetic,
                             UniformGrid(region_, config_.pattern_grid)),
          patterns);
      return PatternRelativeError(mined_, supports);
    }
    case BuiltinMetric::kTrip:
      return Jsd(real_trip_pmf_,
                 TripPmf(synthetic, UniformGrid(region_, config_.trip_grid)));
    case BuiltinMetric::kDistance:
      return Jsd(real_distance_histogram_,
                 Normalized(DistanceHistogram(synthetic, distance_width_,
                                              config_.distance_buckets)));
  }
  return absl::InternalError("unhandled metric");
}

absl::StatusOr<double> MetricEvaluator::Evaluate(const Dataset& synthetic,
                                                 const MetricId& metric) const {
  absl::StatusOr<double> value;
  if (metric.is_builtin()) {
    value = EvaluateBuiltin(synthetic, metric.builtin());
  } else {
    const CustomMetricFn* fn = MetricRegistry::Global().Find(metric.name());
    if (fn == nullptr) {
      return absl::NotFoundError(
          absl::StrCat("metric '", metric.name(), "' is not registered"));
    }
    value = (*fn)(real_, synthetic, config_);
    if (value.ok() && !(*value >= 0)) {
      value = absl::OutOfRangeError(
          absl::StrCat("custom metric returned ", *value, "; must be >= 0"));
    }
  }
  if (!value.ok()) return Annotate(value.status(), metric.name());
  return value;
}

absl::StatusOr<MetricReport> MetricEvaluator::EvaluateAll(
    const Dataset& synthetic) const {
  MetricReport report;
  double* slots[] = {&report.query_error, &report.pattern_support_error,
                     &report.trip_error, &report.travel_distance_error};
  for (int i = 0; i < 4; ++i) {
    absl::StatusOr<double> v = Evaluate(synthetic, kBuiltinMetrics[i]);
    if (!v.ok()) return v.status();
    *slots[i] = *v;
  }
  for (const std::string& name : MetricRegistry::Global().Names()) {
    absl::StatusOr<double> v = Evaluate(synthetic, MetricId::Custom(name));
    if (!v.ok()) return v.status();
    report.custom[name] = *v;
  }
  return report;
}

absl::StatusOr<MetricReport> EvaluateAll(const Dataset& real,
                                         const Dataset& synthetic,
                                         const MetricConfig& config) {
  absl::StatusOr<std::unique_ptr<MetricEvaluator>> evaluator =
      MetricEvaluator::Create(real, config);
  if (!evaluator.ok()) return evaluator.status();
  return (*evaluator)->EvaluateAll(synthetic);
}

}  // namespace tracesynth
