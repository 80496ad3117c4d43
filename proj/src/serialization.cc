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

#include "tracesynth/serialization.h"

#include "absl/strings/str_format.h"

namespace tracesynth {

nlohmann::json ToJson(const BudgetWeights& weights) {
  return nlohmann::json::array(
      {weights[0], weights[1], weights[2], weights[3]});
}

nlohmann::json ToJson(const PrivacyLedger& ledger) {
  nlohmann::json entries = nlohmann::json::array();
  for (const PrivacyLedger::Entry& e : ledger.entries()) {
    entries.push_back({{"label", e.label}, {"epsilon", e.epsilon}});
  }
  return {{"entries", std::move(entries)}, {"total_epsilon", ledger.total()}};
}

nlohmann::json ToJson(const MetricReport& report) {
  nlohmann::json out = {
      {"query", report.query_error},
      {"pattern", report.pattern_support_error},
      {"trip", report.trip_error},
      {"distance", report.travel_distance_error},
  };
  for (const auto& [name, value] : report.custom) out[name] = value;
  return out;
}

nlohmann::json ToJson(const Observation& o) {
  nlohmann::json out = {
      {"iteration", o.iteration},
      {"phase", PhaseName(o.phase)},
      {"weights", ToJson(o.weights)},
      {"error", o.error},
      {"trial_errors", o.trial_errors},
      {"line", FormatLogLine(o)},
  };
  if (o.failed) {
    out["failed"] = true;
    out["failure"] = o.failure;
  }
  return out;
}

nlohmann::json ToJson(const Rect& rect) {
  return {{"min_x", rect.min_x},
          {"min_y", rect.min_y},
          {"max_x", rect.max_x},
          {"max_y", rect.max_y}};
}

nlohmann::json ToJson(const Synopsis& synopsis) {
  const AdaptiveGrid& grid = synopsis.grid;
  const int cells = grid.cell_count();
  nlohmann::json rects = nlohmann::json::array();
  for (int c = 0; c < cells; ++c) rects.push_back(ToJson(grid.CellRect(CellId{c})));

  nlohmann::json markov = nlohmann::json::array();
  for (int r = 0; r < cells; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < cells; ++c) row.push_back(synopsis.markov.transition()(r, c));
    markov.push_back(std::move(row));
  }

  const std::span<const double> pmf = synopsis.trips.pmf();
  nlohmann::json lengths = nlohmann::json::array();
  for (int s = 0; s < cells; ++s) {
    for (int e = 0; e < cells; ++e) {
      if (pmf[PairIndex(CellId{s}, CellId{e}, cells)] <= 0) continue;
      const LengthDistribution& l = synopsis.LengthFor(CellId{s}, CellId{e});
      lengths.push_back({{"start", s},
                         {"end", e},
                         {"kind", LengthKindName(l.kind)},
                         {"mean", l.mean},
                         {"fallback", l.fallback}});
    }
  }
  return {
      {"grid",
       {{"region", ToJson(grid.region())},
        {"top_n", grid.top_n()},
        {"subdivisions", std::vector<int>(grid.subdivisions().begin(),
                                          grid.subdivisions().end())},
        {"cells", std::move(rects)}}},
      {"markov", std::move(markov)},
      {"trips", std::vector<double>(pmf.begin(), pmf.end())},
      {"lengths", std::move(lengths)},
      {"ledger", ToJson(synopsis.ledger)},
  };
}

nlohmann::json ToMatrix(const std::vector<double>& values, int rows,
                        int cols) {
  nlohmann::json out = nlohmann::json::array();
  for (int r = 0; r < rows; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < cols; ++c) {
      row.push_back(values[static_cast<size_t>(r) * cols + c]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string FormatLogLine(const Observation& o) {
  return absl::StrFormat("%d %s %.6f,%.6f,%.6f,%.6f %.9g", o.iteration,
                         PhaseName(o.phase), o.weights[0], o.weights[1],
                         o.weights[2], o.weights[3], o.error);
}

nlohmann::json RequestToJson(const OptimizationRequest& request) {
  return {
      {"epsilon", request.epsilon},
      {"metric", request.metric.name()},
      {"grid_n", request.grid_n},
      {"explorations", request.optimizer.explorations},
      {"iterations", request.optimizer.iterations},
      {"trials", request.optimizer.trials},
      {"seed", request.optimizer.seed},
  };
}

nlohmann::json ResultDocument(const OptimizationResult& result,
                              const nlohmann::json& input,
                              const std::string& synthetic_ref) {
  nlohmann::json history = nlohmann::json::array();
  for (const Observation& o : result.state.observations) {
    history.push_back(ToJson(o));
  }
  return {
      {"input", input},
      {"best_weights", ToJson(result.best_weights)},
      {"best_error", result.state.best->error},
      {"best_iteration", result.state.best->iteration},
      {"report", ToJson(result.report)},
      {"synthetic", {{"ref", synthetic_ref},
                     {"cardinality", result.synthetic.cardinality()},
                     {"seed", result.release_seed}}},
      {"observations", std::move(history)},
      {"failures", result.state.failures},
      {"ledger", ToJson(result.ledger)},
  };
}

}  // namespace tracesynth
