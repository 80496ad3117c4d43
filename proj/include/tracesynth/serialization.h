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

// JSON documents shared by the CLI and the HTTP service.

#ifndef TRACESYNTH_SERIALIZATION_H_
#define TRACESYNTH_SERIALIZATION_H_

#include <string>
#include <vector>

#include "json.hpp"
#include "tracesynth/bayes_opt.h"
#include "tracesynth/dp.h"
#include "tracesynth/metrics.h"
#include "tracesynth/pipeline.h"
#include "tracesynth/synopsis.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {

nlohmann::json ToJson(const BudgetWeights& weights);
nlohmann::json ToJson(const PrivacyLedger& ledger);
nlohmann::json ToJson(const MetricReport& report);
nlohmann::json ToJson(const Observation& observation);
nlohmann::json ToJson(const Rect& rect);

// Self-contained synopsis: grid geometry, transition matrix, trip pmf, the
// length model of every pair with trip mass, and the ledger.
nlohmann::json ToJson(const Synopsis& synopsis);

// Row-major flat values -> rows x cols nested array.
nlohmann::json ToMatrix(const std::vector<double>& values, int rows, int cols);

// "<iteration> <phase> <w1>,<w2>,<w3>,<w4> <error>", one per observation.
std::string FormatLogLine(const Observation& observation);

// Result document of an optimization run. `input` echoes the request and
// `synthetic_ref` names where the released dataset lives.
nlohmann::json ResultDocument(const OptimizationResult& result,
                              const nlohmann::json& input,
                              const std::string& synthetic_ref);

// Input echo for an optimization request.
nlohmann::json RequestToJson(const OptimizationRequest& request);

}  // namespace tracesynth

#endif  // TRACESYNTH_SERIALIZATION_H_
