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

// tracesynth: differentially private synthetic location traces.
//
//   tracesynth synthesize --input D.txt --output S.txt --epsilon 1
//   tracesynth optimize   --input D.txt --output out/ --epsilon 1 --metric query
//   tracesynth evaluate   --input D.txt --synthetic S.txt --metric all
//   tracesynth serve      --port 8080 --storage ./data
//   tracesynth toy        --output D.txt --traces 5000 --seed 1

#include <array>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "tracesynth/http_server.h"
#include "tracesynth/job_manager.h"
#include "tracesynth/metrics.h"
#include "tracesynth/pipeline.h"
#include "tracesynth/serialization.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {
namespace {

absl::StatusOr<BudgetWeights> ParseWeights(const std::string& text) {
  std::vector<std::string> parts = absl::StrSplit(text, ',');
  if (parts.size() != 4) {
    return absl::InvalidArgumentError(
        absl::StrCat("--weights needs 4 comma-separated values, got ",
                     parts.size()));
  }
  std::array<double, 4> w;
  for (int i = 0; i < 4; ++i) {
    if (!absl::SimpleAtod(parts[i], &w[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("--weights: '", parts[i], "' is not a number"));
    }
  }
  return BudgetWeights::Create(w);
}

absl::Status WriteText(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) return absl::InternalError(absl::StrCat("cannot write ", path.string()));
  return absl::OkStatus();
}

struct Flags {
  std::string input;
  std::string output;
  std::string synthetic;
  double epsilon = 1.0;
  std::string metric = "query";
  std::string eval_metric = "all";
  std::string weights = "0.25,0.25,0.25,0.25";
  int grid_n = kDefaultGridN;
  int explorations = 100;
  int iterations = 100;
  int trials = 3;
  uint64_t seed = 0;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string storage = "tracesynth-data";
  int workers = 2;
  size_t max_upload_mb = 64;
  int traces = 5000;
};

absl::Status RunSynthesize(const Flags& f) {
  absl::StatusOr<BudgetWeights> weights = ParseWeights(f.weights);
  if (!weights.ok()) return weights.status();
  absl::StatusOr<Dataset> real = ReadDatasetFile(f.input);
  if (!real.ok()) return real.status();
  absl::StatusOr<SynthesisResult> run =
      Synthesize(*real, f.epsilon, *weights, f.grid_n, f.seed);
  if (!run.ok()) return run.status();
  // Report on the dataset as written, so re-evaluating the file agrees.
  absl::StatusOr<Dataset> released = RoundTrip(run->synthetic);
  if (!released.ok()) return released.status();
  absl::StatusOr<MetricReport> report = EvaluateAll(*real, *released);
  if (!report.ok()) return report.status();
  if (absl::Status s = WriteDatasetFile(*released, f.output); !s.ok()) return s;

  const nlohmann::json sidecar = {
      {"input",
       {{"path", f.input},
        {"epsilon", f.epsilon},
        {"weights", ToJson(*weights)},
        {"grid_n", f.grid_n},
        {"seed", f.seed}}},
      {"cardinality", released->cardinality()},
      {"ledger", ToJson(run->ledger)},
      {"report", ToJson(*report)},
  };
  return WriteText(f.output + ".provenance.json", sidecar.dump(2) + "\n");
}

absl::Status RunOptimize(const Flags& f) {
  absl::StatusOr<MetricId> metric = ParseMetricId(f.metric);
  if (!metric.ok()) return metric.status();
  absl::StatusOr<Dataset> real = ReadDatasetFile(f.input);
  if (!real.ok()) return real.status();
  const std::filesystem::path dir(f.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return absl::InternalError(absl::StrCat(dir.string(), ": ", ec.message()));

  OptimizationRequest request;
  request.epsilon = f.epsilon;
  request.metric = *metric;
  request.grid_n = f.grid_n;
  request.optimizer.explorations = f.explorations;
  request.optimizer.iterations = f.iterations;
  request.optimizer.trials = f.trials;
  request.optimizer.seed = f.seed;

  std::ofstream log(dir / "optimize.log", std::ios::trunc);
  if (!log) return absl::InternalError("cannot write optimize.log");
  absl::StatusOr<OptimizationResult> result =
      OptimizeAndSynthesize(*real, request, [&](const Observation& o) {
        const std::string line = FormatLogLine(o);
        log << line << '\n' << std::flush;
        std::cout << line << '\n' << std::flush;
      });
  if (!result.ok()) return result.status();

  if (absl::Status s = WriteDatasetFile(result->synthetic,
                                        (dir / "synthetic.txt").string());
      !s.ok()) {
    return s;
  }
  nlohmann::json input = RequestToJson(request);
  input["path"] = f.input;
  const nlohmann::json doc = ResultDocument(*result, input, "synthetic.txt");
  return WriteText(dir / "result.json", doc.dump(2) + "\n");
}

absl::Status RunEvaluate(const Flags& f) {
  std::optional<MetricId> metric;
  if (f.eval_metric != "all") {
    absl::StatusOr<MetricId> parsed = ParseMetricId(f.eval_metric);
    if (!parsed.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(parsed.status().message(), ", all"));
    }
    metric = *parsed;
  }
  absl::StatusOr<Dataset> real = ReadDatasetFile(f.input);
  if (!real.ok()) return real.status();
  absl::StatusOr<Dataset> synthetic = ReadDatasetFile(f.synthetic);
  if (!synthetic.ok()) return synthetic.status();
  absl::StatusOr<std::unique_ptr<MetricEvaluator>> evaluator =
      MetricEvaluator::Create(*real);
  if (!evaluator.ok()) return evaluator.status();

  nlohmann::json out;
  if (metric.has_value()) {
    absl::StatusOr<double> value = (*evaluator)->Evaluate(*synthetic, *metric);
    if (!value.ok()) return value.status();
    out[metric->name()] = *value;
  } else {
    absl::StatusOr<MetricReport> report = (*evaluator)->EvaluateAll(*synthetic);
    if (!report.ok()) return report.status();
    out = ToJson(*report);
  }
  std::cout << out.dump(2) << std::endl;
  return absl::OkStatus();
}

absl::Status RunToy(const Flags& f) {
  absl::StatusOr<Dataset> toy =
      GenerateToyDataset(f.traces, Rect{0.0, 0.0, 1.0, 1.0}, f.seed);
  if (!toy.ok()) return toy.status();
  return WriteDatasetFile(*toy, f.output);
}

HttpServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

absl::Status RunServe(const Flags& f) {
  JobManager::Options options;
  options.storage_dir = f.storage;
  options.workers = f.workers;
  options.max_upload_bytes = f.max_upload_mb << 20;
  absl::StatusOr<std::unique_ptr<JobManager>> jobs =
      JobManager::Create(std::move(options));
  if (!jobs.ok()) return jobs.status();
  HttpServer server(**jobs);
  absl::StatusOr<int> port = server.Bind(f.host, f.port);
  if (!port.ok()) return port.status();
  std::cerr << "listening on http://" << f.host << ":" << *port << std::endl;
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  absl::Status status = server.Serve();
  g_server = nullptr;
  return status;
}

int Main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic location traces"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* synth = app.add_subcommand("synthesize", "One pipeline run at fixed weights");
  synth->add_option("--input", f.input, "Real dataset (trace format)")->required();
  synth->add_option("--output", f.output, "Synthetic dataset path")->required();
  synth->add_option("--epsilon", f.epsilon, "Privacy budget")->required();
  synth->add_option("--weights", f.weights, "Budget weights a,b,c,d")
      ->capture_default_str();
  synth->add_option("--grid-n", f.grid_n, "Top-level grid size")->capture_default_str();
  synth->add_option("--seed", f.seed, "Random seed")->capture_default_str();

  CLI::App* opt = app.add_subcommand("optimize", "Optimize budget weights and release");
  opt->add_option("--input", f.input, "Real dataset (trace format)")->required();
  opt->add_option("--output", f.output, "Output directory")->required();
  opt->add_option("--epsilon", f.epsilon, "Privacy budget")->required();
  opt->add_option("--metric", f.metric, "query|pattern|trip|distance")
      ->capture_default_str();
  opt->add_option("--explorations", f.explorations)->capture_default_str();
  opt->add_option("--iterations", f.iterations)->capture_default_str();
  opt->add_option("--trials", f.trials, "Pipeline runs per evaluation")
      ->capture_default_str();
  opt->add_option("--grid-n", f.grid_n, "Top-level grid size")->capture_default_str();
  opt->add_option("--seed", f.seed, "Random seed")->capture_default_str();

  CLI::App* eval = app.add_subcommand("evaluate", "Error of a synthetic dataset");
  eval->add_option("--input", f.input, "Real dataset")->required();
  eval->add_option("--synthetic", f.synthetic, "Synthetic dataset")->required();
  eval->add_option("--metric", f.eval_metric, "query|pattern|trip|distance|all")
      ->capture_default_str();

  CLI::App* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", f.port)->capture_default_str();
  serve->add_option("--host", f.host)->capture_default_str();
  serve->add_option("--storage", f.storage, "Storage directory")->capture_default_str();
  serve->add_option("--workers", f.workers, "Concurrent jobs")->capture_default_str();
  serve->add_option("--max-upload-mb", f.max_upload_mb)->capture_default_str();

  CLI::App* toy = app.add_subcommand("toy", "Write the built-in toy dataset");
  toy->add_option("--output", f.output, "Dataset path")->required();
  toy->add_option("--traces", f.traces)->capture_default_str();
  toy->add_option("--seed", f.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  absl::Status status;
  if (synth->parsed()) {
    status = RunSynthesize(f);
  } else if (opt->parsed()) {
    status = RunOptimize(f);
  } else if (eval->parsed()) {
    status = RunEvaluate(f);
  } else if (toy->parsed()) {
    status = RunToy(f);
  } else {
    status = RunServe(f);
  }
  if (!status.ok()) {
    std::cerr << "error: " << status.message() << std::endl;
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace tracesynth

int main(int argc, char** argv) { return tracesynth::Main(argc, argv); }
