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

#include "tracesynth/job_manager.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "absl/strings/match.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "tracesynth/metrics.h"
#include "tracesynth/pipeline.h"
#include "tracesynth/serialization.h"
#include "tracesynth/uniform_grid.h"

namespace tracesynth {

namespace fs = std::filesystem;

namespace {

constexpr absl::string_view kJobPrefix = "job-";

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Write-then-rename so readers never observe a partial file.
absl::Status WriteFileAtomic(const fs::path& path, absl::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      return absl::InternalError(absl::StrCat("short write to ", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("rename ", tmp.string(), ": ", ec.message()));
  }
  return absl::OkStatus();
}

uint64_t Fnv1a(absl::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool ValidId(absl::string_view id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-';
         });
}

absl::StatusOr<Observation> ObservationFromJson(const nlohmann::json& j) {
  try {
    const std::vector<double> w = j.at("weights").get<std::vector<double>>();
    if (w.size() != 4) return absl::InvalidArgumentError("weights must have 4 entries");
    absl::StatusOr<BudgetWeights> weights =
        BudgetWeights::Create({w[0], w[1], w[2], w[3]});
    if (!weights.ok()) return weights.status();
    Observation o = MakeObservation(
        *weights, j.at("trial_errors").get<std::vector<double>>(),
        j.at("phase").get<std::string>() == PhaseName(Phase::kOptimization)
            ? Phase::kOptimization
            : Phase::kExploration,
        j.at("iteration").get<int>());
    o.error = j.at("error").get<double>();
    return o;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("bad observation: ", e.what()));
  }
}

}  // namespace

// ----- JobSpec

absl::StatusOr<JobSpec> ParseJobSpec(const nlohmann::json& body) {
  if (!body.is_object()) {
    return absl::InvalidArgumentError("job spec must be a JSON object");
  }
  JobSpec spec;
  std::vector<std::string> problems;
  auto bad = [&problems](absl::string_view field, absl::string_view why) {
    problems.push_back(absl::StrCat(field, ": ", why));
  };
  auto get_int = [&](const char* field, int& out, int min) {
    if (!body.contains(field)) return;
    const nlohmann::json& v = body[field];
    if (!v.is_number_integer()) {
      bad(field, "must be an integer");
    } else if (v.get<int64_t>() < min || v.get<int64_t>() > 1000000) {
      bad(field, absl::StrCat("must be in [", min, ", 1000000]"));
    } else {
      out = v.get<int>();
    }
  };

  if (!body.contains("dataset_id")) {
    bad("dataset_id", "required");
  } else if (!body["dataset_id"].is_string() ||
             !ValidId(body["dataset_id"].get<std::string>())) {
    bad("dataset_id", "must be a dataset identifier string");
  } else {
    spec.dataset_id = body["dataset_id"].get<std::string>();
  }

  if (!body.contains("epsilon")) {
    bad("epsilon", "required");
  } else if (!body["epsilon"].is_number() ||
             !(body["epsilon"].get<double>() > 0) ||
             !std::isfinite(body["epsilon"].get<double>())) {
    bad("epsilon", "must be a finite number > 0");
  } else {
    spec.epsilon = body["epsilon"].get<double>();
  }

  if (body.contains("metric")) {
    if (!body["metric"].is_string()) {
      bad("metric", "must be a string");
    } else {
      absl::StatusOr<MetricId> metric =
          ParseMetricId(body["metric"].get<std::string>());
      if (!metric.ok()) {
        bad("metric", metric.status().message());
      } else {
        spec.metric = metric->name();
      }
    }
  }

  get_int("grid_n", spec.grid_n, 1);
  get_int("trials", spec.trials, 1);
  get_int("explorations", spec.explorations, 2);
  get_int("iterations", spec.iterations, 0);

  if (body.contains("seed")) {
    const nlohmann::json& v = body["seed"];
    if (v.is_number_unsigned()) {
      spec.seed = v.get<uint64_t>();
    } else if (v.is_number_integer()) {
      spec.seed = static_cast<uint64_t>(v.get<int64_t>());
    } else {
      bad("seed", "must be an integer");
    }
  }

  if (!problems.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid job spec: ", absl::StrJoin(problems, "; ")));
  }
  return spec;
}

nlohmann::json ToJson(const JobSpec& spec) {
  return {{"dataset_id", spec.dataset_id}, {"epsilon", spec.epsilon},
          {"metric", spec.metric},         {"grid_n", spec.grid_n},
          {"trials", spec.trials},         {"explorations", spec.explorations},
          {"iterations", spec.iterations}, {"seed", spec.seed}};
}

// ----- JobStatus

const char* JobStateName(JobState state) {
  switch (state) {
    case JobState::kQueued:
      return "queued";
    case JobState::kExploring:
      return "exploring";
    case JobState::kOptimizing:
      return "optimizing";
    case JobState::kFinalizing:
      return "finalizing";
    case JobState::kDone:
      return "done";
    case JobState::kFailed:
      return "failed";
  }
  return "unknown";
}

bool IsTerminal(JobState state) {
  return state == JobState::kDone || state == JobState::kFailed;
}

nlohmann::json ToJson(const JobStatus& status) {
  nlohmann::json out = {
      {"id", status.id},
      {"state", JobStateName(status.state)},
      {"progress", {{"completed", status.completed}, {"total", status.total}}},
      {"latest", status.latest.has_value() ? ToJson(*status.latest)
                                           : nlohmann::json(nullptr)},
  };
  if (status.state == JobState::kFailed) out["failure"] = status.failure;
  return out;
}

// ----- JobManager

struct JobManager::Job {
  std::string id;
  JobSpec spec;
  mutable std::mutex mu;
  mutable std::condition_variable cv;
  JobStatus status;
  std::vector<std::string> events;
  std::shared_ptr<const FinishedData> finished;
};

JobManager::JobManager(Options options) : options_(std::move(options)) {}

absl::StatusOr<std::unique_ptr<JobManager>> JobManager::Create(Options options) {
  if (options.workers < 1) {
    return absl::InvalidArgumentError("workers must be >= 1");
  }
  if (options.storage_dir.empty()) {
    return absl::InvalidArgumentError("storage directory is required");
  }
  std::error_code ec;
  fs::create_directories(options.storage_dir / "datasets", ec);
  if (!ec) fs::create_directories(options.storage_dir / "jobs", ec);
  if (ec) {
    return absl::FailedPreconditionError(
        absl::StrCat("storage directory ", options.storage_dir.string(),
                     " is not writable: ", ec.message()));
  }
  std::unique_ptr<JobManager> manager(new JobManager(std::move(options)));
  if (absl::Status s = manager->Reload(); !s.ok()) return s;
  for (int i = 0; i < manager->options_.workers; ++i) {
    manager->workers_.emplace_back([m = manager.get()] { m->WorkerLoop(); });
  }
  return manager;
}

JobManager::~JobManager() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  // Jobs already running finish; queued ones resume on the next start.
  for (std::thread& t : workers_) t.join();
}

fs::path JobManager::DatasetPath(absl::string_view id) const {
  return options_.storage_dir / "datasets" / absl::StrCat(id, ".txt");
}

fs::path JobManager::JobDir(absl::string_view id) const {
  return options_.storage_dir / "jobs" / std::string(id);
}

absl::Status JobManager::Reload() {
  std::vector<fs::path> dirs;
  for (const fs::directory_entry& entry :
       fs::directory_iterator(options_.storage_dir / "jobs")) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  // Numeric order so interrupted jobs requeue in submission order.
  auto number = [](const fs::path& p) {
    uint64_t n = 0;
    const std::string name = p.filename().string();
    if (absl::StartsWith(name, kJobPrefix)) {
      (void)absl::SimpleAtoi(name.substr(kJobPrefix.size()), &n);
    }
    return n;
  };
  std::sort(dirs.begin(), dirs.end(),
            [&](const fs::path& a, const fs::path& b) { return number(a) < number(b); });

  for (const fs::path& dir : dirs) {
    absl::StatusOr<std::string> spec_text = ReadFile(dir / "spec.json");
    if (!spec_text.ok()) continue;
    const nlohmann::json spec_json =
        nlohmann::json::parse(*spec_text, nullptr, /*allow_exceptions=*/false);
    absl::StatusOr<JobSpec> spec = ParseJobSpec(spec_json);
    if (!spec.ok()) continue;

    auto job = std::make_shared<Job>();
    job->id = dir.filename().string();
    job->spec = *spec;
    job->status.id = job->id;
    job->status.total = spec->explorations + spec->iterations;
    next_job_ = std::max(next_job_, number(dir) + 1);

    const nlohmann::json status_json = [&] {
      absl::StatusOr<std::string> text = ReadFile(dir / "status.json");
      return text.ok() ? nlohmann::json::parse(*text, nullptr, false)
                       : nlohmann::json();
    }();
    const std::string state =
        status_json.is_object() ? status_json.value("state", "") : "";
    if (state == JobStateName(JobState::kDone) ||
        state == JobStateName(JobState::kFailed)) {
      job->status.state = state == JobStateName(JobState::kDone)
                              ? JobState::kDone
                              : JobState::kFailed;
      job->status.failure = status_json.value("failure", "");
      absl::StatusOr<std::string> events = ReadFile(dir / "events.jsonl");
      if (events.ok()) {
        for (absl::string_view line :
             absl::StrSplit(*events, '\n', absl::SkipEmpty())) {
          job->events.emplace_back(line);
        }
      }
      job->status.completed = static_cast<int>(job->events.size());
      if (!job->events.empty()) {
        absl::StatusOr<Observation> latest = ObservationFromJson(
            nlohmann::json::parse(job->events.back(), nullptr, false));
        if (latest.ok()) job->status.latest = *latest;
      }
      jobs_[job->id] = job;
    } else {
      // Interrupted: seeds make the rerun identical, so start over.
      if (absl::Status s = WriteFileAtomic(dir / "events.jsonl", ""); !s.ok()) {
        return s;
      }
      jobs_[job->id] = job;
      queue_.push_back(job);
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<DatasetInfo> JobManager::AddDataset(absl::string_view body) {
  if (body.size() > options_.max_upload_bytes) {
    return absl::ResourceExhaustedError(
        absl::StrCat("upload of ", body.size(), " bytes exceeds the limit of ",
                     options_.max_upload_bytes, " bytes"));
  }
  absl::StatusOr<Dataset> dataset = ParseDataset(body);
  if (!dataset.ok()) return dataset.status();
  absl::StatusOr<Rect> bbox = BoundingBox(*dataset);
  if (!bbox.ok()) return bbox.status();

  // Content-addressed, so identical uploads share one immutable file.
  DatasetInfo info;
  info.id = absl::StrFormat("ds-%016x", Fnv1a(body));
  info.cardinality = dataset->cardinality();
  info.bbox = *bbox;
  std::lock_guard<std::mutex> lock(mu_);
  const fs::path path = DatasetPath(info.id);
  if (!fs::exists(path)) {
    if (absl::Status s = WriteFileAtomic(path, body); !s.ok()) return s;
  }
  return info;
}

absl::StatusOr<std::string> JobManager::Submit(const JobSpec& spec) {
  // Round-trip through the parser so direct callers get the same checks.
  absl::StatusOr<JobSpec> checked = ParseJobSpec(ToJson(spec));
  if (!checked.ok()) return checked.status();
  if (!fs::exists(DatasetPath(spec.dataset_id))) {
    return absl::NotFoundError(
        absl::StrCat("dataset_id '", spec.dataset_id, "' not found"));
  }
  auto job = std::make_shared<Job>();
  job->spec = *checked;
  job->status.total = spec.explorations + spec.iterations;
  {
    std::lock_guard<std::mutex> lock(mu_);
    job->id = absl::StrCat(kJobPrefix, next_job_++);
    job->status.id = job->id;
    std::error_code ec;
    fs::create_directories(JobDir(job->id), ec);
    if (ec) return absl::InternalError(ec.message());
    if (absl::Status s = WriteFileAtomic(JobDir(job->id) / "events.jsonl", "");
        !s.ok()) {
      return s;
    }
    if (absl::Status s = WriteFileAtomic(JobDir(job->id) / "spec.json",
                                         ToJson(job->spec).dump(2));
        !s.ok()) {
      return s;
    }
    jobs_[job->id] = job;
    queue_.push_back(job);
  }
  queue_cv_.notify_one();
  return job->id;
}

std::shared_ptr<JobManager::Job> JobManager::Find(absl::string_view id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : it->second;
}

absl::StatusOr<JobStatus> JobManager::Status(absl::string_view id) const {
  std::shared_ptr<Job> job = Find(id);
  if (job == nullptr) {
    return absl::NotFoundError(absl::StrCat("job '", id, "' not found"));
  }
  std::lock_guard<std::mutex> lock(job->mu);
  return job->status;
}

absl::StatusOr<EventBatch> JobManager::WaitEvents(
    absl::string_view id, size_t from, std::chrono::milliseconds timeout) const {
  std::shared_ptr<Job> job = Find(id);
  if (job == nullptr) {
    return absl::NotFoundError(absl::StrCat("job '", id, "' not found"));
  }
  std::unique_lock<std::mutex> lock(job->mu);
  job->cv.wait_for(lock, timeout, [&] {
    return job->events.size() > from || IsTerminal(job->status.state);
  });
  EventBatch batch;
  for (size_t i = from; i < job->events.size(); ++i) {
    batch.events.push_back(job->events[i]);
  }
  batch.next = std::max(from, job->events.size());
  batch.terminal = IsTerminal(job->status.state);
  batch.status = job->status;
  return batch;
}

absl::StatusOr<JobStatus> JobManager::WaitUntilFinished(
    absl::string_view id, std::chrono::milliseconds timeout) const {
  std::shared_ptr<Job> job = Find(id);
  if (job == nullptr) {
    return absl::NotFoundError(absl::StrCat("job '", id, "' not found"));
  }
  std::unique_lock<std::mutex> lock(job->mu);
  if (!job->cv.wait_for(lock, timeout,
                        [&] { return IsTerminal(job->status.state); })) {
    return absl::DeadlineExceededError(
        absl::StrCat("job '", id, "' still ", JobStateName(job->status.state)));
  }
  return job->status;
}

void JobManager::WorkerLoop() {
  while (true) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock<std::mutex> lock(mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
    }
    Run(*job);
  }
}

void JobManager::Publish(Job& job, const Observation& observation) {
  const std::string line = ToJson(observation).dump();
  {
    std::ofstream out(JobDir(job.id) / "events.jsonl", std::ios::app);
    out << line << '\n';
  }
  {
    std::lock_guard<std::mutex> lock(job.mu);
    job.events.push_back(line);
    job.status.completed = static_cast<int>(job.events.size());
    job.status.latest = observation;
    if (observation.phase == Phase::kOptimization ||
        (job.status.completed >= job.spec.explorations &&
         job.spec.iterations > 0)) {
      job.status.state = JobState::kOptimizing;
    }
  }
  job.cv.notify_all();
}

void JobManager::Finish(Job& job, JobState state, std::string failure) {
  JobStatus status;
  {
    std::lock_guard<std::mutex> lock(job.mu);
    status = job.status;
  }
  status.state = state;
  status.failure = std::move(failure);
  // Persist before publishing so a restart never loses a terminal state that
  // a client has already seen.
  (void)WriteFileAtomic(JobDir(job.id) / "status.json", ToJson(status).dump(2));
  {
    std::lock_guard<std::mutex> lock(job.mu);
    job.status.state = state;
    job.status.failure = status.failure;
  }
  job.cv.notify_all();
}

void JobManager::Run(Job& job) {
  {
    std::lock_guard<std::mutex> lock(job.mu);
    job.status.state = JobState::kExploring;
  }
  job.cv.notify_all();

  absl::StatusOr<Dataset> real =
      ReadDatasetFile(DatasetPath(job.spec.dataset_id).string());
  if (!real.ok()) {
    Finish(job, JobState::kFailed,
           absl::StrCat("loading dataset: ", real.status().message()));
    return;
  }
  absl::StatusOr<MetricId> metric = ParseMetricId(job.spec.metric);
  if (!metric.ok()) {
    Finish(job, JobState::kFailed, std::string(metric.status().message()));
    return;
  }
  OptimizationRequest request;
  request.epsilon = job.spec.epsilon;
  request.metric = *metric;
  request.grid_n = job.spec.grid_n;
  request.optimizer.explorations = job.spec.explorations;
  request.optimizer.iterations = job.spec.iterations;
  request.optimizer.trials = job.spec.trials;
  request.optimizer.seed = job.spec.seed;

  absl::StatusOr<OptimizationResult> result = OptimizeAndSynthesize(
      *real, request, [&](const Observation& o) { Publish(job, o); },
      [&] {
        {
          std::lock_guard<std::mutex> lock(job.mu);
          job.status.state = JobState::kFinalizing;
        }
        job.cv.notify_all();
      });
  if (!result.ok()) {
    Finish(job, JobState::kFailed, std::string(result.status().message()));
    return;
  }

  const fs::path dir = JobDir(job.id);
  absl::Status s = WriteFileAtomic(dir / "synthetic.txt",
                                   SerializeDataset(result->synthetic));
  if (s.ok()) {
    nlohmann::json doc = ResultDocument(*result, ToJson(job.spec),
                                        absl::StrCat("/api/jobs/", job.id,
                                                     "/synthetic"));
    doc["job_id"] = job.id;
    s = WriteFileAtomic(dir / "result.json", doc.dump(2));
  }
  if (!s.ok()) {
    Finish(job, JobState::kFailed, std::string(s.message()));
    return;
  }
  {
    std::lock_guard<std::mutex> lock(job.mu);
    job.finished = std::make_shared<const FinishedData>(
        FinishedData{*std::move(real), std::move(result->synthetic)});
  }
  Finish(job, JobState::kDone, "");
}

absl::StatusOr<std::shared_ptr<const JobManager::FinishedData>>
JobManager::Finished(absl::string_view id) const {
  std::shared_ptr<Job> job = Find(id);
  if (job == nullptr) {
    return absl::NotFoundError(absl::StrCat("job '", id, "' not found"));
  }
  std::lock_guard<std::mutex> lock(job->mu);
  if (job->status.state != JobState::kDone) {
    std::string message = absl::StrCat("job '", id, "' is ",
                                       JobStateName(job->status.state));
    if (job->status.state == JobState::kFailed) {
      absl::StrAppend(&message, ": ", job->status.failure);
    }
    return absl::FailedPreconditionError(message);
  }
  if (job->finished == nullptr) {
    // Reloaded after a restart: read both datasets back from storage.
    absl::StatusOr<Dataset> real =
        ReadDatasetFile(DatasetPath(job->spec.dataset_id).string());
    if (!real.ok()) return real.status();
    absl::StatusOr<Dataset> synthetic =
        ReadDatasetFile((JobDir(id) / "synthetic.txt").string());
    if (!synthetic.ok()) return synthetic.status();
    job->finished = std::make_shared<const FinishedData>(
        FinishedData{*std::move(real), *std::move(synthetic)});
  }
  return job->finished;
}

absl::StatusOr<std::string> JobManager::ResultJson(absl::string_view id) const {
  absl::StatusOr<std::shared_ptr<const FinishedData>> done = Finished(id);
  if (!done.ok()) return done.status();
  return ReadFile(JobDir(id) / "result.json");
}

absl::StatusOr<std::string> JobManager::SyntheticText(
    absl::string_view id) const {
  absl::StatusOr<std::shared_ptr<const FinishedData>> done = Finished(id);
  if (!done.ok()) return done.status();
  return ReadFile(JobDir(id) / "synthetic.txt");
}

absl::StatusOr<nlohmann::json> JobManager::HeatmapStats(absl::string_view id,
                                                        int bins) const {
  if (bins < 1 || bins > 1000) {
    return absl::InvalidArgumentError("bins must be in [1, 1000]");
  }
  absl::StatusOr<std::shared_ptr<const FinishedData>> done = Finished(id);
  if (!done.ok()) return done.status();
  absl::StatusOr<Rect> region = BoundingBox((*done)->real);
  if (!region.ok()) return region.status();
  return nlohmann::json{
      {"bins", bins},
      {"region", ToJson(*region)},
      {"real", ToMatrix(PointHeatmap((*done)->real, *region, bins), bins, bins)},
      {"synthetic",
       ToMatrix(PointHeatmap((*done)->synthetic, *region, bins), bins, bins)},
  };
}

absl::StatusOr<nlohmann::json> JobManager::TripStats(absl::string_view id) const {
  absl::StatusOr<std::shared_ptr<const FinishedData>> done = Finished(id);
  if (!done.ok()) return done.status();
  absl::StatusOr<Rect> region = BoundingBox((*done)->real);
  if (!region.ok()) return region.status();
  const int n = MetricConfig().trip_grid;
  const UniformGrid grid(*region, n);
  const int cells = grid.cell_count();
  return nlohmann::json{
      {"grid_n", n},
      {"cells", cells},
      {"real", ToMatrix(TripPmf((*done)->real, grid), cells, cells)},
      {"synthetic", ToMatrix(TripPmf((*done)->synthetic, grid), cells, cells)},
  };
}

absl::StatusOr<nlohmann::json> JobManager::DistanceStats(
    absl::string_view id) const {
  absl::StatusOr<std::shared_ptr<const FinishedData>> done = Finished(id);
  if (!done.ok()) return done.status();
  const int buckets = MetricConfig().distance_buckets;
  const double width = DistanceBucketWidth((*done)->real, buckets);
  return nlohmann::json{
      {"buckets", buckets},
      {"bucket_width", width},
      {"real", DistanceHistogram((*done)->real, width, buckets)},
      {"synthetic", DistanceHistogram((*done)->synthetic, width, buckets)},
  };
}

}  // namespace tracesynth
