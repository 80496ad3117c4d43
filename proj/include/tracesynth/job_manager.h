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

// Optimization jobs backed by a storage directory of flat files:
//
//   datasets/<dataset_id>.txt
//   jobs/<job_id>/spec.json
//   jobs/<job_id>/events.jsonl     one observation per line
//   jobs/<job_id>/status.json      written on completion or failure
//   jobs/<job_id>/result.json
//   jobs/<job_id>/synthetic.txt
//
// A fixed pool of workers runs queued jobs. Each job publishes its progress
// to an append-only event log that any number of readers can follow.

#ifndef TRACESYNTH_JOB_MANAGER_H_
#define TRACESYNTH_JOB_MANAGER_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "json.hpp"
#include "tracesynth/bayes_opt.h"
#include "tracesynth/trace_data.h"

namespace tracesynth {

struct JobSpec {
  std::string dataset_id;
  double epsilon = 1.0;
  std::string metric = "query";
  int grid_n = 4;
  int trials = 3;
  int explorations = 100;
  int iterations = 100;
  uint64_t seed = 0;
};

// Missing fields take the defaults above except dataset_id and epsilon,
// which are required. The error message names every offending field.
absl::StatusOr<JobSpec> ParseJobSpec(const nlohmann::json& body);
nlohmann::json ToJson(const JobSpec& spec);

enum class JobState { kQueued, kExploring, kOptimizing, kFinalizing, kDone,
                      kFailed };

const char* JobStateName(JobState state);
bool IsTerminal(JobState state);

struct JobStatus {
  std::string id;
  JobState state = JobState::kQueued;
  int completed = 0;
  int total = 0;
  std::optional<Observation> latest;
  std::string failure;
};

nlohmann::json ToJson(const JobStatus& status);

struct DatasetInfo {
  std::string id;
  size_t cardinality = 0;
  Rect bbox;
};

// Events with index >= `from`, plus whether the job has reached a terminal
// state (in which case no more events will follow).
struct EventBatch {
  std::vector<std::string> events;
  size_t next = 0;
  bool terminal = false;
  JobStatus status;
};

class JobManager {
 public:
  struct Options {
    std::filesystem::path storage_dir;
    int workers = 2;
    size_t max_upload_bytes = 64 << 20;
  };

  // Creates the storage layout if needed and reloads earlier jobs. Jobs that
  // were queued or running when the previous process stopped are queued again.
  static absl::StatusOr<std::unique_ptr<JobManager>> Create(Options options);

  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  const Options& options() const { return options_; }

  // ResourceExhausted when `body` exceeds max_upload_bytes; InvalidArgument
  // when it does not parse.
  absl::StatusOr<DatasetInfo> AddDataset(absl::string_view body);

  absl::StatusOr<std::string> Submit(const JobSpec& spec);

  absl::StatusOr<JobStatus> Status(absl::string_view id) const;

  // Blocks up to `timeout` for events past `from`.
  absl::StatusOr<EventBatch> WaitEvents(absl::string_view id, size_t from,
                                        std::chrono::milliseconds timeout) const;

  // Waits until the job is done or failed.
  absl::StatusOr<JobStatus> WaitUntilFinished(
      absl::string_view id, std::chrono::milliseconds timeout) const;

  // The following require a finished job; FailedPrecondition otherwise.
  absl::StatusOr<std::string> ResultJson(absl::string_view id) const;
  absl::StatusOr<std::string> SyntheticText(absl::string_view id) const;
  absl::StatusOr<nlohmann::json> HeatmapStats(absl::string_view id,
                                              int bins) const;
  absl::StatusOr<nlohmann::json> TripStats(absl::string_view id) const;
  absl::StatusOr<nlohmann::json> DistanceStats(absl::string_view id) const;

 private:
  struct Job;
  struct FinishedData {
    Dataset real;
    Dataset synthetic;
  };

  explicit JobManager(Options options);

  absl::Status Reload();
  std::shared_ptr<Job> Find(absl::string_view id) const;
  absl::StatusOr<std::shared_ptr<const FinishedData>> Finished(
      absl::string_view id) const;
  void WorkerLoop();
  void Run(Job& job);
  void Publish(Job& job, const Observation& observation);
  void Finish(Job& job, JobState state, std::string failure);

  std::filesystem::path DatasetPath(absl::string_view id) const;
  std::filesystem::path JobDir(absl::string_view id) const;

  Options options_;
  mutable std::mutex mu_;
  std::condition_variable queue_cv_;
  std::map<std::string, std::shared_ptr<Job>, std::less<>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  uint64_t next_job_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace tracesynth

#endif  // TRACESYNTH_JOB_MANAGER_H_
