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

// HTTP front end over a JobManager.
//
//   POST /api/datasets                 trace-format body -> {dataset_id, ...}
//   POST /api/jobs                     JobSpec JSON -> {job_id}
//   GET  /api/jobs/{id}                JobStatus
//   GET  /api/jobs/{id}/events         text/event-stream, full history then
//                                      live tail, closed by a terminal event
//   GET  /api/jobs/{id}/result         result document
//   GET  /api/jobs/{id}/synthetic      trace-format download
//   GET  /api/jobs/{id}/stats/heatmap?bins=10
//   GET  /api/jobs/{id}/stats/tripdist
//   GET  /api/jobs/{id}/stats/distances

#ifndef TRACESYNTH_HTTP_SERVER_H_
#define TRACESYNTH_HTTP_SERVER_H_

#include <memory>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "tracesynth/job_manager.h"

namespace httplib {
class Server;
}  // namespace httplib

namespace tracesynth {

// HTTP status for a failed operation.
int HttpStatusFor(const absl::Status& status);

class HttpServer {
 public:
  explicit HttpServer(JobManager& jobs);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port.
  absl::StatusOr<int> Bind(const std::string& host, int port);
  // Serves until Stop(); call after Bind.
  absl::Status Serve();
  void Stop();

 private:
  void Routes();

  JobManager& jobs_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace tracesynth

#endif  // TRACESYNTH_HTTP_SERVER_H_
