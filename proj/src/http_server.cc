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

#include "tracesynth/http_server.h"

#include <chrono>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "httplib.h"
#include "json.hpp"
#include "tracesynth/serialization.h"

namespace tracesynth {

namespace {

constexpr char kJson[] = "application/json";
constexpr auto kEventPoll = std::chrono::milliseconds(500);

void SendJson(httplib::Response& res, int code, const nlohmann::json& body) {
  res.status = code;
  res.set_content(body.dump(), kJson);
}

void SendError(httplib::Response& res, const absl::Status& status) {
  SendJson(res, HttpStatusFor(status), {{"error", status.message()}});
}

std::string SseFrame(absl::string_view event, absl::string_view data) {
  return absl::StrCat("event: ", event, "\ndata: ", data, "\n\n");
}

}  // namespace

int HttpStatusFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 200;
    case absl::StatusCode::kInvalidArgument:
      return 400;
    case absl::StatusCode::kNotFound:
      return 404;
    case absl::StatusCode::kFailedPrecondition:
      return 409;
    case absl::StatusCode::kResourceExhausted:
      return 413;
    default:
      return 500;
  }
}

HttpServer::HttpServer(JobManager& jobs)
    : jobs_(jobs), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(jobs_.options().max_upload_bytes);
  Routes();
}

HttpServer::~HttpServer() { Stop(); }

absl::StatusOr<int> HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) return absl::UnavailableError("cannot bind any port");
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    return absl::UnavailableError(
        absl::StrCat("cannot bind ", host, ":", port));
  }
  return port;
}

absl::Status HttpServer::Serve() {
  if (!server_->listen_after_bind()) {
    return absl::InternalError("server stopped with an error");
  }
  return absl::OkStatus();
}

void HttpServer::Stop() {
  if (server_ != nullptr) server_->stop();
}

void HttpServer::Routes() {
  httplib::Server& s = *server_;

  // httplib answers oversized bodies itself; give them a JSON body too.
  s.set_error_handler([this](const httplib::Request&, httplib::Response& res) {
    if (res.status == 413) {
      SendJson(res, 413,
               {{"error", absl::StrCat("upload exceeds the limit of ",
                                       jobs_.options().max_upload_bytes,
                                       " bytes")}});
    } else if (res.body.empty()) {
      SendJson(res, res.status, {{"error", "not found"}});
    }
  });

  s.Post("/api/datasets", [this](const httplib::Request& req,
                                 httplib::Response& res) {
    absl::StatusOr<DatasetInfo> info = jobs_.AddDataset(req.body);
    if (!info.ok()) return SendError(res, info.status());
    SendJson(res, 201,
             {{"dataset_id", info->id},
              {"cardinality", info->cardinality},
              {"bbox", ToJson(info->bbox)}});
  });

  s.Post("/api/jobs", [this](const httplib::Request& req,
                             httplib::Response& res) {
    const nlohmann::json body =
        nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded()) {
      return SendError(res, absl::InvalidArgumentError("body is not valid JSON"));
    }
    absl::StatusOr<JobSpec> spec = ParseJobSpec(body);
    if (!spec.ok()) return SendError(res, spec.status());
    absl::StatusOr<std::string> id = jobs_.Submit(*spec);
    if (!id.ok()) return SendError(res, id.status());
    SendJson(res, 201, {{"job_id", *id}});
  });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+))",
        [this](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<JobStatus> status = jobs_.Status(req.matches[1].str());
          if (!status.ok()) return SendError(res, status.status());
          SendJson(res, 200, ToJson(*status));
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/events)",
        [this](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1].str();
          if (absl::StatusOr<JobStatus> status = jobs_.Status(id);
              !status.ok()) {
            return SendError(res, status.status());
          }
          auto next = std::make_shared<size_t>(0);
          res.set_header("Cache-Control", "no-cache");
          res.set_chunked_content_provider(
              "text/event-stream",
              [this, id, next](size_t, httplib::DataSink& sink) {
                absl::StatusOr<EventBatch> batch =
                    jobs_.WaitEvents(id, *next, kEventPoll);
                if (!batch.ok()) return false;
                std::string out;
                for (const std::string& event : batch->events) {
                  absl::StrAppend(&out, SseFrame("observation", event));
                }
                *next = batch->next;
                if (batch->terminal) {
                  nlohmann::json terminal = ToJson(batch->status);
                  terminal["events"] = batch->next;
                  absl::StrAppend(&out,
                                  SseFrame(JobStateName(batch->status.state),
                                           terminal.dump()));
                }
                if (!out.empty() && !sink.write(out.data(), out.size())) {
                  return false;
                }
                if (batch->terminal) sink.done();
                return true;
              });
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/result)",
        [this](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1].str();
          absl::StatusOr<std::string> doc = jobs_.ResultJson(id);
          if (doc.ok()) {
            res.set_content(*doc, kJson);
            return;
          }
          // Unfinished or failed: answer with the status document so the
          // caller sees the failure diagnostics.
          absl::StatusOr<JobStatus> status = jobs_.Status(id);
          if (!status.ok()) return SendError(res, status.status());
          nlohmann::json body = ToJson(*status);
          body["error"] = doc.status().message();
          SendJson(res, HttpStatusFor(doc.status()), body);
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/synthetic)",
        [this](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1].str();
          absl::StatusOr<std::string> text = jobs_.SyntheticText(id);
          if (!text.ok()) return SendError(res, text.status());
          res.set_header("Content-Disposition",
                         absl::StrCat("attachment; filename=\"", id,
                                      "-synthetic.txt\""));
          res.set_content(*text, "text/plain");
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/stats/heatmap)",
        [this](const httplib::Request& req, httplib::Response& res) {
          int bins = 10;
          if (req.has_param("bins") &&
              !absl::SimpleAtoi(req.get_param_value("bins"), &bins)) {
            return SendError(
                res, absl::InvalidArgumentError("bins must be an integer"));
          }
          absl::StatusOr<nlohmann::json> stats =
              jobs_.HeatmapStats(req.matches[1].str(), bins);
          if (!stats.ok()) return SendError(res, stats.status());
          SendJson(res, 200, *stats);
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/stats/tripdist)",
        [this](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<nlohmann::json> stats =
              jobs_.TripStats(req.matches[1].str());
          if (!stats.ok()) return SendError(res, stats.status());
          SendJson(res, 200, *stats);
        });

  s.Get(R"(/api/jobs/([A-Za-z0-9-]+)/stats/distances)",
        [this](const httplib::Request& req, httplib::Response& res) {
          absl::StatusOr<nlohmann::json> stats =
              jobs_.DistanceStats(req.matches[1].str());
          if (!stats.ok()) return SendError(res, stats.status());
          SendJson(res, 200, *stats);
        });
}

}  // namespace tracesynth
