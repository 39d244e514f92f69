// Copyright 2026 The qseek Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Interactive sessions for human users. SessionManager holds the state and
// is usable in-process; SessionServer exposes it over HTTP + JSON:
//   POST /sessions              {caption, k?, target_id?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/answer  {text}
//   POST /sessions/{id}/end
//   GET  /healthz
// Errors are {"code": str, "message": str} with a matching HTTP status.

#ifndef QSEEK_SESSION_SERVICE_H_
#define QSEEK_SESSION_SERVICE_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qseek/episode_log.h"
#include "qseek/orchestrator.h"

namespace httplib {
class Server;
}

namespace qseek {

struct GridItem {
  std::string id;
  std::optional<std::string> caption;
  std::optional<std::string> image_uri;
  double score = 0.0;
};

struct GridSnapshot {
  std::size_t round = 0;
  std::vector<GridItem> items;
};

struct SessionOptions {
  std::size_t default_k = 10;
  std::size_t max_k = 100;
  // Ended (and, on shutdown, unfinished) sessions are appended here.
  std::optional<std::string> log_path;
  // Permit target_id at creation, which turns on rank reporting.
  bool evaluation_mode = true;
  // Seed for session ids and episode seeds.
  std::uint64_t seed = 0;
};

class SessionManager {
 public:
  SessionManager(const EpisodeRunner& runner, SessionOptions options);
  ~SessionManager();

  // Runs round 0 and prepares the round-1 question. Throws InvalidArgument
  // (empty caption, bad k, target given outside evaluation mode), NotFound
  // (unknown target), BackendError.
  nlohmann::json Create(const std::string& caption, std::optional<std::size_t> k,
                        std::optional<std::string> target_id);

  // Answers the pending question, completes the round and prepares the next
  // question unless the episode is done. All-or-nothing: on failure the
  // session is unchanged. Throws NotFound, Conflict (nothing pending, or a
  // concurrent submission holds the session), BackendError.
  nlohmann::json SubmitAnswer(const std::string& session_id, const std::string& text);

  nlohmann::json Get(const std::string& session_id) const;

  // Removes the session and returns its log, persisting it when a log path
  // is configured.
  EpisodeLog End(const std::string& session_id);

  // Writes logs of all open sessions to the log path, if any.
  void FlushAll();

  std::size_t size() const;

 private:
  struct Session;

  std::shared_ptr<Session> Find(const std::string& session_id) const;
  GridSnapshot Snapshot(const EpisodeState& state, std::size_t k) const;
  nlohmann::json View(const Session& session) const;

  const EpisodeRunner& runner_;
  SessionOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

class SessionServer {
 public:
  // static_dir, when set, is served under "/".
  SessionServer(SessionManager& manager, std::optional<std::string> static_dir = std::nullopt);
  ~SessionServer();

  // Blocks until Stop().
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; then call ListenAfterBind.
  int BindToAnyPort(const std::string& host);
  bool ListenAfterBind();
  void Stop();
  bool running() const;

 private:
  void Routes();

  SessionManager& manager_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace qseek

#endif  // QSEEK_SESSION_SERVICE_H_
