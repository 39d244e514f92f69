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

#include "qseek/session_service.h"

#include <ctime>
#include <cstdio>

#include <httplib.h>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

using nlohmann::json;

namespace {

std::string UtcNow() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json ToJson(const GridSnapshot& snapshot) {
  json items = json::array();
  for (const auto& item : snapshot.items) {
    json j = {{"id", item.id}, {"score", item.score}};
    j["caption"] = item.caption ? json(*item.caption) : json(nullptr);
    j["image_uri"] = item.image_uri ? json(*item.image_uri) : json(nullptr);
    items.push_back(std::move(j));
  }
  return {{"round", snapshot.round}, {"items", std::move(items)}};
}

json RoundJson(const RoundRecord& r, bool with_rank) {
  json j = {{"round", r.round},
            {"question", r.question ? json(*r.question) : json(nullptr)},
            {"answer", r.answer ? json(*r.answer) : json(nullptr)},
            {"reformulated_query", r.reformulated_query}};
  if (with_rank && r.rank) j["rank"] = *r.rank;
  return j;
}

}  // namespace

struct SessionManager::Session {
  std::string id;
  std::size_t k = 10;
  EpisodeState state;
  std::string created_at;
  std::string updated_at;
  std::vector<GridSnapshot> snapshots;
  mutable std::mutex mu;
};

SessionManager::SessionManager(const EpisodeRunner& runner, SessionOptions options)
    : runner_(runner), options_(std::move(options)) {}

SessionManager::~SessionManager() = default;

std::size_t SessionManager::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SessionManager::Session> SessionManager::Find(
    const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + session_id + "'");
  return it->second;
}

GridSnapshot SessionManager::Snapshot(const EpisodeState& state, std::size_t k) const {
  const ImagePool& pool = runner_.pool();
  const CandidateSet top = TopNCandidates(state.query_embedding, pool, k);
  GridSnapshot snapshot;
  snapshot.round = state.dialogue.round();
  for (const auto& c : top.members) {
    const ImageRecord& r = pool[c.pool_index];
    snapshot.items.push_back({r.id, r.caption, r.image_uri, c.similarity});
  }
  return snapshot;
}

json SessionManager::View(const Session& s) const {
  const bool with_rank = s.state.target_id.has_value();
  json timeline = json::array();
  for (const auto& r : s.state.records) timeline.push_back(RoundJson(r, with_rank));
  json snapshots = json::array();
  for (const auto& snap : s.snapshots) snapshots.push_back(ToJson(snap));
  const bool done = s.state.status == EpisodeStatus::kCompleted ||
                    s.state.status == EpisodeStatus::kFailed;
  json view = {{"session_id", s.id},
               {"status", ToString(s.state.status)},
               {"done", done},
               {"round", s.state.dialogue.round()},
               {"k", s.k},
               {"caption", s.state.dialogue.caption},
               {"reformulated_query", s.state.query.text},
               {"pending_question", s.state.pending_question
                                        ? json(*s.state.pending_question)
                                        : json(nullptr)},
               {"top_k", s.snapshots.empty() ? json::array() : ToJson(s.snapshots.back())["items"]},
               {"timeline", std::move(timeline)},
               {"snapshots", std::move(snapshots)},
               {"created_at", s.created_at},
               {"updated_at", s.updated_at}};
  if (s.state.failure) view["error"] = *s.state.failure;
  return view;
}

json SessionManager::Create(const std::string& caption, std::optional<std::size_t> k,
                            std::optional<std::string> target_id) {
  if (text::Trim(caption).empty()) throw InvalidArgument("caption must not be empty");
  const std::size_t grid = k.value_or(options_.default_k);
  if (grid == 0 || grid > options_.max_k) {
    throw InvalidArgument("k must be in [1, " + std::to_string(options_.max_k) + "]");
  }
  if (target_id && !options_.evaluation_mode) {
    throw InvalidArgument("target_id is only accepted in evaluation mode");
  }

  std::uint64_t serial;
  {
    std::lock_guard<std::mutex> lock(mu_);
    serial = ++counter_;
  }
  char id_buf[24];
  std::snprintf(id_buf, sizeof(id_buf), "s%016llx",
                static_cast<unsigned long long>(text::Mix64(options_.seed ^ serial)));

  auto session = std::make_shared<Session>();
  session->id = id_buf;
  session->k = grid;
  session->state = runner_.Start(caption, std::move(target_id),
                                 EpisodeSeed(options_.seed, session->id));
  session->snapshots.push_back(Snapshot(session->state, grid));
  if (session->state.status == EpisodeStatus::kReady) runner_.AskQuestion(session->state);
  session->created_at = session->updated_at = UtcNow();

  json view = View(*session);
  std::lock_guard<std::mutex> lock(mu_);
  sessions_.emplace(session->id, std::move(session));
  return view;
}

json SessionManager::SubmitAnswer(const std::string& session_id, const std::string& text) {
  std::shared_ptr<Session> s = Find(session_id);
  std::unique_lock<std::mutex> lock(s->mu, std::try_to_lock);
  if (!lock.owns_lock()) throw Conflict("another answer for this session is in progress");
  if (s->state.status != EpisodeStatus::kAwaitingAnswer) throw Conflict("no question is pending");
  if (text::Trim(text).empty()) throw InvalidArgument("answer text must not be empty");

  EpisodeState next = s->state;
  runner_.SubmitAnswer(next, text::Trim(text));
  GridSnapshot snapshot = Snapshot(next, s->k);
  if (next.status == EpisodeStatus::kReady) runner_.AskQuestion(next);

  s->state = std::move(next);
  s->snapshots.push_back(std::move(snapshot));
  s->updated_at = UtcNow();
  json view = View(*s);
  view["round_record"] = RoundJson(s->state.records.back(), s->state.target_id.has_value());
  return view;
}

json SessionManager::Get(const std::string& session_id) const {
  std::shared_ptr<Session> s = Find(session_id);
  std::lock_guard<std::mutex> lock(s->mu);
  return View(*s);
}

EpisodeLog SessionManager::End(const std::string& session_id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFound("unknown session '" + session_id + "'");
    s = it->second;
    sessions_.erase(it);
  }
  std::lock_guard<std::mutex> lock(s->mu);
  EpisodeLog log = s->state.ToLog(s->id);
  if (options_.log_path) AppendEpisodeLog(log, *options_.log_path);
  return log;
}

void SessionManager::FlushAll() {
  if (!options_.log_path) return;
  std::map<std::string, std::shared_ptr<Session>> open;
  {
    std::lock_guard<std::mutex> lock(mu_);
    open = sessions_;
  }
  for (const auto& [id, s] : open) {
    std::lock_guard<std::mutex> lock(s->mu);
    AppendEpisodeLog(s->state.ToLog(id), *options_.log_path);
  }
}

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& code,
               const std::string& message) {
  SendJson(res, status, {{"code", code}, {"message", message}});
}

template <typename Fn>
void Guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const json::exception& e) {
    SendError(res, 400, "bad_request", std::string("malformed JSON body: ") + e.what());
  } catch (const InvalidArgument& e) {
    SendError(res, 400, "invalid_argument", e.what());
  } catch (const NotFound& e) {
    SendError(res, 404, "not_found", e.what());
  } catch (const Conflict& e) {
    SendError(res, 409, "conflict", e.what());
  } catch (const BackendError& e) {
    SendError(res, 502, "backend_error", e.what());
  } catch (const std::exception& e) {
    SendError(res, 500, "internal", e.what());
  }
}

json BodyOf(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
  return j;
}

}  // namespace

SessionServer::SessionServer(SessionManager& manager, std::optional<std::string> static_dir)
    : manager_(manager), server_(std::make_unique<httplib::Server>()) {
  Routes();
  if (static_dir && !server_->set_mount_point("/", *static_dir)) {
    throw NotFound("static directory '" + *static_dir + "' does not exist");
  }
}

SessionServer::~SessionServer() { Stop(); }

void SessionServer::Routes() {
  httplib::Server& s = *server_;
  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, {{"status", "ok"}});
  });
  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const json body = BodyOf(req);
      const std::string caption = body.value("caption", std::string());
      std::optional<std::size_t> k;
      if (body.contains("k") && !body["k"].is_null()) {
        if (!body["k"].is_number_integer() || body["k"].get<long long>() < 1) {
          throw InvalidArgument("k must be a positive integer");
        }
        k = body["k"].get<std::size_t>();
      }
      std::optional<std::string> target;
      if (body.contains("target_id") && !body["target_id"].is_null()) {
        target = body["target_id"].get<std::string>();
      }
      SendJson(res, 201, manager_.Create(caption, k, target));
    });
  });
  s.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] { SendJson(res, 200, manager_.Get(req.matches[1])); });
  });
  s.Post(R"(/sessions/([^/]+)/answer)",
         [this](const httplib::Request& req, httplib::Response& res) {
           Guarded(res, [&] {
             const json body = BodyOf(req);
             if (!body.contains("text") || !body["text"].is_string()) {
               throw InvalidArgument("body must carry a string 'text'");
             }
             SendJson(res, 200, manager_.SubmitAnswer(req.matches[1], body["text"]));
           });
         });
  s.Post(R"(/sessions/([^/]+)/end)", [this](const httplib::Request& req, httplib::Response& res) {
    Guarded(res, [&] {
      const EpisodeLog log = manager_.End(req.matches[1]);
      SendJson(res, 200, {{"session_id", log.query_id}, {"log", ToJson(log)}});
    });
  });
}

bool SessionServer::Listen(const std::string& host, int port) {
  return server_->listen(host, port);
}

int SessionServer::BindToAnyPort(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool SessionServer::ListenAfterBind() { return server_->listen_after_bind(); }

void SessionServer::Stop() {
  if (server_ && server_->is_running()) server_->stop();
}

bool SessionServer::running() const { return server_->is_running(); }

}  // namespace qseek
