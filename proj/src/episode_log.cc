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

#include "qseek/episode_log.h"

#include <fstream>
#include <istream>
#include <ostream>

#include "qseek/error.h"

namespace qseek {

using nlohmann::json;

namespace {

json OptionalString(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> ReadOptionalString(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

std::optional<std::vector<std::size_t>> EpisodeLog::ranks() const {
  std::vector<std::size_t> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) {
    if (!r.rank) return std::nullopt;
    out.push_back(*r.rank);
  }
  return out;
}

void ValidateEpisodeLog(const EpisodeLog& log) {
  for (std::size_t i = 0; i < log.rounds.size(); ++i) {
    const RoundRecord& r = log.rounds[i];
    if (r.round != i) {
      throw InvalidArgument("episode '" + log.query_id + "': rounds are not contiguous from 0");
    }
    if (i == 0 && (r.question || r.answer)) {
      throw InvalidArgument("episode '" + log.query_id + "': round 0 has a question or answer");
    }
    if (r.rank && *r.rank == 0) {
      throw InvalidArgument("episode '" + log.query_id + "': rank must be >= 1");
    }
  }
}

json ToJson(const EpisodeLog& log) {
  json rounds = json::array();
  for (const auto& r : log.rounds) {
    json jr = {{"round", r.round},
               {"question", OptionalString(r.question)},
               {"answer", OptionalString(r.answer)},
               {"reformulated_query", r.reformulated_query},
               {"rank", r.rank ? json(*r.rank) : json(nullptr)}};
    if (!r.trace.is_null()) jr["trace"] = r.trace;
    rounds.push_back(std::move(jr));
  }
  json j = {{"query_id", log.query_id}};
  if (log.target_id) j["target_id"] = *log.target_id;
  j["status"] = log.status;
  if (log.error) j["error"] = *log.error;
  j["rounds"] = std::move(rounds);
  return j;
}

EpisodeLog EpisodeLogFromJson(const json& j) {
  EpisodeLog log;
  try {
    log.query_id = j.at("query_id").get<std::string>();
    log.target_id = ReadOptionalString(j, "target_id");
    if (auto s = ReadOptionalString(j, "status")) log.status = *s;
    log.error = ReadOptionalString(j, "error");
    for (const auto& jr : j.at("rounds")) {
      RoundRecord r;
      r.round = jr.at("round").get<std::size_t>();
      r.question = ReadOptionalString(jr, "question");
      r.answer = ReadOptionalString(jr, "answer");
      r.reformulated_query = jr.at("reformulated_query").get<std::string>();
      if (auto it = jr.find("rank"); it != jr.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long long>() < 1) {
          throw InvalidArgument("rank must be an integer >= 1");
        }
        r.rank = it->get<std::size_t>();
      }
      if (auto it = jr.find("trace"); it != jr.end()) r.trace = *it;
      log.rounds.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed episode log: ") + e.what());
  }
  ValidateEpisodeLog(log);
  return log;
}

void WriteEpisodeLogs(const std::vector<EpisodeLog>& logs, std::ostream& out) {
  for (const auto& log : logs) out << ToJson(log).dump() << '\n';
}

void SaveEpisodeLogs(const std::vector<EpisodeLog>& logs, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write log file '" + path + "'");
  WriteEpisodeLogs(logs, out);
}

void AppendEpisodeLog(const EpisodeLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw InvalidArgument("cannot write log file '" + path + "'");
  out << ToJson(log).dump() << '\n';
}

std::vector<EpisodeLog> ReadEpisodeLogs(std::istream& in) {
  std::vector<EpisodeLog> logs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      logs.push_back(EpisodeLogFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return logs;
}

std::vector<EpisodeLog> LoadEpisodeLogs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open log file '" + path + "'");
  return ReadEpisodeLogs(in);
}

}  // namespace qseek
