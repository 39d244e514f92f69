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

// Episode log records and their line-delimited JSON file format:
//   {"query_id": str, "target_id": str?, "status": str, "error": str?,
//    "rounds": [{"round": int, "question": str|null, "answer": str|null,
//                "reformulated_query": str, "rank": int|null,
//                "trace": {...}?}, ...]}

#ifndef QSEEK_EPISODE_LOG_H_
#define QSEEK_EPISODE_LOG_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qseek {

struct RoundRecord {
  std::size_t round = 0;
  std::optional<std::string> question;
  std::optional<std::string> answer;
  std::string reformulated_query;
  // Absent in live sessions that have no known target.
  std::optional<std::size_t> rank;
  // Optional diagnostics (candidates, representatives, questions). Null when
  // tracing is off.
  nlohmann::json trace;
};

struct EpisodeLog {
  std::string query_id;
  std::optional<std::string> target_id;
  std::string status = "completed";
  std::optional<std::string> error;
  std::vector<RoundRecord> rounds;

  // Ranks of all rounds; nullopt if any round is unranked.
  std::optional<std::vector<std::size_t>> ranks() const;
};

// Throws InvalidArgument when rounds are not contiguous from 0, round 0
// carries a question or answer, or a rank is 0.
void ValidateEpisodeLog(const EpisodeLog& log);

nlohmann::json ToJson(const EpisodeLog& log);
// Throws InvalidArgument on schema violations.
EpisodeLog EpisodeLogFromJson(const nlohmann::json& j);

// Compact one-line JSON per episode.
void WriteEpisodeLogs(const std::vector<EpisodeLog>& logs, std::ostream& out);
void SaveEpisodeLogs(const std::vector<EpisodeLog>& logs, const std::string& path);
void AppendEpisodeLog(const EpisodeLog& log, const std::string& path);

// Throws ParseError with the line number of the first malformed line.
std::vector<EpisodeLog> ReadEpisodeLogs(std::istream& in);
std::vector<EpisodeLog> LoadEpisodeLogs(const std::string& path);

}  // namespace qseek

#endif  // QSEEK_EPISODE_LOG_H_
