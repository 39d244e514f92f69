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

#include "qseek/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

using nlohmann::json;

namespace {

std::uint64_t RoundSeed(std::uint64_t seed, std::size_t round) {
  return text::Mix64(seed + 0x51ed27ULL * (round + 1));
}

std::int64_t QuestionSeed(std::uint64_t seed, std::size_t round) {
  return static_cast<std::int64_t>(text::Mix64(RoundSeed(seed, round)) >> 33);
}

json TraceOf(const EpisodeState& s, const ImagePool& pool) {
  json trace;
  if (s.candidates) trace["candidates"] = s.candidates->ids(pool);
  if (s.retrieval_context) {
    trace["representatives"] = s.retrieval_context->representative_ids;
    trace["candidate_captions"] = s.retrieval_context->captions;
  }
  if (s.questions) {
    const QuestionSet& q = *s.questions;
    trace["questions"] = q.questions;
    trace["kept"] = q.kept;
    trace["filter_fallback"] = q.filter_fallback;
    json divergences = json::array();
    for (double d : q.divergences) {
      divergences.push_back(std::isnan(d) ? json(nullptr) : json(d));
    }
    trace["divergences"] = std::move(divergences);
    trace["chosen"] = q.chosen ? json(*q.chosen) : json(nullptr);
  }
  return trace;
}

}  // namespace

void EpisodeConfig::Validate() const {
  if (m == 0) throw InvalidArgument("m must be positive");
  if (k == 0) throw InvalidArgument("K must be positive");
  if (questions_per_round == 0) throw InvalidArgument("questions per round must be positive");
  if (n && *n == 0) throw InvalidArgument("n must be positive");
  if (!(softmax_temperature > 0.0)) throw InvalidArgument("softmax temperature must be positive");
}

std::size_t EpisodeConfig::EffectiveN(std::size_t pool_size) const {
  const std::size_t bound = std::max<std::size_t>(pool_size, 1);
  return n ? std::clamp<std::size_t>(*n, 1, bound) : DefaultCandidateCount(pool_size);
}

std::size_t EpisodeConfig::EffectiveM(std::size_t pool_size) const {
  return std::min(m, EffectiveN(pool_size));
}

const char* ToString(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::kReady:
      return "ready";
    case EpisodeStatus::kAwaitingAnswer:
      return "awaiting_answer";
    case EpisodeStatus::kCompleted:
      return "completed";
    case EpisodeStatus::kFailed:
      return "failed";
  }
  return "failed";
}

std::vector<std::size_t> EpisodeState::ranks() const {
  std::vector<std::size_t> out;
  for (const auto& r : records) {
    if (r.rank) out.push_back(*r.rank);
  }
  return out;
}

EpisodeLog EpisodeState::ToLog(const std::string& query_id) const {
  EpisodeLog log;
  log.query_id = query_id;
  log.target_id = target_id;
  log.status = ToString(status);
  log.error = failure;
  log.rounds = records;
  return log;
}

EpisodeRunner::EpisodeRunner(const ImagePool& pool, EpisodeConfig config,
                             Backends backends, PromptLibrary prompts)
    : pool_(pool),
      config_(std::move(config)),
      backends_(std::move(backends)),
      prompts_(std::move(prompts)) {
  config_.Validate();
  if (!backends_.chat || !backends_.embed || !backends_.caption || !backends_.answer) {
    throw InvalidArgument("all four backends must be provided");
  }
}

void EpisodeRunner::RankAndRecord(EpisodeState& s) const {
  RoundRecord record;
  record.round = s.dialogue.round();
  if (record.round > 0) {
    record.question = s.dialogue.qa_pairs.back().question;
    record.answer = s.dialogue.qa_pairs.back().answer;
  }
  record.reformulated_query = s.query.text;
  if (s.target_id) record.rank = RankOfTarget(s.query_embedding, pool_, *s.target_id);
  if (config_.trace && record.round > 0) record.trace = TraceOf(s, pool_);
  s.records.push_back(std::move(record));

  const bool at_top = s.records.back().rank && *s.records.back().rank == 1;
  if (s.dialogue.round() >= FinalRound() || (config_.early_stop && at_top)) {
    s.status = EpisodeStatus::kCompleted;
  } else {
    s.status = EpisodeStatus::kReady;
  }
}

EpisodeState EpisodeRunner::Start(const std::string& caption,
                                  std::optional<std::string> target_id,
                                  std::uint64_t seed) const {
  if (text::Trim(caption).empty()) throw InvalidArgument("caption must not be empty");
  if (pool_.empty()) throw InvalidArgument("image pool is empty");
  if (backends_.embed->dimension() != pool_.dimension()) {
    throw InvalidArgument("embedder dimension " +
                          std::to_string(backends_.embed->dimension()) +
                          " does not match pool dimension " +
                          std::to_string(pool_.dimension()));
  }
  if (target_id && !pool_.IndexOf(*target_id)) {
    throw NotFound("target '" + *target_id + "' is not in the pool");
  }
  EpisodeState s;
  s.dialogue.caption = caption;
  s.target_id = std::move(target_id);
  s.seed = seed;
  s.query = Reformulate(s.dialogue, *backends_.chat, prompts_, config_.sampling.reformulation);
  s.query_embedding = backends_.embed->EmbedText(s.query.text);
  RankAndRecord(s);
  return s;
}

void EpisodeRunner::AskQuestion(EpisodeState& state) const {
  if (state.status != EpisodeStatus::kReady) {
    throw Conflict(std::string("cannot ask a question in state ") + ToString(state.status));
  }
  EpisodeState s = state;
  const std::size_t round = s.dialogue.round() + 1;
  const std::size_t n = config_.EffectiveN(pool_.size());
  const std::size_t m = config_.EffectiveM(pool_.size());

  ContextExtraction extraction = ExtractRetrievalContext(
      s.query_embedding, pool_, n, m, *backends_.caption, RoundSeed(s.seed, round),
      config_.softmax_temperature, config_.kmeans);
  QuestionSet generated = GenerateQuestions(
      s.dialogue, extraction.context, config_.questions_per_round, *backends_.chat,
      prompts_, config_.sampling.question_generation, QuestionSeed(s.seed, round));
  QuestionSet filtered = FilterQuestions(
      s.dialogue, s.query.text, s.query_embedding, std::move(generated),
      extraction.candidates, pool_, *backends_.chat, *backends_.embed, prompts_,
      config_.sampling.filtering, config_.softmax_temperature);

  s.pending_question = filtered.questions[*filtered.chosen];
  s.candidates = std::move(extraction.candidates);
  s.retrieval_context = std::move(extraction.context);
  s.questions = std::move(filtered);
  s.status = EpisodeStatus::kAwaitingAnswer;
  state = std::move(s);
}

void EpisodeRunner::SubmitAnswer(EpisodeState& state, const std::string& answer) const {
  if (state.status != EpisodeStatus::kAwaitingAnswer || !state.pending_question) {
    throw Conflict("no question is pending");
  }
  EpisodeState s = state;
  s.dialogue.qa_pairs.push_back({*s.pending_question, answer});
  s.pending_question.reset();
  s.query = Reformulate(s.dialogue, *backends_.chat, prompts_, config_.sampling.reformulation);
  s.query_embedding = backends_.embed->EmbedText(s.query.text);
  RankAndRecord(s);
  state = std::move(s);
}

void EpisodeRunner::RunRound(EpisodeState& state) const {
  try {
    AskQuestion(state);
    if (!state.target_id) throw InvalidArgument("simulated answers need a target");
    const std::string answer =
        backends_.answer->AnswerQuestion(*state.pending_question, *state.target_id);
    SubmitAnswer(state, answer);
  } catch (const Conflict&) {
    throw;
  } catch (const std::exception& e) {
    state.status = EpisodeStatus::kFailed;
    state.failure = e.what();
    state.pending_question.reset();
  }
}

EpisodeLog EpisodeRunner::RunEpisode(const std::string& query_id,
                                     const std::string& target_id,
                                     const std::string& caption,
                                     std::uint64_t seed) const {
  if (!pool_.IndexOf(target_id)) {
    throw NotFound("target '" + target_id + "' is not in the pool");
  }
  EpisodeState state;
  try {
    state = Start(caption, target_id, seed);
  } catch (const std::exception& e) {
    state.target_id = target_id;
    state.status = EpisodeStatus::kFailed;
    state.failure = e.what();
    return state.ToLog(query_id);
  }
  while (state.status == EpisodeStatus::kReady) RunRound(state);
  return state.ToLog(query_id);
}

std::vector<BatchQuery> ReadDataset(std::istream& in) {
  std::vector<BatchQuery> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    BatchQuery q;
    try {
      const json j = json::parse(line);
      q.target_id = j.at("target_id").get<std::string>();
      q.caption = j.at("caption").get<std::string>();
      q.query_id = j.value("query_id", q.target_id);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!seen.insert(q.query_id).second) {
      throw ParseError("duplicate query_id '" + q.query_id + "'", line_no);
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<BatchQuery> LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open dataset file '" + path + "'");
  return ReadDataset(in);
}

std::uint64_t EpisodeSeed(std::uint64_t run_seed, const std::string& query_id) {
  return text::Mix64(run_seed ^ text::Fnv1a(query_id));
}

BatchResult RunBatch(const std::vector<BatchQuery>& queries, const EpisodeRunner& runner,
                     std::size_t parallelism) {
  std::vector<EpisodeLog> logs(queries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      const BatchQuery& q = queries[i];
      try {
        logs[i] = runner.RunEpisode(q.query_id, q.target_id, q.caption,
                                    EpisodeSeed(runner.config().seed, q.query_id));
      } catch (const std::exception& e) {
        logs[i].query_id = q.query_id;
        logs[i].target_id = q.target_id;
        logs[i].status = ToString(EpisodeStatus::kFailed);
        logs[i].error = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(queries.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  BatchResult result;
  result.logs = std::move(logs);
  std::stable_sort(result.logs.begin(), result.logs.end(),
                   [](const EpisodeLog& a, const EpisodeLog& b) { return a.query_id < b.query_id; });
  for (const auto& log : result.logs) {
    if (log.status == ToString(EpisodeStatus::kFailed)) ++result.failures;
  }
  return result;
}

}  // namespace qseek
