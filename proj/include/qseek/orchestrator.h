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

// Episode state machine for multi-round retrieval. Each round asks one
// question grounded in the current candidates, folds the answer into the
// dialogue, and re-ranks the pool with the reformulated query.

#ifndef QSEEK_ORCHESTRATOR_H_
#define QSEEK_ORCHESTRATOR_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qseek/backends.h"
#include "qseek/corpus.h"
#include "qseek/episode_log.h"
#include "qseek/prompts.h"
#include "qseek/questioner.h"

namespace qseek {

struct EpisodeConfig {
  std::size_t max_rounds = 10;
  // Candidates per round; DefaultCandidateCount(pool size) when absent.
  std::optional<std::size_t> n;
  std::size_t m = 10;
  std::size_t k = 10;  // K for online reporting
  std::size_t questions_per_round = 5;
  std::uint64_t seed = 0;
  bool early_stop = false;  // finish once the target reaches rank 1
  double softmax_temperature = 1.0;
  bool trace = false;  // attach per-round diagnostics to the log
  ChatSampling sampling;
  KMeansOptions kmeans;

  // Throws InvalidArgument on m == 0, questions_per_round == 0, k == 0,
  // n == 0 or a non-positive temperature.
  void Validate() const;
  std::size_t EffectiveN(std::size_t pool_size) const;
  // min(m, EffectiveN).
  std::size_t EffectiveM(std::size_t pool_size) const;
};

enum class EpisodeStatus { kReady, kAwaitingAnswer, kCompleted, kFailed };

const char* ToString(EpisodeStatus status);

struct EpisodeState {
  DialogueContext dialogue;
  std::optional<std::string> target_id;
  std::uint64_t seed = 0;

  ReformulatedQuery query;
  Embedding query_embedding;

  // Round-t question generation artifacts, kept for inspection.
  std::optional<CandidateSet> candidates;
  std::optional<RetrievalContext> retrieval_context;
  std::optional<QuestionSet> questions;

  std::optional<std::string> pending_question;
  std::vector<RoundRecord> records;
  EpisodeStatus status = EpisodeStatus::kReady;
  std::optional<std::string> failure;

  // Rank of every completed round (empty without a target).
  std::vector<std::size_t> ranks() const;
  EpisodeLog ToLog(const std::string& query_id) const;
};

// Drives episodes over a shared read-only pool. Thread-safe as long as the
// backends are; each EpisodeState must be owned by one caller at a time.
class EpisodeRunner {
 public:
  EpisodeRunner(const ImagePool& pool, EpisodeConfig config, Backends backends,
                PromptLibrary prompts = PromptLibrary::Builtin());

  const EpisodeConfig& config() const { return config_; }
  const ImagePool& pool() const { return pool_; }

  // Round 0: the caption is the query. Throws InvalidArgument on an empty
  // caption or an embedder whose dimension differs from the pool, NotFound
  // for an unknown target, BackendError on backend failure.
  EpisodeState Start(const std::string& caption,
                     std::optional<std::string> target_id, std::uint64_t seed) const;

  // Extracts the retrieval context from the current query, generates and
  // filters questions, and leaves the chosen one pending. Requires kReady.
  // Strong guarantee: state is untouched when this throws.
  void AskQuestion(EpisodeState& state) const;

  // Appends (pending question, answer), reformulates, embeds and re-ranks.
  // Requires kAwaitingAnswer. Strong guarantee.
  void SubmitAnswer(EpisodeState& state, const std::string& answer) const;

  // AskQuestion + AnswerBackend + SubmitAnswer. Backend failures move the
  // state to kFailed with the cause instead of throwing.
  void RunRound(EpisodeState& state) const;

  // Rounds 0..max_rounds (fewer on failure or early stop). Throws NotFound
  // for an unknown target; every other failure is recorded in the log.
  EpisodeLog RunEpisode(const std::string& query_id, const std::string& target_id,
                        const std::string& caption, std::uint64_t seed) const;

 private:
  void RankAndRecord(EpisodeState& state) const;
  std::size_t FinalRound() const { return config_.max_rounds; }

  const ImagePool& pool_;
  EpisodeConfig config_;
  Backends backends_;
  PromptLibrary prompts_;
};

struct BatchQuery {
  std::string query_id;
  std::string target_id;
  std::string caption;
};

// One JSON object per line: {"query_id": str?, "target_id": str,
// "caption": str}; query_id defaults to target_id. Throws ParseError.
std::vector<BatchQuery> ReadDataset(std::istream& in);
std::vector<BatchQuery> LoadDataset(const std::string& path);

struct BatchResult {
  std::vector<EpisodeLog> logs;  // sorted by query_id
  std::size_t failures = 0;
};

// Per-episode seed derived from the run seed and query id, so results do
// not depend on scheduling.
std::uint64_t EpisodeSeed(std::uint64_t run_seed, const std::string& query_id);

// Runs every query with up to parallelism concurrent episodes. A failing
// episode is logged with status "failed" and the batch continues.
BatchResult RunBatch(const std::vector<BatchQuery>& queries, const EpisodeRunner& runner,
                     std::size_t parallelism);

}  // namespace qseek

#endif  // QSEEK_ORCHESTRATOR_H_
