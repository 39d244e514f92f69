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
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "qseek/commands.h"
#include "qseek/config.h"
#include "qseek/error.h"
#include "qseek/metrics.h"
#include "qseek/mock_backends.h"
#include "qseek/synthetic.h"
#include "test_util.h"

namespace qseek {
namespace {

struct Fixture {
  std::shared_ptr<const ImagePool> pool;
  SyntheticCorpus corpus;
  RunConfig config;

  explicit Fixture(std::size_t images = 300, std::size_t queries = 6) {
    corpus = MakeSyntheticCorpus(images, queries, 2);
    std::ostringstream captions;
    WriteCaptionFile(corpus, captions);
    BagOfWordsEmbedder embedder(32, 7);
    std::istringstream in(captions.str());
    pool = std::make_shared<const ImagePool>(EmbedCorpus(in, embedder).pool);
    config.mock_dimension = 32;
    config.episode.max_rounds = 3;
    config.episode.n = 12;
    config.episode.m = 3;
  }
  Backends backends() const { return MakeBackends(config, pool); }
  EpisodeRunner runner() const { return EpisodeRunner(*pool, config.episode, backends()); }
};

TEST(EpisodeConfigTest, Defaults) {
  const EpisodeConfig c;
  EXPECT_EQ(c.m, 10u);
  EXPECT_FALSE(c.n);
  EXPECT_EQ(c.EffectiveN(2000), 20u);
  EXPECT_EQ(c.EffectiveN(150), 2u);
  EXPECT_EQ(c.EffectiveM(2000), 10u);
  EXPECT_EQ(c.EffectiveM(500), 5u);
  EXPECT_EQ(c.questions_per_round, 5u);
  EXPECT_EQ(c.max_rounds, 10u);
  EXPECT_EQ(c.k, 10u);
  EXPECT_EQ(c.softmax_temperature, 1.0);
  EXPECT_EQ(c.sampling.question_generation.temperature, 0.7);
  EXPECT_EQ(c.sampling.question_generation.max_output_tokens, 32);
  EXPECT_EQ(c.sampling.reformulation.temperature, 0.0);
  EXPECT_EQ(c.sampling.reformulation.max_output_tokens, 512);
  EXPECT_EQ(c.sampling.filtering.temperature, 0.0);
  EXPECT_EQ(c.sampling.filtering.max_output_tokens, 10);
  EXPECT_EQ(c.kmeans.restarts, 10);
  EXPECT_EQ(c.kmeans.max_iterations, 100);
}

TEST(EpisodeConfigTest, Validation) {
  EpisodeConfig c;
  c.m = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.n = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.softmax_temperature = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.questions_per_round = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(EpisodeRunnerTest, RoundZeroUsesCaption) {
  Fixture f;
  const auto runner = f.runner();
  const auto& q = f.corpus.queries[0];
  const EpisodeState s = runner.Start(q.caption, q.target_id, 1);
  EXPECT_EQ(s.query.text, q.caption);
  ASSERT_EQ(s.records.size(), 1u);
  EXPECT_EQ(s.records[0].round, 0u);
  EXPECT_FALSE(s.records[0].question);
  EXPECT_EQ(s.records[0].rank, RankOfTarget(s.query_embedding, *f.pool, q.target_id));
  EXPECT_EQ(s.status, EpisodeStatus::kReady);
}

TEST(EpisodeRunnerTest, StartErrors) {
  Fixture f;
  const auto runner = f.runner();
  EXPECT_THROW(runner.Start("", std::nullopt, 1), InvalidArgument);
  EXPECT_THROW(runner.Start("a dog", "no-such-image", 1), NotFound);
  Backends b = f.backends();
  b.embed = std::make_shared<HashEmbedder>(8, 1);
  const EpisodeRunner mismatched(*f.pool, f.config.episode, b);
  EXPECT_THROW(mismatched.Start("a dog", std::nullopt, 1), InvalidArgument);
}

TEST(EpisodeRunnerTest, FullEpisodeProducesValidLog) {
  Fixture f;
  const auto runner = f.runner();
  const auto& q = f.corpus.queries[1];
  const EpisodeLog log = runner.RunEpisode(q.query_id, q.target_id, q.caption, 5);
  EXPECT_EQ(log.status, "completed");
  ASSERT_EQ(log.rounds.size(), 4u);
  EXPECT_NO_THROW(ValidateEpisodeLog(log));
  for (std::size_t t = 1; t < log.rounds.size(); ++t) {
    ASSERT_TRUE(log.rounds[t].question);
    EXPECT_EQ(log.rounds[t].question->back(), '?');
    // The answer reaches the reformulated query before re-ranking.
    EXPECT_NE(log.rounds[t].reformulated_query.find(*log.rounds[t].answer), std::string::npos);
  }
  EXPECT_TRUE(log.rounds[1].trace.is_null());
}

TEST(EpisodeRunnerTest, TraceRecordsRoundArtifacts) {
  Fixture f;
  f.config.episode.trace = true;
  const auto runner = f.runner();
  const auto& q = f.corpus.queries[2];
  const EpisodeLog log = runner.RunEpisode(q.query_id, q.target_id, q.caption, 5);
  const auto& trace = log.rounds[1].trace;
  ASSERT_TRUE(trace.is_object());
  EXPECT_EQ(trace["candidates"].size(), 12u);
  EXPECT_EQ(trace["representatives"].size(), 3u);
  EXPECT_EQ(trace["candidate_captions"].size(), 3u);
  EXPECT_EQ(trace["questions"].size(), 5u);
  const std::size_t chosen = trace["chosen"].get<std::size_t>();
  EXPECT_EQ(trace["questions"][chosen], *log.rounds[1].question);
}

TEST(EpisodeRunnerTest, EarlyStopAtRankOne) {
  Fixture f;
  f.config.episode.early_stop = true;
  f.config.episode.max_rounds = 10;
  const auto runner = f.runner();
  for (const auto& q : f.corpus.queries) {
    const EpisodeLog log = runner.RunEpisode(q.query_id, q.target_id, q.caption, 3);
    const auto ranks = *log.ranks();
    for (std::size_t t = 0; t + 1 < ranks.size(); ++t) EXPECT_GT(ranks[t], 1u);
    EXPECT_TRUE(ranks.back() == 1u || ranks.size() == 11u);
  }
}

TEST(EpisodeRunnerTest, ManualStepping) {
  Fixture f;
  const auto runner = f.runner();
  const auto& q = f.corpus.queries[0];
  EpisodeState s = runner.Start(q.caption, std::nullopt, 4);
  EXPECT_THROW(runner.SubmitAnswer(s, "yes"), Conflict);
  runner.AskQuestion(s);
  EXPECT_EQ(s.status, EpisodeStatus::kAwaitingAnswer);
  ASSERT_TRUE(s.pending_question);
  EXPECT_THROW(runner.AskQuestion(s), Conflict);
  const std::string asked = *s.pending_question;
  runner.SubmitAnswer(s, "yes, red");
  EXPECT_EQ(s.dialogue.qa_pairs.back(), (QaPair{asked, "yes, red"}));
  EXPECT_EQ(s.records.size(), 2u);
  EXPECT_FALSE(s.records[1].rank);  // no target
  EXPECT_EQ(s.status, EpisodeStatus::kReady);
    // Simulated rounds need a target to answer about.
  runner.RunRound(s);
  EXPECT_EQ(s.status, EpisodeStatus::kFailed);
  EXPECT_THROW(runner.AskQuestion(s), Conflict);
}

class FlakyChat : public ChatBackend {
 public:
  explicit FlakyChat(int fail_on) : fail_on_(fail_on) {}
  std::string Chat(const ChatRequest& r) override {
    if (++calls_ == fail_on_) throw BackendError("chat backend down");
    return inner_.Chat(r);
  }

 private:
  HeuristicChat inner_;
  int fail_on_;
  int calls_ = 0;
};

TEST(EpisodeRunnerTest, AskQuestionHasStrongGuarantee) {
  Fixture f;
  Backends b = f.backends();
  b.chat = std::make_shared<FlakyChat>(3);
  const EpisodeRunner runner(*f.pool, f.config.episode, b);
  EpisodeState s = runner.Start(f.corpus.queries[0].caption, std::nullopt, 1);
  const std::string before = ToJson(s.ToLog("x")).dump();
  EXPECT_THROW(runner.AskQuestion(s), BackendError);
  EXPECT_EQ(ToJson(s.ToLog("x")).dump(), before);
  EXPECT_EQ(s.status, EpisodeStatus::kReady);
  EXPECT_FALSE(s.pending_question);
  EXPECT_FALSE(s.questions);
}

TEST(EpisodeRunnerTest, SubmitAnswerHasStrongGuarantee) {
  Fixture f;
  Backends b = f.backends();
  // Calls 1..10 are the round-1 questions and filters; 11 reformulates.
  b.chat = std::make_shared<FlakyChat>(11);
  const EpisodeRunner runner(*f.pool, f.config.episode, b);
  EpisodeState s = runner.Start(f.corpus.queries[0].caption, std::nullopt, 1);
  runner.AskQuestion(s);
  const auto pending = s.pending_question;
  EXPECT_THROW(runner.SubmitAnswer(s, "yes"), BackendError);
  EXPECT_EQ(s.status, EpisodeStatus::kAwaitingAnswer);
  EXPECT_EQ(s.pending_question, pending);
  EXPECT_TRUE(s.dialogue.qa_pairs.empty());
  EXPECT_EQ(s.records.size(), 1u);
  runner.SubmitAnswer(s, "yes");
  EXPECT_EQ(s.records.size(), 2u);
}

TEST(EpisodeRunnerTest, BackendFailureIsRecordedInLog) {
  Fixture f;
  Backends b = f.backends();
  b.chat = std::make_shared<FlakyChat>(12);
  const EpisodeRunner runner(*f.pool, f.config.episode, b);
  const auto& q = f.corpus.queries[0];
  const EpisodeLog log = runner.RunEpisode(q.query_id, q.target_id, q.caption, 1);
  EXPECT_EQ(log.status, "failed");
  ASSERT_TRUE(log.error);
  EXPECT_NE(log.error->find("chat backend down"), std::string::npos);
  EXPECT_EQ(log.rounds.size(), 2u);
  EXPECT_NO_THROW(ValidateEpisodeLog(log));
  EXPECT_THROW(runner.RunEpisode("q", "missing", "a dog", 1), NotFound);
}

TEST(BatchTest, SortedDeterministicAndParallelSafe) {
  Fixture f(300, 8);
  const auto runner = f.runner();
  auto queries = f.corpus.queries;
  std::reverse(queries.begin(), queries.end());
  const BatchResult serial = RunBatch(queries, runner, 1);
  const BatchResult parallel = RunBatch(queries, runner, 4);
  ASSERT_EQ(serial.logs.size(), 8u);
  for (std::size_t i = 1; i < serial.logs.size(); ++i) {
    EXPECT_LT(serial.logs[i - 1].query_id, serial.logs[i].query_id);
  }
  std::ostringstream a, b;
  WriteEpisodeLogs(serial.logs, a);
  WriteEpisodeLogs(parallel.logs, b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(serial.failures, 0u);
}

TEST(BatchTest, FailuresDoNotStopTheBatch) {
  Fixture f(300, 4);
  auto queries = f.corpus.queries;
  queries[1].target_id = "missing";
  const BatchResult result = RunBatch(queries, f.runner(), 2);
  EXPECT_EQ(result.logs.size(), 4u);
  EXPECT_EQ(result.failures, 1u);
  EXPECT_EQ(result.logs[1].status, "failed");
}

TEST(BatchTest, EpisodeSeedDependsOnQueryOnly) {
  EXPECT_EQ(EpisodeSeed(1, "q1"), EpisodeSeed(1, "q1"));
  EXPECT_NE(EpisodeSeed(1, "q1"), EpisodeSeed(1, "q2"));
  EXPECT_NE(EpisodeSeed(1, "q1"), EpisodeSeed(2, "q1"));
}

TEST(DatasetTest, Parse) {
  std::istringstream in(
      "{\"target_id\":\"img1\",\"caption\":\"a dog\"}\n\n"
      "{\"query_id\":\"x\",\"target_id\":\"img2\",\"caption\":\"a cat\"}\n");
  const auto qs = ReadDataset(in);
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].query_id, "img1");
  EXPECT_EQ(qs[1].query_id, "x");
  std::istringstream dup("{\"target_id\":\"a\",\"caption\":\"c\"}\n{\"target_id\":\"a\",\"caption\":\"c\"}\n");
  EXPECT_THROW(ReadDataset(dup), ParseError);
  std::istringstream no_caption("{\"target_id\":\"a\"}\n");
  EXPECT_THROW(ReadDataset(no_caption), ParseError);
}

}  // namespace
}  // namespace qseek
