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

#include "qseek/questioner.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "qseek/error.h"
#include "qseek/mock_backends.h"
#include "test_util.h"

namespace qseek {
namespace {

namespace oracle = testing::oracle;

std::string Serialize(const std::vector<ChatMessage>& messages) {
  std::string out;
  for (const auto& m : messages) out += std::string("[") + ToString(m.role) + "]\n" + m.content + "\n";
  return out;
}

// Compares against tests/golden/<name>; QSEEK_UPDATE_GOLDEN=1 rewrites it.
void ExpectGolden(const std::string& name, const std::string& actual) {
  const std::string path = std::string(QSEEK_GOLDEN_DIR) + "/" + name;
  if (std::getenv("QSEEK_UPDATE_GOLDEN") != nullptr) testing::WriteFile(path, actual);
  ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden " << path;
  EXPECT_EQ(testing::ReadFile(path), actual) << "golden " << name;
}

DialogueContext TwoRounds() {
  return {"a man riding a wave on a surfboard",
          {{"what color is the surfboard?", "white"}, {"is it sunny?", "yes, clear sky"}}};
}

TEST(PromptTest, ParseAndRender) {
  const auto t = PromptTemplate::Parse("# c\n[system]\nbe brief\n[user]\nQ: {question} {unknown}\n");
  ASSERT_EQ(t.blocks().size(), 2u);
  const auto m = t.Render({{"question", "why {caption}?"}, {"caption", "x"}});
  EXPECT_EQ(m[0].role, ChatRole::kSystem);
  EXPECT_EQ(m[1].content, "Q: why {caption}? {unknown}");
  EXPECT_THROW(PromptTemplate::Parse("# only comments\n"), ParseError);
  EXPECT_THROW(PromptTemplate::Parse("stray\n[user]\nx\n"), ParseError);
}

TEST(PromptTest, BuiltinsUseDocumentedPlaceholders) {
  const auto& lib = PromptLibrary::Builtin();
  auto all = [](const PromptTemplate& t) {
    std::string s;
    for (const auto& b : t.blocks()) s += b.content;
    return s;
  };
  EXPECT_NE(all(lib.reformulate).find("{dialogue}"), std::string::npos);
  EXPECT_NE(all(lib.question_generation).find("{candidate_captions}"), std::string::npos);
  EXPECT_NE(all(lib.filter).find("{question}"), std::string::npos);
  EXPECT_EQ(BuiltinPromptSources().size(), 3u);
}

TEST(PromptTest, DirectoryOverride) {
  testing::TempDir dir;
  testing::WriteFile(dir.File("filter.txt"), "[user]\ncustom {question}\n");
  const auto lib = PromptLibrary::FromDirectory(dir.path().string());
  EXPECT_EQ(lib.filter.Render({{"question", "q"}})[0].content, "custom q");
  EXPECT_EQ(Serialize(lib.reformulate.blocks()),
            Serialize(PromptLibrary::Builtin().reformulate.blocks()));
  EXPECT_THROW(PromptLibrary::FromDirectory(dir.File("missing")), NotFound);
}

TEST(PromptTest, BuiltinMatchesAssetFiles) {
  const auto from_assets = PromptLibrary::FromDirectory(std::string(QSEEK_ASSETS_DIR) + "/prompts");
  EXPECT_EQ(Serialize(from_assets.question_generation.blocks()),
            Serialize(PromptLibrary::Builtin().question_generation.blocks()));
}

TEST(DialogueTest, Rendering) {
  EXPECT_EQ(RenderDialogue({"x", {}}), "(none)");
  EXPECT_EQ(RenderDialogue({"x", {{"q1?", "a1"}, {"q2?", "a2"}}}),
            "Question: q1?\nAnswer: a1\nQuestion: q2?\nAnswer: a2");
  EXPECT_EQ(RenderCandidateCaptions({"a", "b"}), "1. a\n2. b");
  const auto v = DialogueVariables(TwoRounds());
  EXPECT_EQ(v.at("answers"), "white\nyes, clear sky");
}

TEST(ReformulateTest, RoundZeroBypassesModel) {
  ScriptedChat chat;  // throws if called
  const auto q = Reformulate({"a dog on grass", {}}, chat, PromptLibrary::Builtin(), {0.0, 512});
  EXPECT_EQ(q.text, "a dog on grass");
  EXPECT_EQ(chat.calls(), 0);
}

TEST(ReformulateTest, MockContractAndSampling) {
  HeuristicChat heuristic;
  const auto q = Reformulate({"a dog", {{"what color?", "brown"}}}, heuristic,
                             PromptLibrary::Builtin(), {0.0, 512});
  EXPECT_EQ(q.text, "a dog; brown");
  EXPECT_EQ(q.source_round, 1u);
  const auto req = BuildReformulationRequest(TwoRounds(), PromptLibrary::Builtin(), {0.0, 512});
  EXPECT_EQ(req.temperature, 0.0);
  EXPECT_EQ(req.max_output_tokens, 512);
  EXPECT_EQ(req.task, ChatTask::kReformulate);
  FunctionChat empty([](const ChatRequest&) { return "   "; });
  EXPECT_THROW(Reformulate(TwoRounds(), empty, PromptLibrary::Builtin(), {0.0, 512}), BackendError);
}

TEST(ReformulateTest, GoldenPrompt) {
  const auto req = BuildReformulationRequest(TwoRounds(), PromptLibrary::Builtin(), {0.0, 512});
  ExpectGolden("reformulate_two_rounds.txt", Serialize(req.messages));
}

TEST(QuestionTest, GoldenCotPrompt) {
  RetrievalContext rc;
  rc.captions = {"a man surfing a large wave", "a surfer carrying a white board on a beach"};
  const auto req = BuildQuestionRequest(TwoRounds(), rc, PromptLibrary::Builtin(), {0.7, 32}, 9);
  EXPECT_EQ(req.temperature, 0.7);
  EXPECT_EQ(req.max_output_tokens, 32);
  EXPECT_EQ(req.seed, 9);
  ExpectGolden("question_cot_two_captions.txt", Serialize(req.messages));
}

TEST(QuestionTest, Normalization) {
  EXPECT_EQ(NormalizeQuestion("what color is the dog"), "what color is the dog?");
  EXPECT_EQ(NormalizeQuestion("Reasoning...\nQuestion: \"Is it indoors.\""), "Is it indoors?");
  EXPECT_EQ(NormalizeQuestion("Thoughts\n\nIs it red?\n"), "Is it red?");
  EXPECT_EQ(NormalizeQuestion("question: a?\nQUESTION: b"), "b?");
  EXPECT_FALSE(NormalizeQuestion("  \n "));
  EXPECT_FALSE(NormalizeQuestion("Question:   "));
}

TEST(QuestionTest, ScriptedQuestionsAreReturnedExactly) {
  ScriptedChat chat;
  chat.AddTaskReplies(ChatTask::kGenerateQuestion,
                      {"Question: is it red?", "is it big", "Question: where is it?"});
  RetrievalContext rc;
  rc.captions = {"c"};
  const auto qs = GenerateQuestions({"x", {}}, rc, 3, chat, PromptLibrary::Builtin(), {0.7, 32}, 1);
  EXPECT_EQ(qs.questions, (std::vector<std::string>{"is it red?", "is it big?", "where is it?"}));
  EXPECT_THROW(GenerateQuestions({"x", {}}, RetrievalContext{}, 3, chat, PromptLibrary::Builtin(),
                                 {0.7, 32}, 1),
               InvalidArgument);
  FunctionChat junk([](const ChatRequest&) { return ""; });
  EXPECT_THROW(GenerateQuestions({"x", {}}, rc, 2, junk, PromptLibrary::Builtin(), {0.7, 32}, 1),
               BackendError);
}

TEST(QuestionTest, SeedsIncrementPerSample) {
  std::vector<std::int64_t> seeds;
  FunctionChat chat([&](const ChatRequest& r) {
    seeds.push_back(*r.seed);
    return "is it?";
  });
  RetrievalContext rc;
  rc.captions = {"c"};
  GenerateQuestions({"x", {}}, rc, 4, chat, PromptLibrary::Builtin(), {0.7, 32}, 10);
  EXPECT_EQ(seeds, (std::vector<std::int64_t>{10, 11, 12, 13}));
}

TEST(FilterTest, UncertainDetection) {
  EXPECT_TRUE(IsUncertain("  UNCERTAIN "));
  EXPECT_TRUE(IsUncertain("I am uncertain about that."));
  EXPECT_FALSE(IsUncertain("yes"));
  EXPECT_FALSE(IsUncertain("certain"));
}

TEST(FilterTest, GoldenPromptAndSampling) {
  const auto req = BuildFilterRequest(TwoRounds(), "is there a dog?", PromptLibrary::Builtin(), {0.0, 10});
  EXPECT_EQ(req.max_output_tokens, 10);
  EXPECT_EQ(req.temperature, 0.0);
  ExpectGolden("filter_prompt.txt", Serialize(req.messages));
}

// Builds candidates, a chat that marks the given questions uncertain, and an
// embedder whose vectors for "<text> <question>" are scripted.
struct FilterFixture {
  ImagePool pool;
  CandidateSet candidates;
  Embedding context;
  std::vector<std::string> questions;
  std::vector<bool> uncertain;
  std::map<std::string, Embedding> table;
};

FilterFixture RandomFilterInstance(std::mt19937_64& rng) {
  FilterFixture f;
  const std::size_t dim = 6, size = 2 + rng() % 15, k = 1 + rng() % 8;
  f.pool = testing::RandomPool(rng, size, dim, 3, 0.5);
  f.context = testing::RandomVector(rng, dim);
  f.candidates = TopNCandidates(f.context, f.pool, size);
  for (std::size_t i = 0; i < k; ++i) {
    f.questions.push_back("question " + std::to_string(i) + "?");
    f.uncertain.push_back(rng() % 3 != 0);
    // Occasional duplicate vectors exercise the lowest-index tie rule.
    if (i > 0 && rng() % 5 == 0) {
      f.table["ctx " + f.questions[i]] = f.table["ctx " + f.questions[i - 1]];
    } else {
      f.table["ctx " + f.questions[i]] = testing::RandomVector(rng, dim);
    }
  }
  return f;
}

QuestionSet RunFilter(const FilterFixture& f) {
  FunctionChat chat([&](const ChatRequest& r) {
    const std::string& q = r.variables.at("question");
    for (std::size_t i = 0; i < f.questions.size(); ++i) {
      if (f.questions[i] == q) return std::string(f.uncertain[i] ? " Uncertain." : "Yes, it is.");
    }
    return std::string("??");
  });
  ScriptedEmbedder embedder(std::make_shared<HashEmbedder>(6, 1), f.table);
  QuestionSet qs;
  qs.questions = f.questions;
  return FilterQuestions({"cap", {}}, "ctx", f.context, qs, f.candidates, f.pool, chat, embedder,
                         PromptLibrary::Builtin(), {0.0, 10});
}

std::size_t OracleChoice(const FilterFixture& f) {
  std::vector<double> sims;
  for (const auto& c : f.candidates.members) sims.push_back(oracle::Cosine(f.context, f.pool[c.pool_index].embedding));
  const auto pc = oracle::Softmax(sims);
  const bool any = std::find(f.uncertain.begin(), f.uncertain.end(), true) != f.uncertain.end();
  std::size_t best = f.questions.size();
  double best_kl = 0;
  for (std::size_t i = 0; i < f.questions.size(); ++i) {
    if (any && !f.uncertain[i]) continue;
    const Embedding& e = f.table.at("ctx " + f.questions[i]);
    std::vector<double> s;
    for (const auto& c : f.candidates.members) s.push_back(oracle::Cosine(e, f.pool[c.pool_index].embedding));
    const double kl = oracle::Kl(pc, oracle::Softmax(s));
    if (best == f.questions.size() || kl < best_kl) {
      best = i;
      best_kl = kl;
    }
  }
  return best;
}

TEST(FilterTest, SingleUncertainQuestionIsChosen) {
  std::mt19937_64 rng(1);
  FilterFixture f = RandomFilterInstance(rng);
  f.questions.resize(1);
  f.uncertain = {true};
  const auto qs = RunFilter(f);
  EXPECT_EQ(qs.chosen, 0u);
  EXPECT_FALSE(qs.filter_fallback);
}

TEST(FilterTest, IdenticalEmbeddingGivesZeroDivergence) {
  std::mt19937_64 rng(2);
  FilterFixture f = RandomFilterInstance(rng);
  f.questions = {"a?", "b?"};
  f.uncertain = {true, true};
  f.table = {{"ctx a?", testing::RandomVector(rng, 6)}, {"ctx b?", f.context}};
  const auto qs = RunFilter(f);
  EXPECT_EQ(qs.chosen, 1u);
  EXPECT_NEAR(qs.divergences[1], 0.0, 1e-15);
}

TEST(FilterTest, FallbackWhenNothingIsKept) {
  std::mt19937_64 rng(3);
  FilterFixture f = RandomFilterInstance(rng);
  f.questions = {"a?", "b?", "c?"};
  f.uncertain = {false, false, false};
  f.table = {{"ctx a?", testing::RandomVector(rng, 6)},
             {"ctx b?", testing::RandomVector(rng, 6)},
             {"ctx c?", testing::RandomVector(rng, 6)}};
  const auto qs = RunFilter(f);
  EXPECT_TRUE(qs.filter_fallback);
  EXPECT_EQ(qs.kept, (std::vector<bool>{true, true, true}));
  EXPECT_EQ(qs.chosen, OracleChoice(f));
}

TEST(FilterTest, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const FilterFixture f = RandomFilterInstance(rng);
    const auto qs = RunFilter(f);
    ASSERT_TRUE(qs.chosen);
    EXPECT_EQ(*qs.chosen, OracleChoice(f)) << "trial " << trial;
    if (!qs.filter_fallback) {
      EXPECT_TRUE(f.uncertain[*qs.chosen]);
      for (std::size_t i = 0; i < f.questions.size(); ++i) {
        EXPECT_EQ(qs.kept[i], f.uncertain[i]);
        EXPECT_EQ(std::isnan(qs.divergences[i]), !f.uncertain[i]);
        if (qs.kept[i]) EXPECT_LE(qs.divergences[*qs.chosen], qs.divergences[i]);
      }
    }
  }
}

TEST(FilterTest, EmptyQuestionListIsRejected) {
  std::mt19937_64 rng(4);
  FilterFixture f = RandomFilterInstance(rng);
  f.questions.clear();
  f.uncertain.clear();
  EXPECT_THROW(RunFilter(f), InvalidArgument);
}

TEST(ExtractTest, MEqualsNUsesEveryCandidate) {
  std::mt19937_64 rng(5);
  auto pool = std::make_shared<ImagePool>(testing::RandomPool(rng, 30, 5, 3));
  PoolCaptioner captioner(pool);
  const auto q = testing::RandomVector(rng, 5);
  const auto out = ExtractRetrievalContext(q, *pool, 6, 6, captioner, 1);
  EXPECT_EQ(out.context.captions.size(), 6u);
  auto ids = out.context.representative_ids;
  auto expected = out.candidates.ids(*pool);
  std::sort(ids.begin(), ids.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(ids, expected);
}

TEST(ExtractTest, ThreeBlobsMatchOracle) {
  ImagePool pool;
  std::mt19937_64 rng(6);
  const std::vector<Embedding> centres{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 12; ++i) {
    Embedding v = centres[i % 3];
    for (double& x : v) x += testing::Uniform(rng, -0.1, 0.1);
    pool.Add({"b" + std::to_string(i), v, "blob " + std::to_string(i % 3) + " item " + std::to_string(i), {}});
  }
  auto shared = std::make_shared<ImagePool>(pool);
  PoolCaptioner captioner(shared);
  const auto out = ExtractRetrievalContext({1, 1, 1}, *shared, 12, 3, captioner, 3);
  std::vector<Embedding> points;
  for (const auto& c : out.candidates.members) points.push_back((*shared)[c.pool_index].embedding);
  // The clustering recovers the blobs.
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      const bool same_blob = out.candidates.members[i].pool_index % 3 == out.candidates.members[j].pool_index % 3;
      EXPECT_EQ(out.context.clusters[i] == out.context.clusters[j], same_blob);
    }
  }
  const auto reps = oracle::Representatives(points, out.context.clusters, 3);
  EXPECT_EQ(out.context.representative_positions, reps);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(out.context.captions[c], (*shared)[out.candidates.members[reps[c]].pool_index].caption);
  }
}

TEST(ExtractTest, SingletonClusterIsItsOwnRepresentative) {
  ImagePool pool;
  pool.Add({"far", {0, 0, 1}, "far", {}});
  pool.Add({"a", {1, 0.01, 0}, "a", {}});
  pool.Add({"b", {1, 0.02, 0}, "b", {}});
  pool.Add({"c", {1, 0.03, 0}, "c", {}});
  auto shared = std::make_shared<ImagePool>(pool);
  PoolCaptioner captioner(shared);
  const auto out = ExtractRetrievalContext({1, 0, 1}, *shared, 4, 2, captioner, 1);
  EXPECT_NE(std::find(out.context.representative_ids.begin(), out.context.representative_ids.end(), "far"),
            out.context.representative_ids.end());
}

TEST(ExtractTest, Errors) {
  std::mt19937_64 rng(7);
  auto pool = std::make_shared<ImagePool>(testing::RandomPool(rng, 10, 4, 2));
  PoolCaptioner captioner(pool);
  const auto q = testing::RandomVector(rng, 4);
  EXPECT_THROW(ExtractRetrievalContext(q, *pool, 3, 4, captioner, 1), InvalidArgument);
  EXPECT_THROW(ExtractRetrievalContext(q, *pool, 3, 0, captioner, 1), InvalidArgument);
  FunctionChat unused([](const ChatRequest&) { return ""; });
  struct Failing : CaptionBackend {
    std::string CaptionImage(const std::string&) override { throw BackendError("down"); }
  } failing;
  EXPECT_THROW(ExtractRetrievalContext(q, *pool, 4, 2, failing, 1), BackendError);
}

TEST(ExtractTest, DeterministicForSeed) {
  std::mt19937_64 rng(8);
  auto pool = std::make_shared<ImagePool>(testing::RandomPool(rng, 60, 5, 5));
  PoolCaptioner captioner(pool);
  const auto q = testing::RandomVector(rng, 5);
  const auto a = ExtractRetrievalContext(q, *pool, 20, 5, captioner, 17);
  const auto b = ExtractRetrievalContext(q, *pool, 20, 5, captioner, 17);
  EXPECT_EQ(a.context.representative_ids, b.context.representative_ids);
  EXPECT_EQ(a.context.clusters, b.context.clusters);
}

}  // namespace
}  // namespace qseek
