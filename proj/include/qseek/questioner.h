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

// The chat-model side of a retrieval round: turning the dialogue into a
// caption-style query, grounding question generation in the current
// retrieval candidates, and choosing one non-redundant question.

#ifndef QSEEK_QUESTIONER_H_
#define QSEEK_QUESTIONER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qseek/backends.h"
#include "qseek/corpus.h"
#include "qseek/numerics.h"
#include "qseek/prompts.h"

namespace qseek {

struct QaPair {
  std::string question;
  std::string answer;

  bool operator==(const QaPair&) const = default;
};

// Initial description plus the question-answer pairs gathered so far.
struct DialogueContext {
  std::string caption;
  std::vector<QaPair> qa_pairs;

  std::size_t round() const { return qa_pairs.size(); }
};

struct ReformulatedQuery {
  std::string text;
  std::size_t source_round = 0;
};

// Captions of the per-cluster representatives, in ascending cluster id.
struct RetrievalContext {
  std::vector<std::string> captions;
  std::vector<std::string> representative_ids;
  // Position of each representative within the candidate set.
  std::vector<std::size_t> representative_positions;
  // Entropy of every candidate's similarity distribution, by position.
  std::vector<double> entropies;
  // Cluster of every candidate, by position.
  std::vector<int> clusters;
};

struct QuestionSet {
  std::vector<std::string> questions;
  // kept[i]: question i survived the redundancy filter. When the filter
  // rejects everything, all questions are marked kept and filter_fallback is
  // set.
  std::vector<bool> kept;
  std::vector<std::string> filter_replies;
  bool filter_fallback = false;
  // KL(p_c || p_{c,q}) for every kept question, NaN otherwise.
  std::vector<double> divergences;
  std::optional<std::size_t> chosen;
};

// "Question: ..." / "Answer: ..." lines, or "(none)" for an empty dialogue.
std::string RenderDialogue(const DialogueContext& context);
// "1. caption" lines.
std::string RenderCandidateCaptions(const std::vector<std::string>& captions);

// Variables available to every template: caption, dialogue, answers (one per
// line).
std::map<std::string, std::string> DialogueVariables(const DialogueContext& context);

ChatRequest BuildReformulationRequest(const DialogueContext& context,
                                      const PromptLibrary& prompts,
                                      const SamplingParams& sampling);

// Caption-style rewrite of the dialogue. Round 0 returns the caption without
// calling the model. Throws BackendError when the model reply is empty.
ReformulatedQuery Reformulate(const DialogueContext& context, ChatBackend& chat,
                              const PromptLibrary& prompts,
                              const SamplingParams& sampling);

// Entropy of softmax(sim(x, x') / temperature) over x' in the candidate set,
// for each candidate x (self term included).
std::vector<double> CandidateEntropies(const CandidateSet& candidates,
                                       const ImagePool& pool, double temperature);

struct ContextExtraction {
  CandidateSet candidates;
  RetrievalContext context;
};

// Top-n candidates for the query, k-means into m clusters, and per cluster
// the member of minimal similarity-distribution entropy (lowest candidate
// position on ties), captioned. Throws InvalidArgument when m == 0, n == 0
// or m exceeds the number of candidates.
ContextExtraction ExtractRetrievalContext(const Embedding& context_embedding,
                                          const ImagePool& pool, std::size_t n,
                                          std::size_t m, CaptionBackend& captioner,
                                          std::uint64_t seed,
                                          double temperature = 1.0,
                                          const KMeansOptions& kmeans = {});

ChatRequest BuildQuestionRequest(const DialogueContext& context,
                                 const RetrievalContext& retrieval_context,
                                 const PromptLibrary& prompts,
                                 const SamplingParams& sampling,
                                 std::int64_t seed);

// Extracts the question from a model reply: the text after the last
// "Question:" marker, else the last non-empty line. Surrounding quotes and a
// trailing period are dropped and a "?" is appended when missing. Returns
// nullopt when nothing is left.
std::optional<std::string> NormalizeQuestion(const std::string& reply);

// k samples from the chat model, seeds seed..seed+k-1. Unparseable samples
// are dropped. Throws BackendError when none parse, InvalidArgument when the
// retrieval context is empty or k == 0.
QuestionSet GenerateQuestions(const DialogueContext& context,
                              const RetrievalContext& retrieval_context,
                              std::size_t k, ChatBackend& chat,
                              const PromptLibrary& prompts,
                              const SamplingParams& sampling, std::int64_t seed);

ChatRequest BuildFilterRequest(const DialogueContext& context,
                               const std::string& question,
                               const PromptLibrary& prompts,
                               const SamplingParams& sampling);

// True iff the trimmed, lowercased reply contains "uncertain".
bool IsUncertain(const std::string& reply);

// softmax over cosine(embedding, candidate) for every candidate, carrying
// candidate ids.
SimilarityDistribution CandidateDistribution(const Embedding& embedding,
                                             const CandidateSet& candidates,
                                             const ImagePool& pool,
                                             double temperature);

// Stage 1 keeps questions the chat model cannot answer from the dialogue.
// Stage 2 embeds reformulated_text + " " + question for each kept question
// and picks argmin KL(p_c || p_{c,q}), lowest index on ties. Fills kept,
// filter_replies, divergences and chosen on the returned copy. Throws
// InvalidArgument on an empty question list.
QuestionSet FilterQuestions(const DialogueContext& context,
                            const std::string& reformulated_text,
                            const Embedding& context_embedding,
                            QuestionSet questions, const CandidateSet& candidates,
                            const ImagePool& pool, ChatBackend& chat,
                            EmbedBackend& embedder, const PromptLibrary& prompts,
                            const SamplingParams& sampling, double temperature = 1.0);

}  // namespace qseek

#endif  // QSEEK_QUESTIONER_H_
