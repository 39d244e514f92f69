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
#include <limits>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

namespace {

ChatRequest MakeRequest(ChatTask task, const PromptTemplate& prompt,
                        std::map<std::string, std::string> variables,
                        const SamplingParams& sampling) {
  ChatRequest request;
  request.messages = prompt.Render(variables);
  request.temperature = sampling.temperature;
  request.max_output_tokens = sampling.max_output_tokens;
  request.task = task;
  request.variables = std::move(variables);
  return request;
}

std::string StripQuotes(std::string s) {
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                           (s.front() == '\'' && s.back() == '\''))) {
    s = text::Trim(s.substr(1, s.size() - 2));
  }
  return s;
}

}  // namespace

std::string RenderDialogue(const DialogueContext& context) {
  if (context.qa_pairs.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < context.qa_pairs.size(); ++i) {
    if (i > 0) out += '\n';
    out += "Question: " + context.qa_pairs[i].question + "\n";
    out += "Answer: " + context.qa_pairs[i].answer;
  }
  return out;
}

std::string RenderCandidateCaptions(const std::vector<std::string>& captions) {
  std::string out;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    if (i > 0) out += '\n';
    out += std::to_string(i + 1) + ". " + captions[i];
  }
  return out;
}

std::map<std::string, std::string> DialogueVariables(const DialogueContext& context) {
  std::string answers;
  for (std::size_t i = 0; i < context.qa_pairs.size(); ++i) {
    if (i > 0) answers += '\n';
    answers += context.qa_pairs[i].answer;
  }
  return {{"caption", context.caption},
          {"dialogue", RenderDialogue(context)},
          {"answers", answers}};
}

ChatRequest BuildReformulationRequest(const DialogueContext& context,
                                      const PromptLibrary& prompts,
                                      const SamplingParams& sampling) {
  return MakeRequest(ChatTask::kReformulate, prompts.reformulate,
                     DialogueVariables(context), sampling);
}

ReformulatedQuery Reformulate(const DialogueContext& context, ChatBackend& chat,
                              const PromptLibrary& prompts,
                              const SamplingParams& sampling) {
  if (text::Trim(context.caption).empty()) {
    throw InvalidArgument("dialogue caption must not be empty");
  }
  if (context.round() == 0) return {context.caption, 0};
  std::string reply =
      text::Trim(chat.Chat(BuildReformulationRequest(context, prompts, sampling)));
  if (reply.empty()) throw BackendError("reformulation returned an empty reply");
  return {std::move(reply), context.round()};
}

std::vector<double> CandidateEntropies(const CandidateSet& candidates,
                                       const ImagePool& pool, double temperature) {
  const std::size_t n = candidates.size();
  std::vector<double> entropies(n);
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Embedding& xi = pool[candidates.members[i].pool_index].embedding;
    for (std::size_t j = 0; j < n; ++j) {
      sims[j] = CosineSimilarity(xi, pool[candidates.members[j].pool_index].embedding);
    }
    entropies[i] = Entropy(Softmax(sims, temperature));
  }
  return entropies;
}

ContextExtraction ExtractRetrievalContext(const Embedding& context_embedding,
                                          const ImagePool& pool, std::size_t n,
                                          std::size_t m, CaptionBackend& captioner,
                                          std::uint64_t seed, double temperature,
                                          const KMeansOptions& kmeans) {
  if (m == 0) throw InvalidArgument("cluster count must be positive");
  if (m > n) {
    throw InvalidArgument("cluster count " + std::to_string(m) +
                          " exceeds candidate count " + std::to_string(n));
  }
  ContextExtraction out;
  out.candidates = TopNCandidates(context_embedding, pool, n);
  const CandidateSet& candidates = out.candidates;
  if (m > candidates.size()) {
    throw InvalidArgument("cluster count exceeds the number of candidates");
  }

  std::vector<Embedding> points;
  points.reserve(candidates.size());
  for (const auto& c : candidates.members) points.push_back(pool[c.pool_index].embedding);
  const KMeansResult clusters = KMeans(points, m, seed, kmeans);

  RetrievalContext& rc = out.context;
  rc.entropies = CandidateEntropies(candidates, pool, temperature);
  rc.clusters = clusters.assignment;
  for (std::size_t cluster = 0; cluster < m; ++cluster) {
    std::size_t best = candidates.size();
    double best_h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (static_cast<std::size_t>(rc.clusters[i]) != cluster) continue;
      if (best == candidates.size() || rc.entropies[i] < best_h) {
        best = i;
        best_h = rc.entropies[i];
      }
    }
    const std::string& id = pool[candidates.members[best].pool_index].id;
    std::string caption = text::Trim(captioner.CaptionImage(id));
    if (caption.empty()) throw BackendError("captioner returned an empty caption for '" + id + "'");
    rc.representative_positions.push_back(best);
    rc.representative_ids.push_back(id);
    rc.captions.push_back(std::move(caption));
  }
  return out;
}

ChatRequest BuildQuestionRequest(const DialogueContext& context,
                                 const RetrievalContext& retrieval_context,
                                 const PromptLibrary& prompts,
                                 const SamplingParams& sampling,
                                 std::int64_t seed) {
  auto variables = DialogueVariables(context);
  variables["candidate_captions"] = RenderCandidateCaptions(retrieval_context.captions);
  ChatRequest request = MakeRequest(ChatTask::kGenerateQuestion,
                                    prompts.question_generation,
                                    std::move(variables), sampling);
  request.seed = seed;
  return request;
}

std::optional<std::string> NormalizeQuestion(const std::string& reply) {
  const std::string lower = text::ToLower(reply);
  std::string q;
  if (const std::size_t marker = lower.rfind("question:"); marker != std::string::npos) {
    q = reply.substr(marker + 9);
    if (const std::size_t eol = q.find('\n'); eol != std::string::npos) q.resize(eol);
  } else {
    std::size_t end = reply.size();
    while (end > 0) {
      const std::size_t start = reply.rfind('\n', end - 1);
      const std::size_t from = start == std::string::npos ? 0 : start + 1;
      std::string line = text::Trim(reply.substr(from, end - from));
      if (!line.empty()) {
        q = std::move(line);
        break;
      }
      if (start == std::string::npos) break;
      end = start;
    }
  }
  q = StripQuotes(text::Trim(q));
  while (!q.empty() && q.back() == '.') q.pop_back();
  q = text::Trim(q);
  if (q.empty() || q == "?") return std::nullopt;
  if (q.back() != '?') q.push_back('?');
  return q;
}

QuestionSet GenerateQuestions(const DialogueContext& context,
                              const RetrievalContext& retrieval_context,
                              std::size_t k, ChatBackend& chat,
                              const PromptLibrary& prompts,
                              const SamplingParams& sampling, std::int64_t seed) {
  if (retrieval_context.captions.empty()) {
    throw InvalidArgument("question generation needs a non-empty retrieval context");
  }
  if (k == 0) throw InvalidArgument("question count must be positive");
  QuestionSet out;
  for (std::size_t i = 0; i < k; ++i) {
    const std::string reply = chat.Chat(BuildQuestionRequest(
        context, retrieval_context, prompts, sampling, seed + static_cast<std::int64_t>(i)));
    if (auto q = NormalizeQuestion(reply)) out.questions.push_back(std::move(*q));
  }
  if (out.questions.empty()) {
    throw BackendError("no parseable question after " + std::to_string(k) + " attempts");
  }
  return out;
}

ChatRequest BuildFilterRequest(const DialogueContext& context,
                               const std::string& question,
                               const PromptLibrary& prompts,
                               const SamplingParams& sampling) {
  auto variables = DialogueVariables(context);
  variables["question"] = question;
  return MakeRequest(ChatTask::kFilter, prompts.filter, std::move(variables), sampling);
}

bool IsUncertain(const std::string& reply) {
  return text::ToLower(text::Trim(reply)).find("uncertain") != std::string::npos;
}

SimilarityDistribution CandidateDistribution(const Embedding& embedding,
                                             const CandidateSet& candidates,
                                             const ImagePool& pool,
                                             double temperature) {
  std::vector<double> sims;
  sims.reserve(candidates.size());
  for (const auto& c : candidates.members) {
    sims.push_back(CosineSimilarity(embedding, pool[c.pool_index].embedding));
  }
  SimilarityDistribution p = Softmax(sims, temperature);
  p.candidate_ids = candidates.ids(pool);
  return p;
}

QuestionSet FilterQuestions(const DialogueContext& context,
                            const std::string& reformulated_text,
                            const Embedding& context_embedding,
                            QuestionSet questions, const CandidateSet& candidates,
                            const ImagePool& pool, ChatBackend& chat,
                            EmbedBackend& embedder, const PromptLibrary& prompts,
                            const SamplingParams& sampling, double temperature) {
  const std::size_t count = questions.questions.size();
  if (count == 0) throw InvalidArgument("no questions to filter");

  questions.kept.assign(count, false);
  questions.filter_replies.assign(count, "");
  questions.filter_fallback = false;
  bool any_kept = false;
  for (std::size_t i = 0; i < count; ++i) {
    questions.filter_replies[i] =
        chat.Chat(BuildFilterRequest(context, questions.questions[i], prompts, sampling));
    questions.kept[i] = IsUncertain(questions.filter_replies[i]);
    any_kept = any_kept || questions.kept[i];
  }
  if (!any_kept) {
    questions.kept.assign(count, true);
    questions.filter_fallback = true;
  }

  const SimilarityDistribution p_c =
      CandidateDistribution(context_embedding, candidates, pool, temperature);
  questions.divergences.assign(count, std::numeric_limits<double>::quiet_NaN());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < count; ++i) {
    if (!questions.kept[i]) continue;
    const Embedding e = embedder.EmbedText(reformulated_text + " " + questions.questions[i]);
    const double d = KlDivergence(p_c, CandidateDistribution(e, candidates, pool, temperature));
    questions.divergences[i] = d;
    if (!best || d < questions.divergences[*best]) best = i;
  }
  questions.chosen = best;
  return questions;
}

}  // namespace qseek
