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

#include "qseek/mock_backends.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

namespace {

std::string Variable(const ChatRequest& request, const std::string& key) {
  auto it = request.variables.find(key);
  return it == request.variables.end() ? std::string() : it->second;
}

std::set<std::string> WordSet(const std::string& s) {
  auto words = text::ContentWords(s);
  return {words.begin(), words.end()};
}

std::vector<std::string> Lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find('\n', start);
    std::string line = text::Trim(
        s.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (!line.empty()) out.push_back(std::move(line));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string Join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string FunctionChat::Chat(const ChatRequest& request) {
  if (request.messages.empty()) throw InvalidArgument("chat request has no messages");
  return handler_(request);
}

void ScriptedChat::AddReply(std::uint64_t prompt_hash, std::string reply) {
  std::lock_guard<std::mutex> lock(mu_);
  by_hash_[prompt_hash] = std::move(reply);
}

void ScriptedChat::AddTaskReplies(ChatTask task,
                                  std::vector<std::string> replies) {
  std::lock_guard<std::mutex> lock(mu_);
  by_task_[task] = std::move(replies);
  cursor_[task] = 0;
}

int ScriptedChat::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::string ScriptedChat::Chat(const ChatRequest& request) {
  if (request.messages.empty()) throw InvalidArgument("chat request has no messages");
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    if (auto it = by_hash_.find(PromptHash(request)); it != by_hash_.end()) {
      return it->second;
    }
    if (auto it = by_task_.find(request.task);
        it != by_task_.end() && !it->second.empty()) {
      std::size_t& cursor = cursor_[request.task];
      const std::string& reply = it->second[cursor % it->second.size()];
      ++cursor;
      return reply;
    }
  }
  if (fallback_) return fallback_->Chat(request);
  throw BackendError("scripted chat has no reply for this prompt");
}

std::string HeuristicChat::Chat(const ChatRequest& request) {
  if (request.messages.empty()) throw InvalidArgument("chat request has no messages");
  switch (request.task) {
    case ChatTask::kReformulate: {
      std::vector<std::string> parts{Variable(request, "caption")};
      for (auto& a : Lines(Variable(request, "answers"))) parts.push_back(a);
      return Join(parts, "; ");
    }
    case ChatTask::kGenerateQuestion: {
      const auto known = WordSet(Variable(request, "caption") + "\n" +
                                 Variable(request, "dialogue"));
      std::vector<std::string> fresh;
      for (auto& w : text::ContentWords(Variable(request, "candidate_captions"))) {
        if (!known.contains(w) &&
            std::find(fresh.begin(), fresh.end(), w) == fresh.end()) {
          fresh.push_back(w);
        }
      }
      if (fresh.empty()) {
        return "Every candidate matches. Question: what else can you see in the picture";
      }
      const auto seed = static_cast<std::uint64_t>(request.seed.value_or(0));
      const std::string& word = fresh[text::Mix64(seed) % fresh.size()];
      return "The candidates differ in whether they show " + word +
             ". Question: is there any " + word + " in the picture";
    }
    case ChatTask::kFilter: {
      const auto known = WordSet(Variable(request, "caption") + "\n" +
                                 Variable(request, "dialogue"));
      for (auto& w : text::ContentWords(Variable(request, "question"))) {
        if (!known.contains(w)) return "Uncertain";
      }
      return "Yes";
    }
    case ChatTask::kGeneric:
      break;
  }
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == ChatRole::kUser) return it->content;
  }
  return request.messages.back().content;
}

HashEmbedder::HashEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension == 0) throw InvalidArgument("embedding dimension must be positive");
}

Embedding HashEmbedder::EmbedText(const std::string& text) {
  if (text.empty()) throw InvalidArgument("cannot embed empty text");
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(text); it != cache_.end()) return it->second;
  }
  std::mt19937_64 rng(text::Mix64(seed_ ^ text::Fnv1a(text)));
  auto uniform = [&rng] {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  Embedding v(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    // Box-Muller, cosine branch only.
    v[i] = std::sqrt(-2.0 * std::log(uniform())) *
           std::cos(2.0 * std::numbers::pi * uniform());
  }
  v = Normalized(v);
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(text, std::move(v)).first->second;
}

Embedding BagOfWordsEmbedder::EmbedText(const std::string& text) {
  if (text.empty()) throw InvalidArgument("cannot embed empty text");
  const auto words = text::ContentWords(text);
  if (words.empty()) return words_.EmbedText(text::ToLower(text));
  Embedding sum(dimension(), 0.0);
  for (const auto& w : words) {
    const Embedding v = words_.EmbedText(w);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  return Normalized(sum);
}

ScriptedEmbedder::ScriptedEmbedder(std::shared_ptr<EmbedBackend> fallback,
                                   std::map<std::string, Embedding> table)
    : fallback_(std::move(fallback)) {
  for (auto& [text, v] : table) {
    if (v.size() != fallback_->dimension()) {
      throw InvalidArgument("scripted embedding for '" + text +
                            "' has the wrong dimension");
    }
    table_.emplace(text, Normalized(v));
  }
}

Embedding ScriptedEmbedder::EmbedText(const std::string& text) {
  if (auto it = table_.find(text); it != table_.end()) return it->second;
  return fallback_->EmbedText(text);
}

std::string PoolCaptioner::CaptionImage(const std::string& image_id) {
  const ImageRecord& record = pool_->At(image_id);
  if (!record.caption || text::Trim(*record.caption).empty()) {
    throw BackendError("image '" + image_id + "' has no stored caption");
  }
  return *record.caption;
}

std::string TableAnswerer::AnswerQuestion(const std::string& question,
                                          const std::string& target_image_id) {
  for (const auto& rule : rules_) {
    if ((rule.target_id == "*" || rule.target_id == target_image_id) &&
        text::GlobMatch(rule.question_pattern, question)) {
      return rule.answer;
    }
  }
  return default_answer_;
}

std::string CaptionAnswerer::AnswerQuestion(const std::string& question,
                                            const std::string& target_image_id) {
  const ImageRecord& target = pool_->At(target_image_id);
  const auto caption_words = text::ContentWords(target.caption.value_or(""));
  if (caption_words.empty()) return "I don't know";
  const auto asked = text::ContentWords(question);
  for (const auto& w : asked) {
    if (std::find(caption_words.begin(), caption_words.end(), w) !=
        caption_words.end()) {
      return "yes, " + w;
    }
  }
  const std::string& hint =
      caption_words[text::Mix64(text::Fnv1a(question)) % caption_words.size()];
  return "no, but there is " + hint;
}

}  // namespace qseek
