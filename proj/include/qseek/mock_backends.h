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

// Deterministic offline backends. Every output is a pure function of the
// constructor arguments and the call inputs.

#ifndef QSEEK_MOCK_BACKENDS_H_
#define QSEEK_MOCK_BACKENDS_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "qseek/backends.h"
#include "qseek/corpus.h"

namespace qseek {

// Delegates every call to a function. Handy in tests.
class FunctionChat : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit FunctionChat(Handler handler) : handler_(std::move(handler)) {}
  std::string Chat(const ChatRequest& request) override;

 private:
  Handler handler_;
};

// Replies looked up by PromptHash, then by a per-task queue that cycles, then
// the fallback backend. Throws BackendError when nothing matches.
class ScriptedChat : public ChatBackend {
 public:
  explicit ScriptedChat(std::shared_ptr<ChatBackend> fallback = nullptr)
      : fallback_(std::move(fallback)) {}

  void AddReply(std::uint64_t prompt_hash, std::string reply);
  void AddTaskReplies(ChatTask task, std::vector<std::string> replies);

  std::string Chat(const ChatRequest& request) override;
  int calls() const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::string> by_hash_;
  std::map<ChatTask, std::vector<std::string>> by_task_;
  std::map<ChatTask, std::size_t> cursor_;
  std::shared_ptr<ChatBackend> fallback_;
  int calls_ = 0;
};

// Template-derived stand-in for a chat model, driven by ChatRequest::task and
// ChatRequest::variables:
//   reformulate        caption + "; " + answers joined with "; "
//   generate question  asks about a content word of the candidate captions
//                      not yet mentioned in the dialogue, picked by seed
//   filter             "uncertain" iff the question names a word absent from
//                      the dialogue, otherwise "yes"
//   generic            echoes the last user message
class HeuristicChat : public ChatBackend {
 public:
  std::string Chat(const ChatRequest& request) override;
};

// Seeded pseudo-random unit vector per distinct string, cached.
class HashEmbedder : public EmbedBackend {
 public:
  HashEmbedder(std::size_t dimension, std::uint64_t seed);
  Embedding EmbedText(const std::string& text) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
  std::mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
};

// Normalized sum of per-word HashEmbedder vectors over the content words of
// the text; texts sharing words land close together. Falls back to the
// whole-string vector when the text has no content words.
class BagOfWordsEmbedder : public EmbedBackend {
 public:
  BagOfWordsEmbedder(std::size_t dimension, std::uint64_t seed)
      : words_(dimension, seed) {}
  Embedding EmbedText(const std::string& text) override;
  std::size_t dimension() const override { return words_.dimension(); }

 private:
  HashEmbedder words_;
};

// Fixed vectors for listed texts, the fallback for everything else.
class ScriptedEmbedder : public EmbedBackend {
 public:
  ScriptedEmbedder(std::shared_ptr<EmbedBackend> fallback,
                   std::map<std::string, Embedding> table);
  Embedding EmbedText(const std::string& text) override;
  std::size_t dimension() const override { return fallback_->dimension(); }

 private:
  std::shared_ptr<EmbedBackend> fallback_;
  std::map<std::string, Embedding> table_;
};

// Returns the caption stored on the pool record.
class PoolCaptioner : public CaptionBackend {
 public:
  explicit PoolCaptioner(std::shared_ptr<const ImagePool> pool)
      : pool_(std::move(pool)) {}
  std::string CaptionImage(const std::string& image_id) override;

 private:
  std::shared_ptr<const ImagePool> pool_;
};

struct AnswerRule {
  std::string target_id;  // "*" matches any target
  std::string question_pattern;  // case-insensitive glob
  std::string answer;
};

// First matching rule wins; otherwise default_answer.
class TableAnswerer : public AnswerBackend {
 public:
  explicit TableAnswerer(std::vector<AnswerRule> rules,
                         std::string default_answer = "I don't know")
      : rules_(std::move(rules)), default_answer_(std::move(default_answer)) {}
  std::string AnswerQuestion(const std::string& question,
                             const std::string& target_image_id) override;

 private:
  std::vector<AnswerRule> rules_;
  std::string default_answer_;
};

// Simulated answerer that reads the target's stored caption: "yes, <word>"
// when the question names a word of the caption, otherwise
// "no, but there is <word>" with a caption word picked by question hash.
class CaptionAnswerer : public AnswerBackend {
 public:
  explicit CaptionAnswerer(std::shared_ptr<const ImagePool> pool)
      : pool_(std::move(pool)) {}
  std::string AnswerQuestion(const std::string& question,
                             const std::string& target_image_id) override;

 private:
  std::shared_ptr<const ImagePool> pool_;
};

}  // namespace qseek

#endif  // QSEEK_MOCK_BACKENDS_H_
