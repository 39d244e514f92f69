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

// Model roles consumed by the retrieval loop. Implementations must be safe
// for concurrent calls from several episodes.

#ifndef QSEEK_BACKENDS_H_
#define QSEEK_BACKENDS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qseek/numerics.h"

namespace qseek {

enum class ChatRole { kSystem, kUser, kAssistant };

const char* ToString(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// What a chat call is for. Not sent over the wire; lets offline backends
// answer each prompt family deterministically.
enum class ChatTask { kGeneric, kReformulate, kGenerateQuestion, kFilter };

struct SamplingParams {
  double temperature = 0.0;
  int max_output_tokens = 256;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 256;
  std::optional<std::int64_t> seed;

  ChatTask task = ChatTask::kGeneric;
  // Template variables the prompt was rendered from. Local metadata only.
  std::map<std::string, std::string> variables;
};

// Stable 64-bit digest of the message roles and contents.
std::uint64_t PromptHash(const ChatRequest& request);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Throws InvalidArgument on an empty message list, BackendError (or
  // TransportError) on failure.
  virtual std::string Chat(const ChatRequest& request) = 0;
};

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  // Unit L2-norm vector of fixed dimension.
  virtual Embedding EmbedText(const std::string& text) = 0;
  virtual std::size_t dimension() const = 0;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  // Non-empty caption. Throws NotFound for an unknown id.
  virtual std::string CaptionImage(const std::string& image_id) = 0;
};

class AnswerBackend {
 public:
  virtual ~AnswerBackend() = default;
  virtual std::string AnswerQuestion(const std::string& question,
                                     const std::string& target_image_id) = 0;
};

struct Backends {
  std::shared_ptr<ChatBackend> chat;
  std::shared_ptr<EmbedBackend> embed;
  std::shared_ptr<CaptionBackend> caption;
  std::shared_ptr<AnswerBackend> answer;
};

// Sampling parameters for each chat use in the loop.
struct ChatSampling {
  SamplingParams question_generation{0.7, 32};
  SamplingParams reformulation{0.0, 512};
  SamplingParams filtering{0.0, 10};
};

}  // namespace qseek

#endif  // QSEEK_BACKENDS_H_
