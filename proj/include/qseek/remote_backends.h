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

// HTTP clients for hosted models. Chat speaks the chat-completions JSON shape;
// the other roles are plain JSON POSTs:
//   embed    {"text"}                 -> {"embedding": [num...]}
//   caption  {"image_uri"}            -> {"caption": str}
//   answer   {"question","image_uri"} -> {"answer": str}

#ifndef QSEEK_REMOTE_BACKENDS_H_
#define QSEEK_REMOTE_BACKENDS_H_

#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "qseek/backends.h"
#include "qseek/corpus.h"

namespace qseek {

struct RetryPolicy {
  int retries = 2;  // attempts = retries + 1
  std::chrono::milliseconds backoff{200};
  double backoff_multiplier = 2.0;
};

struct BackendConfig {
  // Full URL of the endpoint, e.g. "https://api.example.com/v1/chat/completions".
  std::string endpoint;
  // Name of the environment variable holding the bearer token. The token
  // itself never leaves the request headers.
  std::string token_env;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

// Throws InvalidArgument when timeout <= 0, retries < 0 or the endpoint is
// not an http(s) URL.
void ValidateBackendConfig(const BackendConfig& config);

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/chat", "/" when absent
};

ParsedUrl ParseUrl(const std::string& url);

// POSTs a JSON body with the retry policy. Retries connection failures,
// 429, 5xx and unparseable bodies; other statuses fail immediately. Throws
// TransportError once attempts are exhausted.
class JsonPoster {
 public:
  explicit JsonPoster(BackendConfig config);
  nlohmann::json Post(const nlohmann::json& body) const;
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  ParsedUrl url_;
};

class RemoteChat : public ChatBackend {
 public:
  explicit RemoteChat(BackendConfig config) : poster_(std::move(config)) {}
  std::string Chat(const ChatRequest& request) override;

  // Wire body for a request; exposed for tests.
  nlohmann::json RequestBody(const ChatRequest& request) const;

 private:
  JsonPoster poster_;
};

class RemoteEmbedder : public EmbedBackend {
 public:
  RemoteEmbedder(BackendConfig config, std::size_t dimension)
      : poster_(std::move(config)), dimension_(dimension) {}
  Embedding EmbedText(const std::string& text) override;
  std::size_t dimension() const override { return dimension_; }

 private:
  JsonPoster poster_;
  std::size_t dimension_;
};

// Image references are resolved through the pool: image_uri when present,
// else the id itself.
class RemoteCaptioner : public CaptionBackend {
 public:
  RemoteCaptioner(BackendConfig config, std::shared_ptr<const ImagePool> pool)
      : poster_(std::move(config)), pool_(std::move(pool)) {}
  std::string CaptionImage(const std::string& image_id) override;

 private:
  JsonPoster poster_;
  std::shared_ptr<const ImagePool> pool_;
};

class RemoteAnswerer : public AnswerBackend {
 public:
  RemoteAnswerer(BackendConfig config, std::shared_ptr<const ImagePool> pool)
      : poster_(std::move(config)), pool_(std::move(pool)) {}
  std::string AnswerQuestion(const std::string& question,
                             const std::string& target_image_id) override;

 private:
  JsonPoster poster_;
  std::shared_ptr<const ImagePool> pool_;
};

}  // namespace qseek

#endif  // QSEEK_REMOTE_BACKENDS_H_
