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

#include "qseek/remote_backends.h"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

using nlohmann::json;

namespace {

bool Retryable(int status) { return status == 0 || status == 429 || status >= 500; }

std::string ImageReference(const ImagePool& pool, const std::string& id) {
  const ImageRecord& r = pool.At(id);
  return r.image_uri.value_or(r.id);
}

}  // namespace

void ValidateBackendConfig(const BackendConfig& config) {
  if (config.timeout.count() <= 0) throw InvalidArgument("backend timeout must be positive");
  if (config.retry.retries < 0) throw InvalidArgument("backend retries must be >= 0");
  ParseUrl(config.endpoint);
}

ParsedUrl ParseUrl(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("endpoint '" + url + "' is not a URL");
  }
  const std::string scheme = text::ToLower(url.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("endpoint scheme must be http or https");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.scheme_host_port.size() <= scheme_end + 3) {
    throw InvalidArgument("endpoint '" + url + "' has no host");
  }
  return out;
}

JsonPoster::JsonPoster(BackendConfig config) : config_(std::move(config)) {
  ValidateBackendConfig(config_);
  url_ = ParseUrl(config_.endpoint);
}

json JsonPoster::Post(const json& body) const {
  httplib::Client client(url_.scheme_host_port);
  const auto timeout = config_.timeout;
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    if (const char* token = std::getenv(config_.token_env.c_str());
        token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  const std::string payload = body.dump();
  const int attempts = config_.retry.retries + 1;
  auto delay = config_.retry.backoff;
  int last_status = 0;
  std::string last_reason = "no attempt made";
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(delay.count()) * config_.retry.backoff_multiplier));
    }
    auto result = client.Post(url_.path, headers, payload, "application/json");
    if (!result) {
      last_status = 0;
      last_reason = "request to " + url_.scheme_host_port + " failed: " +
                    httplib::to_string(result.error());
      continue;
    }
    last_status = result->status;
    if (result->status >= 200 && result->status < 300) {
      try {
        return json::parse(result->body);
      } catch (const json::exception&) {
        last_reason = "malformed JSON reply from " + url_.scheme_host_port;
        continue;
      }
    }
    last_reason = "HTTP error from " + url_.scheme_host_port;
    if (!Retryable(result->status)) throw TransportError(last_reason, last_status, attempt);
  }
  throw TransportError(last_reason, last_status, attempts);
}

json RemoteChat::RequestBody(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", ToString(m.role)}, {"content", m.content}});
  }
  json body = {{"model", poster_.config().model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::string RemoteChat::Chat(const ChatRequest& request) {
  if (request.messages.empty()) throw InvalidArgument("chat request has no messages");
  const json reply = poster_.Post(RequestBody(request));
  try {
    const json& content = reply.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return "";
    return text::Trim(content.get<std::string>());
  } catch (const json::exception&) {
    throw TransportError("chat reply has no choices[0].message.content", 200, 1);
  }
}

Embedding RemoteEmbedder::EmbedText(const std::string& text) {
  if (text.empty()) throw InvalidArgument("cannot embed empty text");
  const json reply = poster_.Post({{"text", text}});
  Embedding v;
  try {
    v = reply.at("embedding").get<Embedding>();
  } catch (const json::exception&) {
    throw TransportError("embedding reply has no numeric 'embedding' array", 200, 1);
  }
  if (v.size() != dimension_) {
    throw BackendError("embedder returned dimension " + std::to_string(v.size()) +
                       ", expected " + std::to_string(dimension_));
  }
  return Normalized(v);
}

std::string RemoteCaptioner::CaptionImage(const std::string& image_id) {
  const json reply = poster_.Post({{"image_uri", ImageReference(*pool_, image_id)}});
  std::string caption;
  try {
    caption = text::Trim(reply.at("caption").get<std::string>());
  } catch (const json::exception&) {
    throw TransportError("caption reply has no 'caption' string", 200, 1);
  }
  if (caption.empty()) throw BackendError("captioner returned an empty caption");
  return caption;
}

std::string RemoteAnswerer::AnswerQuestion(const std::string& question,
                                           const std::string& target_image_id) {
  const json reply = poster_.Post(
      {{"question", question}, {"image_uri", ImageReference(*pool_, target_image_id)}});
  try {
    return text::Trim(reply.at("answer").get<std::string>());
  } catch (const json::exception&) {
    throw TransportError("answer reply has no 'answer' string", 200, 1);
  }
}

}  // namespace qseek
