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

#include "qseek/config.h"

#include "qseek/error.h"
#include "qseek/mock_backends.h"

namespace qseek {

using nlohmann::json;

namespace {

json BackendJson(BackendKind kind, const BackendConfig& c) {
  json j = {{"kind", ToString(kind)}};
  if (kind == BackendKind::kRemote) {
    j["endpoint"] = c.endpoint;
    j["model"] = c.model;
    j["token_env"] = c.token_env;
    j["timeout_ms"] = c.timeout.count();
    j["retries"] = c.retry.retries;
    j["backoff_ms"] = c.retry.backoff.count();
  }
  return j;
}

json SamplingJson(const SamplingParams& p) {
  return {{"temperature", p.temperature}, {"max_output_tokens", p.max_output_tokens}};
}

}  // namespace

const char* ToString(BackendKind kind) {
  return kind == BackendKind::kMock ? "mock" : "remote";
}

BackendKind ParseBackendKind(const std::string& s) {
  if (s == "mock") return BackendKind::kMock;
  if (s == "remote") return BackendKind::kRemote;
  throw InvalidArgument("backend must be 'mock' or 'remote', got '" + s + "'");
}

std::shared_ptr<EmbedBackend> MakeEmbedder(const RunConfig& config, std::size_t dimension) {
  if (config.backends.embed == BackendKind::kRemote) {
    return std::make_shared<RemoteEmbedder>(config.embed_remote, dimension);
  }
  return std::make_shared<BagOfWordsEmbedder>(dimension, config.mock_seed);
}

Backends MakeBackends(const RunConfig& config, std::shared_ptr<const ImagePool> pool) {
  Backends b;
  if (config.backends.chat == BackendKind::kRemote) {
    b.chat = std::make_shared<RemoteChat>(config.chat_remote);
  } else {
    b.chat = std::make_shared<HeuristicChat>();
  }
  const std::size_t dim = pool->empty() ? config.mock_dimension : pool->dimension();
  b.embed = MakeEmbedder(config, dim);
  if (config.backends.caption == BackendKind::kRemote) {
    b.caption = std::make_shared<RemoteCaptioner>(config.caption_remote, pool);
  } else {
    b.caption = std::make_shared<PoolCaptioner>(pool);
  }
  if (config.backends.answer == BackendKind::kRemote) {
    b.answer = std::make_shared<RemoteAnswerer>(config.answer_remote, pool);
  } else {
    b.answer = std::make_shared<CaptionAnswerer>(pool);
  }
  return b;
}

PromptLibrary LoadPrompts(const RunConfig& config) {
  return config.prompts_dir ? PromptLibrary::FromDirectory(*config.prompts_dir)
                            : PromptLibrary::Builtin();
}

json ManifestJson(const RunConfig& config) {
  const EpisodeConfig& e = config.episode;
  return {
      {"pool", config.pool_path},
      {"dataset", config.dataset_path},
      {"out", config.out_path},
      {"prompts_dir", config.prompts_dir ? json(*config.prompts_dir) : json(nullptr)},
      {"precedence", "flags > config file > environment > defaults"},
      {"episode",
       {{"max_rounds", e.max_rounds},
        {"n", e.n ? json(*e.n) : json("auto")},
        {"m", e.m},
        {"k", e.k},
        {"questions_per_round", e.questions_per_round},
        {"seed", e.seed},
        {"early_stop", e.early_stop},
        {"softmax_temperature", e.softmax_temperature},
        {"trace", e.trace},
        {"kmeans_restarts", e.kmeans.restarts},
        {"kmeans_max_iterations", e.kmeans.max_iterations},
        {"sampling",
         {{"question_generation", SamplingJson(e.sampling.question_generation)},
          {"reformulation", SamplingJson(e.sampling.reformulation)},
          {"filtering", SamplingJson(e.sampling.filtering)}}}}},
      {"parallelism", config.parallelism},
      {"backends",
       {{"chat", BackendJson(config.backends.chat, config.chat_remote)},
        {"embed", BackendJson(config.backends.embed, config.embed_remote)},
        {"caption", BackendJson(config.backends.caption, config.caption_remote)},
        {"answer", BackendJson(config.backends.answer, config.answer_remote)}}},
      {"mock", {{"dimension", config.mock_dimension}, {"seed", config.mock_seed}}}};
}

}  // namespace qseek
