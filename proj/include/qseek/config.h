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

#ifndef QSEEK_CONFIG_H_
#define QSEEK_CONFIG_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qseek/backends.h"
#include "qseek/corpus.h"
#include "qseek/orchestrator.h"
#include "qseek/remote_backends.h"

namespace qseek {

enum class BackendKind { kMock, kRemote };

const char* ToString(BackendKind kind);
// Throws InvalidArgument for anything but "mock" or "remote".
BackendKind ParseBackendKind(const std::string& s);

struct BackendSelection {
  BackendKind chat = BackendKind::kMock;
  BackendKind embed = BackendKind::kMock;
  BackendKind caption = BackendKind::kMock;
  BackendKind answer = BackendKind::kMock;
};

struct RunConfig {
  std::string pool_path;
  std::string dataset_path;
  std::string out_path;
  std::optional<std::string> prompts_dir;

  EpisodeConfig episode;
  std::size_t parallelism = 1;

  BackendSelection backends;
  BackendConfig chat_remote;
  BackendConfig embed_remote;
  BackendConfig caption_remote;
  BackendConfig answer_remote;

  // Offline embedder geometry. A pool embedded with one (dimension, seed)
  // must be searched with the same pair.
  std::size_t mock_dimension = 64;
  std::uint64_t mock_seed = 7;
};

// Backends for a run over pool. Remote embedders take the pool dimension.
Backends MakeBackends(const RunConfig& config, std::shared_ptr<const ImagePool> pool);

std::shared_ptr<EmbedBackend> MakeEmbedder(const RunConfig& config, std::size_t dimension);

PromptLibrary LoadPrompts(const RunConfig& config);

// Everything needed to reproduce a run. Tokens are referenced by variable
// name only.
nlohmann::json ManifestJson(const RunConfig& config);

}  // namespace qseek

#endif  // QSEEK_CONFIG_H_
