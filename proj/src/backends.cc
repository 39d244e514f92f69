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

#include "qseek/backends.h"

#include "qseek/text.h"

namespace qseek {

const char* ToString(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem:
      return "system";
    case ChatRole::kUser:
      return "user";
    case ChatRole::kAssistant:
      return "assistant";
  }
  return "user";
}

std::uint64_t PromptHash(const ChatRequest& request) {
  std::uint64_t h = text::Fnv1a("");
  for (const auto& m : request.messages) {
    h = text::Fnv1a(ToString(m.role), h);
    h = text::Fnv1a(std::string_view("\x1f", 1), h);
    h = text::Fnv1a(m.content, h);
    h = text::Fnv1a(std::string_view("\x1e", 1), h);
  }
  return h;
}

}  // namespace qseek
