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

#ifndef QSEEK_PROMPTS_H_
#define QSEEK_PROMPTS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qseek/backends.h"

namespace qseek {

// Chat prompt template. Text format: optional leading '#' comment lines,
// then message blocks introduced by a line "[system]", "[user]" or
// "[assistant]". Placeholders are written {name}; unknown names are left in
// place.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  // Throws ParseError when there is no message block, or text appears before
  // the first block marker.
  static PromptTemplate Parse(std::string_view source);

  std::vector<ChatMessage> Render(
      const std::map<std::string, std::string>& variables) const;

  const std::vector<ChatMessage>& blocks() const { return blocks_; }

 private:
  std::vector<ChatMessage> blocks_;
};

struct PromptLibrary {
  PromptTemplate reformulate;
  PromptTemplate question_generation;
  PromptTemplate filter;

  // Templates compiled into the binary from assets/prompts.
  static const PromptLibrary& Builtin();
  // Builtin templates, overridden by reformulate.txt, question_cot.txt and
  // filter.txt found in dir.
  static PromptLibrary FromDirectory(const std::string& dir);
};

// Raw text of the compiled-in template files, keyed by file name.
const std::map<std::string, std::string>& BuiltinPromptSources();

}  // namespace qseek

#endif  // QSEEK_PROMPTS_H_
