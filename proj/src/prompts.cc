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

#include "qseek/prompts.h"

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const PromptTemplate& Source(const char* name) {
  static const std::map<std::string, PromptTemplate>* parsed = [] {
    auto* m = new std::map<std::string, PromptTemplate>;
    for (const auto& [file, source] : BuiltinPromptSources()) {
      m->emplace(file, PromptTemplate::Parse(source));
    }
    return m;
  }();
  return parsed->at(name);
}

}  // namespace

PromptTemplate PromptTemplate::Parse(std::string_view source) {
  PromptTemplate out;
  std::istringstream in{std::string(source)};
  std::string line;
  std::size_t line_no = 0;
  bool in_header = true;
  std::vector<std::string> body;
  auto flush = [&] {
    if (out.blocks_.empty()) return;
    std::string content;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i > 0) content += '\n';
      content += body[i];
    }
    while (!content.empty() && (content.back() == '\n' || content.back() == ' ')) {
      content.pop_back();
    }
    out.blocks_.back().content = std::move(content);
    body.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::optional<ChatRole> role;
    if (line == "[system]") role = ChatRole::kSystem;
    if (line == "[user]") role = ChatRole::kUser;
    if (line == "[assistant]") role = ChatRole::kAssistant;
    if (role) {
      flush();
      in_header = false;
      out.blocks_.push_back({*role, ""});
      continue;
    }
    if (in_header) {
      if (line.empty() || line[0] == '#') continue;
      throw ParseError("prompt text before the first message marker", line_no);
    }
    body.push_back(line);
  }
  flush();
  if (out.blocks_.empty()) throw ParseError("prompt template has no messages", 0);
  return out;
}

std::vector<ChatMessage> PromptTemplate::Render(
    const std::map<std::string, std::string>& variables) const {
  std::vector<ChatMessage> messages = blocks_;
  for (auto& m : messages) {
    // Single pass over the template so substituted values are never
    // themselves expanded.
    std::string rendered;
    const std::string& src = m.content;
    std::size_t i = 0;
    while (i < src.size()) {
      if (src[i] == '{') {
        const std::size_t close = src.find('}', i + 1);
        if (close != std::string::npos) {
          auto it = variables.find(src.substr(i + 1, close - i - 1));
          if (it != variables.end()) {
            rendered += it->second;
            i = close + 1;
            continue;
          }
        }
      }
      rendered += src[i++];
    }
    m.content = std::move(rendered);
  }
  return messages;
}

const PromptLibrary& PromptLibrary::Builtin() {
  static const PromptLibrary* library = new PromptLibrary{
      Source("reformulate.txt"), Source("question_cot.txt"), Source("filter.txt")};
  return *library;
}

PromptLibrary PromptLibrary::FromDirectory(const std::string& dir) {
  PromptLibrary library = Builtin();
  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) {
    throw NotFound("prompt directory '" + dir + "' does not exist");
  }
  auto load = [&](const char* name, PromptTemplate& slot) {
    const auto path = root / name;
    if (std::filesystem::exists(path)) slot = PromptTemplate::Parse(ReadFile(path));
  };
  load("reformulate.txt", library.reformulate);
  load("question_cot.txt", library.question_generation);
  load("filter.txt", library.filter);
  return library;
}

}  // namespace qseek
