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

#ifndef QSEEK_TEXT_H_
#define QSEEK_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qseek::text {

std::string Trim(std::string_view s);
std::string ToLower(std::string_view s);
bool ContainsIgnoreCase(std::string_view haystack, std::string_view needle);

// Case-insensitive glob match where '*' matches any run of characters.
bool GlobMatch(std::string_view pattern, std::string_view s);

// Lowercased alphanumeric tokens in order of appearance.
std::vector<std::string> Tokenize(std::string_view s);

// Tokens of length >= 3 that are not common English function words.
std::vector<std::string> ContentWords(std::string_view s);

// 64-bit FNV-1a. Stable across platforms, used wherever a seed is derived
// from text.
std::uint64_t Fnv1a(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

// SplitMix64 finalizer, for mixing integer seeds.
std::uint64_t Mix64(std::uint64_t x);

std::string ReplaceAll(std::string s, std::string_view from, std::string_view to);

}  // namespace qseek::text

#endif  // QSEEK_TEXT_H_
