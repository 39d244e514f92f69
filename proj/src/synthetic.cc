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

#include "qseek/synthetic.h"

#include <array>
#include <cstdio>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "qseek/error.h"

namespace qseek {

namespace {

constexpr std::array kColors = {"red", "blue", "green", "yellow", "black", "white",
                                "brown", "orange", "gray", "purple"};
constexpr std::array kSubjects = {"dog", "cat", "man", "woman", "horse", "bird",
                                  "boy", "girl", "cow", "sheep", "truck", "bicycle"};
constexpr std::array kActions = {"standing", "sitting", "running", "walking",
                                 "sleeping", "eating", "jumping", "waiting"};
constexpr std::array kPlaces = {"on a beach", "in a park", "on a street", "in a kitchen",
                                "in a field", "by a river", "in a forest", "on a bridge"};
constexpr std::array kObjects = {"umbrella", "bench", "frisbee", "kite", "ball",
                                 "backpack", "fence", "lamp", "boat", "tree",
                                 "suitcase", "clock"};

template <typename Array>
const char* Pick(const Array& a, std::mt19937_64& rng) {
  return a[rng() % a.size()];
}

std::string WithArticle(const std::string& phrase) {
  const bool vowel = std::string("aeiou").find(phrase.front()) != std::string::npos;
  return (vowel ? "an " : "a ") + phrase;
}

}  // namespace

SyntheticCorpus MakeSyntheticCorpus(std::size_t images, std::size_t queries,
                                    std::uint64_t seed) {
  if (queries > images) throw InvalidArgument("more queries than images");
  std::mt19937_64 rng(seed);
  SyntheticCorpus corpus;
  struct Parts {
    std::string subject, place;
  };
  std::vector<Parts> parts;
  for (std::size_t i = 0; i < images; ++i) {
    const std::string color = Pick(kColors, rng);
    const std::string subject = Pick(kSubjects, rng);
    const std::string action = Pick(kActions, rng);
    const std::string place = Pick(kPlaces, rng);
    const std::string object = Pick(kObjects, rng);
    char id[16];
    std::snprintf(id, sizeof(id), "img%05zu", i);
    corpus.images.push_back({id,
                             WithArticle(color + " " + subject) + " " + action + " " + place +
                                 " with " + WithArticle(object),
                             std::string("images/") + id + ".jpg"});
    parts.push_back({subject, place});
  }
  // Every stride-th image becomes a query target, spread over the pool.
  const std::size_t stride = queries == 0 ? 1 : images / queries;
  for (std::size_t q = 0; q < queries; ++q) {
    const std::size_t i = q * stride;
    char qid[16];
    std::snprintf(qid, sizeof(qid), "q%04zu", q);
    corpus.queries.push_back(
        {qid, corpus.images[i].id, WithArticle(parts[i].subject) + " " + parts[i].place});
  }
  return corpus;
}

void WriteCaptionFile(const SyntheticCorpus& corpus, std::ostream& out) {
  for (const auto& img : corpus.images) {
    out << nlohmann::json{{"id", img.id}, {"caption", img.caption}, {"image_uri", img.image_uri}}
               .dump()
        << '\n';
  }
}

void WriteDatasetFile(const std::vector<BatchQuery>& queries, std::ostream& out) {
  for (const auto& q : queries) {
    out << nlohmann::json{{"query_id", q.query_id}, {"target_id", q.target_id}, {"caption", q.caption}}
               .dump()
        << '\n';
  }
}

}  // namespace qseek
