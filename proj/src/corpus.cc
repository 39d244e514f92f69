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

#include "qseek/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "qseek/error.h"

namespace qseek {

using nlohmann::json;

void ImagePool::Add(ImageRecord record) {
  if (record.embedding.empty()) {
    throw InvalidArgument("record '" + record.id + "' has an empty embedding");
  }
  if (dimension_ != 0 && record.embedding.size() != dimension_) {
    throw InvalidArgument("record '" + record.id + "' has dimension " +
                          std::to_string(record.embedding.size()) +
                          ", pool dimension is " + std::to_string(dimension_));
  }
  for (double v : record.embedding) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("record '" + record.id +
                            "' has a non-finite embedding entry");
    }
  }
  if (index_.contains(record.id)) {
    throw InvalidArgument("duplicate id '" + record.id + "'");
  }
  Embedding unit = Normalized(record.embedding);
  dimension_ = record.embedding.size();
  index_.emplace(record.id, records_.size());
  unit_.push_back(std::move(unit));
  records_.push_back(std::move(record));
}

std::optional<std::size_t> ImagePool::IndexOf(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const ImageRecord& ImagePool::At(std::string_view id) const {
  auto i = IndexOf(id);
  if (!i) throw NotFound("unknown image id '" + std::string(id) + "'");
  return records_[*i];
}

std::vector<double> ImagePool::Similarities(const Embedding& query) const {
  if (query.size() != dimension_) {
    throw InvalidArgument("query dimension " + std::to_string(query.size()) +
                          " does not match pool dimension " +
                          std::to_string(dimension_));
  }
  const Embedding q = Normalized(query);
  std::vector<double> sims(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    sims[i] = std::clamp(Dot(q, unit_[i]), -1.0, 1.0);
  }
  return sims;
}

ImagePool ReadPool(std::istream& in) {
  ImagePool pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ImageRecord record;
    try {
      const json j = json::parse(line);
      record.id = j.at("id").get<std::string>();
      record.embedding = j.at("embedding").get<Embedding>();
      if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
        record.caption = it->get<std::string>();
      }
      if (auto it = j.find("image_uri"); it != j.end() && !it->is_null()) {
        record.image_uri = it->get<std::string>();
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      pool.Add(std::move(record));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return pool;
}

ImagePool LoadPool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open pool file '" + path + "'");
  return ReadPool(in);
}

void WritePool(const ImagePool& pool, std::ostream& out) {
  for (const auto& r : pool.records()) {
    json j;
    j["id"] = r.id;
    j["embedding"] = r.embedding;
    if (r.caption) j["caption"] = *r.caption;
    if (r.image_uri) j["image_uri"] = *r.image_uri;
    out << j.dump() << '\n';
  }
}

void SavePool(const ImagePool& pool, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write pool file '" + path + "'");
  WritePool(pool, out);
}

std::vector<double> CandidateSet::similarities() const {
  std::vector<double> sims;
  sims.reserve(members.size());
  for (const auto& m : members) sims.push_back(m.similarity);
  return sims;
}

std::vector<std::string> CandidateSet::ids(const ImagePool& pool) const {
  std::vector<std::string> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(pool[m.pool_index].id);
  return out;
}

CandidateSet TopNCandidates(const Embedding& query, const ImagePool& pool,
                            std::size_t n) {
  if (pool.empty()) throw InvalidArgument("retrieval over an empty pool");
  if (n == 0) throw InvalidArgument("candidate count must be positive");
  const std::vector<double> sims = pool.Similarities(query);

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t take = std::min(n, pool.size());
  auto by_similarity = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), by_similarity);

  CandidateSet out;
  out.n = n;
  out.query_embedding = query;
  out.members.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.members.push_back({order[i], sims[order[i]]});
  }
  return out;
}

std::size_t RankOfTarget(const Embedding& query, const ImagePool& pool,
                         std::string_view target_id) {
  const auto target = pool.IndexOf(target_id);
  if (!target) {
    throw NotFound("target '" + std::string(target_id) + "' is not in the pool");
  }
  const std::vector<double> sims = pool.Similarities(query);
  const double t = sims[*target];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (sims[i] > t || (sims[i] == t && i < *target)) ++ahead;
  }
  return ahead + 1;
}

std::size_t DefaultCandidateCount(std::size_t pool_size) {
  if (pool_size == 0) return 1;
  const std::size_t n = (pool_size + 99) / 100;
  return std::clamp<std::size_t>(n, 1, pool_size);
}

}  // namespace qseek
