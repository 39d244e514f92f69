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

#ifndef QSEEK_CORPUS_H_
#define QSEEK_CORPUS_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qseek/numerics.h"

namespace qseek {

struct ImageRecord {
  std::string id;
  Embedding embedding;
  std::optional<std::string> caption;
  std::optional<std::string> image_uri;
};

// Insertion-ordered image collection with a uniform embedding dimension.
// Immutable once built; safe to share read-only across threads.
class ImagePool {
 public:
  ImagePool() = default;

  // Throws InvalidArgument on duplicate id, dimension mismatch, an empty
  // embedding, or a non-finite or all-zero embedding.
  void Add(ImageRecord record);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  // 0 until the first record is added.
  std::size_t dimension() const { return dimension_; }

  const std::vector<ImageRecord>& records() const { return records_; }
  const ImageRecord& operator[](std::size_t i) const { return records_[i]; }

  std::optional<std::size_t> IndexOf(std::string_view id) const;
  // Throws NotFound.
  const ImageRecord& At(std::string_view id) const;

  // Cosine similarity of query against every record, in pool order.
  std::vector<double> Similarities(const Embedding& query) const;

 private:
  std::vector<ImageRecord> records_;
  std::vector<Embedding> unit_;  // L2-normalized copies of the embeddings
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dimension_ = 0;
};

// Pool file: one JSON object per line,
//   {"id": str, "embedding": [num...], "caption": str?, "image_uri": str?}
// Blank lines are skipped. Throws ParseError carrying the line number, and
// ParseError for duplicate ids or dimension mismatches as well.
ImagePool ReadPool(std::istream& in);
ImagePool LoadPool(const std::string& path);

// Writes records in pool order. Doubles are written in shortest round-trip
// form so ReadPool(WritePool(p)) reproduces p bit-exactly.
void WritePool(const ImagePool& pool, std::ostream& out);
void SavePool(const ImagePool& pool, const std::string& path);

struct Candidate {
  std::size_t pool_index = 0;
  double similarity = 0.0;
};

// Top-n pool records for one query, descending similarity, ties in pool
// order.
struct CandidateSet {
  std::vector<Candidate> members;
  Embedding query_embedding;
  std::size_t n = 0;

  std::size_t size() const { return members.size(); }
  std::vector<double> similarities() const;
  std::vector<std::string> ids(const ImagePool& pool) const;
};

// Throws InvalidArgument when the pool is empty or n == 0. Returns
// min(n, pool.size()) members.
CandidateSet TopNCandidates(const Embedding& query, const ImagePool& pool,
                            std::size_t n);

// 1-based position of target_id in the descending-similarity ordering of the
// whole pool; records tied with the target and inserted before it rank ahead
// of it. Throws NotFound.
std::size_t RankOfTarget(const Embedding& query, const ImagePool& pool,
                         std::string_view target_id);

// ceil(1% of pool_size), clamped to [1, pool_size]. 1 for an empty pool.
std::size_t DefaultCandidateCount(std::size_t pool_size);

}  // namespace qseek

#endif  // QSEEK_CORPUS_H_
