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

// Procedurally generated caption corpora for demos and tests.

#ifndef QSEEK_SYNTHETIC_H_
#define QSEEK_SYNTHETIC_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qseek/orchestrator.h"

namespace qseek {

struct SyntheticImage {
  std::string id;
  std::string caption;
  std::string image_uri;
};

struct SyntheticCorpus {
  std::vector<SyntheticImage> images;
  // Queries whose caption is a short, ambiguous prefix of the target's.
  std::vector<BatchQuery> queries;
};

// Captions combine a color, subject, action, place and object drawn from
// fixed vocabularies, so short descriptions match many images.
SyntheticCorpus MakeSyntheticCorpus(std::size_t images, std::size_t queries,
                                    std::uint64_t seed);

// {"id","caption","image_uri"} per line: the embed command's input format.
void WriteCaptionFile(const SyntheticCorpus& corpus, std::ostream& out);
// {"query_id","target_id","caption"} per line.
void WriteDatasetFile(const std::vector<BatchQuery>& queries, std::ostream& out);

}  // namespace qseek

#endif  // QSEEK_SYNTHETIC_H_
