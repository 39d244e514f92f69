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

// Operator commands behind the qseek CLI, callable in-process.

#ifndef QSEEK_COMMANDS_H_
#define QSEEK_COMMANDS_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qseek/config.h"
#include "qseek/corpus.h"
#include "qseek/metrics.h"
#include "qseek/orchestrator.h"

namespace qseek {

struct EmbedFailure {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

struct EmbedResult {
  ImagePool pool;
  std::vector<EmbedFailure> failures;
};

// Captions a record that has only an image reference, given (id, image_uri).
using CaptionFn = std::function<std::string(const std::string&, const std::string&)>;

// Input: one JSON object per line, {"id": str, "caption": str?,
// "image_uri": str?}. Records whose caption (or captioning, or embedding)
// fails are skipped and reported; malformed lines and duplicate ids are
// reported the same way.
EmbedResult EmbedCorpus(std::istream& in, EmbedBackend& embedder,
                        const CaptionFn& captioner = nullptr);

// Reads input_path, writes the pool to config.out_path.
EmbedResult CmdEmbed(const std::string& input_path, const RunConfig& config);

// Runs the dataset against the pool and writes the episode logs to
// config.out_path and the manifest to config.out_path + ".manifest.json".
// Throws NotFound for missing files, InvalidArgument when a dataset target
// is absent from the pool.
BatchResult CmdRun(const RunConfig& config);

MetricReport CmdEval(const std::string& log_path, std::size_t k,
                     std::optional<std::size_t> round_cutoff);

struct AblationRow {
  std::size_t m = 0;
  std::size_t effective_m = 0;
  bool clamped = false;
  std::optional<double> bri;
  std::size_t failures = 0;
  std::string log_path;
};

// One CmdRun per m over the same dataset and seed. Logs go to
// config.out_path + ".m<m>.jsonl"; the table is written as JSON to
// config.out_path. Clamping of m > n is reported on warnings.
std::vector<AblationRow> CmdAblateM(const RunConfig& config, const std::vector<std::size_t>& ms,
                                    std::ostream& warnings);

nlohmann::json ToJson(const std::vector<AblationRow>& rows);

}  // namespace qseek

#endif  // QSEEK_COMMANDS_H_
