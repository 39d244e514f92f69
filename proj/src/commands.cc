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

#include "qseek/commands.h"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "qseek/error.h"
#include "qseek/text.h"

namespace qseek {

using nlohmann::json;

EmbedResult EmbedCorpus(std::istream& in, EmbedBackend& embedder,
                        const CaptionFn& captioner) {
  EmbedResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    try {
      const json j = json::parse(line);
      ImageRecord record;
      record.id = id = j.at("id").get<std::string>();
      if (auto it = j.find("image_uri"); it != j.end() && !it->is_null()) {
        record.image_uri = it->get<std::string>();
      }
      if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
        record.caption = text::Trim(it->get<std::string>());
      }
      if (!record.caption || record.caption->empty()) {
        if (!captioner) throw InvalidArgument("record has no caption");
        record.caption = text::Trim(captioner(record.id, record.image_uri.value_or(record.id)));
        if (record.caption->empty()) throw BackendError("captioner returned an empty caption");
      }
      record.embedding = embedder.EmbedText(*record.caption);
      result.pool.Add(std::move(record));
    } catch (const std::exception& e) {
      result.failures.push_back({line_no, id, e.what()});
    }
  }
  return result;
}

EmbedResult CmdEmbed(const std::string& input_path, const RunConfig& config) {
  std::ifstream in(input_path);
  if (!in) throw NotFound("cannot open input file '" + input_path + "'");
  auto embedder = MakeEmbedder(config, config.mock_dimension);
  CaptionFn captioner;
  std::shared_ptr<JsonPoster> poster;
  if (config.backends.caption == BackendKind::kRemote) {
    poster = std::make_shared<JsonPoster>(config.caption_remote);
    captioner = [poster](const std::string&, const std::string& uri) {
      return poster->Post({{"image_uri", uri}}).at("caption").get<std::string>();
    };
  }
  EmbedResult result = EmbedCorpus(in, *embedder, captioner);
  SavePool(result.pool, config.out_path);
  return result;
}

BatchResult CmdRun(const RunConfig& config) {
  if (config.out_path.empty()) throw InvalidArgument("--out is required");
  auto pool = std::make_shared<const ImagePool>(LoadPool(config.pool_path));
  if (pool->empty()) throw InvalidArgument("pool '" + config.pool_path + "' is empty");
  const std::vector<BatchQuery> queries = LoadDataset(config.dataset_path);
  for (const auto& q : queries) {
    if (!pool->IndexOf(q.target_id)) {
      throw InvalidArgument("dataset target '" + q.target_id + "' is not in the pool");
    }
  }
  const EpisodeRunner runner(*pool, config.episode, MakeBackends(config, pool),
                             LoadPrompts(config));
  BatchResult result = RunBatch(queries, runner, config.parallelism);
  SaveEpisodeLogs(result.logs, config.out_path);

  json manifest = ManifestJson(config);
  manifest["queries"] = queries.size();
  manifest["failures"] = result.failures;
  manifest["effective_n"] = config.episode.EffectiveN(pool->size());
  manifest["effective_m"] = config.episode.EffectiveM(pool->size());
  std::ofstream out(config.out_path + ".manifest.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  return result;
}

MetricReport CmdEval(const std::string& log_path, std::size_t k,
                     std::optional<std::size_t> round_cutoff) {
  return Evaluate(LoadEpisodeLogs(log_path), k, round_cutoff);
}

std::vector<AblationRow> CmdAblateM(const RunConfig& config, const std::vector<std::size_t>& ms,
                                    std::ostream& warnings) {
  if (ms.empty()) throw InvalidArgument("no m values given");
  if (config.out_path.empty()) throw InvalidArgument("--out is required");
  const ImagePool pool = LoadPool(config.pool_path);
  std::vector<AblationRow> rows;
  for (std::size_t m : ms) {
    RunConfig run = config;
    run.episode.m = m;
    run.out_path = config.out_path + ".m" + std::to_string(m) + ".jsonl";
    AblationRow row;
    row.m = m;
    row.effective_m = run.episode.EffectiveM(pool.size());
    row.clamped = row.effective_m != m;
    if (row.clamped) {
      warnings << "warning: m=" << m << " exceeds n=" << run.episode.EffectiveN(pool.size())
               << ", clamped to " << row.effective_m << '\n';
    }
    const BatchResult result = CmdRun(run);
    row.failures = result.failures;
    row.log_path = run.out_path;
    row.bri = Evaluate(result.logs, config.episode.k).bri;
    rows.push_back(std::move(row));
  }
  std::ofstream out(config.out_path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + config.out_path + "'");
  out << ToJson(rows).dump(2) << '\n';
  return rows;
}

json ToJson(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"m", r.m},
                   {"effective_m", r.effective_m},
                   {"clamped", r.clamped},
                   {"bri", r.bri ? json(*r.bri) : json(nullptr)},
                   {"failures", r.failures},
                   {"log", r.log_path}});
  }
  return out;
}

}  // namespace qseek
