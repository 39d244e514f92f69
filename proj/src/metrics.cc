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

#include "qseek/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qseek/error.h"

namespace qseek {

namespace {

void CheckRanks(std::span<const std::size_t> ranks) {
  if (ranks.empty()) throw InvalidArgument("rank sequence is empty");
  for (std::size_t r : ranks) {
    if (r < 1) throw InvalidArgument("ranks must be >= 1");
  }
}

void CheckCutoff(std::size_t k) {
  if (k < 1) throw InvalidArgument("K must be >= 1");
}

}  // namespace

std::vector<std::size_t> BestRanks(std::span<const std::size_t> ranks) {
  CheckRanks(ranks);
  std::vector<std::size_t> best(ranks.begin(), ranks.end());
  for (std::size_t t = 1; t < best.size(); ++t) best[t] = std::min(best[t], best[t - 1]);
  return best;
}

double Bri(std::span<const std::size_t> ranks) {
  const std::vector<std::size_t> best = BestRanks(ranks);
  if (best.size() == 1) return std::log(static_cast<double>(best[0]));
  double area = 0.0;
  for (std::size_t t = 0; t + 1 < best.size(); ++t) {
    area += 0.5 * (std::log(static_cast<double>(best[t])) +
                   std::log(static_cast<double>(best[t + 1])));
  }
  return area / static_cast<double>(best.size() - 1);
}

double RecallAtK(std::size_t rank, std::size_t k) {
  CheckCutoff(k);
  if (rank < 1) throw InvalidArgument("ranks must be >= 1");
  return rank <= k ? 1.0 : 0.0;
}

double HitsAtK(std::span<const std::size_t> ranks, std::size_t k) {
  CheckCutoff(k);
  CheckRanks(ranks);
  return *std::min_element(ranks.begin(), ranks.end()) <= k ? 1.0 : 0.0;
}

double MrrAtK(std::size_t rank, std::size_t k) {
  if (RecallAtK(rank, k) == 0.0) return 0.0;
  return 1.0 / static_cast<double>(rank);
}

double NdcgAtK(std::size_t rank, std::size_t k) {
  if (RecallAtK(rank, k) == 0.0) return 0.0;
  return 1.0 / std::log2(1.0 + static_cast<double>(rank));
}

std::optional<std::size_t> FirstSuccessRound(std::span<const std::size_t> ranks,
                                             std::size_t k) {
  CheckCutoff(k);
  CheckRanks(ranks);
  for (std::size_t t = 0; t < ranks.size(); ++t) {
    if (ranks[t] <= k) return t;
  }
  return std::nullopt;
}

AverageRounds AverageRoundsToSuccess(const std::vector<EpisodeLog>& logs,
                                     std::size_t k) {
  CheckCutoff(k);
  AverageRounds out;
  double total = 0.0;
  for (const auto& log : logs) {
    const auto ranks = log.ranks();
    if (!ranks || ranks->empty()) continue;
    if (auto t = FirstSuccessRound(*ranks, k)) {
      ++out.successes;
      total += static_cast<double>(*t);
    } else {
      ++out.failures;
    }
  }
  if (out.successes > 0) out.mean = total / static_cast<double>(out.successes);
  return out;
}

MetricReport Evaluate(const std::vector<EpisodeLog>& logs, std::size_t k,
                      std::optional<std::size_t> round_cutoff) {
  CheckCutoff(k);
  if (logs.empty()) throw InvalidArgument("no episodes to evaluate");

  std::vector<EpisodeLog> ranked;
  MetricReport report;
  report.k = k;
  for (const auto& log : logs) {
    auto ranks = log.ranks();
    if (!ranks || ranks->empty()) {
      ++report.unranked_episodes;
      continue;
    }
    EpisodeLog truncated = log;
    if (round_cutoff && truncated.rounds.size() > *round_cutoff + 1) {
      truncated.rounds.resize(*round_cutoff + 1);
    }
    ranked.push_back(std::move(truncated));
  }
  report.num_queries = ranked.size();

  std::size_t max_rounds = 0;
  for (const auto& log : ranked) max_rounds = std::max(max_rounds, log.rounds.size());
  report.rounds_evaluated = max_rounds;
  report.round_cutoff = round_cutoff.value_or(max_rounds == 0 ? 0 : max_rounds - 1);
  if (ranked.empty()) return report;

  double bri_total = 0.0;
  report.per_round.resize(max_rounds);
  for (std::size_t t = 0; t < max_rounds; ++t) report.per_round[t].round = t;
  for (const auto& log : ranked) {
    const std::vector<std::size_t> ranks = *log.ranks();
    bri_total += Bri(ranks);
    for (std::size_t t = 0; t < ranks.size(); ++t) {
      RoundMetrics& m = report.per_round[t];
      ++m.episodes;
      m.recall += RecallAtK(ranks[t], k);
      m.hits += HitsAtK(std::span(ranks).first(t + 1), k);
      m.mrr += MrrAtK(ranks[t], k);
      m.ndcg += NdcgAtK(ranks[t], k);
    }
  }
  for (auto& m : report.per_round) {
    if (m.episodes == 0) continue;
    const auto n = static_cast<double>(m.episodes);
    m.recall /= n;
    m.hits /= n;
    m.mrr /= n;
    m.ndcg /= n;
  }
  report.bri = bri_total / static_cast<double>(ranked.size());
  report.avg_rounds = AverageRoundsToSuccess(ranked, k);
  return report;
}

nlohmann::json ToJson(const MetricReport& report) {
  using nlohmann::json;
  json rounds = json::array();
  for (const auto& m : report.per_round) {
    rounds.push_back({{"round", m.round},
                      {"episodes", m.episodes},
                      {"recall_at_k", m.recall},
                      {"hits_at_k", m.hits},
                      {"mrr_at_k", m.mrr},
                      {"ndcg_at_k", m.ndcg}});
  }
  return {{"k", report.k},
          {"round_cutoff", report.round_cutoff},
          {"num_queries", report.num_queries},
          {"unranked_episodes", report.unranked_episodes},
          {"rounds_evaluated", report.rounds_evaluated},
          {"bri", report.bri ? json(*report.bri) : json(nullptr)},
          {"avg_rounds_to_success",
           report.avg_rounds.mean ? json(*report.avg_rounds.mean) : json(nullptr)},
          {"successes", report.avg_rounds.successes},
          {"never_succeeded", report.avg_rounds.failures},
          {"per_round", std::move(rounds)}};
}

std::string FormatReport(const MetricReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "queries: %zu  K: %zu  round cutoff: %zu\n",
                report.num_queries, report.k, report.round_cutoff);
  out += buf;
  if (report.bri) {
    std::snprintf(buf, sizeof(buf), "BRI: %.4f\n", *report.bri);
  } else {
    std::snprintf(buf, sizeof(buf), "BRI: n/a\n");
  }
  out += buf;
  if (report.avg_rounds.mean) {
    std::snprintf(buf, sizeof(buf), "avg rounds to success: %.3f (%zu succeeded, %zu never)\n",
                  *report.avg_rounds.mean, report.avg_rounds.successes,
                  report.avg_rounds.failures);
  } else {
    std::snprintf(buf, sizeof(buf), "avg rounds to success: n/a (%zu succeeded, %zu never)\n",
                  report.avg_rounds.successes, report.avg_rounds.failures);
  }
  out += buf;
  std::snprintf(buf, sizeof(buf), "%5s %8s %10s %10s %10s %10s\n", "round", "episodes",
                "Recall@K", "Hits@K", "MRR@K", "NDCG@K");
  out += buf;
  for (const auto& m : report.per_round) {
    std::snprintf(buf, sizeof(buf), "%5zu %8zu %10.4f %10.4f %10.4f %10.4f\n", m.round,
                  m.episodes, m.recall, m.hits, m.mrr, m.ndcg);
    out += buf;
  }
  return out;
}

}  // namespace qseek
