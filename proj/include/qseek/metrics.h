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

// Multi-round retrieval metrics. A rank is the 1-based position of the
// single target image in one round's ordering of the pool.

#ifndef QSEEK_METRICS_H_
#define QSEEK_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qseek/episode_log.h"

namespace qseek {

// Prefix minima b_t = min(r_0..r_t). Throws InvalidArgument on empty input
// or a rank < 1.
std::vector<std::size_t> BestRanks(std::span<const std::size_t> ranks);

// Best log Rank Integral: trapezoidal integral of ln b_t over rounds
// 0..T divided by T, or ln b_0 when T = 0. Lower is better; 0 means the
// target was first from round 0 on.
double Bri(std::span<const std::size_t> ranks);

// 1 iff rank <= k. Throws InvalidArgument when k < 1 or rank < 1.
double RecallAtK(std::size_t rank, std::size_t k);
// 1 iff any rank so far is <= k.
double HitsAtK(std::span<const std::size_t> ranks, std::size_t k);
// 1/rank within the cutoff, else 0.
double MrrAtK(std::size_t rank, std::size_t k);
// 1/log2(1 + rank) within the cutoff, else 0.
double NdcgAtK(std::size_t rank, std::size_t k);

// First round index t with b_t <= k, or nullopt.
std::optional<std::size_t> FirstSuccessRound(std::span<const std::size_t> ranks,
                                             std::size_t k);

struct AverageRounds {
  std::optional<double> mean;  // absent when no episode succeeds
  std::size_t successes = 0;
  std::size_t failures = 0;
};

// Episodes without ranks are ignored.
AverageRounds AverageRoundsToSuccess(const std::vector<EpisodeLog>& logs,
                                     std::size_t k);

struct RoundMetrics {
  std::size_t round = 0;
  std::size_t episodes = 0;  // episodes that reached this round
  double recall = 0.0;
  double hits = 0.0;
  double mrr = 0.0;
  double ndcg = 0.0;
};

struct MetricReport {
  std::size_t k = 10;
  std::size_t round_cutoff = 0;
  std::size_t num_queries = 0;     // ranked episodes evaluated
  std::size_t unranked_episodes = 0;
  std::size_t rounds_evaluated = 0;
  std::vector<RoundMetrics> per_round;
  std::optional<double> bri;       // mean over episodes
  AverageRounds avg_rounds;
};

// Means over the ranked episodes, using rounds <= round_cutoff (all rounds
// when absent). Per-round means average the episodes that reached the
// round. Throws InvalidArgument on an empty log set or k < 1.
MetricReport Evaluate(const std::vector<EpisodeLog>& logs, std::size_t k,
                      std::optional<std::size_t> round_cutoff = std::nullopt);

nlohmann::json ToJson(const MetricReport& report);
// Fixed-width table for terminals.
std::string FormatReport(const MetricReport& report);

}  // namespace qseek

#endif  // QSEEK_METRICS_H_
