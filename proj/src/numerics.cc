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

#include "qseek/numerics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qseek/error.h"

namespace qseek {

namespace {

void CheckSameDimension(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t NearestCentroid(std::span<const double> point,
                            const std::vector<Embedding>& centroids,
                            double* distance) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = SquaredEuclidean(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance != nullptr) *distance = best_d;
  return best;
}

std::vector<Embedding> SeedPlusPlus(std::span<const Embedding> points,
                                    std::size_t m, std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Embedding> centers;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto take = [&](std::size_t i) {
    chosen[i] = true;
    centers.push_back(points[i]);
    for (std::size_t j = 0; j < n; ++j) {
      d2[j] = std::min(d2[j], SquaredEuclidean(points[j], points[i]));
    }
  };

  take(static_cast<std::size_t>(Uniform01(rng) * static_cast<double>(n)));
  while (centers.size() < m) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!chosen[j]) total += d2[j];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = Uniform01(rng) * total;
      for (std::size_t j = 0; j < n; ++j) {
        if (chosen[j] || d2[j] <= 0.0) continue;
        pick = j;
        target -= d2[j];
        if (target < 0.0) break;
      }
    }
    if (pick == n) {
      // Every remaining point coincides with a center: pick uniformly among
      // the unchosen ones.
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < n; ++j) {
        if (!chosen[j]) rest.push_back(j);
      }
      pick = rest[static_cast<std::size_t>(Uniform01(rng) *
                                           static_cast<double>(rest.size()))];
    }
    take(pick);
  }
  return centers;
}

void RecomputeCentroids(std::span<const Embedding> points,
                        const std::vector<int>& assignment,
                        std::vector<Embedding>& centroids) {
  const std::size_t dim = points[0].size();
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (auto& c : centroids) std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& c = centroids[static_cast<std::size_t>(assignment[i])];
    for (std::size_t k = 0; k < dim; ++k) c[k] += points[i][k];
    ++counts[static_cast<std::size_t>(assignment[i])];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] == 0) continue;
    for (auto& v : centroids[c]) v /= static_cast<double>(counts[c]);
  }
}

// Moves the point farthest from its centroid (taken from a cluster with at
// least two members) into each empty cluster. Returns true if anything moved.
bool RepairEmptyClusters(std::span<const Embedding> points,
                         std::vector<int>& assignment,
                         std::vector<Embedding>& centroids) {
  bool repaired = false;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
    if (counts[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto owner = static_cast<std::size_t>(assignment[i]);
      if (counts[owner] < 2) continue;
      const double d = SquaredEuclidean(points[i], centroids[owner]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    assignment[far] = static_cast<int>(c);
    centroids[c] = points[far];
    repaired = true;
  }
  return repaired;
}

// One sweep of single-point moves: a point leaves cluster a for b when
// that lowers the total SSE, i.e. when
//   n_b / (n_b + 1) |x - c_b|^2 < n_a / (n_a - 1) |x - c_a|^2.
// Lloyd's step only compares the unweighted distances, so it can stall in
// partitions that such a move still improves. Returns true if a point moved.
bool SinglePointMoves(std::span<const Embedding> points, std::vector<int>& assignment,
                      std::vector<Embedding>& centroids) {
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
  bool moved = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto from = static_cast<std::size_t>(assignment[i]);
    if (counts[from] < 2) continue;
    const double na = static_cast<double>(counts[from]);
    const double cost_out = na / (na - 1.0) * SquaredEuclidean(points[i], centroids[from]);
    std::size_t to = from;
    double best_in = cost_out;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (c == from) continue;
      const double nb = static_cast<double>(counts[c]);
      const double cost_in = nb / (nb + 1.0) * SquaredEuclidean(points[i], centroids[c]);
      // Relative margin so rounding noise never triggers a move.
      if (cost_in < best_in * (1.0 - 1e-12)) {
        best_in = cost_in;
        to = c;
      }
    }
    if (to == from) continue;
    assignment[i] = static_cast<int>(to);
    --counts[from];
    ++counts[to];
    RecomputeCentroids(points, assignment, centroids);
    moved = true;
  }
  return moved;
}

KMeansResult LloydOnce(std::span<const Embedding> points, std::size_t m,
                       std::mt19937_64& rng, int max_iterations) {
  KMeansResult result;
  result.centroids = SeedPlusPlus(points, m, rng);
  result.assignment.assign(points.size(), -1);

  int iter = 0;
  while (iter < max_iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c =
          static_cast<int>(NearestCentroid(points[i], result.centroids, nullptr));
      if (c != result.assignment[i]) {
        result.assignment[i] = c;
        changed = true;
      }
    }
    ++iter;
    if (!changed) {
      // Lloyd has converged; polish with single-point moves and resume
      // Lloyd if any were made. Each move strictly lowers the SSE, so this
      // terminates.
      if (!SinglePointMoves(points, result.assignment, result.centroids)) break;
      continue;
    }
    RepairEmptyClusters(points, result.assignment, result.centroids);
    RecomputeCentroids(points, result.assignment, result.centroids);
  }
  result.iterations = iter;

  result.sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    result.sse += SquaredEuclidean(
        points[i],
        result.centroids[static_cast<std::size_t>(result.assignment[i])]);
  }
  return result;
}

}  // namespace

double Dot(std::span<const double> a, std::span<const double> b) {
  CheckSameDimension(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double L2Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

Embedding Normalized(std::span<const double> a) {
  const double norm = L2Norm(a);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidArgument("cannot normalize a zero or non-finite vector");
  }
  Embedding out(a.begin(), a.end());
  for (auto& v : out) v /= norm;
  return out;
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  CheckSameDimension(a, b);
  const double na = L2Norm(a);
  const double nb = L2Norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw InvalidArgument("cosine similarity of a zero-norm vector");
  }
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

SimilarityDistribution Softmax(std::span<const double> sims,
                               double temperature) {
  if (sims.empty()) throw InvalidArgument("softmax of an empty sequence");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("softmax temperature must be positive and finite");
  }
  double max = -std::numeric_limits<double>::infinity();
  for (double s : sims) {
    if (!std::isfinite(s)) throw InvalidArgument("softmax of a non-finite value");
    max = std::max(max, s);
  }
  SimilarityDistribution out;
  out.probs.resize(sims.size());
  double total = 0.0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    out.probs[i] = std::exp((sims[i] - max) / temperature);
    total += out.probs[i];
  }
  for (auto& p : out.probs) p /= total;
  return out;
}

void ValidateDistribution(const SimilarityDistribution& p) {
  if (p.probs.empty()) throw InvalidArgument("empty distribution");
  if (!p.candidate_ids.empty() && p.candidate_ids.size() != p.probs.size()) {
    throw InvalidArgument("distribution ids and probabilities differ in length");
  }
  double total = 0.0;
  for (double v : p.probs) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("distribution has a negative or non-finite entry");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > kDistributionTolerance) {
    throw InvalidArgument("distribution is not normalized (sum " +
                          std::to_string(total) + ")");
  }
}

double Entropy(const SimilarityDistribution& p) {
  ValidateDistribution(p);
  double h = 0.0;
  for (double v : p.probs) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return std::max(h, 0.0);
}

double KlDivergence(const SimilarityDistribution& p,
                    const SimilarityDistribution& q) {
  ValidateDistribution(p);
  ValidateDistribution(q);
  if (p.size() != q.size()) {
    throw InvalidArgument("KL divergence over different index sets");
  }
  if (!p.candidate_ids.empty() && !q.candidate_ids.empty() &&
      p.candidate_ids != q.candidate_ids) {
    throw InvalidArgument("KL divergence over different candidate ids");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.probs[i];
    if (pi == 0.0) continue;
    const double qi = q.probs[i];
    if (qi == 0.0) return std::numeric_limits<double>::infinity();
    d += pi * std::log(pi / qi);
  }
  return std::max(d, 0.0);
}

double SquaredEuclidean(std::span<const double> a, std::span<const double> b) {
  CheckSameDimension(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

KMeansResult KMeans(std::span<const Embedding> points, std::size_t m,
                    std::uint64_t seed, const KMeansOptions& options) {
  if (m == 0) throw InvalidArgument("k-means needs at least one cluster");
  if (m > points.size()) {
    throw InvalidArgument("k-means with " + std::to_string(m) +
                          " clusters over " + std::to_string(points.size()) +
                          " points");
  }
  for (const auto& p : points) CheckSameDimension(p, points[0]);

  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.sse = std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    KMeansResult candidate =
        LloydOnce(points, m, rng, std::max(1, options.max_iterations));
    if (candidate.sse < best.sse) best = std::move(candidate);
  }
  return best;
}

std::size_t ArgMin(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmin of an empty sequence");
  return static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
}

std::size_t ArgMax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty sequence");
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace qseek
