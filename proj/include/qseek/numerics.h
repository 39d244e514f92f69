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

// Numeric kernels shared by retrieval, question selection and evaluation.
// Everything here is a pure function of its arguments.

#ifndef QSEEK_NUMERICS_H_
#define QSEEK_NUMERICS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qseek {

using Embedding = std::vector<double>;

// Tolerance on sum(probs) == 1 accepted by Entropy and KlDivergence.
inline constexpr double kDistributionTolerance = 1e-9;

// Probability vector over an ordered candidate set. candidate_ids is either
// empty (anonymous index set) or parallel to probs.
struct SimilarityDistribution {
  std::vector<double> probs;
  std::vector<std::string> candidate_ids;

  std::size_t size() const { return probs.size(); }
};

double Dot(std::span<const double> a, std::span<const double> b);
double L2Norm(std::span<const double> a);

// Scales to unit L2 norm. Throws InvalidArgument on a zero vector.
Embedding Normalized(std::span<const double> a);

// dot(a, b) / (|a| |b|). Throws InvalidArgument on dimension mismatch or a
// zero-norm input.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

// probs_i = exp(s_i / T) / sum_j exp(s_j / T), evaluated with the max
// subtracted. Throws InvalidArgument on empty or non-finite input, or T <= 0.
SimilarityDistribution Softmax(std::span<const double> sims,
                               double temperature = 1.0);

// Checks non-negativity and normalization within kDistributionTolerance.
void ValidateDistribution(const SimilarityDistribution& p);

// Shannon entropy in nats, with 0 ln 0 = 0.
double Entropy(const SimilarityDistribution& p);

// D_KL(p || q) in nats. Both must range over the same index set (equal size,
// and equal ids when both carry ids). Terms with p_i = 0 contribute 0; a
// term with p_i > 0 and q_i = 0 yields +infinity.
double KlDivergence(const SimilarityDistribution& p,
                    const SimilarityDistribution& q);

double SquaredEuclidean(std::span<const double> a, std::span<const double> b);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 100;
};

struct KMeansResult {
  // assignment[i] is the cluster of point i, in [0, m).
  std::vector<int> assignment;
  std::vector<Embedding> centroids;
  // Within-cluster sum of squared distances.
  double sse = 0.0;
  // Lloyd iterations of the winning restart.
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Runs options.restarts
// independent seedings derived from seed and keeps the lowest SSE (earliest
// restart on ties). Clusters emptied during iteration are refilled with the
// point farthest from its centroid. Nearest-centroid ties go to the lowest
// cluster id. Once Lloyd converges, single-point moves that lower the SSE
// are applied and Lloyd resumes, so the result is still a Lloyd fixed point
// but escapes many of its poorer ones. options.max_iterations bounds the
// assignment sweeps of both phases together. Throws InvalidArgument when m == 0, m > points.size(), or the
// points disagree on dimension.
KMeansResult KMeans(std::span<const Embedding> points, std::size_t m,
                    std::uint64_t seed, const KMeansOptions& options = {});

// Index of the first minimum / maximum. Throws InvalidArgument when empty.
std::size_t ArgMin(std::span<const double> values);
std::size_t ArgMax(std::span<const double> values);

}  // namespace qseek

#endif  // QSEEK_NUMERICS_H_
