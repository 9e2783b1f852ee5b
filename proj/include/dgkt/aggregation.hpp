// Copyright 2026 The dgkt Authors
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

#ifndef DGKT_AGGREGATION_HPP
#define DGKT_AGGREGATION_HPP

#include "dgkt/embedding.hpp"

#include <cstdint>
#include <vector>

namespace dgkt {

struct KMeansOptions {
  int k = 5;
  std::uint64_t seed = 0;
  int max_iters = 300;
  double tol = 1e-6;  // stop once no centroid moves farther than this
  int restarts = 16;
};

struct KMeansResult {
  BinaryMatrix assignment;  // k x n, one 1 per column
  Matrix centroids;         // k x d
  std::vector<int> labels;  // cluster of each point
  double sse = 0.0;
  /// Within-cluster SSE after every iteration of the winning restart.
  std::vector<double> sse_history;
  int restart = 0;
};

/// Lloyd iterations from k-means++ seeds; the best of `restarts` runs by
/// (SSE, restart index). Empty clusters take the point farthest from its
/// centroid. Points are rows.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

/// Within-cluster sum of squared distances to each cluster's mean.
double within_cluster_sse(const Matrix& points, const std::vector<int>& labels, int k);

/// Clusters the stacked source concept tables and averages each cluster.
PrototypeTable build_prototypes(const std::vector<ConceptTable>& tables, int k, std::uint64_t seed);

/// Each target concept copies a uniformly drawn prototype row.
TargetConceptTable init_target_table(const PrototypeTable& prototypes, int n_concepts,
                                     std::uint64_t seed, double lambda = 0.7);

}  // namespace dgkt

#endif  // DGKT_AGGREGATION_HPP
