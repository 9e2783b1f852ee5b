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

#include "dgkt/aggregation.hpp"

#include "dgkt/random.hpp"

#include <limits>

namespace dgkt {

namespace {

struct Run {
  std::vector<int> labels;
  Matrix centroids;
  double sse = 0.0;
  std::vector<double> history;
};

Matrix seed_plus_plus(const Matrix& x, int k, Rng& rng) {
  const auto n = x.rows();
  Matrix c(k, x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
  Vector d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
    } else {
      double u = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    c.row(j) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

int nearest(const Matrix& centroids, const Eigen::Ref<const RowVector>& p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

Matrix means(const Matrix& x, const std::vector<int>& labels, int k, std::vector<int>& counts) {
  Matrix c = Matrix::Zero(k, x.cols());
  counts.assign(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    c.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
    ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  for (int j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) c.row(j) /= counts[static_cast<std::size_t>(j)];
  }
  return c;
}

// Moves the point farthest from its own centroid (taken from a cluster with
// more than one member) into each empty cluster, then recomputes means.
Matrix repair_empty(const Matrix& x, std::vector<int>& labels, int k, Matrix centroids) {
  std::vector<int> counts;
  for (;;) {
    centroids = means(x, labels, k, counts);
    int empty = -1;
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] == 0) {
        empty = j;
        break;
      }
    }
    if (empty < 0) return centroids;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int l = labels[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(l)] <= 1) continue;
      const double d = (x.row(i) - centroids.row(l)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far < 0) throw Error("kmeans: cannot fill empty cluster");
    labels[static_cast<std::size_t>(far)] = empty;
  }
}

Run lloyd(const Matrix& x, const KMeansOptions& o, std::uint64_t seed) {
  Rng rng(seed);
  Run run;
  run.centroids = seed_plus_plus(x, o.k, rng);
  run.labels.assign(static_cast<std::size_t>(x.rows()), 0);
  for (int it = 0; it < o.max_iters; ++it) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      run.labels[static_cast<std::size_t>(i)] = nearest(run.centroids, x.row(i));
    }
    Matrix next = repair_empty(x, run.labels, o.k, run.centroids);
    const double shift = (next - run.centroids).rowwise().norm().maxCoeff();
    run.centroids = std::move(next);
    run.history.push_back(within_cluster_sse(x, run.labels, o.k));
    if (shift < o.tol) break;
  }
  run.sse = run.history.back();
  return run;
}

}  // namespace

double within_cluster_sse(const Matrix& points, const std::vector<int>& labels, int k) {
  std::vector<int> counts;
  const Matrix c = means(points, labels, k, counts);
  double sse = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sse += (points.row(i) - c.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return sse;
}

KMeansResult kmeans(const Matrix& points, const KMeansOptions& o) {
  if (o.k < 1) throw Error("kmeans: k must be >= 1");
  if (points.rows() < o.k) {
    throw Error("kmeans: " + std::to_string(points.rows()) + " points cannot form " +
                std::to_string(o.k) + " clusters");
  }
  if (o.restarts < 1 || o.max_iters < 1) throw Error("kmeans: restarts and max_iters must be >= 1");
  if (!points.allFinite()) throw Error("kmeans: non-finite input");

  Run best;
  int best_r = -1;
  for (int r = 0; r < o.restarts; ++r) {
    Run run = lloyd(points, o, derive_seed(o.seed, static_cast<std::uint64_t>(r)));
    if (best_r < 0 || run.sse < best.sse) {
      best = std::move(run);
      best_r = r;
    }
  }
  KMeansResult res;
  res.labels = best.labels;
  res.centroids = best.centroids;
  res.sse = best.sse;
  res.sse_history = best.history;
  res.restart = best_r;
  res.assignment = BinaryMatrix::Zero(o.k, points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) res.assignment(res.labels[static_cast<std::size_t>(i)], i) = 1;
  return res;
}

PrototypeTable build_prototypes(const std::vector<ConceptTable>& tables, int k, std::uint64_t seed) {
  if (tables.empty()) throw Error("build_prototypes: no concept tables");
  const auto d = tables.front().embeddings.cols();
  Eigen::Index total = 0;
  PrototypeTable out;
  for (const auto& t : tables) {
    if (t.embeddings.cols() != d) throw Error("build_prototypes: tables differ in width");
    out.domain_offsets.push_back(static_cast<int>(total));
    total += t.embeddings.rows();
  }
  if (total < k) {
    throw Error("build_prototypes: " + std::to_string(total) + " concepts cannot form " +
                std::to_string(k) + " prototypes");
  }
  Matrix stacked(total, d);
  Eigen::Index row = 0;
  for (const auto& t : tables) {
    stacked.middleRows(row, t.embeddings.rows()) = t.embeddings;
    row += t.embeddings.rows();
  }
  KMeansOptions opts;
  opts.k = k;
  opts.seed = seed;
  const auto km = kmeans(stacked, opts);
  out.assignment = km.assignment;
  // Cluster means straight from the assignment: e_c_i |C_i| = sum_j E_j A_ij.
  const Matrix a = km.assignment.cast<double>();
  const Vector sizes = a.rowwise().sum();
  out.embeddings = a * stacked;
  for (int i = 0; i < k; ++i) out.embeddings.row(i) /= sizes(i);
  return out;
}

TargetConceptTable init_target_table(const PrototypeTable& prototypes, int n_concepts,
                                     std::uint64_t seed, double lambda) {
  if (prototypes.k() < 1) throw Error("init_target_table: no prototypes");
  if (n_concepts < 1) throw Error("init_target_table: target has no concepts");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("init_target_table: lambda must be in [0, 1]");
  Rng rng(seed);
  TargetConceptTable t;
  t.lambda = lambda;
  t.embeddings.resize(n_concepts, prototypes.embeddings.cols());
  for (int i = 0; i < n_concepts; ++i) {
    const int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(prototypes.k())));
    t.init_choices.push_back(j);
    t.embeddings.row(i) = prototypes.embeddings.row(j);
  }
  return t;
}

}  // namespace dgkt
