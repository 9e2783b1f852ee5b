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

#include "dgkt/eval_metrics.hpp"

#include "dgkt/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dgkt {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      const int y = labels[order[t]];
      if (y != 0 && y != 1) throw Error("auc: labels must be binary");
      if (y == 1) {
        pos_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("AUC undefined: labels contain a single class");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw Error("accuracy: length mismatch");
  if (scores.empty()) throw Error("accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) hits += ((scores[i] >= threshold ? 1 : 0) == labels[i]);
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

namespace {

// L2-regularised logistic regression by full-batch gradient descent on
// standardised features.
struct Logistic {
  RowVector mean, scale, w;
  double b = 0.0;

  void fit(const Matrix& x, const Vector& y) {
    mean = x.colwise().mean();
    scale = ((x.rowwise() - mean).array().square().colwise().mean().sqrt() + 1e-8).matrix();
    const Matrix z = standardise(x);
    w = RowVector::Zero(x.cols());
    b = 0.0;
    const double n = static_cast<double>(x.rows());
    constexpr double kRidge = 1e-3;
    constexpr double kStep = 0.5;
    for (int it = 0; it < 500; ++it) {
      const Vector p = probability(z);
      const Vector r = p - y;
      const RowVector gw = (z.transpose() * r).transpose() / n + kRidge * w;
      w -= kStep * gw;
      b -= kStep * r.mean();
    }
  }

  Matrix standardise(const Matrix& x) const {
    return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }

  Vector probability(const Matrix& z) const {
    const Vector logit = (z * w.transpose()).array() + b;
    return (1.0 / (1.0 + (-logit.array()).exp())).matrix();
  }
};

}  // namespace

double proxy_a_distance(const Matrix& a, const Matrix& b, std::uint64_t seed) {
  if (a.rows() < kMinProbeSamples || b.rows() < kMinProbeSamples) {
    throw Error("proxy_a_distance: need at least " + std::to_string(kMinProbeSamples) +
                " samples per domain");
  }
  if (a.cols() != b.cols()) throw Error("proxy_a_distance: feature widths differ");
  // A set's split depends only on its size and the seed, so swapping the
  // arguments only flips the labels.
  const auto pa = seeded_permutation(static_cast<std::size_t>(a.rows()), seed);
  const auto pb = seeded_permutation(static_cast<std::size_t>(b.rows()), seed);
  const auto ha = a.rows() / 2;
  const auto hb = b.rows() / 2;
  Matrix train_x(ha + hb, a.cols()), test_x(a.rows() - ha + b.rows() - hb, a.cols());
  Vector train_y(train_x.rows()), test_y(test_x.rows());
  Eigen::Index tr = 0, te = 0;
  auto place = [&](const Matrix& src, const std::vector<std::size_t>& perm, Eigen::Index half, double label) {
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
      const auto row = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
      if (i < half) {
        train_x.row(tr) = src.row(row);
        train_y(tr++) = label;
      } else {
        test_x.row(te) = src.row(row);
        test_y(te++) = label;
      }
    }
  };
  place(a, pa, ha, 0.0);
  place(b, pb, hb, 1.0);
  Logistic clf;
  clf.fit(train_x, train_y);
  const Vector p = clf.probability(clf.standardise(test_x));
  double wrong = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) wrong += ((p(i) >= 0.5 ? 1.0 : 0.0) != test_y(i));
  const double err = wrong / static_cast<double>(p.size());
  return std::clamp(2.0 * (1.0 - 2.0 * err), 0.0, 2.0);
}

}  // namespace dgkt
