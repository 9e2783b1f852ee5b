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
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace dgkt;

namespace {

// Coarse scores so that ties are common.
void random_instance(Rng& rng, std::vector<double>& s, std::vector<int>& y, int n, int levels) {
  s.clear();
  y.clear();
  for (int i = 0; i < n; ++i) {
    s.push_back(static_cast<double>(rng.index(static_cast<std::uint64_t>(levels))) / levels);
    y.push_back(static_cast<int>(rng.index(2)));
  }
  y[0] = 0;
  y[1] = 1;
}

Matrix gaussian(Rng& rng, int n, int d, double shift) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  m.col(0).array() += shift;
  return m;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}) == 0.0);
  CHECK(auc(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 1}) == 0.5);
  CHECK_THROWS_WITH_AS(auc(std::vector<double>{0.2, 0.4}, std::vector<int>{1, 1}),
                       doctest::Contains("AUC undefined"), Error);
  CHECK_THROWS_AS(auc(std::vector<double>{0.2, 0.4}, std::vector<int>{1, 2}), Error);
  CHECK_THROWS_AS(auc(std::vector<double>{0.2}, std::vector<int>{1, 0}), Error);
}

TEST_CASE("auc equals the pair-count oracle") {
  Rng rng(1);
  std::vector<double> s;
  std::vector<int> y;
  for (int trial = 0; trial < 200; ++trial) {
    random_instance(rng, s, y, 2 + static_cast<int>(rng.index(100)), 1 + static_cast<int>(rng.index(12)));
    CHECK(auc(s, y) == testing::pairwise_auc(s, y));
  }
}

TEST_CASE("auc depends on ranks only") {
  Rng rng(2);
  std::vector<double> s;
  std::vector<int> y;
  for (int trial = 0; trial < 20; ++trial) {
    random_instance(rng, s, y, 60, 1000000);
    std::vector<double> t, neg;
    for (double v : s) {
      t.push_back(std::exp(3.0 * v) - 7.0);
      neg.push_back(-v);
    }
    CHECK(auc(t, y) == auc(s, y));
    CHECK(auc(s, y) + auc(neg, y) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("accuracy thresholds at one half") {
  CHECK(accuracy(std::vector<double>{0.7, 0.5, 0.2, 0.4}, std::vector<int>{1, 1, 0, 1}) == 0.75);
}

TEST_CASE("a-distance of a set against itself is near zero") {
  Rng rng(3);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = gaussian(rng, 200, 4, 0.0);
    Matrix shuffled(a.rows(), a.cols());
    const auto perm = seeded_permutation(static_cast<std::size_t>(a.rows()), seed + 100);
    for (Eigen::Index i = 0; i < a.rows(); ++i) shuffled.row(i) = a.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
    total += proxy_a_distance(a, shuffled, seed);
  }
  CHECK(total / 5.0 <= 0.15);
}

TEST_CASE("a-distance of separated blobs is near two") {
  Rng rng(4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(proxy_a_distance(gaussian(rng, 100, 3, 0.0), gaussian(rng, 100, 3, 10.0), seed) >= 1.8);
  }
}

TEST_CASE("a-distance is symmetric up to noise") {
  Rng rng(5);
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = gaussian(rng, 150, 5, 0.0);
    const Matrix b = gaussian(rng, 150, 5, 1.0);
    const double ab = proxy_a_distance(a, b, seed);
    const double ba = proxy_a_distance(b, a, seed);
    CHECK(ab >= 0.0);
    CHECK(ab <= 2.0);
    gap += std::abs(ab - ba);
  }
  CHECK(gap / 5.0 <= 0.05);
}

TEST_CASE("a-distance needs enough samples") {
  Rng rng(6);
  CHECK_THROWS_AS(proxy_a_distance(gaussian(rng, 19, 2, 0.0), gaussian(rng, 50, 2, 0.0), 1), Error);
  CHECK_THROWS_AS(proxy_a_distance(gaussian(rng, 30, 2, 0.0), gaussian(rng, 30, 3, 0.0), 1), Error);
}
