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

#ifndef DGKT_TESTS_TEST_SUPPORT_HPP
#define DGKT_TESTS_TEST_SUPPORT_HPP

#include "dgkt/autograd.hpp"
#include "dgkt/params.hpp"
#include "dgkt/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dgkt::testing {

using ScalarFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

/// Largest relative gap between reverse-mode and central-difference
/// gradients, taken per input as max|a - n| / max|n|.
inline double max_gradient_error(const ScalarFn& f, const std::vector<Matrix>& inputs, double h = 1e-6) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.variable(m));
  ad::Var out = f(tape, vars);
  tape.backward(out);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Matrix analytic = vars[k].grad();
    Matrix numeric(inputs[k].rows(), inputs[k].cols());
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto eval = [&](double delta) {
        std::vector<Matrix> shifted = inputs;
        shifted[k].data()[i] += delta;
        ad::Tape t;
        std::vector<ad::Var> v;
        for (const auto& m : shifted) v.push_back(t.constant(m));
        return f(t, v).value()(0, 0);
      };
      numeric.data()[i] = (eval(h) - eval(-h)) / (2.0 * h);
    }
    const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (analytic - numeric).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

using BoundFn = std::function<ad::Var(Binder&)>;

/// Same measure over every trainable tensor of a parameter store.
inline double max_param_gradient_error(ParamStore& store, const BoundFn& f, double h = 1e-6) {
  store.zero_grad();
  {
    ad::Tape tape;
    Binder b(tape, store);
    ad::Var out = f(b);
    tape.backward(out);
    b.accumulate();
  }
  auto eval = [&]() {
    ad::Tape t;
    Binder b(t, std::as_const(store));
    return f(b).value()(0, 0);
  };
  double worst = 0.0;
  for (const auto& name : store.trainable_names()) {
    Parameter& p = store.at(name);
    Matrix numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      p.value.data()[i] = keep + h;
      const double up = eval();
      p.value.data()[i] = keep - h;
      const double down = eval();
      p.value.data()[i] = keep;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-8);
    worst = std::max(worst, (p.grad - numeric).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  return rng.uniform_matrix(rows, cols, scale);
}

/// Fixed pseudo-random projection of a matrix to a scalar, so every output
/// entry reaches the loss with a distinct weight.
inline ad::Var probe(ad::Var x, std::uint64_t seed = 99) {
  Rng rng(seed);
  return ad::weighted_sum(x, rng.uniform_matrix(x.rows(), x.cols(), 1.0));
}

inline bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dgkt_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dgkt::testing

#endif  // DGKT_TESTS_TEST_SUPPORT_HPP
