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

#include "dgkt/decoder_loss.hpp"

#include "dgkt/random.hpp"

#include <algorithm>

namespace dgkt {

namespace {

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double bce_term(double p, int y) {
  const double c = clamp_probability(p);
  return y == 1 ? -std::log(c) : -std::log(1.0 - c);
}

}  // namespace

double masked_bce(std::span<const double> predictions, std::span<const int> targets,
                  std::span<const std::uint8_t> mask) {
  if (predictions.size() != targets.size() || targets.size() != mask.size()) {
    throw Error("masked_bce: length mismatch");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < predictions.size(); ++t) {
    if (!mask[t]) continue;
    if (targets[t] != 0 && targets[t] != 1) throw Error("masked_bce: target not binary");
    total += bce_term(predictions[t], targets[t]);
    ++count;
  }
  if (count == 0) throw Error("masked_bce: no valid steps");
  return total / static_cast<double>(count);
}

void init_decoder_params(ParamStore& store, int d, std::uint64_t seed) {
  Rng rng(seed);
  const double s1 = std::sqrt(6.0 / (3.0 * d));
  const double s2 = std::sqrt(6.0 / (d + 1.0));
  store.add("decoder/W1", rng.uniform_matrix(d, 2 * d, s1));
  store.add("decoder/b1", Matrix::Zero(1, d));
  store.add("decoder/W2", rng.uniform_matrix(1, d, s2));
  store.add("decoder/b2", Matrix::Zero(1, 1));
}

ad::Var decode(Binder& params, ad::Var states, ad::Var question_embeddings) {
  ad::Var input = ad::concat_cols(states, question_embeddings);
  ad::Var hidden = ad::relu(ad::add_row(ad::matmul_nt(input, params("decoder/W1")), params("decoder/b1")));
  ad::Var logit = ad::add_row(ad::matmul_nt(hidden, params("decoder/W2")), params("decoder/b2"));
  return ad::sigmoid(logit);
}

ad::Var bce_sum(ad::Var probabilities, std::span<const int> targets, Eigen::Index first) {
  const Matrix& p = probabilities.value();
  if (p.cols() != 1) throw Error("bce_sum: probabilities must be a column");
  if (static_cast<Eigen::Index>(targets.size()) < p.rows()) throw Error("bce_sum: too few targets");
  Matrix out(1, 1);
  out(0, 0) = 0.0;
  for (Eigen::Index t = first; t < p.rows(); ++t) {
    const int y = targets[static_cast<std::size_t>(t)];
    if (y != 0 && y != 1) throw Error("bce_sum: target not binary");
    out(0, 0) += bce_term(p(t, 0), y);
  }
  std::vector<int> ys(targets.begin(), targets.begin() + p.rows());
  return probabilities.tape()->make(
      std::move(out), probabilities.needs_grad(),
      [probabilities, ys = std::move(ys), first](const Matrix&, const Matrix& g) {
        const Matrix& p = probabilities.value();
        Matrix& dp = probabilities.grad();
        for (Eigen::Index t = first; t < p.rows(); ++t) {
          const double v = p(t, 0);
          if (v < kProbabilityClamp || v > 1.0 - kProbabilityClamp) continue;  // clamped
          dp(t, 0) += g(0, 0) * (ys[static_cast<std::size_t>(t)] == 1 ? -1.0 / v : 1.0 / (1.0 - v));
        }
      });
}

}  // namespace dgkt
