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

#ifndef DGKT_DECODER_LOSS_HPP
#define DGKT_DECODER_LOSS_HPP

#include "dgkt/params.hpp"

#include <cmath>
#include <cstdint>
#include <span>

namespace dgkt {

inline constexpr double kProbabilityClamp = 1e-7;

/// Two-layer MLP head: sigmoid(W2 relu(W1 [h, e_q] + b1) + b2).
template <typename Scalar>
struct DecoderParamsT {
  MatrixT<Scalar> w1;     // hidden x 2d
  RowVectorT<Scalar> b1;  // hidden
  RowVectorT<Scalar> w2;  // hidden
  Scalar b2 = 0;
};
using DecoderParams = DecoderParamsT<double>;

template <typename DerivedH, typename DerivedQ>
typename DerivedH::Scalar decode(const Eigen::MatrixBase<DerivedH>& h,
                                 const Eigen::MatrixBase<DerivedQ>& e_q,
                                 const DecoderParamsT<typename DerivedH::Scalar>& p) {
  using Scalar = typename DerivedH::Scalar;
  if (h.size() + e_q.size() != p.w1.cols()) throw Error("decode: input width mismatch");
  VectorT<Scalar> input(h.size() + e_q.size());
  input << h.derived().reshaped(), e_q.derived().reshaped();
  const VectorT<Scalar> hidden = (p.w1 * input + p.b1.transpose()).cwiseMax(Scalar(0));
  const Scalar logit = p.w2.dot(hidden.transpose()) + p.b2;
  return Scalar(1) / (Scalar(1) + std::exp(-logit));
}

/// Mean clamped binary cross-entropy over steps with mask = 1, skipping the
/// first step (it has no history). predictions[t] is the probability for
/// step t; the vectors are aligned to the full window.
double masked_bce(std::span<const double> predictions, std::span<const int> targets,
                  std::span<const std::uint8_t> mask);

/// Adds decoder/{W1,b1,W2,b2} with hidden width d.
void init_decoder_params(ParamStore& store, int d, std::uint64_t seed);

/// Per-step probabilities (L x 1) from states and question embeddings.
ad::Var decode(Binder& params, ad::Var states, ad::Var question_embeddings);

/// Sum (not mean) of clamped BCE over steps [first, L). Returns 1x1.
ad::Var bce_sum(ad::Var probabilities, std::span<const int> targets, Eigen::Index first = 1);

}  // namespace dgkt

#endif  // DGKT_DECODER_LOSS_HPP
