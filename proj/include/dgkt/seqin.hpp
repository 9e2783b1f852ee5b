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

#ifndef DGKT_SEQIN_HPP
#define DGKT_SEQIN_HPP

// Sequence instance normalization.
//
// Step t is normalized with the mean and population standard deviation of
// {p, m_1, ..., m_t}, where p is a learned padding row, then mapped through
// gamma * x + beta. Statistics are per feature and never look ahead, so the
// output at t depends on steps <= t only. Running moments are updated with
// Welford's recurrence, O(T d) overall.

#include "dgkt/autograd.hpp"

#include <cmath>
#include <cstdint>
#include <span>

namespace dgkt {

inline constexpr double kSeqInEpsilon = 1e-5;

template <typename Scalar>
struct SeqINParamsT {
  RowVectorT<Scalar> gamma;
  RowVectorT<Scalar> beta;
  RowVectorT<Scalar> padding;
  Scalar epsilon = Scalar(kSeqInEpsilon);

  static SeqINParamsT identity(Eigen::Index d) {
    return {RowVectorT<Scalar>::Ones(d), RowVectorT<Scalar>::Zero(d), RowVectorT<Scalar>::Zero(d),
            Scalar(kSeqInEpsilon)};
  }
};
using SeqINParams = SeqINParamsT<double>;

/// Running statistics of the normalizer: row t holds mu_t and sigma_t.
template <typename Scalar>
struct SeqINStats {
  MatrixT<Scalar> mean;
  MatrixT<Scalar> stddev;
};

template <typename Derived>
SeqINStats<typename Derived::Scalar> seqin_statistics(
    const Eigen::MatrixBase<Derived>& m, const RowVectorT<typename Derived::Scalar>& padding) {
  using Scalar = typename Derived::Scalar;
  const auto steps = m.rows();
  const auto d = m.cols();
  SeqINStats<Scalar> s{MatrixT<Scalar>(steps, d), MatrixT<Scalar>(steps, d)};
  RowVectorT<Scalar> mean = padding;
  RowVectorT<Scalar> m2 = RowVectorT<Scalar>::Zero(d);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Scalar count = static_cast<Scalar>(t + 2);
    const RowVectorT<Scalar> delta = m.row(t) - mean;
    mean += delta / count;
    m2.array() += delta.array() * (m.row(t) - mean).array();
    s.mean.row(t) = mean;
    s.stddev.row(t) = (m2.array() / count).max(Scalar(0)).sqrt().matrix();
  }
  return s;
}

/// Normalizes the mask-valid prefix of `m` (T x d); padded rows are zero.
template <typename Derived>
MatrixT<typename Derived::Scalar> seqin_forward(const Eigen::MatrixBase<Derived>& m,
                                                std::span<const std::uint8_t> mask,
                                                const SeqINParamsT<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0) throw Error("seqin_forward: empty sequence");
  if (static_cast<Eigen::Index>(mask.size()) != m.rows()) throw Error("seqin_forward: mask length");
  const auto d = m.cols();
  if (params.gamma.size() != d || params.beta.size() != d || params.padding.size() != d) {
    throw Error("seqin_forward: parameter width does not match features");
  }
  if (!(params.epsilon > Scalar(0))) throw Error("seqin_forward: epsilon must be positive");
  Eigen::Index valid = 0;
  while (valid < m.rows() && mask[static_cast<std::size_t>(valid)]) ++valid;
  for (Eigen::Index t = valid; t < m.rows(); ++t) {
    if (mask[static_cast<std::size_t>(t)]) throw Error("seqin_forward: mask is not a prefix of ones");
  }
  MatrixT<Scalar> out = MatrixT<Scalar>::Zero(m.rows(), d);
  if (valid == 0) return out;
  const auto s = seqin_statistics(m.topRows(valid), params.padding);
  for (Eigen::Index t = 0; t < valid; ++t) {
    out.row(t) = (params.gamma.array() * (m.row(t) - s.mean.row(t)).array() /
                  (s.stddev.row(t).array() + params.epsilon) +
                  params.beta.array())
                     .matrix();
  }
  return out;
}

/// Differentiable SeqIN over an all-valid L x d input; gamma, beta and
/// padding are 1 x d.
ad::Var seqin(ad::Var m, ad::Var gamma, ad::Var beta, ad::Var padding,
              double epsilon = kSeqInEpsilon);

}  // namespace dgkt

#endif  // DGKT_SEQIN_HPP
