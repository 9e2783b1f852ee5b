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

#include "dgkt/seqin.hpp"

namespace dgkt {

ad::Var seqin(ad::Var m, ad::Var gamma, ad::Var beta, ad::Var padding, double epsilon) {
  const Matrix& x = m.value();
  const auto steps = x.rows();
  const auto d = x.cols();
  if (steps == 0) throw Error("seqin: empty sequence");
  for (ad::Var v : {gamma, beta, padding}) {
    if (v.rows() != 1 || v.cols() != d) throw Error("seqin: parameter width does not match features");
  }
  if (!(epsilon > 0.0)) throw Error("seqin: epsilon must be positive");

  const RowVector p = padding.value();
  auto stats = seqin_statistics(x, p);
  Matrix denom = stats.stddev.array() + epsilon;
  Matrix normalized = (x - stats.mean).array() / denom.array();
  Matrix out = normalized;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);

  const bool needs = m.needs_grad() || gamma.needs_grad() || beta.needs_grad() || padding.needs_grad();
  return m.tape()->make(
      std::move(out), needs,
      [m, gamma, beta, padding, stats = std::move(stats), denom = std::move(denom),
       normalized = std::move(normalized)](const Matrix&, const Matrix& g) {
        if (gamma.needs_grad()) gamma.grad() += g.cwiseProduct(normalized).colwise().sum();
        if (beta.needs_grad()) beta.grad() += g.colwise().sum();
        if (!m.needs_grad() && !padding.needs_grad()) return;

        const Matrix& x = m.value();
        const auto steps = x.rows();
        const auto d = x.cols();
        const Eigen::Array<double, 1, Eigen::Dynamic> gam = gamma.value().row(0).array();
        // For every element z of {p, m_1..m_t}: dz += A_t + B_t (z - mu_t),
        // accumulated over t >= index(z) with suffix sums.
        Eigen::Array<double, 1, Eigen::Dynamic> suffix_a = Eigen::Array<double, 1, Eigen::Dynamic>::Zero(d);
        Eigen::Array<double, 1, Eigen::Dynamic> suffix_b = Eigen::Array<double, 1, Eigen::Dynamic>::Zero(d);
        Matrix dm(steps, d);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
          const double n = static_cast<double>(t + 2);
          const auto dx = g.row(t).array() * gam;
          const auto den = denom.row(t).array();
          const auto centered = x.row(t).array() - stats.mean.row(t).array();
          const auto sigma = stats.stddev.row(t).array();
          const Eigen::Array<double, 1, Eigen::Dynamic> a = -dx / den / n;
          const Eigen::Array<double, 1, Eigen::Dynamic> dsigma = -dx * centered / den.square();
          const Eigen::Array<double, 1, Eigen::Dynamic> b =
              (sigma > 0.0).select(dsigma / (n * sigma), 0.0);
          suffix_a += a - b * stats.mean.row(t).array();
          suffix_b += b;
          dm.row(t) = (suffix_a + x.row(t).array() * suffix_b + dx / den).matrix();
        }
        if (m.needs_grad()) m.grad() += dm;
        if (padding.needs_grad()) {
          padding.grad().row(0).array() += suffix_a + padding.value().row(0).array() * suffix_b;
        }
      });
}

}  // namespace dgkt
