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

#include "dgkt/embedding.hpp"

#include "dgkt/random.hpp"

#include <cmath>

namespace dgkt {

BinaryMatrix PrototypeTable::assignment_slice(std::size_t domain_index, int n_concepts) const {
  if (domain_index >= domain_offsets.size()) throw Error("assignment_slice: unknown domain");
  const int off = domain_offsets[domain_index];
  if (off + n_concepts > assignment.cols()) throw Error("assignment_slice: out of range");
  return assignment.middleCols(off, n_concepts);
}

Matrix init_concept_embeddings(int n_concepts, int d, std::uint64_t seed) {
  if (n_concepts <= 0 || d <= 0) throw Error("init_concept_embeddings: empty shape");
  Rng rng(seed);
  return rng.uniform_matrix(n_concepts, d, 1.0 / std::sqrt(static_cast<double>(d)));
}

BinaryMatrix proto_q_matrix(const BinaryMatrix& assignment_slice, const BinaryMatrix& q_matrix) {
  if (assignment_slice.cols() != q_matrix.rows()) {
    throw Error("proto_q_matrix: assignment has " + std::to_string(assignment_slice.cols()) +
                " concept columns, q_matrix has " + std::to_string(q_matrix.rows()) + " rows");
  }
  const MatrixT<int> product = assignment_slice.cast<int>() * q_matrix.cast<int>();
  return (product.array() > 0).cast<std::uint8_t>();
}

std::vector<int> column_support(const BinaryMatrix& m, int q) {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, q)) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

TargetQuestionEmbedding target_question_embedding(int q, const DomainSpec& domain,
                                                  const Matrix& target_embeddings,
                                                  const Matrix& prototypes, double lambda) {
  if (target_embeddings.cols() != prototypes.cols()) {
    throw Error("target_question_embedding: width mismatch");
  }
  const RowVector e_q = question_embedding(q, domain, target_embeddings);
  const int j = nearest_prototype(e_q, prototypes);
  return {(1.0 - lambda) * prototypes.row(j) + lambda * e_q, j};
}

namespace ad_embed {

ad::Var lookup(ad::Var table, std::span<const std::vector<int>> lists) {
  return ad::gather_mean(table, lists);
}

ad::Var target_lookup(ad::Var target_table, ad::Var prototypes,
                      std::span<const std::vector<int>> concept_lists, double lambda) {
  ad::Var e_q = ad::gather_mean(target_table, concept_lists);
  const Matrix& values = e_q.value();
  std::vector<std::vector<int>> nearest(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    nearest[static_cast<std::size_t>(t)] = {nearest_prototype(values.row(t), prototypes.value())};
  }
  ad::Var anchor = ad::gather_mean(prototypes, nearest);
  return ad::add(ad::scale(anchor, 1.0 - lambda), ad::scale(e_q, lambda));
}

ad::Var question_response(ad::Var question_embeddings, std::span<const int> responses) {
  const auto n = question_embeddings.rows();
  if (static_cast<Eigen::Index>(responses.size()) < n) {
    throw Error("question_response: fewer responses than steps");
  }
  Vector correct(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const int r = responses[static_cast<std::size_t>(t)];
    if (r != 0 && r != 1) throw Error("question_response: response not binary");
    correct(t) = r;
  }
  const Vector wrong = Vector::Ones(n) - correct;
  return ad::concat_cols(ad::row_scale(question_embeddings, correct),
                         ad::row_scale(question_embeddings, wrong));
}

}  // namespace ad_embed

}  // namespace dgkt
