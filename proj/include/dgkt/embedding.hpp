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

#ifndef DGKT_EMBEDDING_HPP
#define DGKT_EMBEDDING_HPP

#include "dgkt/autograd.hpp"
#include "dgkt/core_data.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace dgkt {

/// Per-domain concept embeddings (n_c x d).
struct ConceptTable {
  Matrix embeddings;
  int domain_id = 0;
  bool trainable = true;
};

/// Pooled concept prototypes (k x d) and the k x n_e one-hot assignment of
/// every source concept, columns ordered by domain then concept.
struct PrototypeTable {
  Matrix embeddings;
  BinaryMatrix assignment;
  /// Column offset of each source domain inside `assignment`.
  std::vector<int> domain_offsets;

  int k() const { return static_cast<int>(embeddings.rows()); }
  /// k x n_c slice of the assignment belonging to source `domain_index`.
  BinaryMatrix assignment_slice(std::size_t domain_index, int n_concepts) const;
};

struct TargetConceptTable {
  Matrix embeddings;
  std::vector<int> init_choices;  // prototype that seeded each row
  double lambda = 0.7;
};

/// Uniform(-1/sqrt(d), 1/sqrt(d)) concept table.
Matrix init_concept_embeddings(int n_concepts, int d, std::uint64_t seed);

/// Mean of the rows of `table` selected by `indices`.
template <typename Derived>
RowVectorT<typename Derived::Scalar> mean_of_rows(const Eigen::MatrixBase<Derived>& table,
                                                  std::span<const int> indices) {
  if (indices.empty()) throw Error("mean_of_rows: no rows selected");
  RowVectorT<typename Derived::Scalar> acc = RowVectorT<typename Derived::Scalar>::Zero(table.cols());
  for (int i : indices) {
    if (i < 0 || i >= table.rows()) throw Error("mean_of_rows: row index out of range");
    acc += table.row(i);
  }
  return acc / static_cast<typename Derived::Scalar>(indices.size());
}

/// Concept-averaged question embedding.
template <typename Derived>
RowVectorT<typename Derived::Scalar> question_embedding(int q, const DomainSpec& domain,
                                                        const Eigen::MatrixBase<Derived>& table) {
  if (table.rows() != domain.n_concepts()) throw Error("question_embedding: table/domain mismatch");
  const auto& concepts = domain.concepts_of(q);
  if (concepts.empty()) throw Error("question_embedding: question has no concept");
  return mean_of_rows(table, concepts);
}

/// (e_q, 0) for a correct response, (0, e_q) otherwise.
template <typename Derived>
RowVectorT<typename Derived::Scalar> question_response_embedding(
    const Eigen::MatrixBase<Derived>& e_q, int response) {
  if (response != 0 && response != 1) throw Error("question_response_embedding: response not binary");
  const auto d = e_q.size();
  RowVectorT<typename Derived::Scalar> out = RowVectorT<typename Derived::Scalar>::Zero(2 * d);
  out.segment(response == 1 ? 0 : d, d) = e_q.derived().reshaped().transpose();
  return out;
}

/// Question-to-prototype incidence: binarize(assignment_slice * q_matrix).
BinaryMatrix proto_q_matrix(const BinaryMatrix& assignment_slice, const BinaryMatrix& q_matrix);

/// Nonzero row indices of column q.
std::vector<int> column_support(const BinaryMatrix& m, int q);

template <typename Derived>
RowVectorT<typename Derived::Scalar> prototype_question_embedding(
    int q, const BinaryMatrix& proto_q, const Eigen::MatrixBase<Derived>& prototypes) {
  if (q < 0 || q >= proto_q.cols()) throw Error("prototype_question_embedding: bad question id");
  if (proto_q.rows() != prototypes.rows()) throw Error("prototype_question_embedding: k mismatch");
  const auto rows = column_support(proto_q, q);
  if (rows.empty()) throw Error("prototype_question_embedding: question maps to no prototype");
  return mean_of_rows(prototypes, rows);
}

/// Index of the nearest prototype (Euclidean); ties go to the lowest index.
template <typename DerivedA, typename DerivedB>
int nearest_prototype(const Eigen::MatrixBase<DerivedA>& e_q,
                      const Eigen::MatrixBase<DerivedB>& prototypes) {
  int best = -1;
  auto best_dist = std::numeric_limits<typename DerivedB::Scalar>::infinity();
  for (Eigen::Index i = 0; i < prototypes.rows(); ++i) {
    const auto dist = (prototypes.row(i) - e_q.derived().reshaped().transpose()).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw Error("nearest_prototype: empty prototype table");
  return best;
}

struct TargetQuestionEmbedding {
  RowVector embedding;
  int nearest = 0;
};

/// (1 - lambda) * nearest prototype + lambda * concept-averaged embedding.
TargetQuestionEmbedding target_question_embedding(int q, const DomainSpec& domain,
                                                  const Matrix& target_embeddings,
                                                  const Matrix& prototypes, double lambda);

namespace ad_embed {

// Tape versions used during training. Each returns an L x d (or L x 2d) Var.

/// Rows are means over per-step index lists (concepts or prototypes).
ad::Var lookup(ad::Var table, std::span<const std::vector<int>> lists);

/// Target-domain mixing path; the argmin is taken on current values and
/// receives no gradient.
ad::Var target_lookup(ad::Var target_table, ad::Var prototypes,
                      std::span<const std::vector<int>> concept_lists, double lambda);

ad::Var question_response(ad::Var question_embeddings, std::span<const int> responses);

}  // namespace ad_embed

}  // namespace dgkt

#endif  // DGKT_EMBEDDING_HPP
