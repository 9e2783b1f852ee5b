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

#include "dgkt/autograd.hpp"

#include <string>

namespace dgkt::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::needs_grad() const { return tape_->needs_grad(id_); }

Var Tape::constant(Matrix value) { return make(std::move(value), false, {}); }

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), Matrix(), true, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::make(Matrix value, bool needs_grad, Pullback pullback) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.pullback = std::move(pullback);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root, double seed) {
  if (root.tape() != this) throw Error("backward: variable belongs to another tape");
  if (root.value().size() != 1) throw Error("backward: root must be a scalar");
  if (!needs_grad(root.id())) return;
  grad(root.id())(0, 0) += seed;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.pullback && n.grad.size() != 0) n.pullback(n.value, n.grad);
  }
}

namespace {

void require(bool ok, const char* op, Var a, Var b) {
  if (!ok) {
    throw Error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw Error("autograd: operands live on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  require(a.cols() == b.rows(), "matmul", a, b);
  return a.tape()->make(a.value() * b.value(), a.needs_grad() || b.needs_grad(),
                        [a, b](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad().noalias() += g * b.value().transpose();
                          if (b.needs_grad()) b.grad().noalias() += a.value().transpose() * g;
                        });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  return a.tape()->make(a.value() * b.value().transpose(), a.needs_grad() || b.needs_grad(),
                        [a, b](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad().noalias() += g * b.value();
                          if (b.needs_grad()) b.grad().noalias() += g.transpose() * a.value();
                        });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  return a.tape()->make(a.value() + b.value(), a.needs_grad() || b.needs_grad(),
                        [a, b](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad() += g;
                          if (b.needs_grad()) b.grad() += g;
                        });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a, b);
  return a.tape()->make(a.value() - b.value(), a.needs_grad() || b.needs_grad(),
                        [a, b](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad() += g;
                          if (b.needs_grad()) b.grad() -= g;
                        });
}

Var scale(Var a, double s) {
  return a.tape()->make(a.value() * s, a.needs_grad(),
                        [a, s](const Matrix&, const Matrix& g) { a.grad() += g * s; });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", a, row);
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape()->make(std::move(out), a.needs_grad() || row.needs_grad(),
                        [a, row](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad() += g;
                          if (row.needs_grad()) row.grad() += g.colwise().sum();
                        });
}

Var cwise_mul(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "cwise_mul", a, b);
  return a.tape()->make(a.value().cwiseProduct(b.value()), a.needs_grad() || b.needs_grad(),
                        [a, b](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad() += g.cwiseProduct(b.value());
                          if (b.needs_grad()) b.grad() += g.cwiseProduct(a.value());
                        });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape()->make(std::move(out), a.needs_grad(), [a](const Matrix&, const Matrix& g) {
    a.grad().array() += (a.value().array() > 0.0).select(g.array(), 0.0);
  });
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape()->make(std::move(out), a.needs_grad(), [a](const Matrix& y, const Matrix& g) {
    a.grad().array() += g.array() * y.array() * (1.0 - y.array());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape()->make(std::move(out), a.needs_grad(), [a](const Matrix& y, const Matrix& g) {
    a.grad().array() += g.array() * (1.0 - y.array().square());
  });
}

Var concat_cols(Var a, Var b) {
  require_same_tape(a, b);
  require(a.rows() == b.rows(), "concat_cols", a, b);
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Eigen::Index ac = a.cols();
  const Eigen::Index bc = b.cols();
  return a.tape()->make(std::move(out), a.needs_grad() || b.needs_grad(),
                        [a, b, ac, bc](const Matrix&, const Matrix& g) {
                          if (a.needs_grad()) a.grad() += g.leftCols(ac);
                          if (b.needs_grad()) b.grad() += g.rightCols(bc);
                        });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw Error("slice_cols: out of range");
  return a.tape()->make(a.value().middleCols(start, count), a.needs_grad(),
                        [a, start, count](const Matrix&, const Matrix& g) {
                          a.grad().middleCols(start, count) += g;
                        });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw Error("slice_rows: out of range");
  return a.tape()->make(a.value().middleRows(start, count), a.needs_grad(),
                        [a, start, count](const Matrix&, const Matrix& g) {
                          a.grad().middleRows(start, count) += g;
                        });
}

Var row_scale(Var a, const Vector& weights) {
  if (weights.size() != a.rows()) throw Error("row_scale: weight count != rows");
  Matrix out = weights.asDiagonal() * a.value();
  return a.tape()->make(std::move(out), a.needs_grad(), [a, weights](const Matrix&, const Matrix& g) {
    a.grad() += weights.asDiagonal() * g;
  });
}

Var gather_mean(Var table, std::span<const std::vector<int>> index_lists) {
  const Matrix& e = table.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(index_lists.size()), e.cols());
  for (std::size_t t = 0; t < index_lists.size(); ++t) {
    const auto& idx = index_lists[t];
    if (idx.empty()) throw Error("gather_mean: empty index list at row " + std::to_string(t));
    for (int i : idx) {
      if (i < 0 || i >= e.rows()) throw Error("gather_mean: index out of range");
      out.row(static_cast<Eigen::Index>(t)) += e.row(i);
    }
    out.row(static_cast<Eigen::Index>(t)) /= static_cast<double>(idx.size());
  }
  std::vector<std::vector<int>> lists(index_lists.begin(), index_lists.end());
  return table.tape()->make(std::move(out), table.needs_grad(),
                            [table, lists = std::move(lists)](const Matrix&, const Matrix& g) {
                              Matrix& tg = table.grad();
                              for (std::size_t t = 0; t < lists.size(); ++t) {
                                const double w = 1.0 / static_cast<double>(lists[t].size());
                                for (int i : lists[t]) {
                                  tg.row(i) += w * g.row(static_cast<Eigen::Index>(t));
                                }
                              }
                            });
}

Var shift_down(Var a, Var first) {
  require_same_tape(a, first);
  require(first.rows() == 1 && first.cols() == a.cols(), "shift_down", a, first);
  const Eigen::Index n = a.rows();
  Matrix out(n, a.cols());
  if (n > 0) {
    out.row(0) = first.value().row(0);
    if (n > 1) out.bottomRows(n - 1) = a.value().topRows(n - 1);
  }
  return a.tape()->make(std::move(out), a.needs_grad() || first.needs_grad(),
                        [a, first, n](const Matrix&, const Matrix& g) {
                          if (n == 0) return;
                          if (first.needs_grad()) first.grad() += g.topRows(1);
                          if (a.needs_grad() && n > 1) a.grad().topRows(n - 1) += g.bottomRows(n - 1);
                        });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->make(std::move(out), a.needs_grad(),
                        [a](const Matrix&, const Matrix& g) { a.grad().array() += g(0, 0); });
}

Var weighted_sum(Var a, const Matrix& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
    throw Error("weighted_sum: shape mismatch");
  }
  Matrix out(1, 1);
  out(0, 0) = a.value().cwiseProduct(weights).sum();
  return a.tape()->make(std::move(out), a.needs_grad(),
                        [a, weights](const Matrix&, const Matrix& g) { a.grad() += g(0, 0) * weights; });
}

}  // namespace dgkt::ad
