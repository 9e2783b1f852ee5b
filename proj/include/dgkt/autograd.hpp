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

#ifndef DGKT_AUTOGRAD_HPP
#define DGKT_AUTOGRAD_HPP

// Minimal reverse-mode differentiation over dense double matrices.
//
// A Tape records nodes in creation order; backward() walks them in reverse
// and calls each node's pullback. Nodes that do not need a gradient carry no
// pullback and are skipped. One tape per sequence forward pass.

#include "dgkt/types.hpp"

#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace dgkt::ad {

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Matrix& grad() const;  // allocated (zeros) on first access
  bool needs_grad() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);  // leaf that collects a gradient

  using Pullback = std::function<void(const Matrix& out_value, const Matrix& out_grad)>;

  /// Registers an op result. `pullback` receives the result's value and gradient and
  /// accumulates into the inputs; it is only kept when needs_grad.
  Var make(Matrix value, bool needs_grad, Pullback pullback);

  /// Seeds d(root)/d(root) with `seed` (root must be 1x1) and runs pullbacks.
  void backward(Var root, double seed = 1.0);

  const Matrix& value(int id) const { return nodes_[id].value; }
  Matrix& grad(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    Pullback pullback;
  };
  std::deque<Node> nodes_;
};

// Elementwise and linear-algebra primitives. Shapes are checked.
Var matmul(Var a, Var b);     // a * b
Var matmul_nt(Var a, Var b);  // a * b^T
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);  // broadcast a 1 x n row over every row of a
Var cwise_mul(Var a, Var b);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
/// Multiplies row t by weights[t] (weights held constant).
Var row_scale(Var a, const Vector& weights);
/// Row t of the result is the mean of table rows listed in index_lists[t].
Var gather_mean(Var table, std::span<const std::vector<int>> index_lists);
/// Moves rows down by one; row 0 becomes `first` (1 x cols).
Var shift_down(Var a, Var first);
Var sum(Var a);
/// sum(a .* weights) with constant weights; the usual gradient-check probe.
Var weighted_sum(Var a, const Matrix& weights);

}  // namespace dgkt::ad

#endif  // DGKT_AUTOGRAD_HPP
