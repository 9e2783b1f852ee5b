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

#ifndef DGKT_PARAMS_HPP
#define DGKT_PARAMS_HPP

#include "dgkt/autograd.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace dgkt {

struct Parameter {
  Matrix value;
  Matrix grad;  // same shape as value
  bool trainable = true;
};

/// Named tensors, ordered by name so iteration (and serialization) is stable.
class ParamStore {
 public:
  /// Inserts or replaces.
  Parameter& add(const std::string& name, Matrix value, bool trainable = true);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return at(name).value; }
  void erase(const std::string& name) { params_.erase(name); }

  /// Marks exactly the parameters for which `pred(name)` holds as trainable.
  void set_trainable(const std::function<bool(const std::string&)>& pred);
  std::vector<std::string> trainable_names() const;
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  void zero_grad();
  /// L2 norm over the gradients of trainable parameters.
  double grad_norm() const;
  void scale_grad(double s);

  /// FNV-1a over the raw bytes of the listed tensors (order-sensitive).
  std::uint64_t hash(const std::vector<std::string>& names) const;

  std::map<std::string, Parameter>& items() { return params_; }
  const std::map<std::string, Parameter>& items() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

/// Places parameters onto a tape. Trainable parameters become variables whose
/// gradients are pushed back with accumulate(); the rest become constants.
class Binder {
 public:
  /// With `no_grad`, every parameter binds as a constant.
  Binder(ad::Tape& tape, ParamStore& store, bool no_grad = false)
      : tape_(tape), store_(store), no_grad_(no_grad) {}
  /// Read-only binding; implies no_grad.
  Binder(ad::Tape& tape, const ParamStore& store)
      : tape_(tape), store_(const_cast<ParamStore&>(store)), no_grad_(true) {}

  ad::Var operator()(const std::string& name);
  ad::Tape& tape() { return tape_; }
  const ParamStore& store() const { return store_; }

  /// Adds `scale` times each bound variable's gradient into the store.
  void accumulate(double scale = 1.0);

 private:
  ad::Tape& tape_;
  ParamStore& store_;
  bool no_grad_ = false;
  std::unordered_map<std::string, ad::Var> bound_;
};

/// Adam with bias correction; moments are keyed by parameter name.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Updates every trainable parameter from its grad. Returns the global
  /// gradient norm before clipping (clip <= 0 disables clipping).
  double step(ParamStore& store, double clip_norm = 0.0);
  void reset();
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

}  // namespace dgkt

#endif  // DGKT_PARAMS_HPP
