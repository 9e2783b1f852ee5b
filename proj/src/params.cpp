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

#include "dgkt/params.hpp"

#include <cmath>
#include <cstring>

namespace dgkt {

Parameter& ParamStore::add(const std::string& name, Matrix value, bool trainable) {
  Parameter p;
  p.grad = Matrix::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  p.trainable = trainable;
  auto [it, inserted] = params_.insert_or_assign(name, std::move(p));
  return it->second;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::set_trainable(const std::function<bool(const std::string&)>& pred) {
  for (auto& [name, p] : params_) p.trainable = pred(name);
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) {
    if (p.trainable) out.push_back(name);
  }
  return out;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, p] : params_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [name, p] : params_) {
    if (p.trainable) sq += p.grad.squaredNorm();
  }
  return std::sqrt(sq);
}

void ParamStore::scale_grad(double s) {
  for (auto& [name, p] : params_) p.grad *= s;
}

std::uint64_t ParamStore::hash(const std::vector<std::string>& names) const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& name : names) {
    const auto& v = at(name).value;
    mix(name.data(), name.size());
    const std::int64_t shape[2] = {v.rows(), v.cols()};
    mix(shape, sizeof(shape));
    mix(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  }
  return h;
}

ad::Var Binder::operator()(const std::string& name) {
  if (auto it = bound_.find(name); it != bound_.end()) return it->second;
  const Parameter& p = store_.at(name);
  ad::Var v = p.trainable && !no_grad_ ? tape_.variable(p.value) : tape_.constant(p.value);
  bound_.emplace(name, v);
  return v;
}

void Binder::accumulate(double scale) {
  if (no_grad_) throw Error("Binder: accumulate on a no-grad binding");
  for (auto& [name, v] : bound_) {
    if (!v.needs_grad() || !tape_.has_grad(v.id())) continue;
    store_.at(name).grad += scale * v.grad();
  }
}

double Adam::step(ParamStore& store, double clip_norm) {
  const double norm = store.grad_norm();
  if (!std::isfinite(norm)) throw Error("Adam: non-finite gradient norm");
  const double factor = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, p] : store.items()) {
    if (!p.trainable) continue;
    auto [it, inserted] = moments_.try_emplace(name);
    auto& [m, v] = it->second;
    if (inserted) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    const Matrix g = p.grad * factor;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.value.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
  return norm;
}

void Adam::reset() {
  t_ = 0;
  moments_.clear();
}

}  // namespace dgkt
