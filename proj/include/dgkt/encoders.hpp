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

#ifndef DGKT_ENCODERS_HPP
#define DGKT_ENCODERS_HPP

#include "dgkt/core_data.hpp"
#include "dgkt/params.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dgkt {

enum class EncoderVariant { kDKT, kSAINT, kRA };

std::string to_string(EncoderVariant v);
EncoderVariant parse_encoder_variant(const std::string& s);

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::kRA;
  int d = 256;
  int n_heads = 4;
  int n_layers = 2;
  bool use_seqin = true;
  bool use_positions = true;
  int max_length = kDefaultWindowLength;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Question relations

/// R(i, j) = [q_i == q_j] + [concepts of q_i and q_j intersect], all pairs.
IndexMatrix relevance_matrix(std::span<const int> questions, const DomainSpec& domain);

/// Added to every softplus increment so the ordering survives underflow.
inline constexpr double kRelevanceFloor = 1e-6;

/// Relevance weights (a, b, c) with 0 < a < b < c, built from unconstrained
/// u via a = s(u_a), b = a + s(u_b), c = b + s(u_c), s = softplus + floor.
std::array<double, 3> relevance_weights(double u_a, double u_b, double u_c);
double softplus(double x);
double inverse_softplus(double y);

/// Differentiable version over three 1x1 variables; returns a 3x1 Var.
ad::Var relevance_weights(ad::Var u_a, ad::Var u_b, ad::Var u_c);

// ---------------------------------------------------------------------------
// Attention

enum class CausalMask {
  kStrict,     // query j sees keys i < j
  kInclusive,  // query j sees keys i <= j
};

/// Post-softmax attention weights per head, for inspection and export.
struct AttentionTrace {
  std::vector<Matrix> heads;  // each L x L, rows are queries
};

/// Multi-head scaled dot-product attention over pre-projected Q, K, V
/// (L x d each, split into `heads` column blocks). When `relevance` is given,
/// each weight alpha_ji is multiplied by lambda[R(i, j)] and the row is
/// renormalized. A query with no visible key yields a zero row.
ad::Var attention(ad::Var q, ad::Var k, ad::Var v, int heads, CausalMask mask,
                  const IndexMatrix* relevance = nullptr,
                  std::optional<ad::Var> lambda = std::nullopt, AttentionTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Recurrence

/// Single-layer LSTM, zero initial state. x: L x in, w_x: in x 4h,
/// w_h: h x 4h, bias: 1 x 4h, gate order (input, forget, cell, output).
ad::Var lstm(ad::Var x, ad::Var w_x, ad::Var w_h, ad::Var bias);

// ---------------------------------------------------------------------------
// Encoders

/// Adds the variant's parameters (encoder/<variant>/..., seqin/<site>/...,
/// relevance/...) to the store.
void init_encoder_params(ParamStore& store, const EncoderConfig& config, std::uint64_t seed);

/// SeqIN site name used for a variant: dkt_h, saint_o or ra_x.
std::string seqin_site(EncoderVariant v);

struct EncoderInputs {
  ad::Var question_embeddings;   // L x d
  ad::Var response_embeddings;   // L x 2d
  const IndexMatrix* relevance = nullptr;  // required for kRA
};

struct EncoderOutput {
  /// Row t is the knowledge state used to predict the response at step t;
  /// it depends on responses before t and questions up to t.
  ad::Var states;
  /// Per-layer attention traces (attention variants only).
  std::vector<AttentionTrace> traces;
};

EncoderOutput encode(const EncoderConfig& config, Binder& params, const EncoderInputs& inputs,
                     bool record_attention = false);

}  // namespace dgkt

#endif  // DGKT_ENCODERS_HPP
