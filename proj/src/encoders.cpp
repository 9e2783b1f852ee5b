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

#include "dgkt/encoders.hpp"

#include "dgkt/random.hpp"
#include "dgkt/seqin.hpp"

#include <algorithm>
#include <cmath>

namespace dgkt {

namespace {
using RowArray = Eigen::Array<double, 1, Eigen::Dynamic>;
}  // namespace

std::string to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::kDKT: return "dkt";
    case EncoderVariant::kSAINT: return "saint";
    case EncoderVariant::kRA: return "ra";
  }
  return "?";
}

EncoderVariant parse_encoder_variant(const std::string& s) {
  if (s == "dkt") return EncoderVariant::kDKT;
  if (s == "saint") return EncoderVariant::kSAINT;
  if (s == "ra" || s == "dgrkt") return EncoderVariant::kRA;
  throw Error("unknown encoder variant '" + s + "' (expected dkt, saint or ra)");
}

void EncoderConfig::validate() const {
  if (d <= 0) throw Error("encoder: d must be positive");
  if (n_layers <= 0) throw Error("encoder: n_layers must be positive");
  if (max_length < 2) throw Error("encoder: max_length must be >= 2");
  if (variant != EncoderVariant::kDKT && (n_heads <= 0 || d % n_heads != 0)) {
    throw Error("encoder: d must be divisible by n_heads");
  }
}

// ---------------------------------------------------------------------------

IndexMatrix relevance_matrix(std::span<const int> questions, const DomainSpec& domain) {
  const auto n = static_cast<Eigen::Index>(questions.size());
  IndexMatrix r = IndexMatrix::Zero(n, n);
  std::vector<const std::vector<int>*> sets;
  sets.reserve(questions.size());
  for (int q : questions) sets.push_back(&domain.concepts_of(q));
  auto intersects = [](const std::vector<int>& a, const std::vector<int>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
      if (*i == *j) return true;
      if (*i < *j) ++i; else ++j;
    }
    return false;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const int v = (questions[static_cast<std::size_t>(i)] == questions[static_cast<std::size_t>(j)]) +
                    (intersects(*sets[static_cast<std::size_t>(i)], *sets[static_cast<std::size_t>(j)]) ? 1 : 0);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw Error("inverse_softplus: argument must be positive");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

std::array<double, 3> relevance_weights(double u_a, double u_b, double u_c) {
  const double a = softplus(u_a) + kRelevanceFloor;
  const double b = a + softplus(u_b) + kRelevanceFloor;
  const double c = b + softplus(u_c) + kRelevanceFloor;
  return {a, b, c};
}

ad::Var relevance_weights(ad::Var u_a, ad::Var u_b, ad::Var u_c) {
  const auto w = relevance_weights(u_a.value()(0, 0), u_b.value()(0, 0), u_c.value()(0, 0));
  Matrix out(3, 1);
  out << w[0], w[1], w[2];
  const bool needs = u_a.needs_grad() || u_b.needs_grad() || u_c.needs_grad();
  return u_a.tape()->make(std::move(out), needs, [u_a, u_b, u_c](const Matrix&, const Matrix& g) {
    auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const double ga = g(0, 0), gb = g(1, 0), gc = g(2, 0);
    if (u_a.needs_grad()) u_a.grad()(0, 0) += (ga + gb + gc) * sig(u_a.value()(0, 0));
    if (u_b.needs_grad()) u_b.grad()(0, 0) += (gb + gc) * sig(u_b.value()(0, 0));
    if (u_c.needs_grad()) u_c.grad()(0, 0) += gc * sig(u_c.value()(0, 0));
  });
}

// ---------------------------------------------------------------------------

ad::Var attention(ad::Var q, ad::Var k, ad::Var v, int heads, CausalMask mask,
                  const IndexMatrix* relevance, std::optional<ad::Var> lambda,
                  AttentionTrace* trace) {
  const auto steps = q.rows();
  const auto d = q.cols();
  if (k.rows() != steps || v.rows() != steps || k.cols() != d || v.cols() != d) {
    throw Error("attention: q, k, v must share shape");
  }
  if (heads <= 0 || d % heads != 0) throw Error("attention: width not divisible by heads");
  if ((relevance == nullptr) != !lambda.has_value()) {
    throw Error("attention: relevance matrix and weights must be given together");
  }
  if (relevance && (relevance->rows() < steps || relevance->cols() < steps)) {
    throw Error("attention: relevance matrix smaller than sequence");
  }
  Eigen::Array3d log_lambda = Eigen::Array3d::Zero();
  if (lambda) {
    if (lambda->rows() != 3 || lambda->cols() != 1) throw Error("attention: lambda must be 3x1");
    log_lambda = lambda->value().col(0).array().log();
  }
  const auto dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  auto visible = [mask](Eigen::Index j) { return mask == CausalMask::kStrict ? j : j + 1; };

  std::vector<Matrix> weights(static_cast<std::size_t>(heads));
  Matrix out = Matrix::Zero(steps, d);
  for (int h = 0; h < heads; ++h) {
    const auto qh = q.value().middleCols(h * dh, dh);
    const auto kh = k.value().middleCols(h * dh, dh);
    Matrix scores = (qh * kh.transpose()) * inv_sqrt;
    Matrix& w = weights[static_cast<std::size_t>(h)];
    w = Matrix::Zero(steps, steps);
    for (Eigen::Index j = 0; j < steps; ++j) {
      const Eigen::Index n = visible(j);
      if (n == 0) continue;
      auto row = w.row(j).head(n);
      row = scores.row(j).head(n);
      if (relevance) {
        for (Eigen::Index i = 0; i < n; ++i) row(i) += log_lambda((*relevance)(j, i));
      }
      const double mx = row.maxCoeff();
      row = (row.array() - mx).exp().matrix();
      row /= row.sum();
    }
    out.middleCols(h * dh, dh).noalias() = w * v.value().middleCols(h * dh, dh);
  }
  if (trace) trace->heads = weights;

  const bool needs = q.needs_grad() || k.needs_grad() || v.needs_grad() ||
                     (lambda && lambda->needs_grad());
  return q.tape()->make(
      std::move(out), needs,
      [q, k, v, heads, dh, inv_sqrt, relevance_copy = relevance ? *relevance : IndexMatrix(),
       has_rel = relevance != nullptr, lambda, weights = std::move(weights),
       visible](const Matrix&, const Matrix& g) {
        const auto steps = q.rows();
        Eigen::Array3d dlog = Eigen::Array3d::Zero();
        for (int h = 0; h < heads; ++h) {
          const Matrix& w = weights[static_cast<std::size_t>(h)];
          const auto gh = g.middleCols(h * dh, dh);
          const auto vh = v.value().middleCols(h * dh, dh);
          if (v.needs_grad()) v.grad().middleCols(h * dh, dh).noalias() += w.transpose() * gh;
          Matrix dw = gh * vh.transpose();
          Matrix ds = Matrix::Zero(steps, steps);
          for (Eigen::Index j = 0; j < steps; ++j) {
            const Eigen::Index n = visible(j);
            if (n == 0) continue;
            const auto wr = w.row(j).head(n).array();
            const auto dr = dw.row(j).head(n).array();
            const double dot = (wr * dr).sum();
            ds.row(j).head(n) = (wr * (dr - dot)).matrix();
            if (has_rel) {
              for (Eigen::Index i = 0; i < n; ++i) dlog(relevance_copy(j, i)) += ds(j, i);
            }
          }
          if (q.needs_grad()) {
            q.grad().middleCols(h * dh, dh).noalias() += (ds * k.value().middleCols(h * dh, dh)) * inv_sqrt;
          }
          if (k.needs_grad()) {
            k.grad().middleCols(h * dh, dh).noalias() +=
                (ds.transpose() * q.value().middleCols(h * dh, dh)) * inv_sqrt;
          }
        }
        if (has_rel && lambda->needs_grad()) {
          lambda->grad().col(0).array() += dlog / lambda->value().col(0).array();
        }
      });
}

// ---------------------------------------------------------------------------

ad::Var lstm(ad::Var x, ad::Var w_x, ad::Var w_h, ad::Var bias) {
  const auto steps = x.rows();
  const auto hidden = w_h.rows();
  if (w_x.rows() != x.cols() || w_x.cols() != 4 * hidden || w_h.cols() != 4 * hidden ||
      bias.rows() != 1 || bias.cols() != 4 * hidden) {
    throw Error("lstm: parameter shapes do not match");
  }
  // gates row t: activated (i, f, g, o); cells row t: c_t.
  Matrix pre = x.value() * w_x.value();
  pre.rowwise() += bias.value().row(0);
  Matrix gates(steps, 4 * hidden);
  Matrix cells(steps, hidden);
  Matrix out(steps, hidden);
  RowVector h = RowVector::Zero(hidden);
  RowVector c = RowVector::Zero(hidden);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (Eigen::Index t = 0; t < steps; ++t) {
    RowVector z = pre.row(t) + h * w_h.value();
    auto gi = z.segment(0, hidden).unaryExpr(sig);
    auto gf = z.segment(hidden, hidden).unaryExpr(sig);
    auto gg = z.segment(2 * hidden, hidden).array().tanh().matrix();
    auto go = z.segment(3 * hidden, hidden).unaryExpr(sig);
    gates.row(t) << gi, gf, gg, go;
    c = (gates.row(t).segment(hidden, hidden).array() * c.array() +
         gates.row(t).segment(0, hidden).array() * gates.row(t).segment(2 * hidden, hidden).array())
            .matrix();
    cells.row(t) = c;
    h = (gates.row(t).segment(3 * hidden, hidden).array() * c.array().tanh()).matrix();
    out.row(t) = h;
  }
  const bool needs = x.needs_grad() || w_x.needs_grad() || w_h.needs_grad() || bias.needs_grad();
  return x.tape()->make(
      out, needs,
      [x, w_x, w_h, bias, gates = std::move(gates), cells = std::move(cells),
       hidden](const Matrix& hs, const Matrix& g) {
        const auto steps = hs.rows();
        Matrix dz(steps, 4 * hidden);
        RowVector dh_next = RowVector::Zero(hidden);
        RowVector dc_next = RowVector::Zero(hidden);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
          const auto i = gates.row(t).segment(0, hidden).array();
          const auto f = gates.row(t).segment(hidden, hidden).array();
          const auto gg = gates.row(t).segment(2 * hidden, hidden).array();
          const auto o = gates.row(t).segment(3 * hidden, hidden).array();
          const RowArray tc = cells.row(t).array().tanh();
          const RowArray c_prev =
              t > 0 ? RowArray(cells.row(t - 1).array()) : RowArray::Zero(1, hidden);
          const RowArray dh = g.row(t).array() + dh_next.array();
          const RowArray dc = dh * o * (1.0 - tc.square()) + dc_next.array();
          dz.row(t).segment(0, hidden) = (dc * gg * i * (1.0 - i)).matrix();
          dz.row(t).segment(hidden, hidden) = (dc * c_prev * f * (1.0 - f)).matrix();
          dz.row(t).segment(2 * hidden, hidden) = (dc * i * (1.0 - gg.square())).matrix();
          dz.row(t).segment(3 * hidden, hidden) = (dh * tc * o * (1.0 - o)).matrix();
          dc_next = (dc * f).matrix();
          dh_next = dz.row(t) * w_h.value().transpose();
        }
        if (x.needs_grad()) x.grad().noalias() += dz * w_x.value().transpose();
        if (w_x.needs_grad()) w_x.grad().noalias() += x.value().transpose() * dz;
        if (w_h.needs_grad() && steps > 1) {
          w_h.grad().noalias() += hs.topRows(steps - 1).transpose() * dz.bottomRows(steps - 1);
        }
        if (bias.needs_grad()) bias.grad() += dz.colwise().sum();
      });
}

// ---------------------------------------------------------------------------

namespace {

std::string prefix(const EncoderConfig& c) { return "encoder/" + to_string(c.variant) + "/"; }

Matrix glorot(Rng& rng, Eigen::Index out, Eigen::Index in) {
  return rng.uniform_matrix(out, in, std::sqrt(6.0 / static_cast<double>(in + out)));
}

void add_linear(ParamStore& s, Rng& rng, const std::string& name, Eigen::Index out, Eigen::Index in) {
  s.add(name + "/W", glorot(rng, out, in));
  s.add(name + "/b", Matrix::Zero(1, out));
}

void add_attention_block(ParamStore& s, Rng& rng, const std::string& name, int d) {
  for (const char* m : {"Wq", "Wk", "Wv", "Wo"}) s.add(name + "/" + m, glorot(rng, d, d));
}

void add_seqin(ParamStore& s, const std::string& site, int d) {
  const std::string p = "seqin/" + site + "/";
  s.add(p + "gamma", Matrix::Ones(1, d));
  s.add(p + "beta", Matrix::Zero(1, d));
  s.add(p + "p", Matrix::Zero(1, d));
}

ad::Var linear(Binder& b, const std::string& name, ad::Var x) {
  return ad::add_row(ad::matmul_nt(x, b(name + "/W")), b(name + "/b"));
}

ad::Var feed_forward(Binder& b, const std::string& name, ad::Var x) {
  return linear(b, name + "/ff2", ad::relu(linear(b, name + "/ff1", x)));
}

ad::Var project_attend(Binder& b, const std::string& name, ad::Var query_src, ad::Var key_src,
                       ad::Var value_src, int heads, CausalMask mask, const IndexMatrix* rel,
                       std::optional<ad::Var> lambda, std::vector<AttentionTrace>* traces) {
  AttentionTrace trace;
  ad::Var att = attention(ad::matmul_nt(query_src, b(name + "/Wq")),
                          ad::matmul_nt(key_src, b(name + "/Wk")),
                          ad::matmul_nt(value_src, b(name + "/Wv")), heads, mask, rel, lambda,
                          traces ? &trace : nullptr);
  if (traces) traces->push_back(std::move(trace));
  return ad::matmul_nt(att, b(name + "/Wo"));
}

ad::Var apply_seqin(Binder& b, const EncoderConfig& c, ad::Var x) {
  if (!c.use_seqin) return x;
  const std::string p = "seqin/" + seqin_site(c.variant) + "/";
  return seqin(x, b(p + "gamma"), b(p + "beta"), b(p + "p"));
}

ad::Var with_positions(Binder& b, const EncoderConfig& c, const std::string& table, ad::Var x) {
  if (!c.use_positions) return x;
  if (x.rows() > c.max_length) throw Error("encoder: sequence longer than max_length");
  return ad::add(x, ad::slice_rows(b(prefix(c) + table), 0, x.rows()));
}

EncoderOutput encode_dkt(const EncoderConfig& c, Binder& b, const EncoderInputs& in) {
  const std::string p = prefix(c);
  ad::Var h = lstm(in.response_embeddings, b(p + "Wx"), b(p + "Wh"), b(p + "b"));
  h = apply_seqin(b, c, h);
  ad::Var start = b.tape().constant(Matrix::Zero(1, c.d));
  return {ad::shift_down(h, start), {}};
}

EncoderOutput encode_saint(const EncoderConfig& c, Binder& b, const EncoderInputs& in,
                           bool record) {
  const std::string p = prefix(c);
  EncoderOutput out;
  std::vector<AttentionTrace>* traces = record ? &out.traces : nullptr;
  ad::Var e = with_positions(b, c, "pos_q", in.question_embeddings);
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string name = p + "enc" + std::to_string(l);
    e = ad::add(e, project_attend(b, name, e, e, e, c.n_heads, CausalMask::kInclusive, nullptr,
                                  std::nullopt, traces));
    e = ad::add(e, feed_forward(b, name, e));
  }
  ad::Var o = apply_seqin(b, c, e);
  ad::Var responses = linear(b, p + "qr_proj", in.response_embeddings);
  ad::Var dec = with_positions(b, c, "pos_qr", ad::shift_down(responses, b(p + "start")));
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string name = p + "dec" + std::to_string(l);
    dec = ad::add(dec, project_attend(b, name + "/self", dec, dec, dec, c.n_heads,
                                      CausalMask::kInclusive, nullptr, std::nullopt, traces));
    dec = ad::add(dec, project_attend(b, name + "/cross", dec, o, o, c.n_heads,
                                      CausalMask::kInclusive, nullptr, std::nullopt, traces));
    dec = ad::add(dec, feed_forward(b, name, dec));
  }
  out.states = dec;
  return out;
}

EncoderOutput encode_ra(const EncoderConfig& c, Binder& b, const EncoderInputs& in, bool record) {
  if (in.relevance == nullptr) throw Error("encoder: RA variant needs a relevance matrix");
  const std::string p = prefix(c);
  EncoderOutput out;
  std::vector<AttentionTrace>* traces = record ? &out.traces : nullptr;
  ad::Var lambda = relevance_weights(b("relevance/u_a"), b("relevance/u_b"), b("relevance/u_c"));
  ad::Var keys = with_positions(b, c, "pos_q", in.question_embeddings);
  ad::Var values = with_positions(b, c, "pos_qr", linear(b, p + "qr_proj", in.response_embeddings));
  ad::Var x = keys;
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string name = p + "layer" + std::to_string(l);
    x = ad::add(x, project_attend(b, name, x, keys, values, c.n_heads, CausalMask::kStrict,
                                  in.relevance, lambda, traces));
    x = ad::add(x, feed_forward(b, name, x));
  }
  out.states = apply_seqin(b, c, x);
  return out;
}

}  // namespace

std::string seqin_site(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::kDKT: return "dkt_h";
    case EncoderVariant::kSAINT: return "saint_o";
    case EncoderVariant::kRA: return "ra_x";
  }
  return "?";
}

void init_encoder_params(ParamStore& s, const EncoderConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  const std::string p = prefix(c);
  const int d = c.d;
  const double pos_scale = 0.1 / std::sqrt(static_cast<double>(d));
  switch (c.variant) {
    case EncoderVariant::kDKT: {
      s.add(p + "Wx", glorot(rng, 2 * d, 4 * d));
      s.add(p + "Wh", glorot(rng, d, 4 * d));
      Matrix bias = Matrix::Zero(1, 4 * d);
      bias.middleCols(d, d).setOnes();  // forget gate starts open
      s.add(p + "b", bias);
      break;
    }
    case EncoderVariant::kSAINT: {
      s.add(p + "pos_q", rng.uniform_matrix(c.max_length, d, pos_scale));
      s.add(p + "pos_qr", rng.uniform_matrix(c.max_length, d, pos_scale));
      add_linear(s, rng, p + "qr_proj", d, 2 * d);
      s.add(p + "start", rng.uniform_matrix(1, d, 1.0 / std::sqrt(static_cast<double>(d))));
      for (int l = 0; l < c.n_layers; ++l) {
        const std::string enc = p + "enc" + std::to_string(l);
        add_attention_block(s, rng, enc, d);
        add_linear(s, rng, enc + "/ff1", d, d);
        add_linear(s, rng, enc + "/ff2", d, d);
        const std::string dec = p + "dec" + std::to_string(l);
        add_attention_block(s, rng, dec + "/self", d);
        add_attention_block(s, rng, dec + "/cross", d);
        add_linear(s, rng, dec + "/ff1", d, d);
        add_linear(s, rng, dec + "/ff2", d, d);
      }
      break;
    }
    case EncoderVariant::kRA: {
      s.add(p + "pos_q", rng.uniform_matrix(c.max_length, d, pos_scale));
      s.add(p + "pos_qr", rng.uniform_matrix(c.max_length, d, pos_scale));
      add_linear(s, rng, p + "qr_proj", d, 2 * d);
      for (int l = 0; l < c.n_layers; ++l) {
        const std::string layer = p + "layer" + std::to_string(l);
        add_attention_block(s, rng, layer, d);
        add_linear(s, rng, layer + "/ff1", d, d);
        add_linear(s, rng, layer + "/ff2", d, d);
      }
      // a = 1, b = 1.5, c = 2 at initialization (up to the floor).
      s.add("relevance/u_a", Matrix::Constant(1, 1, inverse_softplus(1.0)));
      s.add("relevance/u_b", Matrix::Constant(1, 1, inverse_softplus(0.5)));
      s.add("relevance/u_c", Matrix::Constant(1, 1, inverse_softplus(0.5)));
      break;
    }
  }
  if (c.use_seqin) add_seqin(s, seqin_site(c.variant), d);
}

EncoderOutput encode(const EncoderConfig& config, Binder& params, const EncoderInputs& inputs,
                     bool record_attention) {
  const auto steps = inputs.question_embeddings.rows();
  if (steps == 0) throw Error("encoder: empty sequence");
  if (inputs.question_embeddings.cols() != config.d ||
      inputs.response_embeddings.cols() != 2 * config.d ||
      inputs.response_embeddings.rows() != steps) {
    throw Error("encoder: embedding shapes do not match d");
  }
  switch (config.variant) {
    case EncoderVariant::kDKT: return encode_dkt(config, params, inputs);
    case EncoderVariant::kSAINT: return encode_saint(config, params, inputs, record_attention);
    case EncoderVariant::kRA: return encode_ra(config, params, inputs, record_attention);
  }
  throw Error("encoder: unknown variant");
}

}  // namespace dgkt
