// Copyright 2026 The kmip Authors. All Rights Reserved.
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

#include "kmip/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace kmip {

namespace {

class Fnv1a {
 public:
  void add(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001B3ULL;
    }
  }
  template <typename T>
  void add(const BasicMatrix<T>& m) {
    const std::uint64_t dims[2] = {m.rows(), m.cols()};
    add(dims, sizeof(dims));
    add(m.data(), m.bytes());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

template <typename T>
std::uint64_t fingerprint(AttentionKind kind, const BasicMatrix<T>& x,
                          const AttentionParams<T>& p, std::size_t k_eff) {
  Fnv1a h;
  const std::uint64_t meta[3] = {static_cast<std::uint64_t>(kind), k_eff, p.num_heads()};
  h.add(meta, sizeof(meta));
  h.add(x);
  p.for_each([&](const BasicMatrix<T>& w) { h.add(w); });
  return h.value();
}

template <typename T>
void check_input(const BasicMatrix<T>& x, const AttentionParams<T>& p) {
  p.validate();
  if (x.cols() != p.d_model) {
    throw ShapeError("attention: input " + shape_str(x) + " but d_model=" +
                     std::to_string(p.d_model));
  }
}

template <typename T>
void check_tape(const AttentionTape<T>& tape, AttentionKind expected,
                const BasicMatrix<T>& x, const AttentionParams<T>& p,
                const BasicMatrix<T>& grad_y) {
  check_input(x, p);
  if (tape.kind != expected) {
    throw ContractError(std::string("attention backward: tape was recorded by ") +
                        to_string(tape.kind) + " attention, not " + to_string(expected));
  }
  if (tape.n != x.rows() || tape.heads.size() != p.num_heads()) {
    throw ContractError("attention backward: tape does not match the input shape");
  }
  if (tape.fingerprint != fingerprint(tape.kind, x, p, tape.k_eff)) {
    throw ContractError("attention backward: stale tape (inputs or weights changed)");
  }
  if (grad_y.rows() != x.rows() || grad_y.cols() != p.d_model) {
    throw ShapeError("attention backward: grad_y " + shape_str(grad_y) + ", expected " +
                     shape_str(x));
  }
}

template <typename T>
std::size_t tape_bytes(const typename AttentionTape<T>::Head& h) {
  std::size_t b = h.q.bytes() + h.key.bytes() + h.v.bytes() + h.probs.bytes() + h.out.bytes();
  if (h.topk) b += h.topk->indices.bytes() + h.topk->values.bytes();
  return b;
}

// Shared k-MIP tail: softmax over the retained scores, gather, weighted sum.
template <typename T>
void finish_kmip_head(typename AttentionTape<T>::Head& h, std::size_t d_k, Workspace& ws) {
  const TopKResult<T>& topk = *h.topk;
  const std::size_t n = topk.rows(), k = topk.k(), d_v = h.v.cols();
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(d_k));

  h.probs = topk.values;
  scale_inplace(h.probs, inv_sqrt);
  softmax_rows_inplace(h.probs);

  auto gather_charge = ws.charge_elems<T>(n * k * d_v);
  const BasicMatrix<T> gathered = gather_rows(h.v, topk.indices);
  h.out = BasicMatrix<T>(n, d_v);
  for (std::size_t i = 0; i < n; ++i) {
    T* o = h.out.data() + i * d_v;
    for (std::size_t j = 0; j < k; ++j) {
      const T a = h.probs(i, j);
      const T* v = gathered.data() + (i * k + j) * d_v;
      for (std::size_t t = 0; t < d_v; ++t) o[t] += a * v[t];
    }
  }
}

template <typename T>
AttentionOutput<T> kmip_forward_impl(const BasicMatrix<T>& x, const AttentionParams<T>& p,
                                     const TileConfig* cfg, Workspace& ws) {
  check_input(x, p);
  const std::size_t n = x.rows();
  if (n == 0) throw ShapeError("attention: empty input");
  AttentionOutput<T> res;
  res.tape.kind = AttentionKind::kKmip;
  res.tape.n = n;
  res.tape.k_eff = std::min(p.k, n);
  res.tape.fingerprint = fingerprint(AttentionKind::kKmip, x, p, res.tape.k_eff);
  res.y = BasicMatrix<T>(n, p.d_model);
  auto y_charge = ws.charge(res.y.bytes());

  for (const auto& w : p.heads) {
    typename AttentionTape<T>::Head h;
    h.q = matmul(x, w.w_q);
    h.key = matmul(x, w.w_k);
    h.v = matmul(x, w.w_v);
    auto proj_charge = ws.charge(h.q.bytes() + h.key.bytes() + h.v.bytes());
    h.topk = cfg != nullptr ? rowwise_topk(h.q, h.key, res.tape.k_eff, *cfg, ws)
                            : rowwise_topk_dense(h.q, h.key, res.tape.k_eff, ws);
    auto topk_charge = ws.charge(h.topk->indices.bytes() + h.topk->values.bytes());
    finish_kmip_head<T>(h, p.d_k, ws);
    proj_charge.release();
    topk_charge.release();
    res.tape.charges.push_back(ws.charge(tape_bytes<T>(h)));
    add_inplace(res.y, matmul(h.out, w.w_o));
    res.tape.heads.push_back(std::move(h));
  }
  return res;
}

}  // namespace

const char* to_string(AttentionKind kind) {
  return kind == AttentionKind::kFull ? "full" : "kmip";
}

AttentionKind attention_kind_from_string(const std::string& name) {
  if (name == "full") return AttentionKind::kFull;
  if (name == "kmip") return AttentionKind::kKmip;
  throw ParameterError("unknown attention kind '" + name + "' (expected full|kmip)");
}

template <typename T>
void AttentionParams<T>::validate() const {
  if (heads.empty()) throw ShapeError("attention: no heads");
  if (k == 0) throw ParameterError("attention: k must be >= 1");
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const auto& w = heads[h];
    auto expect = [&](const BasicMatrix<T>& m, std::size_t r, std::size_t c, const char* nm) {
      if (m.rows() != r || m.cols() != c) {
        throw ShapeError("attention head " + std::to_string(h) + ": " + nm + " is " +
                         shape_str(m) + ", expected " + shape_str(r, c));
      }
    };
    expect(w.w_q, d_model, d_k, "W_Q");
    expect(w.w_k, d_model, d_k, "W_K");
    expect(w.w_v, d_model, d_v, "W_V");
    expect(w.w_o, d_v, d_model, "W_O");
  }
}

template <typename T>
AttentionParams<T> AttentionParams<T>::zeros_like() const {
  AttentionParams<T> z = *this;
  z.for_each([](BasicMatrix<T>& m) { m.fill(T{}); });
  return z;
}

template <typename T>
AttentionParams<T> AttentionParams<T>::random(std::size_t d_model, std::size_t heads,
                                              std::size_t d_k, std::size_t d_v,
                                              std::size_t k, Rng& rng) {
  AttentionParams<T> p;
  p.d_model = d_model;
  p.d_k = d_k;
  p.d_v = d_v;
  p.k = k;
  const double s_in = 1.0 / std::sqrt(static_cast<double>(d_model));
  const double s_v = 1.0 / std::sqrt(static_cast<double>(d_v));
  for (std::size_t h = 0; h < heads; ++h) {
    HeadWeights<T> w;
    w.w_q = random_normal<T>(d_model, d_k, rng, s_in);
    w.w_k = random_normal<T>(d_model, d_k, rng, s_in);
    w.w_v = random_normal<T>(d_model, d_v, rng, s_in);
    w.w_o = random_normal<T>(d_v, d_model, rng, s_v);
    p.heads.push_back(std::move(w));
  }
  return p;
}

template <typename T>
AttentionOutput<T> full_attention_forward(const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p, Workspace& ws) {
  check_input(x, p);
  const std::size_t n = x.rows();
  if (n == 0) throw ShapeError("attention: empty input");
  AttentionOutput<T> res;
  res.tape.kind = AttentionKind::kFull;
  res.tape.n = n;
  res.tape.k_eff = n;
  res.tape.fingerprint = fingerprint(AttentionKind::kFull, x, p, n);
  res.y = BasicMatrix<T>(n, p.d_model);
  auto y_charge = ws.charge(res.y.bytes());
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(p.d_k));

  for (const auto& w : p.heads) {
    typename AttentionTape<T>::Head h;
    h.q = matmul(x, w.w_q);
    h.key = matmul(x, w.w_k);
    h.v = matmul(x, w.w_v);
    auto proj_charge = ws.charge(h.q.bytes() + h.key.bytes() + h.v.bytes());
    auto score_charge = ws.charge_elems<T>(n * n);
    h.probs = matmul_a_bt(h.q, h.key);
    scale_inplace(h.probs, inv_sqrt);
    softmax_rows_inplace(h.probs);
    h.out = matmul(h.probs, h.v);
    auto out_charge = ws.charge(h.out.bytes());
    add_inplace(res.y, matmul(h.out, w.w_o));
    proj_charge.release();
    score_charge.release();
    out_charge.release();
    // The tape keeps the N x N probabilities alive for the backward pass.
    res.tape.charges.push_back(ws.charge(tape_bytes<T>(h)));
    res.tape.heads.push_back(std::move(h));
  }
  return res;
}

template <typename T>
AttentionOutput<T> kmip_attention_forward(const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const TileConfig& cfg, Workspace& ws) {
  return kmip_forward_impl(x, p, &cfg, ws);
}

template <typename T>
AttentionOutput<T> kmip_naive_attention_forward(const BasicMatrix<T>& x,
                                                const AttentionParams<T>& p,
                                                Workspace& ws) {
  return kmip_forward_impl<T>(x, p, nullptr, ws);
}

template <typename T>
AttentionGrads<T> kmip_attention_backward(const AttentionTape<T>& tape,
                                          const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const BasicMatrix<T>& grad_y, Workspace& ws) {
  check_tape(tape, AttentionKind::kKmip, x, p, grad_y);
  const std::size_t n = x.rows(), d_v = p.d_v;
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(p.d_k));
  AttentionGrads<T> g{BasicMatrix<T>(n, p.d_model), p.zeros_like()};
  auto gx_charge = ws.charge(g.grad_x.bytes());

  for (std::size_t hi = 0; hi < p.num_heads(); ++hi) {
    const auto& h = tape.heads[hi];
    const auto& w = p.heads[hi];
    auto& gw = g.grad_params.heads[hi];
    const TopKResult<T>& topk = *h.topk;
    const std::size_t k = topk.k();

    gw.w_o = matmul_at_b(h.out, grad_y);
    const BasicMatrix<T> grad_out = matmul_a_bt(grad_y, w.w_o);  // N x d_v
    auto scratch = ws.charge(grad_out.bytes() + 2 * n * k * sizeof(T) + h.v.bytes() +
                             h.q.bytes() + h.key.bytes());

    // Through the weighted sum over gathered values.
    BasicMatrix<T> grad_probs(n, k);
    BasicMatrix<T> grad_v(h.v.rows(), d_v);
    for (std::size_t i = 0; i < n; ++i) {
      const T* go = grad_out.data() + i * d_v;
      for (std::size_t j = 0; j < k; ++j) {
        const auto src = static_cast<std::size_t>(topk.indices(i, j));
        const T* v = h.v.data() + src * d_v;
        T* gv = grad_v.data() + src * d_v;
        const T a = h.probs(i, j);
        T s{};
        for (std::size_t t = 0; t < d_v; ++t) {
          s += go[t] * v[t];
          gv[t] += a * go[t];
        }
        grad_probs(i, j) = s;
      }
    }
    // Softmax Jacobian over the k retained entries, then the 1/sqrt(d_k).
    BasicMatrix<T> grad_scores(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      T dot{};
      for (std::size_t j = 0; j < k; ++j) dot += h.probs(i, j) * grad_probs(i, j);
      for (std::size_t j = 0; j < k; ++j)
        grad_scores(i, j) = h.probs(i, j) * (grad_probs(i, j) - dot) * inv_sqrt;
    }
    const TopKGrads<T> gqk = topk_backward(h.q, h.key, topk, grad_scores);

    gw.w_q = matmul_at_b(x, gqk.grad_q);
    gw.w_k = matmul_at_b(x, gqk.grad_key);
    gw.w_v = matmul_at_b(x, grad_v);
    add_inplace(g.grad_x, matmul_a_bt(gqk.grad_q, w.w_q));
    add_inplace(g.grad_x, matmul_a_bt(gqk.grad_key, w.w_k));
    add_inplace(g.grad_x, matmul_a_bt(grad_v, w.w_v));
  }
  return g;
}

template <typename T>
AttentionGrads<T> full_attention_backward(const AttentionTape<T>& tape,
                                          const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const BasicMatrix<T>& grad_y, Workspace& ws) {
  check_tape(tape, AttentionKind::kFull, x, p, grad_y);
  const std::size_t n = x.rows();
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(p.d_k));
  AttentionGrads<T> g{BasicMatrix<T>(n, p.d_model), p.zeros_like()};
  auto gx_charge = ws.charge(g.grad_x.bytes());

  for (std::size_t hi = 0; hi < p.num_heads(); ++hi) {
    const auto& h = tape.heads[hi];
    const auto& w = p.heads[hi];
    auto& gw = g.grad_params.heads[hi];

    gw.w_o = matmul_at_b(h.out, grad_y);
    const BasicMatrix<T> grad_out = matmul_a_bt(grad_y, w.w_o);
    auto square_charge = ws.charge_elems<T>(n * n);
    BasicMatrix<T> grad_scores = matmul_a_bt(grad_out, h.v);  // dA, N x N
    const BasicMatrix<T> grad_v = matmul_at_b(h.probs, grad_out);
    for (std::size_t i = 0; i < n; ++i) {
      T dot{};
      for (std::size_t j = 0; j < n; ++j) dot += h.probs(i, j) * grad_scores(i, j);
      for (std::size_t j = 0; j < n; ++j)
        grad_scores(i, j) = h.probs(i, j) * (grad_scores(i, j) - dot) * inv_sqrt;
    }
    const BasicMatrix<T> grad_q = matmul(grad_scores, h.key);
    const BasicMatrix<T> grad_key = matmul_at_b(grad_scores, h.q);

    gw.w_q = matmul_at_b(x, grad_q);
    gw.w_k = matmul_at_b(x, grad_key);
    gw.w_v = matmul_at_b(x, grad_v);
    add_inplace(g.grad_x, matmul_a_bt(grad_q, w.w_q));
    add_inplace(g.grad_x, matmul_a_bt(grad_key, w.w_k));
    add_inplace(g.grad_x, matmul_a_bt(grad_v, w.w_v));
  }
  return g;
}

template <typename T>
AttentionOutput<T> attention_forward(AttentionKind kind, const BasicMatrix<T>& x,
                                     const AttentionParams<T>& p, const TileConfig& cfg,
                                     Workspace& ws) {
  return kind == AttentionKind::kFull ? full_attention_forward(x, p, ws)
                                      : kmip_attention_forward(x, p, cfg, ws);
}

template <typename T>
AttentionGrads<T> attention_backward(const AttentionTape<T>& tape, const BasicMatrix<T>& x,
                                     const AttentionParams<T>& p,
                                     const BasicMatrix<T>& grad_y, Workspace& ws) {
  return tape.kind == AttentionKind::kFull ? full_attention_backward(tape, x, p, grad_y, ws)
                                           : kmip_attention_backward(tape, x, p, grad_y, ws);
}

Matrix scaled_hardmax_limit_check(const Matrix& z, std::size_t k, double lambda) {
  if (k == 0) throw ParameterError("scaled_hardmax_limit_check: k must be >= 1");
  if (!(lambda >= 0.0)) throw ParameterError("scaled_hardmax_limit_check: lambda < 0");
  const std::size_t cols = z.cols();
  const std::size_t keep = std::min(k, cols);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Matrix out(z.rows(), cols, kNegInf);
  std::vector<std::size_t> order(cols);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return z(i, a) > z(i, b); });
    for (std::size_t j = 0; j < keep; ++j) out(i, order[j]) = lambda * z(i, order[j]);
  }
  softmax_rows_inplace(out);
  return out;
}

#define KMIP_INSTANTIATE(T)                                                                \
  template struct AttentionParams<T>;                                                      \
  template AttentionOutput<T> full_attention_forward(const BasicMatrix<T>&,                \
                                                     const AttentionParams<T>&, Workspace&); \
  template AttentionOutput<T> kmip_attention_forward(                                      \
      const BasicMatrix<T>&, const AttentionParams<T>&, const TileConfig&, Workspace&);    \
  template AttentionOutput<T> kmip_naive_attention_forward(                                \
      const BasicMatrix<T>&, const AttentionParams<T>&, Workspace&);                       \
  template AttentionGrads<T> kmip_attention_backward(                                      \
      const AttentionTape<T>&, const BasicMatrix<T>&, const AttentionParams<T>&,           \
      const BasicMatrix<T>&, Workspace&);                                                  \
  template AttentionGrads<T> full_attention_backward(                                      \
      const AttentionTape<T>&, const BasicMatrix<T>&, const AttentionParams<T>&,           \
      const BasicMatrix<T>&, Workspace&);                                                  \
  template AttentionOutput<T> attention_forward(AttentionKind, const BasicMatrix<T>&,      \
                                                const AttentionParams<T>&,                 \
                                                const TileConfig&, Workspace&);            \
  template AttentionGrads<T> attention_backward(const AttentionTape<T>&,                   \
                                                const BasicMatrix<T>&,                     \
                                                const AttentionParams<T>&,                 \
                                                const BasicMatrix<T>&, Workspace&);

KMIP_INSTANTIATE(float)
KMIP_INSTANTIATE(double)

#undef KMIP_INSTANTIATE

}  // namespace kmip
