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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "kmip/matrix.hpp"
#include "kmip/mipkernel.hpp"
#include "kmip/rng.hpp"
#include "kmip/workspace.hpp"

namespace kmip {

enum class AttentionKind { kFull, kKmip };

const char* to_string(AttentionKind kind);
AttentionKind attention_kind_from_string(const std::string& name);

template <typename T>
struct HeadWeights {
  BasicMatrix<T> w_q;  // d x d_k
  BasicMatrix<T> w_k;  // d x d_k
  BasicMatrix<T> w_v;  // d x d_v
  BasicMatrix<T> w_o;  // d_v x d
};

template <typename T>
struct AttentionParams {
  std::size_t d_model = 0;
  std::size_t d_k = 0;
  std::size_t d_v = 0;
  std::size_t k = 1;  // ignored by full attention; clamped to N when applied
  std::vector<HeadWeights<T>> heads;

  std::size_t num_heads() const noexcept { return heads.size(); }
  void validate() const;

  // Same shapes, all weights zero (gradient accumulator).
  AttentionParams zeros_like() const;

  // Gaussian weights with stddev 1/sqrt(fan_in).
  static AttentionParams random(std::size_t d_model, std::size_t heads, std::size_t d_k,
                                std::size_t d_v, std::size_t k, Rng& rng);

  template <typename F>
  void for_each(F&& f) {
    for (auto& h : heads) {
      f(h.w_q);
      f(h.w_k);
      f(h.w_v);
      f(h.w_o);
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& h : heads) {
      f(h.w_q);
      f(h.w_k);
      f(h.w_v);
      f(h.w_o);
    }
  }
};

// Everything the backward pass needs from a forward call. For k-MIP the
// top-k selection is cached here and reused, never recomputed.
template <typename T>
struct AttentionTape {
  struct Head {
    BasicMatrix<T> q, key, v;       // projected inputs
    std::optional<TopKResult<T>> topk;  // k-MIP only
    BasicMatrix<T> probs;           // N x k' (k-MIP) or N x N (full)
    BasicMatrix<T> out;             // per-head output before W_O
  };
  AttentionKind kind = AttentionKind::kFull;
  std::size_t n = 0;
  std::size_t k_eff = 0;
  std::uint64_t fingerprint = 0;  // binds the tape to (x, params)
  std::vector<Head> heads;
  // Workspace bytes held by the cached tensors; released with the tape, so
  // the workspace must outlive it.
  std::vector<Workspace::Charge> charges;
};

template <typename T>
struct AttentionOutput {
  BasicMatrix<T> y;
  AttentionTape<T> tape;
};

template <typename T>
struct AttentionGrads {
  BasicMatrix<T> grad_x;
  AttentionParams<T> grad_params;
};

// y = sum_h softmax(Q_h K_h^T / sqrt(d_k)) V_h W_O^h with dense N x N scores.
template <typename T>
AttentionOutput<T> full_attention_forward(const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p, Workspace& ws);

// Per head: top-k' keys by raw inner product (k' = min(k, N)), softmax of
// the retained scores / sqrt(d_k), weighted sum of the gathered values.
template <typename T>
AttentionOutput<T> kmip_attention_forward(const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const TileConfig& cfg, Workspace& ws);

// k-MIP forward that selects through the dense score matrix (benchmark
// baseline); numerically identical to kmip_attention_forward.
template <typename T>
AttentionOutput<T> kmip_naive_attention_forward(const BasicMatrix<T>& x,
                                                const AttentionParams<T>& p,
                                                Workspace& ws);

// Exact gradient with the cached index set held fixed.
// O(N k (d_k + d_v) H + N d d_k H); no N x N term.
template <typename T>
AttentionGrads<T> kmip_attention_backward(const AttentionTape<T>& tape,
                                          const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const BasicMatrix<T>& grad_y, Workspace& ws);

template <typename T>
AttentionGrads<T> full_attention_backward(const AttentionTape<T>& tape,
                                          const BasicMatrix<T>& x,
                                          const AttentionParams<T>& p,
                                          const BasicMatrix<T>& grad_y, Workspace& ws);

// Dispatch on kind / on the tape's kind.
template <typename T>
AttentionOutput<T> attention_forward(AttentionKind kind, const BasicMatrix<T>& x,
                                     const AttentionParams<T>& p, const TileConfig& cfg,
                                     Workspace& ws);
template <typename T>
AttentionGrads<T> attention_backward(const AttentionTape<T>& tape,
                                     const BasicMatrix<T>& x,
                                     const AttentionParams<T>& p,
                                     const BasicMatrix<T>& grad_y, Workspace& ws);

// softmax(T_k(lambda * z)) row-wise: entries outside each row's top k get
// zero mass. As lambda grows the rows approach one-hot argmax vectors.
Matrix scaled_hardmax_limit_check(const Matrix& z, std::size_t k, double lambda);

}  // namespace kmip
