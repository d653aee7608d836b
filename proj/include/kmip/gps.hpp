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
#include <memory>
#include <string>
#include <vector>

#include "kmip/attention.hpp"
#include "kmip/graph.hpp"
#include "kmip/matrix.hpp"
#include "kmip/rng.hpp"
#include "kmip/workspace.hpp"

namespace kmip {

// Gated message passing on edge features of the same width d as the nodes.
// For an edge j -> i with features e_ij (row vectors, right-multiplied):
//   e_hat = e_ij W3 + x_i W4 + x_j W5
//   x_i'  = x_i + x_i W1 + sum_{j -> i} sigmoid(e_hat) * (x_j W2)
//   e_ij' = e_ij + e_hat
struct MpnnWeights {
  Matrix w1, w2, w3, w4, w5;  // each d x d

  std::size_t dim() const noexcept { return w1.rows(); }
  static MpnnWeights random(std::size_t d, Rng& rng);
  MpnnWeights zeros_like() const;

  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f(self.w1);
    f(self.w2);
    f(self.w3);
    f(self.w4);
    f(self.w5);
  }
};

struct MpnnTape {
  Matrix src_proj;  // x W2
  Matrix gate;      // sigmoid(e_hat), |E| x d
};

struct MpnnResult {
  Matrix x;
  Matrix e;
  MpnnTape tape;
};

MpnnResult mpnn_forward(const Matrix& x, const Graph& g, const Matrix& e,
                        const MpnnWeights& w);

struct MpnnGrads {
  Matrix grad_x;
  Matrix grad_e;
  MpnnWeights grad_w;
};

// Gradient of mpnn_forward (residuals included).
MpnnGrads mpnn_backward(const Matrix& x, const Graph& g, const Matrix& e,
                        const MpnnWeights& w, const MpnnTape& tape,
                        const Matrix& grad_x_out, const Matrix& grad_e_out);

struct LayerNormParams {
  Matrix gamma;  // 1 x d
  Matrix beta;   // 1 x d
  static LayerNormParams identity(std::size_t d);
};

struct GpsLayerParams {
  MpnnWeights mpnn;
  AttentionParams<double> attn;
  Matrix mlp_w1, mlp_b1;  // d x r, 1 x r
  Matrix mlp_w2, mlp_b2;  // r x d, 1 x d
  LayerNormParams norm_local, norm_attn, norm_out;
  bool layer_norm = true;
  double attn_dropout = 0.0;
  double mlp_dropout = 0.0;

  std::size_t dim() const noexcept { return mpnn.dim(); }
  void validate() const;
  static GpsLayerParams random(std::size_t d, std::size_t heads, std::size_t d_k,
                               std::size_t d_v, std::size_t k, std::size_t mlp_hidden,
                               Rng& rng);
  GpsLayerParams zeros_like() const;

  // Visits trainable matrices in a fixed order. Norm parameters are skipped
  // when layer_norm is off.
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    MpnnWeights::visit(self.mpnn, f);
    self.attn.for_each(f);
    f(self.mlp_w1);
    f(self.mlp_b1);
    f(self.mlp_w2);
    f(self.mlp_b2);
    if (self.layer_norm) {
      for (auto* n : {&self.norm_local, &self.norm_attn, &self.norm_out}) {
        f(n->gamma);
        f(n->beta);
      }
    }
  }
};

struct ForwardOptions {
  AttentionKind kind = AttentionKind::kKmip;
  TileConfig tiles;
  bool training = false;  // enables dropout
  Rng* rng = nullptr;     // required when training with dropout > 0
};

struct GpsLayerTape;  // opaque intermediate state

struct GpsLayerOutput {
  Matrix x;
  Matrix e;
  std::shared_ptr<GpsLayerTape> tape;
};

// X_M = LN(x + MPNN(x, e)), X_T = LN(x + Attn(x)), H = X_M + X_T,
// x' = LN(H + MLP(H)), e' = e + e_hat. Without layer norm and with all
// weights zero this is x' = 2x.
GpsLayerOutput gps_layer_forward(const Matrix& x, const Matrix& e, const Graph& g,
                                 const GpsLayerParams& p, const ForwardOptions& opts,
                                 Workspace& ws);

struct GpsLayerGrads {
  Matrix grad_x;
  Matrix grad_e;
  GpsLayerParams grad_params;
};

GpsLayerGrads gps_layer_backward(const GpsLayerTape& tape, const Graph& g,
                                 const GpsLayerParams& p, const Matrix& grad_x_out,
                                 const Matrix& grad_e_out, Workspace& ws);

enum class PeKind { kNone, kLapPe, kRwse };

const char* to_string(PeKind kind);
PeKind pe_kind_from_string(const std::string& name);

struct PeConfig {
  PeKind kind = PeKind::kNone;
  std::size_t dim = 0;
  std::size_t width() const noexcept { return kind == PeKind::kNone ? 0 : dim; }
};

struct GpsConfig {
  std::size_t d_in = 1;
  std::size_t d_edge_in = 0;
  std::size_t hidden = 16;
  std::size_t layers = 2;
  std::size_t heads = 1;
  std::size_t d_k = 0;          // 0: hidden
  std::size_t d_v = 0;          // 0: hidden
  std::size_t k = 10;
  std::size_t mlp_hidden = 0;   // 0: 2 * hidden
  std::size_t head_hidden = 0;  // 0: hidden
  std::size_t classes = 2;
  PeConfig pe;
  bool layer_norm = true;
  double attn_dropout = 0.0;
  double mlp_dropout = 0.0;

  void validate() const;
};

struct GpsModel {
  GpsConfig config;
  Matrix enc_w, enc_b;    // (d_in + pe) x d, 1 x d
  Matrix edge_w, edge_b;  // d_edge_in x d, 1 x d
  std::vector<GpsLayerParams> layers;
  Matrix head_w1, head_b1;  // d x h, 1 x h
  Matrix head_w2, head_b2;  // h x classes, 1 x classes

  static GpsModel random(const GpsConfig& config, Rng& rng);
  GpsModel zeros_like() const;
  std::size_t parameter_count() const;

  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F&& f) {
    f(self.enc_w);
    f(self.enc_b);
    f(self.edge_w);
    f(self.edge_b);
    for (auto& l : self.layers) GpsLayerParams::visit(l, f);
    f(self.head_w1);
    f(self.head_b1);
    f(self.head_w2);
    f(self.head_b2);
  }
};

// Node features with the configured positional encoding appended.
Matrix model_inputs(const Graph& g, const PeConfig& pe);

struct ModelTape;

struct ModelOutput {
  Matrix logits;
  std::shared_ptr<ModelTape> tape;
};

ModelOutput model_forward(const Graph& g, const GpsModel& m, const ForwardOptions& opts,
                          Workspace& ws);

// Same, with inputs already produced by model_inputs (lets callers cache
// positional encodings across epochs).
ModelOutput model_forward(const Matrix& inputs, const Graph& g, const GpsModel& m,
                          const ForwardOptions& opts, Workspace& ws);

GpsModel model_backward(const ModelTape& tape, const Graph& g, const GpsModel& m,
                        const Matrix& grad_logits, Workspace& ws);

Matrix model_logits(const Graph& g, const GpsModel& m, AttentionKind kind);

}  // namespace kmip
