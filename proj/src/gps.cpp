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

#include "kmip/gps.hpp"

#include <cmath>

#include "kmip/encodings.hpp"
#include "kmip/error.hpp"

namespace kmip {

namespace {

constexpr double kNormEps = 1e-5;

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Matrix normal_init(std::size_t rows, std::size_t cols, Rng& rng) {
  return random_normal(rows, cols, rng, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(rows, 1))));
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + " is " + shape_str(m) + ", expected " +
                     shape_str(rows, cols));
  }
}

Matrix hadamard(Matrix a, const Matrix& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= b.data()[i];
  return a;
}

Matrix linear(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = matmul(x, w);
  add_row_bias(y, b);
  return y;
}

Matrix relu(Matrix m) {
  for (double& v : m.values()) v = v > 0 ? v : 0.0;
  return m;
}

// Zeroes gradient entries whose pre-activation was not positive.
void relu_backward_inplace(Matrix& grad, const Matrix& pre) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(pre.data()[i] > 0)) grad.data()[i] = 0.0;
}

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate,
                    const ForwardOptions& opts) {
  if (!opts.training || rate <= 0.0) return {};
  if (opts.rng == nullptr) throw ParameterError("dropout in training mode needs an rng");
  Matrix mask(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : mask.values()) v = opts.rng->uniform() < rate ? 0.0 : keep;
  return mask;
}

struct NormCache {
  Matrix xhat;
  std::vector<double> inv_std;
};

Matrix layer_norm(const Matrix& x, const LayerNormParams& p, NormCache& cache) {
  const std::size_t n = x.rows(), d = x.cols();
  cache.xhat = Matrix(n, d);
  cache.inv_std.assign(n, 0.0);
  Matrix y(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0;
    for (double v : x.row(i)) mean += v;
    mean /= static_cast<double>(d);
    double var = 0;
    for (double v : x.row(i)) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kNormEps);
    cache.inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      cache.xhat(i, j) = (x(i, j) - mean) * inv;
      y(i, j) = cache.xhat(i, j) * p.gamma(0, j) + p.beta(0, j);
    }
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& grad_y, const LayerNormParams& p,
                           const NormCache& cache, LayerNormParams& grad_p) {
  const std::size_t n = grad_y.rows(), d = grad_y.cols();
  Matrix grad_x(n, d);
  std::vector<double> gxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean_g = 0, mean_gx = 0;
    for (std::size_t j = 0; j < d; ++j) {
      grad_p.gamma(0, j) += grad_y(i, j) * cache.xhat(i, j);
      grad_p.beta(0, j) += grad_y(i, j);
      gxhat[j] = grad_y(i, j) * p.gamma(0, j);
      mean_g += gxhat[j];
      mean_gx += gxhat[j] * cache.xhat(i, j);
    }
    mean_g /= static_cast<double>(d);
    mean_gx /= static_cast<double>(d);
    for (std::size_t j = 0; j < d; ++j)
      grad_x(i, j) = cache.inv_std[i] * (gxhat[j] - mean_g - cache.xhat(i, j) * mean_gx);
  }
  return grad_x;
}

struct MpnnCore {
  Matrix dx;     // x W1 + aggregated messages
  Matrix e_hat;  // |E| x d
  MpnnTape tape;
};

void check_mpnn_inputs(const Matrix& x, const Graph& g, const Matrix& e,
                       const MpnnWeights& w) {
  const std::size_t d = w.dim();
  for (const Matrix* m : {&w.w1, &w.w2, &w.w3, &w.w4, &w.w5})
    require_shape(*m, d, d, "mpnn weight");
  require_shape(x, g.num_nodes(), d, "mpnn node features");
  require_shape(e, g.num_edges(), d, "mpnn edge features");
}

MpnnCore mpnn_core(const Matrix& x, const Graph& g, const Matrix& e, const MpnnWeights& w) {
  check_mpnn_inputs(x, g, e, w);
  const std::size_t d = w.dim();
  MpnnCore out;
  out.dx = matmul(x, w.w1);
  out.e_hat = matmul(e, w.w3);
  out.tape.src_proj = matmul(x, w.w2);
  const Matrix dst_proj = matmul(x, w.w4);
  const Matrix src_gate = matmul(x, w.w5);
  out.tape.gate = Matrix(g.num_edges(), d);
  for (std::size_t id = 0; id < g.num_edges(); ++id) {
    const auto [src, dst] = g.edges()[id];
    for (std::size_t c = 0; c < d; ++c) {
      double& eh = out.e_hat(id, c);
      eh += dst_proj(dst, c) + src_gate(src, c);
      const double gate = sigmoid(eh);
      out.tape.gate(id, c) = gate;
      out.dx(dst, c) += gate * out.tape.src_proj(src, c);
    }
  }
  return out;
}

// Gradients of (dx, e_hat) with respect to x, e and the weights.
MpnnGrads mpnn_core_backward(const Matrix& x, const Graph& g, const Matrix& e,
                             const MpnnWeights& w, const MpnnTape& tape,
                             const Matrix& grad_dx, const Matrix& grad_e_hat) {
  const std::size_t n = g.num_nodes(), d = w.dim();
  require_shape(grad_dx, n, d, "mpnn node gradient");
  require_shape(grad_e_hat, g.num_edges(), d, "mpnn edge gradient");
  Matrix g_src_proj(n, d), g_dst_proj(n, d), g_src_gate(n, d);
  Matrix g_pre = grad_e_hat;  // gradient reaching e_hat before the gate
  for (std::size_t id = 0; id < g.num_edges(); ++id) {
    const auto [src, dst] = g.edges()[id];
    for (std::size_t c = 0; c < d; ++c) {
      const double gate = tape.gate(id, c);
      const double up = grad_dx(dst, c);
      g_src_proj(src, c) += up * gate;
      g_pre(id, c) += up * tape.src_proj(src, c) * gate * (1.0 - gate);
    }
    for (std::size_t c = 0; c < d; ++c) {
      g_dst_proj(dst, c) += g_pre(id, c);
      g_src_gate(src, c) += g_pre(id, c);
    }
  }
  MpnnGrads out;
  out.grad_w.w1 = matmul_at_b(x, grad_dx);
  out.grad_w.w2 = matmul_at_b(x, g_src_proj);
  out.grad_w.w3 = matmul_at_b(e, g_pre);
  out.grad_w.w4 = matmul_at_b(x, g_dst_proj);
  out.grad_w.w5 = matmul_at_b(x, g_src_gate);
  out.grad_x = matmul_a_bt(grad_dx, w.w1);
  add_inplace(out.grad_x, matmul_a_bt(g_src_proj, w.w2));
  add_inplace(out.grad_x, matmul_a_bt(g_dst_proj, w.w4));
  add_inplace(out.grad_x, matmul_a_bt(g_src_gate, w.w5));
  out.grad_e = matmul_a_bt(g_pre, w.w3);
  return out;
}

void accumulate(MpnnWeights& into, const MpnnWeights& g) {
  add_inplace(into.w1, g.w1);
  add_inplace(into.w2, g.w2);
  add_inplace(into.w3, g.w3);
  add_inplace(into.w4, g.w4);
  add_inplace(into.w5, g.w5);
}

}  // namespace

MpnnWeights MpnnWeights::random(std::size_t d, Rng& rng) {
  MpnnWeights w;
  for (Matrix* m : {&w.w1, &w.w2, &w.w3, &w.w4, &w.w5}) *m = normal_init(d, d, rng);
  return w;
}

MpnnWeights MpnnWeights::zeros_like() const {
  const std::size_t d = dim();
  MpnnWeights w;
  for (Matrix* m : {&w.w1, &w.w2, &w.w3, &w.w4, &w.w5}) *m = Matrix(d, d);
  return w;
}

MpnnResult mpnn_forward(const Matrix& x, const Graph& g, const Matrix& e,
                        const MpnnWeights& w) {
  MpnnCore core = mpnn_core(x, g, e, w);
  add_inplace(core.dx, x);
  add_inplace(core.e_hat, e);
  return {std::move(core.dx), std::move(core.e_hat), std::move(core.tape)};
}

MpnnGrads mpnn_backward(const Matrix& x, const Graph& g, const Matrix& e,
                        const MpnnWeights& w, const MpnnTape& tape,
                        const Matrix& grad_x_out, const Matrix& grad_e_out) {
  check_mpnn_inputs(x, g, e, w);
  MpnnGrads out = mpnn_core_backward(x, g, e, w, tape, grad_x_out, grad_e_out);
  add_inplace(out.grad_x, grad_x_out);
  add_inplace(out.grad_e, grad_e_out);
  return out;
}

LayerNormParams LayerNormParams::identity(std::size_t d) {
  return {Matrix(1, d, 1.0), Matrix(1, d, 0.0)};
}

void GpsLayerParams::validate() const {
  const std::size_t d = dim();
  for (const Matrix* m : {&mpnn.w1, &mpnn.w2, &mpnn.w3, &mpnn.w4, &mpnn.w5})
    require_shape(*m, d, d, "mpnn weight");
  attn.validate();
  if (attn.d_model != d) {
    throw ShapeError("attention width " + std::to_string(attn.d_model) +
                     " does not match layer width " + std::to_string(d));
  }
  const std::size_t r = mlp_w1.cols();
  require_shape(mlp_w1, d, r, "mlp_w1");
  require_shape(mlp_b1, 1, r, "mlp_b1");
  require_shape(mlp_w2, r, d, "mlp_w2");
  require_shape(mlp_b2, 1, d, "mlp_b2");
  if (layer_norm) {
    for (const auto* n : {&norm_local, &norm_attn, &norm_out}) {
      require_shape(n->gamma, 1, d, "norm scale");
      require_shape(n->beta, 1, d, "norm shift");
    }
  }
  for (double rate : {attn_dropout, mlp_dropout}) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
  }
}

GpsLayerParams GpsLayerParams::random(std::size_t d, std::size_t heads, std::size_t d_k,
                                      std::size_t d_v, std::size_t k,
                                      std::size_t mlp_hidden, Rng& rng) {
  GpsLayerParams p;
  p.mpnn = MpnnWeights::random(d, rng);
  p.attn = AttentionParams<double>::random(d, heads, d_k, d_v, k, rng);
  p.mlp_w1 = normal_init(d, mlp_hidden, rng);
  p.mlp_b1 = Matrix(1, mlp_hidden);
  p.mlp_w2 = normal_init(mlp_hidden, d, rng);
  p.mlp_b2 = Matrix(1, d);
  p.norm_local = p.norm_attn = p.norm_out = LayerNormParams::identity(d);
  return p;
}

GpsLayerParams GpsLayerParams::zeros_like() const {
  GpsLayerParams z = *this;
  visit(z, [](Matrix& m) { m.fill(0.0); });
  if (!layer_norm) {
    for (auto* n : {&z.norm_local, &z.norm_attn, &z.norm_out}) {
      n->gamma.fill(0.0);
      n->beta.fill(0.0);
    }
  }
  return z;
}

struct GpsLayerTape {
  Matrix x, e;
  MpnnTape mpnn;
  AttentionTape<double> attn;
  Matrix attn_mask;  // empty when dropout is off
  NormCache norm_local, norm_attn, norm_out;
  Matrix h;        // MLP input
  Matrix mlp_pre;  // h W1 + b1
  Matrix mlp_act;  // relu(mlp_pre), after dropout
  Matrix mlp_mask;
};

GpsLayerOutput gps_layer_forward(const Matrix& x, const Matrix& e, const Graph& g,
                                 const GpsLayerParams& p, const ForwardOptions& opts,
                                 Workspace& ws) {
  p.validate();
  auto tape = std::make_shared<GpsLayerTape>();
  tape->x = x;
  tape->e = e;

  MpnnCore core = mpnn_core(x, g, e, p.mpnn);
  tape->mpnn = std::move(core.tape);
  Matrix local = add(x, core.dx);
  if (p.layer_norm) local = layer_norm(local, p.norm_local, tape->norm_local);

  auto attn = attention_forward(opts.kind, x, p.attn, opts.tiles, ws);
  tape->attn = std::move(attn.tape);
  tape->attn_mask = dropout_mask(x.rows(), x.cols(), p.attn_dropout, opts);
  Matrix global = tape->attn_mask.size() ? hadamard(std::move(attn.y), tape->attn_mask)
                                         : std::move(attn.y);
  add_inplace(global, x);
  if (p.layer_norm) global = layer_norm(global, p.norm_attn, tape->norm_attn);

  tape->h = add(local, global);
  tape->mlp_pre = linear(tape->h, p.mlp_w1, p.mlp_b1);
  tape->mlp_act = relu(tape->mlp_pre);
  tape->mlp_mask = dropout_mask(x.rows(), p.mlp_w1.cols(), p.mlp_dropout, opts);
  if (tape->mlp_mask.size()) tape->mlp_act = hadamard(std::move(tape->mlp_act), tape->mlp_mask);
  Matrix out = linear(tape->mlp_act, p.mlp_w2, p.mlp_b2);
  add_inplace(out, tape->h);
  if (p.layer_norm) out = layer_norm(out, p.norm_out, tape->norm_out);

  add_inplace(core.e_hat, e);
  return {std::move(out), std::move(core.e_hat), std::move(tape)};
}

GpsLayerGrads gps_layer_backward(const GpsLayerTape& tape, const Graph& g,
                                 const GpsLayerParams& p, const Matrix& grad_x_out,
                                 const Matrix& grad_e_out, Workspace& ws) {
  require_shape(grad_x_out, tape.x.rows(), tape.x.cols(), "layer node gradient");
  require_shape(grad_e_out, tape.e.rows(), tape.e.cols(), "layer edge gradient");
  GpsLayerGrads out;
  out.grad_params = p.zeros_like();
  GpsLayerParams& gp = out.grad_params;

  Matrix g_u = p.layer_norm ? layer_norm_backward(grad_x_out, p.norm_out, tape.norm_out,
                                                  gp.norm_out)
                            : grad_x_out;
  gp.mlp_w2 = matmul_at_b(tape.mlp_act, g_u);
  gp.mlp_b2 = column_sums(g_u);
  Matrix g_pre = matmul_a_bt(g_u, p.mlp_w2);
  if (tape.mlp_mask.size()) g_pre = hadamard(std::move(g_pre), tape.mlp_mask);
  relu_backward_inplace(g_pre, tape.mlp_pre);
  gp.mlp_w1 = matmul_at_b(tape.h, g_pre);
  gp.mlp_b1 = column_sums(g_pre);
  Matrix g_h = add(g_u, matmul_a_bt(g_pre, p.mlp_w1));

  Matrix g_global = p.layer_norm ? layer_norm_backward(g_h, p.norm_attn, tape.norm_attn,
                                                       gp.norm_attn)
                                 : g_h;
  Matrix g_local = p.layer_norm ? layer_norm_backward(g_h, p.norm_local, tape.norm_local,
                                                      gp.norm_local)
                                : g_h;

  out.grad_x = add(g_global, g_local);
  Matrix g_attn_y = tape.attn_mask.size() ? hadamard(g_global, tape.attn_mask) : g_global;
  auto attn_grads = attention_backward(tape.attn, tape.x, p.attn, g_attn_y, ws);
  add_inplace(out.grad_x, attn_grads.grad_x);
  gp.attn = std::move(attn_grads.grad_params);

  MpnnGrads mg = mpnn_core_backward(tape.x, g, tape.e, p.mpnn, tape.mpnn, g_local, grad_e_out);
  add_inplace(out.grad_x, mg.grad_x);
  accumulate(gp.mpnn, mg.grad_w);
  out.grad_e = add(mg.grad_e, grad_e_out);
  return out;
}

const char* to_string(PeKind kind) {
  switch (kind) {
    case PeKind::kNone: return "none";
    case PeKind::kLapPe: return "lap_pe";
    case PeKind::kRwse: return "rwse";
  }
  return "?";
}

PeKind pe_kind_from_string(const std::string& name) {
  if (name == "none") return PeKind::kNone;
  if (name == "lap_pe") return PeKind::kLapPe;
  if (name == "rwse") return PeKind::kRwse;
  throw ParameterError("unknown positional encoding '" + name +
                       "' (expected none, lap_pe or rwse)");
}

void GpsConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ParameterError(std::string(name) + " must be positive");
  };
  positive(hidden, "hidden");
  positive(heads, "heads");
  positive(k, "k");
  positive(classes, "classes");
  if (d_in + pe.width() == 0) throw ParameterError("model has no input features");
  if (pe.kind != PeKind::kNone) positive(pe.dim, "pe dim");
  for (double rate : {attn_dropout, mlp_dropout}) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw ParameterError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
  }
}

GpsModel GpsModel::random(const GpsConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.hidden;
  const std::size_t dk = config.d_k ? config.d_k : d;
  const std::size_t dv = config.d_v ? config.d_v : d;
  const std::size_t r = config.mlp_hidden ? config.mlp_hidden : 2 * d;
  const std::size_t hh = config.head_hidden ? config.head_hidden : d;
  GpsModel m;
  m.config = config;
  m.enc_w = normal_init(config.d_in + config.pe.width(), d, rng);
  m.enc_b = Matrix(1, d);
  m.edge_w = normal_init(config.d_edge_in, d, rng);
  m.edge_b = Matrix(1, d);
  for (std::size_t l = 0; l < config.layers; ++l) {
    m.layers.push_back(GpsLayerParams::random(d, config.heads, dk, dv, config.k, r, rng));
    m.layers.back().layer_norm = config.layer_norm;
    m.layers.back().attn_dropout = config.attn_dropout;
    m.layers.back().mlp_dropout = config.mlp_dropout;
  }
  m.head_w1 = normal_init(d, hh, rng);
  m.head_b1 = Matrix(1, hh);
  m.head_w2 = normal_init(hh, config.classes, rng);
  m.head_b2 = Matrix(1, config.classes);
  return m;
}

GpsModel GpsModel::zeros_like() const {
  GpsModel z = *this;
  z.for_each([](Matrix& m) { m.fill(0.0); });
  return z;
}

std::size_t GpsModel::parameter_count() const {
  std::size_t total = 0;
  for_each([&](const Matrix& m) { total += m.size(); });
  return total;
}

Matrix model_inputs(const Graph& g, const PeConfig& pe) {
  switch (pe.kind) {
    case PeKind::kNone: return g.node_features();
    case PeKind::kLapPe: return hconcat(g.node_features(), laplacian_pe(g, pe.dim));
    case PeKind::kRwse: return hconcat(g.node_features(), rwse(g, pe.dim));
  }
  return g.node_features();
}

struct ModelTape {
  Matrix inputs;
  std::vector<std::shared_ptr<GpsLayerTape>> layers;
  Matrix last;      // output of the final layer
  Matrix head_pre;  // last W1 + b1
};

ModelOutput model_forward(const Graph& g, const GpsModel& m, const ForwardOptions& opts,
                          Workspace& ws) {
  return model_forward(model_inputs(g, m.config.pe), g, m, opts, ws);
}

ModelOutput model_forward(const Matrix& inputs, const Graph& g, const GpsModel& m,
                          const ForwardOptions& opts, Workspace& ws) {
  const std::size_t want = m.config.d_in + m.config.pe.width();
  if (inputs.rows() != g.num_nodes() || inputs.cols() != want) {
    throw ValidationError("model expects " + shape_str(g.num_nodes(), want) +
                          " node inputs (features + encoding), got " + shape_str(inputs));
  }
  if (g.edge_dim() != m.config.d_edge_in) {
    throw ValidationError("model expects edge features of width " +
                          std::to_string(m.config.d_edge_in) + ", graph has " +
                          std::to_string(g.edge_dim()));
  }
  auto tape = std::make_shared<ModelTape>();
  tape->inputs = inputs;
  Matrix x = linear(inputs, m.enc_w, m.enc_b);
  Matrix e = linear(g.edge_features(), m.edge_w, m.edge_b);
  for (const auto& layer : m.layers) {
    auto out = gps_layer_forward(x, e, g, layer, opts, ws);
    tape->layers.push_back(std::move(out.tape));
    x = std::move(out.x);
    e = std::move(out.e);
  }
  tape->last = std::move(x);
  tape->head_pre = linear(tape->last, m.head_w1, m.head_b1);
  Matrix logits = linear(relu(tape->head_pre), m.head_w2, m.head_b2);
  return {std::move(logits), std::move(tape)};
}

GpsModel model_backward(const ModelTape& tape, const Graph& g, const GpsModel& m,
                        const Matrix& grad_logits, Workspace& ws) {
  require_shape(grad_logits, g.num_nodes(), m.config.classes, "logit gradient");
  GpsModel grad = m.zeros_like();
  const Matrix act = relu(tape.head_pre);
  grad.head_w2 = matmul_at_b(act, grad_logits);
  grad.head_b2 = column_sums(grad_logits);
  Matrix g_pre = matmul_a_bt(grad_logits, m.head_w2);
  relu_backward_inplace(g_pre, tape.head_pre);
  grad.head_w1 = matmul_at_b(tape.last, g_pre);
  grad.head_b1 = column_sums(g_pre);
  Matrix gx = matmul_a_bt(g_pre, m.head_w1);
  Matrix ge(g.num_edges(), m.config.hidden);
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    auto lg = gps_layer_backward(*tape.layers[l], g, m.layers[l], gx, ge, ws);
    gx = std::move(lg.grad_x);
    ge = std::move(lg.grad_e);
    grad.layers[l] = std::move(lg.grad_params);
  }
  grad.edge_w = matmul_at_b(g.edge_features(), ge);
  grad.edge_b = column_sums(ge);
  grad.enc_w = matmul_at_b(tape.inputs, gx);
  grad.enc_b = column_sums(gx);
  return grad;
}

Matrix model_logits(const Graph& g, const GpsModel& m, AttentionKind kind) {
  Workspace ws;
  ForwardOptions opts;
  opts.kind = kind;
  return model_forward(g, m, opts, ws).logits;
}

}  // namespace kmip
