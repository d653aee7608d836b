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

#include "kmip/mipkernel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace kmip {

namespace {

template <typename T>
struct Candidate {
  T value;
  std::int64_t index;
};

// Strict total order: larger score first, lower key index on ties.
template <typename T>
inline bool better(const Candidate<T>& a, const Candidate<T>& b) {
  return a.value > b.value || (a.value == b.value && a.index < b.index);
}

template <typename T>
void check_topk_args(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                     std::size_t k) {
  if (q.cols() != key.cols()) {
    throw ShapeError("rowwise_topk: query " + shape_str(q) + " vs key " +
                     shape_str(key));
  }
  if (k == 0 || k > key.rows()) {
    throw ParameterError("rowwise_topk: k=" + std::to_string(k) +
                         " outside [1, " + std::to_string(key.rows()) + "]");
  }
}

// Scans the keys of one query tile in ascending key order and maintains a
// bounded heap (worst element at the front) per query row.
template <typename T>
class HeapSelector {
 public:
  HeapSelector(std::size_t rows, std::size_t k) : k_(k), heaps_(rows * k), sizes_(rows) {}

  void reset(std::size_t rows) { std::fill(sizes_.begin(), sizes_.begin() + rows, 0); }

  void scan(std::size_t r, const T* scores, std::size_t count, std::int64_t first_index) {
    Candidate<T>* heap = heaps_.data() + r * k_;
    std::size_t size = sizes_[r];
    std::size_t j = 0;
    for (; j < count && size < k_; ++j) {
      heap[size++] = {scores[j], first_index + static_cast<std::int64_t>(j)};
      std::push_heap(heap, heap + size, better<T>);
    }
    sizes_[r] = size;
    if (j == count) return;
    // Keys arrive in ascending index order, so an equal score never beats
    // the current worst; only strictly larger scores are admitted.
    T threshold = heap[0].value;
    for (; j < count; ++j) {
      const T s = scores[j];
      if (s > threshold) {
        std::pop_heap(heap, heap + k_, better<T>);
        heap[k_ - 1] = {s, first_index + static_cast<std::int64_t>(j)};
        std::push_heap(heap, heap + k_, better<T>);
        threshold = heap[0].value;
      }
    }
  }

  void emit(std::size_t r, std::int64_t* idx_out, T* val_out) {
    Candidate<T>* heap = heaps_.data() + r * k_;
    std::sort_heap(heap, heap + k_, better<T>);
    for (std::size_t j = 0; j < k_; ++j) {
      idx_out[j] = heap[j].index;
      val_out[j] = heap[j].value;
    }
  }

  static std::size_t bytes(std::size_t rows, std::size_t k) {
    return rows * k * sizeof(Candidate<T>) + rows * sizeof(std::size_t);
  }

 private:
  std::size_t k_;
  std::vector<Candidate<T>> heaps_;
  std::vector<std::size_t> sizes_;
};

// Used when k is at least the key tile: each tile's candidates are sorted
// and merged into a sorted buffer of at most k entries.
template <typename T>
class MergeSelector {
 public:
  MergeSelector(std::size_t rows, std::size_t k, std::size_t key_tile)
      : k_(k), buffers_(rows * k), sizes_(rows), scratch_(key_tile), merged_(k + key_tile) {}

  void reset(std::size_t rows) { std::fill(sizes_.begin(), sizes_.begin() + rows, 0); }

  void scan(std::size_t r, const T* scores, std::size_t count, std::int64_t first_index) {
    for (std::size_t j = 0; j < count; ++j)
      scratch_[j] = {scores[j], first_index + static_cast<std::int64_t>(j)};
    std::sort(scratch_.begin(), scratch_.begin() + count, better<T>);
    Candidate<T>* buf = buffers_.data() + r * k_;
    auto end = std::merge(buf, buf + sizes_[r], scratch_.begin(), scratch_.begin() + count,
                          merged_.begin(), better<T>);
    const auto total = static_cast<std::size_t>(end - merged_.begin());
    sizes_[r] = std::min(total, k_);
    std::copy(merged_.begin(), merged_.begin() + sizes_[r], buf);
  }

  void emit(std::size_t r, std::int64_t* idx_out, T* val_out) {
    const Candidate<T>* buf = buffers_.data() + r * k_;
    for (std::size_t j = 0; j < k_; ++j) {
      idx_out[j] = buf[j].index;
      val_out[j] = buf[j].value;
    }
  }

  static std::size_t bytes(std::size_t rows, std::size_t k, std::size_t key_tile) {
    return (rows * k + key_tile + k + key_tile) * sizeof(Candidate<T>) +
           rows * sizeof(std::size_t);
  }

 private:
  std::size_t k_;
  std::vector<Candidate<T>> buffers_;
  std::vector<std::size_t> sizes_;
  std::vector<Candidate<T>> scratch_;
  std::vector<Candidate<T>> merged_;
};

// Fills tile[r * kt + j] = q_row(row0 + r) . key_row(col0 + j). The inner
// loop runs over keys (vectorisable) while each entry still accumulates its
// d products in increasing order, matching matmul() bit for bit.
template <typename T>
void score_tile(const BasicMatrix<T>& q, const T* key_t, std::size_t m,
                std::size_t row0, std::size_t rows, std::size_t col0, std::size_t kt,
                T* tile) {
  const std::size_t d = q.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    T* out = tile + r * kt;
    const T* qr = q.data() + (row0 + r) * d;
    std::fill(out, out + kt, T{});
    for (std::size_t t = 0; t < d; ++t) {
      const T qv = qr[t];
      const T* kr = key_t + t * m + col0;
      for (std::size_t j = 0; j < kt; ++j) out[j] += qv * kr[j];
    }
  }
}

template <typename T, typename Selector, typename MakeSelector>
void run_tiles(const BasicMatrix<T>& q, const T* key_t, std::size_t m, std::size_t k,
               const TileConfig& cfg, std::size_t worker, std::size_t workers,
               MakeSelector make_selector, TopKResult<T>& out) {
  const std::size_t n = q.rows();
  const std::size_t qt = cfg.query_tile;
  const std::size_t kt = cfg.key_tile;
  std::vector<T> tile(qt * kt);
  Selector sel = make_selector();
  const std::size_t num_qtiles = (n + qt - 1) / qt;
  for (std::size_t b = worker; b < num_qtiles; b += workers) {
    const std::size_t row0 = b * qt;
    const std::size_t rows = std::min(qt, n - row0);
    sel.reset(rows);
    for (std::size_t col0 = 0; col0 < m; col0 += kt) {
      const std::size_t cols = std::min(kt, m - col0);
      score_tile(q, key_t, m, row0, rows, col0, cols, tile.data());
      for (std::size_t r = 0; r < rows; ++r)
        sel.scan(r, tile.data() + r * cols, cols, static_cast<std::int64_t>(col0));
    }
    for (std::size_t r = 0; r < rows; ++r)
      sel.emit(r, out.indices.data() + (row0 + r) * k, out.values.data() + (row0 + r) * k);
  }
}

}  // namespace

void TileConfig::validate() const {
  if (query_tile == 0 || key_tile == 0) {
    throw ParameterError("tile sizes must be >= 1");
  }
  if (threads == 0) throw ParameterError("threads must be >= 1");
}

template <typename T>
TopKResult<T> rowwise_topk(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                           std::size_t k, const TileConfig& cfg, Workspace& ws) {
  check_topk_args(q, key, k);
  cfg.validate();
  const std::size_t n = q.rows(), m = key.rows(), d = q.cols();

  auto result_charge = ws.charge(n * k * (sizeof(std::int64_t) + sizeof(T)));
  TopKResult<T> out{IndexMatrix(n, k), BasicMatrix<T>(n, k)};

  // Transposed keys (d x M) so a tile row streams contiguous memory.
  auto key_charge = ws.charge_elems<T>(m * d);
  std::vector<T> key_t(m * d);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t t = 0; t < d; ++t) key_t[t * m + j] = key(j, t);

  // Tiles never need to exceed the problem; clamping changes no result.
  TileConfig eff = cfg;
  eff.query_tile = std::min(cfg.query_tile, std::max<std::size_t>(n, 1));
  eff.key_tile = std::min(cfg.key_tile, m);
  const std::size_t num_qtiles = (n + eff.query_tile - 1) / eff.query_tile;
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, num_qtiles));
  const std::size_t qt = eff.query_tile, kt = eff.key_tile;
  const bool use_merge = k >= kt;
  const std::size_t selector_bytes =
      use_merge ? MergeSelector<T>::bytes(qt, k, kt) : HeapSelector<T>::bytes(qt, k);
  auto worker_charge = ws.charge(workers * (qt * kt * sizeof(T) + selector_bytes));

  auto work = [&](std::size_t w) {
    if (use_merge) {
      run_tiles<T, MergeSelector<T>>(
          q, key_t.data(), m, k, eff, w, workers,
          [&] { return MergeSelector<T>(qt, k, kt); }, out);
    } else {
      run_tiles<T, HeapSelector<T>>(
          q, key_t.data(), m, k, eff, w, workers,
          [&] { return HeapSelector<T>(qt, k); }, out);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
  }
  return out;
}

template <typename T>
TopKResult<T> rowwise_topk_dense(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                                 std::size_t k, Workspace& ws) {
  check_topk_args(q, key, k);
  const std::size_t n = q.rows(), m = key.rows();
  auto result_charge = ws.charge(n * k * (sizeof(std::int64_t) + sizeof(T)));
  TopKResult<T> out{IndexMatrix(n, k), BasicMatrix<T>(n, k)};

  auto score_charge = ws.charge_elems<T>(n * m);
  const BasicMatrix<T> scores = matmul_a_bt(q, key);

  auto row_charge = ws.charge(m * sizeof(Candidate<T>));
  std::vector<Candidate<T>> row(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j)
      row[j] = {scores(i, j), static_cast<std::int64_t>(j)};
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end(),
                      better<T>);
    for (std::size_t j = 0; j < k; ++j) {
      out.indices(i, j) = row[j].index;
      out.values(i, j) = row[j].value;
    }
  }
  return out;
}

template <typename T>
BasicMatrix<T> gather_rows(const BasicMatrix<T>& source, const IndexMatrix& indices) {
  const std::size_t n = indices.rows(), k = indices.cols(), d = source.cols();
  BasicMatrix<T> out(n * k, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::int64_t src = indices(i, j);
      if (src < 0 || static_cast<std::size_t>(src) >= source.rows()) {
        throw ValidationError("gather_rows: index " + std::to_string(src) + " at (" +
                              std::to_string(i) + "," + std::to_string(j) +
                              ") outside [0, " + std::to_string(source.rows()) + ")");
      }
      const T* s = source.data() + static_cast<std::size_t>(src) * d;
      std::copy(s, s + d, out.data() + (i * k + j) * d);
    }
  }
  return out;
}

template <typename T>
TopKGrads<T> topk_backward(const BasicMatrix<T>& q, const BasicMatrix<T>& key,
                           const TopKResult<T>& topk, const BasicMatrix<T>& grad_values) {
  if (q.cols() != key.cols()) {
    throw ShapeError("topk_backward: query " + shape_str(q) + " vs key " + shape_str(key));
  }
  if (topk.rows() != q.rows() || topk.values.rows() != q.rows() ||
      topk.values.cols() != topk.k()) {
    throw ShapeError("topk_backward: top-k result does not match the queries");
  }
  if (grad_values.rows() != topk.rows() || grad_values.cols() != topk.k()) {
    throw ShapeError("topk_backward: grad_values " + shape_str(grad_values) +
                     ", expected " + shape_str(topk.rows(), topk.k()));
  }
  const std::size_t n = q.rows(), k = topk.k(), d = q.cols();
  TopKGrads<T> g{BasicMatrix<T>(n, d), BasicMatrix<T>(key.rows(), d)};
  for (std::size_t i = 0; i < n; ++i) {
    const T* qi = q.data() + i * d;
    T* gqi = g.grad_q.data() + i * d;
    for (std::size_t j = 0; j < k; ++j) {
      const std::int64_t idx = topk.indices(i, j);
      if (idx < 0 || static_cast<std::size_t>(idx) >= key.rows()) {
        throw ValidationError("topk_backward: stale index " + std::to_string(idx));
      }
      const T gv = grad_values(i, j);
      const T* kr = key.data() + static_cast<std::size_t>(idx) * d;
      T* gk = g.grad_key.data() + static_cast<std::size_t>(idx) * d;
      for (std::size_t t = 0; t < d; ++t) {
        gqi[t] += gv * kr[t];
        gk[t] += gv * qi[t];
      }
    }
  }
  return g;
}

#define KMIP_INSTANTIATE(T)                                                          \
  template TopKResult<T> rowwise_topk(const BasicMatrix<T>&, const BasicMatrix<T>&,  \
                                      std::size_t, const TileConfig&, Workspace&);   \
  template TopKResult<T> rowwise_topk_dense(const BasicMatrix<T>&,                   \
                                            const BasicMatrix<T>&, std::size_t,      \
                                            Workspace&);                             \
  template BasicMatrix<T> gather_rows(const BasicMatrix<T>&, const IndexMatrix&);    \
  template TopKGrads<T> topk_backward(const BasicMatrix<T>&, const BasicMatrix<T>&,  \
                                      const TopKResult<T>&, const BasicMatrix<T>&);

KMIP_INSTANTIATE(float)
KMIP_INSTANTIATE(double)

#undef KMIP_INSTANTIATE

}  // namespace kmip
