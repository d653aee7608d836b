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

#include "kmip/encodings.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kmip/error.hpp"

namespace kmip {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Matrix& input, double tol) {
  if (input.rows() != input.cols()) {
    throw ShapeError("jacobi_eigen: matrix is " + shape_str(input) + ", expected square");
  }
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = identity<double>(n);
  double total = 0;
  for (double x : a.values()) total += x * x;
  const double target = tol * std::sqrt(total);

  constexpr int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_norm(a);
    if (off == 0.0 || converged) break;
    // Convergence is quadratic, so one sweep past the tolerance brings the
    // eigenvector entries to working precision.
    converged = off <= target;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        if (s == 0.0) continue;
        rotated = true;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

Matrix graph_laplacian(const Graph& g) {
  const std::size_t n = g.num_nodes();
  Matrix adj(n, n);
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    adj(e.src, e.dst) = 1;
    adj(e.dst, e.src) = 1;
  }
  Matrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0;
    for (std::size_t j = 0; j < n; ++j) {
      deg += adj(i, j);
      lap(i, j) = -adj(i, j);
    }
    lap(i, i) = deg;
  }
  return lap;
}

void canonicalize_signs(Matrix& vectors) {
  constexpr double kTieTol = 1e-9;
  for (std::size_t c = 0; c < vectors.cols(); ++c) {
    double largest = 0;
    for (std::size_t r = 0; r < vectors.rows(); ++r)
      largest = std::max(largest, std::abs(vectors(r, c)));
    for (std::size_t r = 0; r < vectors.rows(); ++r) {
      if (std::abs(vectors(r, c)) >= largest - kTieTol) {
        if (vectors(r, c) < 0) {
          for (std::size_t i = 0; i < vectors.rows(); ++i) vectors(i, c) = -vectors(i, c);
        }
        break;
      }
    }
  }
}

SymmetricEigen laplacian_eigen(const Graph& g) {
  SymmetricEigen eig = jacobi_eigen(graph_laplacian(g));
  canonicalize_signs(eig.vectors);
  return eig;
}

Matrix laplacian_pe(const Graph& g, std::size_t m) {
  const std::size_t n = g.num_nodes();
  Matrix pe(n, m);
  if (n == 0 || m == 0) return pe;
  const SymmetricEigen eig = laplacian_eigen(g);
  for (std::size_t c = 0; c < std::min(n, m); ++c)
    for (std::size_t r = 0; r < n; ++r) pe(r, c) = eig.vectors(r, c);
  return pe;
}

Matrix rwse(const Graph& g, std::size_t m) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& e : g.edges()) out[e.src].push_back(e.dst);

  Matrix result(n, m);
  // walk = (D^-1 A)^t, advanced one step at a time through the sparse
  // transition rows.
  Matrix walk = identity<double>(n);
  for (std::size_t t = 0; t < m; ++t) {
    Matrix next(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double w = walk(i, j);
        if (w == 0.0 || out[j].empty()) continue;
        const double share = w / static_cast<double>(out[j].size());
        for (std::size_t dst : out[j]) next(i, dst) += share;
      }
    }
    walk = std::move(next);
    for (std::size_t i = 0; i < n; ++i) result(i, t) = walk(i, i);
  }
  return result;
}

}  // namespace kmip
