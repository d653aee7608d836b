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
#include <vector>

#include "kmip/graph.hpp"
#include "kmip/matrix.hpp"

namespace kmip {

// Eigen-decomposition of a symmetric matrix. Eigenvalues ascending;
// column c of `vectors` belongs to values[c].
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
// tol * ||a||_F. Throws ShapeError for non-square input.
SymmetricEigen jacobi_eigen(const Matrix& a, double tol = 1e-10);

// Combinatorial Laplacian D - A of the symmetrized graph; self-loops are
// dropped.
Matrix graph_laplacian(const Graph& g);

// Flips each eigenvector so that its first entry of largest magnitude is
// positive.
void canonicalize_signs(Matrix& vectors);

// Eigenpairs of the Laplacian with canonical signs.
SymmetricEigen laplacian_eigen(const Graph& g);

// Eigenvectors for the m smallest eigenvalues, N x m, zero-padded when N < m.
Matrix laplacian_pe(const Graph& g, std::size_t m);

// Column t-1 holds the t-step return probabilities diag((D^-1 A)^t) with A
// built from out-edges. Nodes without out-edges get zero rows.
Matrix rwse(const Graph& g, std::size_t m);

}  // namespace kmip
