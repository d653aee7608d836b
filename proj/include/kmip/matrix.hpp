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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "kmip/error.hpp"

namespace kmip {

// Dense row-major matrix. The element type is a container parameter so the
// same kernels serve double-precision tests and single-precision benchmarks.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      std::ostringstream os;
      os << "matrix data length " << data_.size() << " != " << rows_ << "x"
         << cols_;
      throw ShapeError(os.str());
    }
  }
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t bytes() const noexcept { return data_.size() * sizeof(T); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  const std::vector<T>& values() const noexcept { return data_; }
  std::span<T> values() noexcept { return {data_.data(), data_.size()}; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const BasicMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using MatrixF = BasicMatrix<float>;
using IndexMatrix = BasicMatrix<std::int64_t>;

inline std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename T>
std::string shape_str(const BasicMatrix<T>& m) {
  return shape_str(m.rows(), m.cols());
}

template <typename T>
BasicMatrix<T> identity(std::size_t n) {
  BasicMatrix<T> m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
  return m;
}

// Plain i-k-j product. Every output entry accumulates a(i,0)*b(0,j) first
// and then proceeds in increasing inner index, which is the summation order
// every other kernel in the library reproduces.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " x " + shape_str(b));
  }
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  BasicMatrix<T> c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    T* ci = c.data() + i * m;
    const T* ai = a.data() + i * inner;
    for (std::size_t t = 0; t < inner; ++t) {
      const T av = ai[t];
      const T* bt = b.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bt[j];
    }
  }
  return c;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// a^T * b without forming the transpose.
template <typename T>
BasicMatrix<T> matmul_at_b(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at_b: " + shape_str(a) + "^T x " + shape_str(b));
  }
  BasicMatrix<T> c(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const T* ar = a.data() + r * a.cols();
    const T* br = b.data() + r * b.cols();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T av = ar[i];
      T* ci = c.data() + i * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += av * br[j];
    }
  }
  return c;
}

// a * b^T; each entry is a sequential dot product over the shared columns.
template <typename T>
BasicMatrix<T> matmul_a_bt(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_a_bt: " + shape_str(a) + " x " + shape_str(b) +
                     "^T");
  }
  BasicMatrix<T> c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* ai = a.data() + i * a.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const T* bj = b.data() + j * b.cols();
      T s{};
      for (std::size_t t = 0; t < a.cols(); ++t) s += ai[t] * bj[t];
      c(i, j) = s;
    }
  }
  return c;
}

template <typename T>
void add_inplace(BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: " + shape_str(a) + " vs " + shape_str(b));
  }
  T* ad = a.data();
  const T* bd = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) ad[i] += bd[i];
}

template <typename T>
BasicMatrix<T> add(BasicMatrix<T> a, const BasicMatrix<T>& b) {
  add_inplace(a, b);
  return a;
}

template <typename T>
void scale_inplace(BasicMatrix<T>& a, T s) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= s;
}

// Adds a 1 x cols bias row to every row.
template <typename T>
void add_row_bias(BasicMatrix<T>& a, const BasicMatrix<T>& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw ShapeError("bias " + shape_str(bias) + " for " + shape_str(a));
  }
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += bias(0, j);
}

// Column sums as a 1 x cols row.
template <typename T>
BasicMatrix<T> column_sums(const BasicMatrix<T>& a) {
  BasicMatrix<T> s(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(0, j) += a(i, j);
  return s;
}

template <typename T>
BasicMatrix<T> hconcat(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("hconcat: " + shape_str(a) + " | " + shape_str(b));
  }
  BasicMatrix<T> c(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, a.cols() + j) = b(i, j);
  }
  return c;
}

// Row-wise softmax. -inf entries receive exactly zero mass; a row without a
// finite entry has no defined distribution.
template <typename T>
void softmax_rows_inplace(BasicMatrix<T>& m) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    T mx = kNegInf;
    for (T v : r) mx = v > mx ? v : mx;
    if (!(mx > kNegInf)) {
      throw DomainError("softmax_rows: row " + std::to_string(i) +
                        " has no finite entry");
    }
    T sum{};
    for (T& v : r) {
      v = (v == kNegInf) ? T{} : std::exp(v - mx);
      sum += v;
    }
    for (T& v : r) v /= sum;
  }
}

template <typename T>
BasicMatrix<T> softmax_rows(BasicMatrix<T> m) {
  softmax_rows_inplace(m);
  return m;
}

template <typename T>
bool all_finite(const BasicMatrix<T>& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(m.data()[i])) return false;
  return true;
}

template <typename To, typename From>
BasicMatrix<To> cast(const BasicMatrix<From>& m) {
  std::vector<To> d(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) d[i] = static_cast<To>(m.data()[i]);
  return BasicMatrix<To>(m.rows(), m.cols(), std::move(d));
}

}  // namespace kmip
