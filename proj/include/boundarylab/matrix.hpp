#pragma once

// Dense rational matrices and exact determinants.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/rational.hpp"

namespace boundarylab {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<Rational> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != rows * cols) throw std::invalid_argument("entry count does not match shape");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Rational(1);
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }

  Rational& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  [[nodiscard]] const std::vector<Rational>& entries() const { return a_; }

  /// Submatrix on the given (sorted or not) row and column index lists.
  [[nodiscard]] DenseMatrix select(std::span<const std::size_t> row_idx,
                                   std::span<const std::size_t> col_idx) const {
    DenseMatrix out(row_idx.size(), col_idx.size());
    for (std::size_t r = 0; r < row_idx.size(); ++r) {
      for (std::size_t c = 0; c < col_idx.size(); ++c) out(r, c) = (*this)(row_idx[r], col_idx[c]);
    }
    return out;
  }

  [[nodiscard]] bool is_upper_triangular() const {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < std::min(i, cols_); ++j) {
        if (!(*this)(i, j).is_zero()) return false;
      }
    }
    return true;
  }

  /// Largest bit size over all entries.
  [[nodiscard]] std::size_t max_bit_size() const {
    std::size_t out = 0;
    for (const auto& x : a_) out = std::max(out, x.bit_size());
    return out;
  }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matrix shapes do not compose");
    DenseMatrix out(a.rows_, b.cols_);
    mpq_class acc;
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t j = 0; j < b.cols_; ++j) {
        acc = 0;
        for (std::size_t k = 0; k < a.cols_; ++k) {
          const auto& x = a(i, k);
          if (x.is_zero()) continue;
          const auto& y = b(k, j);
          if (y.is_zero()) continue;
          acc += x.raw() * y.raw();
        }
        out(i, j) = Rational(acc);
      }
    }
    return out;
  }

  /// Matrix-vector product.
  friend std::vector<Rational> operator*(const DenseMatrix& a, std::span<const Rational> v) {
    if (a.cols_ != v.size()) throw std::invalid_argument("matrix/vector shapes do not compose");
    std::vector<Rational> out(a.rows_);
    mpq_class acc;
    for (std::size_t i = 0; i < a.rows_; ++i) {
      acc = 0;
      for (std::size_t k = 0; k < a.cols_; ++k) {
        if (a(i, k).is_zero() || v[k].is_zero()) continue;
        acc += a(i, k).raw() * v[k].raw();
      }
      out[i] = Rational(acc);
    }
    return out;
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> a_;
};

/**
 * Determinant by fraction-free Bareiss elimination. Rows are first scaled to
 * integers by their denominators' lcm, eliminated over Z, and the scaling is
 * divided out at the end.
 */
inline Rational bareiss_determinant(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return Rational(1);
  std::vector<mpz_class> a(n * n);
  mpz_class scale = 1;
  for (std::size_t i = 0; i < n; ++i) {
    mpz_class l = 1;
    for (std::size_t j = 0; j < n; ++j) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).raw().get_den_mpz_t());
    scale *= l;
    for (std::size_t j = 0; j < n; ++j) {
      a[i * n + j] = m(i, j).num() * (l / m(i, j).den());
    }
  }
  int sign = 1;
  mpz_class prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k * n + k] == 0) {
      std::size_t swap = k + 1;
      while (swap < n && a[swap * n + k] == 0) ++swap;
      if (swap == n) return Rational(0);
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[swap * n + j]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        mpz_class t = a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j];
        mpz_divexact(a[i * n + j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      a[i * n + k] = 0;
    }
    prev = a[k * n + k];
  }
  mpz_class det = a[n * n - 1];
  if (sign < 0) det = -det;
  return Rational(det, scale);
}

/// Determinant by cofactor expansion along the first row. Exponential cost; small n only.
inline Rational cofactor_determinant(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return Rational(1);
  if (n == 1) return m(0, 0);
  Rational out;
  std::vector<std::size_t> rows(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) rows[i] = i + 1;
  for (std::size_t c = 0; c < n; ++c) {
    if (m(0, c).is_zero()) continue;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < n; ++j) if (j != c) cols.push_back(j);
    Rational minor = cofactor_determinant(m.select(rows, cols));
    Rational term = m(0, c) * minor;
    if (c % 2 == 0) out += term; else out -= term;
  }
  return out;
}

}  // namespace boundarylab
