#pragma once

// The group A(Q) of invertible upper-triangular rational matrices.

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/matrix.hpp"
#include "boundarylab/rational.hpp"

namespace boundarylab {

/// Largest supported matrix size; wedge dimensions then stay below C(8,4) = 70.
inline constexpr std::size_t kMaxDimension = 8;

class TriMatrix {
 public:
  TriMatrix() : TriMatrix(identity(1)) {}

  /// Row-major d*d entries. Throws unless lower part is zero and diagonal nonzero.
  TriMatrix(std::size_t d, std::vector<Rational> entries) : d_(d), a_(std::move(entries)) {
    if (d == 0 || d > kMaxDimension) {
      throw std::invalid_argument("dimension " + std::to_string(d) + " outside [1, " +
                                  std::to_string(kMaxDimension) + "]");
    }
    if (a_.size() != d * d) throw std::invalid_argument("expected d*d entries");
    for (std::size_t i = 0; i < d; ++i) {
      if (a_[i * d + i].is_zero()) {
        throw std::invalid_argument("zero diagonal entry at (" + std::to_string(i + 1) + "," +
                                    std::to_string(i + 1) + ")");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (!a_[i * d + j].is_zero()) {
          throw std::invalid_argument("nonzero entry below the diagonal at (" +
                                      std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }
      }
    }
  }

  static TriMatrix identity(std::size_t d) {
    std::vector<Rational> e(d * d);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = Rational(1);
    return TriMatrix(d, std::move(e));
  }

  static TriMatrix diagonal(const std::vector<Rational>& diag) {
    const std::size_t d = diag.size();
    std::vector<Rational> e(d * d);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = diag[i];
    return TriMatrix(d, std::move(e));
  }

  [[nodiscard]] std::size_t dim() const { return d_; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
  [[nodiscard]] const std::vector<Rational>& entries() const { return a_; }

  [[nodiscard]] std::vector<Rational> diagonal_entries() const {
    std::vector<Rational> out(d_);
    for (std::size_t i = 0; i < d_; ++i) out[i] = (*this)(i, i);
    return out;
  }

  [[nodiscard]] bool is_unipotent() const {
    for (std::size_t i = 0; i < d_; ++i) if (!(*this)(i, i).is_one()) return false;
    return true;
  }

  [[nodiscard]] DenseMatrix dense() const { return DenseMatrix(d_, d_, a_); }

  /// Top-left k*k block.
  [[nodiscard]] TriMatrix minor(std::size_t k) const {
    if (k < 1 || k > d_) throw std::out_of_range("minor size " + std::to_string(k) + " out of range");
    std::vector<Rational> e(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) e[i * k + j] = (*this)(i, j);
    }
    return TriMatrix(k, std::move(e));
  }

  /// Exact inverse by back substitution.
  [[nodiscard]] TriMatrix inverse() const {
    std::vector<Rational> inv(d_ * d_);
    for (std::size_t j = 0; j < d_; ++j) {
      inv[j * d_ + j] = (*this)(j, j).inverse();
      for (std::size_t ii = j; ii-- > 0;) {
        mpq_class acc = 0;
        for (std::size_t k = ii + 1; k <= j; ++k) {
          if ((*this)(ii, k).is_zero()) continue;
          acc += (*this)(ii, k).raw() * inv[k * d_ + j].raw();
        }
        inv[ii * d_ + j] = -(Rational(acc) / (*this)(ii, ii));
      }
    }
    return TriMatrix(d_, std::move(inv));
  }

  [[nodiscard]] std::size_t max_bit_size() const {
    std::size_t out = 0;
    for (const auto& x : a_) out = std::max(out, x.bit_size());
    return out;
  }

  /// Canonical text "[[a,b],[0,c]]" used as a map key and in diagnostics.
  [[nodiscard]] std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < d_; ++i) {
      out += i ? ",[" : "[";
      for (std::size_t j = 0; j < d_; ++j) {
        if (j) out += ",";
        out += (*this)(i, j).to_string();
      }
      out += "]";
    }
    return out + "]";
  }

  friend TriMatrix operator*(const TriMatrix& a, const TriMatrix& b) {
    if (a.d_ != b.d_) {
      throw std::invalid_argument("dimension mismatch: " + std::to_string(a.d_) + " vs " +
                                  std::to_string(b.d_));
    }
    const std::size_t d = a.d_;
    std::vector<Rational> e(d * d);
    mpq_class acc;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        acc = 0;
        for (std::size_t k = i; k <= j; ++k) {
          if (a(i, k).is_zero() || b(k, j).is_zero()) continue;
          acc += a(i, k).raw() * b(k, j).raw();
        }
        e[i * d + j] = Rational(acc);
      }
    }
    return TriMatrix(d, std::move(e));
  }

  friend bool operator==(const TriMatrix&, const TriMatrix&) = default;
  friend std::strong_ordering operator<=>(const TriMatrix& a, const TriMatrix& b) {
    if (auto c = a.d_ <=> b.d_; c != 0) return c;
    for (std::size_t k = 0; k < a.a_.size(); ++k) {
      if (auto c = a.a_[k] <=> b.a_[k]; c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

 private:
  std::size_t d_ = 1;
  std::vector<Rational> a_;
};

/// a = u * diag(delta) with u unipotent.
struct UnipotentDiagonalSplit {
  TriMatrix unipotent;
  std::vector<Rational> diagonal;
};

/// u(i,j) = a(i,j) / a(j,j).
inline UnipotentDiagonalSplit split_ud(const TriMatrix& a) {
  const std::size_t d = a.dim();
  std::vector<Rational> u(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i <= j; ++i) u[i * d + j] = a(i, j) / a(j, j);
  }
  return {TriMatrix(d, std::move(u)), a.diagonal_entries()};
}

inline TriMatrix recompose(const UnipotentDiagonalSplit& s) {
  return s.unipotent * TriMatrix::diagonal(s.diagonal);
}

/// Builds a matrix from rows; every row must have d entries.
inline TriMatrix tri_from_rows(const std::vector<std::vector<Rational>>& rows) {
  const std::size_t d = rows.size();
  std::vector<Rational> e;
  e.reserve(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != d) {
      throw std::invalid_argument("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                                  " entries, expected " + std::to_string(d));
    }
    e.insert(e.end(), rows[i].begin(), rows[i].end());
  }
  return TriMatrix(d, std::move(e));
}

}  // namespace boundarylab
