#pragma once

// The A(Q)-stable subspace of the r-th exterior power spanned by
// e_{i_1} ^ ... ^ e_{i_r} with i_s <= j_s, and the induced representation.

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/matrix.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

using IndexTuple = std::vector<std::size_t>;

class SubspaceBasis {
 public:
  /// `top` is the 0-based index set j_1 < ... < j_r, which must end at d-1.
  SubspaceBasis(std::size_t d, IndexTuple top) : d_(d), top_(std::move(top)) {
    if (d == 0 || d > kMaxDimension) throw std::invalid_argument("basis dimension out of range");
    if (top_.empty() || top_.back() != d - 1) {
      throw std::invalid_argument("index set must contain the last index");
    }
    for (std::size_t s = 1; s < top_.size(); ++s) {
      if (top_[s - 1] >= top_[s]) throw std::invalid_argument("index set must be strictly increasing");
    }
    IndexTuple cur(top_.size());
    enumerate(0, 0, cur);
    for (std::size_t k = 0; k < tuples_.size(); ++k) index_.emplace(tuples_[k], k);
  }

  [[nodiscard]] std::size_t dim() const { return d_; }
  [[nodiscard]] std::size_t rank() const { return top_.size(); }
  [[nodiscard]] const IndexTuple& top() const { return top_; }
  [[nodiscard]] std::size_t size() const { return tuples_.size(); }
  [[nodiscard]] const IndexTuple& tuple(std::size_t k) const { return tuples_.at(k); }
  [[nodiscard]] const std::vector<IndexTuple>& tuples() const { return tuples_; }

  /// Position of a tuple in lexicographic order; throws if not a basis element.
  [[nodiscard]] std::size_t index_of(const IndexTuple& t) const {
    auto it = index_.find(t);
    if (it == index_.end()) throw std::out_of_range("tuple is not a basis element");
    return it->second;
  }

  [[nodiscard]] bool contains(const IndexTuple& t) const { return index_.count(t) != 0; }

  /// "e1^e3" (1-based).
  [[nodiscard]] std::string label(std::size_t k) const {
    std::string out;
    for (std::size_t i : tuples_.at(k)) {
      if (!out.empty()) out += "^";
      out += "e" + std::to_string(i + 1);
    }
    return out;
  }

 private:
  void enumerate(std::size_t s, std::size_t lo, IndexTuple& cur) {
    if (s == top_.size()) { tuples_.push_back(cur); return; }
    for (std::size_t i = lo; i <= top_[s]; ++i) {
      cur[s] = i;
      enumerate(s + 1, i + 1, cur);
    }
  }

  std::size_t d_;
  IndexTuple top_;
  std::vector<IndexTuple> tuples_;
  std::map<IndexTuple, std::size_t> index_;
};

/// Matrix of a acting on the subspace, in the lexicographic basis.
struct WedgeRep {
  DenseMatrix matrix;

  /// a' = a^(r) / prod_{j in J} a_jj; its bottom-right entry is 1.
  [[nodiscard]] DenseMatrix normalized(const TriMatrix& a, const SubspaceBasis& basis) const {
    Rational scale(1);
    for (std::size_t j : basis.top()) scale *= a(j, j);
    Rational inv = scale.inverse();
    DenseMatrix out = matrix;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      for (std::size_t j = 0; j < out.cols(); ++j) {
        if (!out(i, j).is_zero()) out(i, j) *= inv;
      }
    }
    return out;
  }
};

inline bool dominated(const IndexTuple& lower, const IndexTuple& upper) {
  for (std::size_t s = 0; s < lower.size(); ++s) if (lower[s] > upper[s]) return false;
  return true;
}

/**
 * Entry (k, l) is the coefficient of basis tuple k in a(e_{l_1}) ^ ... ^ a(e_{l_r}),
 * i.e. the minor of a on rows tuple(k) and columns tuple(l). For upper-triangular a
 * that minor vanishes unless tuple(k) <= tuple(l) componentwise.
 */
inline WedgeRep wedge_rep(const TriMatrix& a, const SubspaceBasis& basis) {
  if (a.dim() != basis.dim()) throw std::invalid_argument("basis and matrix dimensions differ");
  const std::size_t m = basis.size();
  DenseMatrix dense = a.dense();
  DenseMatrix out(m, m);
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t k = 0; k <= l; ++k) {
      if (!dominated(basis.tuple(k), basis.tuple(l))) continue;
      out(k, l) = bareiss_determinant(dense.select(basis.tuple(k), basis.tuple(l)));
    }
  }
  return {std::move(out)};
}

/// Rows I = {l} u (J \ {d}) used by the determinant identity for the last column.
inline IndexTuple appendix_rows(const IndexTuple& top, std::size_t l) {
  IndexTuple rows(top.begin(), top.end() - 1);
  rows.push_back(l);
  std::sort(rows.begin(), rows.end());
  return rows;
}

/**
 * Checks a^(r)_{k,m} = det(a_{i,j})_{i in I, j in J} with I = {l} u (J \ {d}),
 * evaluating the left side from the wedge representation (Bareiss) and the
 * right side by cofactor expansion.
 */
inline bool appendix_identity_check(const TriMatrix& a, const IndexTuple& top, std::size_t l) {
  if (std::find(top.begin(), top.end(), l) != top.end()) {
    throw std::invalid_argument("index l must not belong to J");
  }
  if (l >= a.dim()) throw std::out_of_range("index l out of range");
  SubspaceBasis basis(a.dim(), top);
  IndexTuple rows = appendix_rows(top, l);
  std::size_t k = basis.index_of(rows);
  WedgeRep rep = wedge_rep(a, basis);
  Rational lhs = rep.matrix(k, basis.size() - 1);
  Rational rhs = cofactor_determinant(a.dense().select(rows, top));
  return lhs == rhs;
}

}  // namespace boundarylab
