#pragma once

// Weyl permutations chosen by drift order, the cells U^w, the factorization
// U = U^w U_w and the action of A(Q) on a cell.

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boundarylab/log_linear.hpp"
#include "boundarylab/measure.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

/// Permutation w of {0, ..., d-1}; perm[i] = w(i).
class WeylPerm {
 public:
  explicit WeylPerm(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
    std::vector<bool> seen(perm_.size(), false);
    for (auto v : perm_) {
      if (v >= perm_.size() || seen[v]) throw std::invalid_argument("not a permutation");
      seen[v] = true;
    }
  }

  static WeylPerm identity(std::size_t d) {
    std::vector<std::size_t> p(d);
    std::iota(p.begin(), p.end(), 0);
    return WeylPerm(std::move(p));
  }

  /// The order-reversing permutation w0.
  static WeylPerm longest(std::size_t d) {
    std::vector<std::size_t> p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = d - 1 - i;
    return WeylPerm(std::move(p));
  }

  [[nodiscard]] std::size_t dim() const { return perm_.size(); }
  std::size_t operator()(std::size_t i) const { return perm_.at(i); }
  [[nodiscard]] const std::vector<std::size_t>& values() const { return perm_; }

  /// (i, j) with i < j is free in U^w iff w(i) < w(j).
  [[nodiscard]] bool is_free(std::size_t i, std::size_t j) const { return i < j && perm_[i] < perm_[j]; }

  friend bool operator==(const WeylPerm&, const WeylPerm&) = default;

 private:
  std::vector<std::size_t> perm_;
};

using Position = std::pair<std::size_t, std::size_t>;

struct CellDescriptor {
  Place place = Place::infinity();
  WeylPerm weyl = WeylPerm::identity(1);
  std::set<Position> free_positions;

  [[nodiscard]] bool is_point() const { return free_positions.empty(); }
  [[nodiscard]] bool contains(const TriMatrix& u) const {
    if (!u.is_unipotent() || u.dim() != weyl.dim()) return false;
    for (std::size_t i = 0; i < u.dim(); ++i) {
      for (std::size_t j = i + 1; j < u.dim(); ++j) {
        if (!weyl.is_free(i, j) && !u(i, j).is_zero()) return false;
      }
    }
    return true;
  }
};

/**
 * The unique w with w(i) > w(j) whenever i < j and phi(i) >= phi(j): indices
 * are ranked ascending by the key (phi(i), -i), compared exactly.
 */
inline WeylPerm weyl_from_drifts(const std::vector<LogLinear>& phi) {
  const std::size_t d = phi.size();
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    int c = compare(phi[i], phi[j]);
    if (c != 0) return c < 0;
    return i > j;
  });
  std::vector<std::size_t> w(d);
  for (std::size_t rank = 0; rank < d; ++rank) w[order[rank]] = rank;
  return WeylPerm(std::move(w));
}

inline WeylPerm weyl_from_drifts(const DriftProfile& profile, const Place& place) {
  return weyl_from_drifts(profile.drifts(place));
}

inline CellDescriptor cell_of(const DriftProfile& profile, const Place& place) {
  CellDescriptor cell{place, weyl_from_drifts(profile, place), {}};
  const std::size_t d = profile.dim();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      if (cell.weyl.is_free(i, j)) cell.free_positions.emplace(i, j);
    }
  }
  return cell;
}

struct UFactorization {
  TriMatrix free_part;   // in U^w
  TriMatrix fixed_part;  // in U_w
};

/**
 * Solves u = F * X with F in U^w and X in U_w. Column by column, bottom-up:
 * u_ij = F_ij + X_ij + sum_{i<k<j} F_ik X_kj and exactly one of F_ij, X_ij is unknown.
 */
inline UFactorization factorize_u(const TriMatrix& u, const WeylPerm& w) {
  if (!u.is_unipotent()) throw std::invalid_argument("factorize_u needs a unipotent matrix");
  const std::size_t d = u.dim();
  if (w.dim() != d) throw std::invalid_argument("permutation and matrix dimensions differ");
  std::vector<Rational> f(d * d), x(d * d);
  for (std::size_t i = 0; i < d; ++i) { f[i * d + i] = Rational(1); x[i * d + i] = Rational(1); }
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = j; i-- > 0;) {
      Rational rest = u(i, j);
      for (std::size_t k = i + 1; k < j; ++k) {
        if (f[i * d + k].is_zero() || x[k * d + j].is_zero()) continue;
        rest -= f[i * d + k] * x[k * d + j];
      }
      (w.is_free(i, j) ? f : x)[i * d + j] = rest;
    }
  }
  return {TriMatrix(d, std::move(f)), TriMatrix(d, std::move(x))};
}

/// a . b = U^w-component of a b delta^{-1}, where a = u delta.
inline TriMatrix boundary_action(const TriMatrix& a, const TriMatrix& b, const WeylPerm& w) {
  CellDescriptor probe{Place::infinity(), w, {}};
  if (!probe.contains(b)) throw std::invalid_argument("boundary point is not in the cell U^w");
  TriMatrix delta_inv = TriMatrix::diagonal(a.diagonal_entries()).inverse();
  return factorize_u(a * b * delta_inv, w).free_part;
}

}  // namespace boundarylab
