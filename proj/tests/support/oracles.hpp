#pragma once

// Test-only generators and independent oracles. Nothing here calls into the
// code path it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "boundarylab/log_linear.hpp"
#include "boundarylab/matrix.hpp"
#include "boundarylab/rational.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab::testing {

/// Random nonzero rational with |numerator|, denominator in [1, bound].
inline Rational random_rational(std::mt19937_64& rng, long bound, bool allow_zero = false) {
  std::uniform_int_distribution<long> mag(1, bound);
  if (allow_zero && std::uniform_int_distribution<int>(0, 4)(rng) == 0) return Rational(0);
  long n = mag(rng);
  if (rng() & 1) n = -n;
  return Rational(n, mag(rng));
}

inline TriMatrix random_tri(std::mt19937_64& rng, std::size_t d, long bound = 9) {
  std::vector<Rational> e(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) e[i * d + j] = random_rational(rng, bound, i != j);
  }
  return TriMatrix(d, std::move(e));
}

inline TriMatrix random_unipotent(std::mt19937_64& rng, std::size_t d, long bound = 9) {
  std::vector<Rational> e(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    e[i * d + i] = Rational(1);
    for (std::size_t j = i + 1; j < d; ++j) e[i * d + j] = random_rational(rng, bound, true);
  }
  return TriMatrix(d, std::move(e));
}

/// Leibniz formula: sum over all permutations.
inline Rational leibniz_determinant(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rational out;
  do {
    Rational term(1);
    for (std::size_t i = 0; i < n && !term.is_zero(); ++i) term *= m(i, perm[i]);
    if (term.is_zero()) continue;
    std::size_t inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
    if (inversions % 2) out -= term; else out += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

/// Element of the exterior algebra: sorted index tuple -> coefficient.
using Multivector = std::map<std::vector<std::size_t>, Rational>;

/// (sum c_I e_I) ^ v for a vector v, sorting indices with sign.
inline Multivector wedge_with(const Multivector& left, const std::vector<Rational>& v) {
  Multivector out;
  for (const auto& [idx, c] : left) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].is_zero() || std::find(idx.begin(), idx.end(), i) != idx.end()) continue;
      std::vector<std::size_t> merged = idx;
      merged.push_back(i);
      std::size_t moves = 0;
      for (std::size_t k = merged.size() - 1; k > 0 && merged[k - 1] > merged[k]; --k) {
        std::swap(merged[k - 1], merged[k]);
        ++moves;
      }
      Rational term = c * v[i];
      if (moves % 2) term = -term;
      out[merged] += term;
    }
  }
  for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
  return out;
}

/// a e_{t_1} ^ ... ^ a e_{t_r} expanded in the exterior algebra.
inline Multivector wedge_of_columns(const TriMatrix& a, const std::vector<std::size_t>& t) {
  Multivector acc{{{}, Rational(1)}};
  for (std::size_t col : t) {
    std::vector<Rational> v(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) v[i] = a(i, col);
    acc = wedge_with(acc, v);
  }
  return acc;
}

/// Brute force over all permutations: every w satisfying w(i) > w(j) whenever
/// i < j and phi(i) >= phi(j), plus w(i) < w(j) whenever phi(i) < phi(j).
inline std::vector<std::vector<std::size_t>> brute_force_weyl(const std::vector<Rational>& phi) {
  const std::size_t d = phi.size();
  std::vector<std::size_t> w(d);
  std::iota(w.begin(), w.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < d && ok; ++i) {
      for (std::size_t j = i + 1; j < d && ok; ++j) {
        if (phi[i] >= phi[j] && !(w[i] > w[j])) ok = false;
        if (phi[i] < phi[j] && !(w[i] < w[j])) ok = false;
      }
    }
    if (ok) out.push_back(w);
  } while (std::next_permutation(w.begin(), w.end()));
  return out;
}

/// Number of nonzero rationals +-r/s in lowest terms with r*s <= bound.
inline long count_small_height(long bound) {
  long count = 0;
  for (long r = 1; r <= bound; ++r)
    for (long s = 1; r * s <= bound; ++s)
      if (std::gcd(r, s) == 1) count += 2;
  return count;
}

/// Prime factorization of |z| > 0 by trial division (small inputs only).
inline std::map<long, long> naive_factor(long z) {
  std::map<long, long> out;
  z = z < 0 ? -z : z;
  for (long p = 2; p * p <= z; ++p)
    while (z % p == 0) { ++out[p]; z /= p; }
  if (z > 1) ++out[z];
  return out;
}

/// sum over primes of |ln|q|_p|, place by place.
inline double height_by_places(const Rational& q) {
  double total = 0;
  for (auto [p, e] : naive_factor(q.num().get_si())) total += static_cast<double>(e) * std::log(static_cast<double>(p));
  for (auto [p, e] : naive_factor(q.den().get_si())) total += static_cast<double>(e) * std::log(static_cast<double>(p));
  return total;
}

/// sum over all places of ln^+|q|_p, place by place.
inline double height_plus_by_places(const Rational& q) {
  if (q.is_zero()) return 0;
  double total = std::max(0.0, std::log(std::fabs(q.to_double())));
  for (auto [p, e] : naive_factor(q.den().get_si())) total += static_cast<double>(e) * std::log(static_cast<double>(p));
  return total;
}

/// Every rational +-r/s in lowest terms with r, s <= bound, zero optional.
inline std::vector<Rational> box_rationals(long bound, bool with_zero) {
  std::vector<Rational> out;
  if (with_zero) out.emplace_back(0);
  for (long r = 1; r <= bound; ++r)
    for (long s = 1; s <= bound; ++s)
      if (std::gcd(r, s) == 1) {
        out.emplace_back(r, s);
        out.emplace_back(-r, s);
      }
  return out;
}

/**
 * Brute-force Card{b in A(Q), d = 2 : ||b|| <= k} by filtering a box that
 * contains the ball, with ||b|| evaluated from the place-by-place oracles.
 */
inline long brute_force_ball_2(double k, long box) {
  auto entries = box_rationals(box, false), upper = box_rationals(box, true);
  long count = 0;
  for (const auto& x : entries) {
    double hx = height_by_places(x);
    if (hx > k + 1e-9) continue;
    for (const auto& z : entries) {
      double hz = height_by_places(z);
      if (hx + hz > k + 1e-9) continue;
      for (const auto& u : upper)
        if (hx + hz + height_plus_by_places(u) <= k + 1e-9) ++count;
    }
  }
  return count;
}

}  // namespace boundarylab::testing
