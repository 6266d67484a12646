#pragma once

// Gauges G_k^h = {a : ||a^{-1} h|| <= k} on A(Q), enumerated exhaustively.
//
// For rational b, e^{||b||} is the integer prod(r_i s_i) * prod max(den, |num|)(u_ij),
// so ||b|| <= k iff that integer is <= N = floor(e^k). Everything below works with N.

#include <mpfr.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/adelic.hpp"
#include "boundarylab/log_linear.hpp"
#include "boundarylab/rational.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

inline constexpr std::uint64_t kGaugeBudget = 10'000'000;

/// Radius k of a gauge, carried with the exact integer N = floor(e^k).
class GaugeRadius {
 public:
  static GaugeRadius real(double k) {
    if (!(k >= 0) || k > 40) throw std::invalid_argument("gauge radius must lie in [0, 40]");
    detail::MpfrValue x(256);
    mpfr_set_d(x.get(), k, MPFR_RNDN);
    mpfr_exp(x.get(), x.get(), MPFR_RNDD);
    mpz_class n;
    mpfr_get_z(n.get_mpz_t(), x.get(), MPFR_RNDD);
    char text[32];
    auto end = std::to_chars(text, text + sizeof text, k).ptr;
    return GaugeRadius(k, n, std::string(text, end));
  }

  /// k = ln n exactly.
  static GaugeRadius log_of(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("ln 0 is not a radius");
    return GaugeRadius(std::log(static_cast<double>(n)), mpz_class(static_cast<unsigned long>(n)),
                       "ln " + std::to_string(n));
  }

  [[nodiscard]] double k() const { return k_; }
  [[nodiscard]] const mpz_class& bound() const { return n_; }
  [[nodiscard]] const std::string& label() const { return label_; }

 private:
  GaugeRadius(double k, mpz_class n, std::string label) : k_(k), n_(std::move(n)), label_(std::move(label)) {}
  double k_;
  mpz_class n_;
  std::string label_;
};

namespace detail {

inline std::uint64_t euler_phi(std::uint64_t x) {
  std::uint64_t out = x;
  for (std::uint64_t p = 2; p * p <= x; ++p) {
    if (x % p) continue;
    while (x % p == 0) x /= p;
    out -= out / p;
  }
  if (x > 1) out -= out / x;
  return out;
}

inline std::uint64_t omega(std::uint64_t x) {
  std::uint64_t out = 0;
  for (std::uint64_t p = 2; p * p <= x; ++p) {
    if (x % p) continue;
    ++out;
    while (x % p == 0) x /= p;
  }
  return out + (x > 1);
}

}  // namespace detail

/// Number of nonzero q with r*s = x: each prime power of x goes to r or s, times the sign.
inline std::uint64_t diagonal_multiplicity(std::uint64_t x) { return 2ull << detail::omega(x); }

/// Number of q with max(den, |num|) = x: {0, 1, -1} for x = 1, else 4 phi(x).
inline std::uint64_t unipotent_multiplicity(std::uint64_t x) { return x == 1 ? 3 : 4 * detail::euler_phi(x); }

/// Nonzero rationals with <q> <= ln n.
inline std::vector<Rational> small_height_rationals(std::uint64_t n) {
  std::vector<Rational> out;
  for (std::uint64_t r = 1; r <= n; ++r)
    for (std::uint64_t s = 1; r * s <= n; ++s) {
      if (std::gcd(r, s) != 1) continue;
      Rational q(static_cast<long>(r), static_cast<long>(s));
      out.push_back(q);
      out.push_back(-q);
    }
  return out;
}

/// Rationals with <q>^+ <= ln n, zero included.
inline std::vector<Rational> small_plus_height_rationals(std::uint64_t n) {
  std::vector<Rational> out{Rational(0)};
  for (std::uint64_t s = 1; s <= n; ++s)
    for (std::uint64_t r = 1; r <= n; ++r) {
      if (std::gcd(r, s) != 1) continue;
      Rational q(static_cast<long>(r), static_cast<long>(s));
      out.push_back(q);
      out.push_back(-q);
    }
  return out;
}

/// Card{nonzero q : <q> <= ln n}.
inline std::uint64_t scalar_count(std::uint64_t n) {
  std::uint64_t total = 0;
  for (std::uint64_t x = 1; x <= n; ++x) total += diagonal_multiplicity(x);
  return total;
}

/**
 * Exact Card{b in A(Q) : ||b|| <= ln n} in dimension d, by counting factorizations
 * n >= x_1 * ... * x_m weighted by the multiplicities above. Used as the cost estimate.
 */
inline mpz_class ball_cardinality(std::size_t d, std::uint64_t n) {
  const std::size_t slots = d + d * (d - 1) / 2;
  std::map<std::pair<std::size_t, std::uint64_t>, mpz_class> memo;
  auto count = [&](auto&& self, std::size_t slot, std::uint64_t m) -> mpz_class {
    if (slot == slots) return 1;
    auto key = std::make_pair(slot, m);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    mpz_class total = 0;
    for (std::uint64_t x = 1; x <= m; ++x) {
      std::uint64_t c = slot < d ? diagonal_multiplicity(x) : unipotent_multiplicity(x);
      total += mpz_class(static_cast<unsigned long>(c)) * self(self, slot + 1, m / x);
    }
    memo.emplace(key, total);
    return total;
  };
  return count(count, 0, n);
}

/// All b with ||b|| <= ln n, as u * delta.
inline std::vector<TriMatrix> enumerate_ball(std::size_t d, std::uint64_t n, std::uint64_t budget = kGaugeBudget) {
  if (d == 0 || d > kMaxDimension) throw std::invalid_argument("dimension out of range");
  mpz_class cost = ball_cardinality(d, n);
  if (cost > mpz_class(static_cast<unsigned long>(budget))) {
    throw BudgetExceeded("gauge enumeration refused: estimated " + cost.get_str() + " elements exceeds budget " +
                         std::to_string(budget));
  }
  std::vector<Rational> diag = small_height_rationals(n), upper = small_plus_height_rationals(n);
  std::vector<TriMatrix> out;
  out.reserve(cost.get_ui());
  std::vector<Rational> delta(d);
  std::vector<Rational> u(d * d);
  for (std::size_t i = 0; i < d; ++i) u[i * d + i] = Rational(1);
  std::vector<std::pair<std::size_t, std::size_t>> off;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) off.emplace_back(i, j);
  auto fill_u = [&](auto&& self, std::size_t slot, std::uint64_t m) -> void {
    if (slot == off.size()) {
      TriMatrix um(d, u);
      out.push_back(um * TriMatrix::diagonal(delta));
      return;
    }
    auto [i, j] = off[slot];
    for (const auto& q : upper) {
      std::uint64_t s = height_plus_size(q).get_ui();
      if (s > m) continue;
      u[i * d + j] = q;
      self(self, slot + 1, m / s);
    }
  };
  auto fill_delta = [&](auto&& self, std::size_t i, std::uint64_t m) -> void {
    if (i == d) {
      fill_u(fill_u, 0, m);
      return;
    }
    for (const auto& q : diag) {
      std::uint64_t s = height_size(q).get_ui();
      if (s > m) continue;
      delta[i] = q;
      self(self, i + 1, m / s);
    }
  };
  fill_delta(fill_delta, 0, n);
  return out;
}

/// G_k^h = h * Ball(k)^{-1}, since a^{-1} h = b  <=>  a = h b^{-1}.
inline std::vector<TriMatrix> enumerate_gauge(const GaugeRadius& k, const TriMatrix& h,
                                              std::uint64_t budget = kGaugeBudget) {
  if (!k.bound().fits_ulong_p()) throw BudgetExceeded("gauge radius too large to enumerate");
  auto ball = enumerate_ball(h.dim(), k.bound().get_ui(), budget);
  std::vector<TriMatrix> out;
  out.reserve(ball.size());
  for (const auto& b : ball) out.push_back(h * b.inverse());
  return out;
}

struct GaugeReport {
  std::string k;
  std::string h;
  std::size_t d = 0;
  std::uint64_t cardinality = 0;
  double log_cardinality = 0;
  double log_bound = 0;  // ln (2 e^{6k})^{d^2}
  bool pass = false;
};

inline GaugeReport gauge_report(const GaugeRadius& k, const TriMatrix& h, std::uint64_t budget = kGaugeBudget) {
  GaugeReport r;
  r.k = k.label();
  r.h = h.to_string();
  r.d = h.dim();
  auto g = enumerate_gauge(k, h, budget);
  // Distinct elements only: the enumeration is injective, but the count is the claim under test.
  std::set<TriMatrix> distinct(g.begin(), g.end());
  r.cardinality = distinct.size();
  r.log_cardinality = r.cardinality == 0 ? 0 : std::log(static_cast<double>(r.cardinality));
  const double dd = static_cast<double>(r.d * r.d);
  r.log_bound = dd * (std::log(2.0) + 6 * k.k());
  r.pass = r.log_cardinality <= r.log_bound;
  return r;
}

/// |g|_G for the gauge (G_n^{Id}): the least integer n >= 0 with ||g^{-1}|| <= n.
inline std::uint64_t gauge_index(const TriMatrix& g) {
  mpz_class size = length_size(g.inverse());
  if (size == 1) return 0;
  // Smallest n with e^n >= size; exp is rounded down so a tie never passes early.
  detail::MpfrValue x(256);
  for (std::uint64_t n = 1;; ++n) {
    mpfr_set_ui(x.get(), n, MPFR_RNDN);
    mpfr_exp(x.get(), x.get(), MPFR_RNDD);
    if (mpfr_cmp_z(x.get(), size.get_mpz_t()) >= 0) return n;
  }
}

}  // namespace boundarylab
