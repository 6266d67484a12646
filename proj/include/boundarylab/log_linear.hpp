#pragma once

// Exact real numbers of the form sum_p c_p * ln p with rational c_p.
//
// Drifts at every place live in this set: at a prime p, phi_p(i) = r * ln p;
// at infinity the product formula gives ln|q| = sum_p v_p(q) ln p. Since the
// logs of distinct primes are linearly independent over Q, a form is zero iff
// all of its coefficients are zero. The sign of a nonzero form is decided by
// outward-rounded MPFR evaluation at increasing precision.

#include <mpfr.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "boundarylab/rational.hpp"

namespace boundarylab {

namespace detail {

/// Owning wrapper around an mpfr_t.
class MpfrValue {
 public:
  explicit MpfrValue(mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
  ~MpfrValue() { mpfr_clear(v_); }
  MpfrValue(const MpfrValue&) = delete;
  MpfrValue& operator=(const MpfrValue&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

}  // namespace detail

class LogLinear {
 public:
  LogLinear() = default;

  /// c * ln p.
  static LogLinear term(std::uint64_t p, const Rational& c) {
    LogLinear out;
    if (!c.is_zero()) out.coeffs_.emplace(p, c);
    return out;
  }

  /// ln|q| at the archimedean place, written through the product formula.
  static LogLinear log_abs(const Rational& q) {
    LogLinear out;
    for (std::uint64_t p : factor_support(q)) {
      out.coeffs_.emplace(p, Rational(valuation(q, Place::prime(p))));
    }
    return out;
  }

  [[nodiscard]] const std::map<std::uint64_t, Rational>& coefficients() const { return coeffs_; }

  [[nodiscard]] Rational coefficient(std::uint64_t p) const {
    auto it = coeffs_.find(p);
    return it == coeffs_.end() ? Rational(0) : it->second;
  }

  [[nodiscard]] bool is_zero() const { return coeffs_.empty(); }

  LogLinear& operator+=(const LogLinear& o) {
    for (const auto& [p, c] : o.coeffs_) {
      auto [it, inserted] = coeffs_.emplace(p, c);
      if (!inserted) {
        it->second += c;
        if (it->second.is_zero()) coeffs_.erase(it);
      }
    }
    return *this;
  }
  LogLinear& operator-=(const LogLinear& o) { return *this += o * Rational(-1); }
  LogLinear& operator*=(const Rational& s) {
    if (s.is_zero()) { coeffs_.clear(); return *this; }
    for (auto& [p, c] : coeffs_) c *= s;
    return *this;
  }

  friend LogLinear operator+(LogLinear a, const LogLinear& b) { return a += b; }
  friend LogLinear operator-(LogLinear a, const LogLinear& b) { return a -= b; }
  friend LogLinear operator*(LogLinear a, const Rational& s) { return a *= s; }
  friend LogLinear operator-(const LogLinear& a) { return a * Rational(-1); }
  friend bool operator==(const LogLinear&, const LogLinear&) = default;

  /// Exact sign in {-1, 0, +1}.
  [[nodiscard]] int sign() const {
    if (coeffs_.empty()) return 0;
    if (coeffs_.size() == 1) return coeffs_.begin()->second.sign();
    for (mpfr_prec_t bits = 128; bits <= (1 << 16); bits *= 2) {
      detail::MpfrValue lo(bits), hi(bits), term(bits), logp(bits);
      for (const auto& [p, c] : coeffs_) {
        // Lower bound of c * ln p.
        mpfr_set_ui(logp.get(), p, MPFR_RNDN);
        mpfr_log(logp.get(), logp.get(), c.sign() > 0 ? MPFR_RNDD : MPFR_RNDU);
        mpfr_mul_q(term.get(), logp.get(), c.raw().get_mpq_t(), MPFR_RNDD);
        mpfr_add(lo.get(), lo.get(), term.get(), MPFR_RNDD);
        // Upper bound of c * ln p.
        mpfr_set_ui(logp.get(), p, MPFR_RNDN);
        mpfr_log(logp.get(), logp.get(), c.sign() > 0 ? MPFR_RNDU : MPFR_RNDD);
        mpfr_mul_q(term.get(), logp.get(), c.raw().get_mpq_t(), MPFR_RNDU);
        mpfr_add(hi.get(), hi.get(), term.get(), MPFR_RNDU);
      }
      if (mpfr_sgn(lo.get()) > 0) return 1;
      if (mpfr_sgn(hi.get()) < 0) return -1;
    }
    throw BudgetExceeded("log-linear sign undecided at 65536 bits");
  }

  [[nodiscard]] LogLinear abs() const { return sign() < 0 ? -*this : *this; }

  [[nodiscard]] double to_double() const {
    detail::MpfrValue acc(128), term(128);
    for (const auto& [p, c] : coeffs_) {
      mpfr_set_ui(term.get(), p, MPFR_RNDN);
      mpfr_log(term.get(), term.get(), MPFR_RNDN);
      mpfr_mul_q(term.get(), term.get(), c.raw().get_mpq_t(), MPFR_RNDN);
      mpfr_add(acc.get(), acc.get(), term.get(), MPFR_RNDN);
    }
    return mpfr_get_d(acc.get(), MPFR_RNDN);
  }

  /// "c1*ln(p1) + c2*ln(p2)" or "0".
  [[nodiscard]] std::string to_string() const {
    if (coeffs_.empty()) return "0";
    std::string out;
    for (const auto& [p, c] : coeffs_) {
      if (!out.empty()) out += " + ";
      out += c.to_string() + "*ln(" + std::to_string(p) + ")";
    }
    return out;
  }

 private:
  std::map<std::uint64_t, Rational> coeffs_;
};

/// Exact three-way comparison of two log-linear reals.
inline int compare(const LogLinear& a, const LogLinear& b) { return (a - b).sign(); }

}  // namespace boundarylab
