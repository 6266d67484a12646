#pragma once

// Exact rationals, places of Q, p-adic valuations and log-norms.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace boundarylab {

/// Raised when a computation would exceed a configured size or time budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Natural log of |z| for an arbitrary-precision integer z != 0.
inline double log_abs(const mpz_class& z) {
  if (z == 0) throw std::domain_error("log of zero");
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, z.get_mpz_t());
  return std::log(std::fabs(mant)) + static_cast<double>(exp) * std::numbers::ln2;
}

/**
 * Arbitrary-precision fraction kept in canonical form: positive denominator,
 * coprime numerator and denominator, zero stored as 0/1.
 */
class Rational {
 public:
  Rational() = default;
  Rational(long value) : q_(value) {}  // NOLINT(google-explicit-constructor)
  Rational(int value) : q_(value) {}   // NOLINT(google-explicit-constructor)
  explicit Rational(const mpz_class& value) : q_(value) {}
  explicit Rational(const mpq_class& value) : q_(value) { q_.canonicalize(); }

  Rational(const mpz_class& num, const mpz_class& den) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    q_ = mpq_class(num, den);
    q_.canonicalize();
  }

  Rational(long num, long den) : Rational(mpz_class(num), mpz_class(den)) {}

  /// Parses "n", "-n/d" or "+n/d". Non-reduced input is normalized.
  static Rational parse(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = s.find('/');
    auto parse_int = [&](const std::string& part, bool allow_sign) {
      std::string digits = part;
      if (allow_sign && !digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
        digits = digits.substr(1);
      }
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                         [](char c) { return c >= '0' && c <= '9'; })) {
        throw std::invalid_argument("malformed rational literal \"" + s + "\"");
      }
      std::string clean = part;
      if (!clean.empty() && clean[0] == '+') clean = clean.substr(1);
      return mpz_class(clean, 10);
    };
    if (slash == std::string::npos) return Rational(parse_int(s, true));
    mpz_class num = parse_int(s.substr(0, slash), true);
    mpz_class den = parse_int(s.substr(slash + 1), false);
    if (den == 0) throw std::invalid_argument("zero denominator in \"" + s + "\"");
    return Rational(num, den);
  }

  [[nodiscard]] mpz_class num() const { return q_.get_num(); }
  [[nodiscard]] mpz_class den() const { return q_.get_den(); }
  [[nodiscard]] const mpq_class& raw() const { return q_; }

  [[nodiscard]] int sign() const { return sgn(q_); }
  [[nodiscard]] bool is_zero() const { return sgn(q_) == 0; }
  [[nodiscard]] bool is_one() const { return q_ == 1; }
  [[nodiscard]] Rational abs() const { return Rational(mpq_class(::abs(q_))); }

  [[nodiscard]] Rational inverse() const {
    if (is_zero()) throw std::domain_error("inverse of zero");
    return Rational(mpq_class(1 / q_));
  }

  /// Bits in numerator plus bits in denominator.
  [[nodiscard]] std::size_t bit_size() const {
    return mpz_sizeinbase(q_.get_num_mpz_t(), 2) + mpz_sizeinbase(q_.get_den_mpz_t(), 2);
  }

  /// ln|q|, accurate to double precision even for huge numerators.
  [[nodiscard]] double log_abs() const {
    if (is_zero()) throw std::domain_error("log of zero");
    return boundarylab::log_abs(num()) - boundarylab::log_abs(den());
  }

  [[nodiscard]] double to_double() const { return q_.get_d(); }

  [[nodiscard]] std::string to_string() const {
    if (q_.get_den() == 1) return q_.get_num().get_str();
    return q_.get_num().get_str() + "/" + q_.get_den().get_str();
  }

  Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
  Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
  Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw std::domain_error("division by zero");
    q_ /= o.q_;
    return *this;
  }

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.q_)); }

  friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpq_class q_;
};

/// q^e for integer e (negative exponents invert).
inline Rational pow(const Rational& q, long e) {
  if (e == 0) return Rational(1);
  if (e < 0) return pow(q.inverse(), -e);
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), q.num().get_mpz_t(), static_cast<unsigned long>(e));
  mpz_pow_ui(d.get_mpz_t(), q.den().get_mpz_t(), static_cast<unsigned long>(e));
  return Rational(n, d);
}

/// Integer part with the sign-symmetric convention: floor for x >= 0, -floor(-x) otherwise.
inline mpz_class truncated_integer_part(const Rational& x) {
  mpz_class out;
  mpz_tdiv_q(out.get_mpz_t(), x.num().get_mpz_t(), x.den().get_mpz_t());
  return out;
}

inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  mpz_class z(static_cast<unsigned long>(n));
  return mpz_probab_prime_p(z.get_mpz_t(), 40) > 0;
}

/// A place of Q: a prime p or the archimedean place.
class Place {
 public:
  static Place infinity() { return Place(0); }
  static Place prime(std::uint64_t p) {
    if (!boundarylab::is_prime(p)) throw std::invalid_argument(std::to_string(p) + " is not prime");
    return Place(p);
  }
  /// Accepts "inf", "infinity", "oo" or a decimal prime.
  static Place parse(std::string_view text) {
    if (text == "inf" || text == "infinity" || text == "oo") return infinity();
    if (text.empty() || !std::all_of(text.begin(), text.end(),
                                     [](char c) { return c >= '0' && c <= '9'; })) {
      throw std::invalid_argument("bad place \"" + std::string(text) + "\"");
    }
    return prime(std::stoull(std::string(text)));
  }

  [[nodiscard]] bool is_infinite() const { return p_ == 0; }
  [[nodiscard]] bool is_prime() const { return p_ != 0; }
  [[nodiscard]] std::uint64_t p() const {
    if (p_ == 0) throw std::logic_error("archimedean place has no prime");
    return p_;
  }
  [[nodiscard]] std::string to_string() const { return p_ == 0 ? "inf" : std::to_string(p_); }

  // Primes ascending, then infinity last.
  friend bool operator==(const Place&, const Place&) = default;
  friend std::strong_ordering operator<=>(const Place& a, const Place& b) {
    auto key = [](const Place& x) { return x.p_ == 0 ? UINT64_MAX : x.p_; };
    return key(a) <=> key(b);
  }

 private:
  explicit Place(std::uint64_t p) : p_(p) {}
  std::uint64_t p_ = 0;
};

/// Multiplicity of p in the integer z != 0.
inline long valuation(const mpz_class& z, std::uint64_t p) {
  if (z == 0) throw std::domain_error("valuation of zero undefined");
  mpz_class rest;
  mpz_class pz(static_cast<unsigned long>(p));
  return static_cast<long>(mpz_remove(rest.get_mpz_t(), z.get_mpz_t(), pz.get_mpz_t()));
}

/// v_p(q) = v_p(numerator) - v_p(denominator).
inline long valuation(const Rational& q, const Place& place) {
  if (q.is_zero()) throw std::domain_error("valuation of zero undefined");
  if (place.is_infinite()) throw std::invalid_argument("valuation needs a prime place");
  return valuation(q.num(), place.p()) - valuation(q.den(), place.p());
}

/**
 * ln|q|_place kept in exact form. At a prime the value is coefficient * ln p;
 * at infinity it is ln|arch_value|. `approx` is a reporting cache only.
 */
struct LogNorm {
  Place place = Place::infinity();
  Rational coefficient;
  Rational arch_value{1};
  double approx = 0.0;

  [[nodiscard]] double value() const { return approx; }
};

inline LogNorm norm_log(const Rational& q, const Place& place) {
  if (q.is_zero()) throw std::domain_error("log-norm of zero undefined");
  LogNorm out;
  out.place = place;
  if (place.is_prime()) {
    out.coefficient = Rational(-valuation(q, place));
    out.approx = out.coefficient.to_double() * std::log(static_cast<double>(place.p()));
  } else {
    out.arch_value = q.abs();
    out.approx = q.log_abs();
  }
  return out;
}

/// Prime table extended on demand; each factorization owns its own instance.
class PrimeSieve {
 public:
  /// Returns the i-th prime (0-based), extending the table if needed.
  std::uint64_t operator[](std::size_t i) {
    while (primes_.size() <= i) extend();
    return primes_[i];
  }

 private:
  void extend() {
    std::uint64_t lo = limit_ + 1;
    std::uint64_t hi = limit_ == 0 ? 1024 : limit_ * 2;
    std::vector<bool> composite(hi - lo + 1, false);
    for (std::uint64_t p : primes_) {
      if (p * p > hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t m = start; m <= hi; m += p) composite[m - lo] = true;
    }
    for (std::uint64_t n = std::max<std::uint64_t>(lo, 2); n <= hi; ++n) {
      if (composite[n - lo]) continue;
      bool prime = true;
      for (std::uint64_t p : primes_) {
        if (p * p > n) break;
        if (n % p == 0) { prime = false; break; }
      }
      if (prime) {
        primes_.push_back(n);
        if (n * n <= hi) {
          for (std::uint64_t m = n * n; m <= hi; m += n) composite[m - lo] = true;
        }
      }
    }
    limit_ = hi;
  }

  std::vector<std::uint64_t> primes_;
  std::uint64_t limit_ = 0;
};

/// Trial-division limit; cofactors beyond limit^2 must pass a primality test.
inline constexpr std::uint64_t kTrialDivisionLimit = 1u << 22;

/// Prime factors of |z| (ascending, without multiplicity).
inline std::vector<std::uint64_t> prime_factors(mpz_class z) {
  if (z == 0) throw std::domain_error("factorization of zero");
  z = ::abs(z);
  std::vector<std::uint64_t> out;
  PrimeSieve sieve;
  for (std::size_t i = 0; z > 1; ++i) {
    std::uint64_t p = sieve[i];
    if (p > kTrialDivisionLimit) {
      if (mpz_probab_prime_p(z.get_mpz_t(), 40) > 0 && mpz_fits_ulong_p(z.get_mpz_t())) {
        out.push_back(z.get_ui());
        return out;
      }
      throw BudgetExceeded("factorization budget exceeded for " + z.get_str());
    }
    mpz_class pz(static_cast<unsigned long>(p));
    if (pz * pz > z) {
      if (!mpz_fits_ulong_p(z.get_mpz_t())) throw BudgetExceeded("prime factor too large");
      out.push_back(z.get_ui());
      return out;
    }
    if (mpz_divisible_ui_p(z.get_mpz_t(), p)) {
      out.push_back(p);
      while (mpz_divisible_ui_p(z.get_mpz_t(), p)) z /= static_cast<unsigned long>(p);
    }
  }
  return out;
}

/// { p : v_p(q) != 0 }, ascending.
inline std::vector<std::uint64_t> factor_support(const Rational& q) {
  if (q.is_zero()) throw std::domain_error("factor support of zero undefined");
  auto a = prime_factors(q.num());
  auto b = prime_factors(q.den());
  std::vector<std::uint64_t> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Exact check of prod_p |q|_p * |q|_inf = 1.
inline bool product_formula_check(const Rational& q) {
  if (q.is_zero()) throw std::domain_error("product formula undefined at zero");
  Rational finite_part(1);
  for (std::uint64_t p : factor_support(q)) {
    Place place = Place::prime(p);
    finite_part *= pow(Rational(static_cast<long>(p)), -valuation(q, place));
  }
  return finite_part * q.abs() == Rational(1);
}

}  // namespace boundarylab
