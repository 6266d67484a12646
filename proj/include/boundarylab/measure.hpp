#pragma once

// Finitely supported step measures on A(Q), their drift profiles and moments.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/log_linear.hpp"
#include "boundarylab/rational.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

struct Atom {
  TriMatrix matrix;
  Rational weight;
};

/// Probability measure with finitely many atoms and exact rational weights.
class StepMeasure {
 public:
  StepMeasure(std::size_t d, std::vector<Atom> atoms) : d_(d), atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("measure needs at least one atom");
    Rational total;
    const mpz_class two64 = mpz_class(1) << 64;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      const auto& atom = atoms_[k];
      auto where = "atom " + std::to_string(k) + ": ";
      if (atom.matrix.dim() != d_) throw std::invalid_argument(where + "dimension mismatch");
      if (atom.weight.sign() <= 0) throw std::invalid_argument(where + "weight must be positive");
      if (atom.weight.num() * two64 < atom.weight.den()) {
        throw std::invalid_argument(where + "weight below sampling resolution 2^-64");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (atoms_[j].matrix == atom.matrix) {
          throw std::invalid_argument(where + "duplicates atom " + std::to_string(j));
        }
      }
      total += atom.weight;
    }
    if (total != Rational(1)) {
      throw std::invalid_argument("weights sum to " + total.to_string() + ", expected 1");
    }
    // Threshold T_k = ceil(C_k * 2^64) for the cumulative weight C_k; a draw u
    // selects the first k with u < T_k.
    Rational cumulative;
    for (const auto& atom : atoms_) {
      cumulative += atom.weight;
      mpz_class t = (cumulative.num() * two64 + cumulative.den() - 1) / cumulative.den();
      unsigned __int128 v = 0;
      mpz_class hi = t >> 64;
      mpz_class lo = t - (hi << 64);
      v = (static_cast<unsigned __int128>(hi.get_ui()) << 64) | lo.get_ui();
      thresholds_.push_back(v);
    }
  }

  static StepMeasure dirac(const TriMatrix& g) { return StepMeasure(g.dim(), {{g, Rational(1)}}); }

  static StepMeasure uniform(const std::vector<TriMatrix>& support) {
    if (support.empty()) throw std::invalid_argument("uniform measure on an empty set");
    std::vector<Atom> atoms;
    Rational w(1, static_cast<long>(support.size()));
    for (const auto& g : support) atoms.push_back({g, w});
    return StepMeasure(support.front().dim(), std::move(atoms));
  }

  [[nodiscard]] std::size_t dim() const { return d_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const Atom& atom(std::size_t k) const { return atoms_.at(k); }

  /// Atom selected by a uniform 64-bit draw read as the dyadic rational draw / 2^64.
  [[nodiscard]] std::size_t pick(std::uint64_t draw) const {
    auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(),
                               static_cast<unsigned __int128>(draw));
    return static_cast<std::size_t>(it - thresholds_.begin());
  }

 private:
  std::size_t d_;
  std::vector<Atom> atoms_;
  std::vector<unsigned __int128> thresholds_;
};

/// Primes dividing a numerator or denominator of some entry of some atom.
inline std::vector<std::uint64_t> relevant_primes(const StepMeasure& mu) {
  std::set<std::uint64_t> primes;
  for (const auto& atom : mu.atoms()) {
    for (const auto& x : atom.matrix.entries()) {
      if (x.is_zero()) continue;
      for (auto p : factor_support(x)) primes.insert(p);
    }
  }
  return {primes.begin(), primes.end()};
}

/// {inf} u relevant primes, primes ascending and infinity last.
inline std::vector<Place> relevant_places(const StepMeasure& mu) {
  std::vector<Place> out;
  for (auto p : relevant_primes(mu)) out.push_back(Place::prime(p));
  out.push_back(Place::infinity());
  return out;
}

/**
 * Exact drifts phi_place(i) = E[ln |a_ii|_place]. At a prime p the drift is
 * r_{p,i} ln p with r_{p,i} = -E[v_p(a_ii)]; at infinity it is a log-linear form.
 */
class DriftProfile {
 public:
  DriftProfile() = default;
  DriftProfile(std::size_t d, std::map<std::uint64_t, std::vector<Rational>> prime_coeffs,
               std::vector<LogLinear> arch)
      : d_(d), prime_coeffs_(std::move(prime_coeffs)), arch_(std::move(arch)) {}

  [[nodiscard]] std::size_t dim() const { return d_; }

  [[nodiscard]] std::vector<std::uint64_t> primes() const {
    std::vector<std::uint64_t> out;
    for (const auto& [p, c] : prime_coeffs_) out.push_back(p);
    return out;
  }

  [[nodiscard]] bool covers(const Place& place) const {
    return place.is_infinite() || prime_coeffs_.count(place.p()) != 0;
  }

  /// r_{p,i} for a relevant prime.
  [[nodiscard]] const std::vector<Rational>& prime_coefficients(std::uint64_t p) const {
    auto it = prime_coeffs_.find(p);
    if (it == prime_coeffs_.end()) throw std::out_of_range("place " + std::to_string(p) + " not covered");
    return it->second;
  }

  [[nodiscard]] const std::vector<LogLinear>& arch() const { return arch_; }

  /// Drift vector at a covered place.
  [[nodiscard]] std::vector<LogLinear> drifts(const Place& place) const {
    if (place.is_infinite()) return arch_;
    if (!covers(place)) throw std::out_of_range("place " + place.to_string() + " not covered");
    std::vector<LogLinear> out;
    for (const auto& r : prime_coeffs_.at(place.p())) out.push_back(LogLinear::term(place.p(), r));
    return out;
  }

  [[nodiscard]] std::vector<double> values(const Place& place) const {
    std::vector<double> out;
    for (const auto& x : drifts(place)) out.push_back(x.to_double());
    return out;
  }

 private:
  std::size_t d_ = 0;
  std::map<std::uint64_t, std::vector<Rational>> prime_coeffs_;
  std::vector<LogLinear> arch_;
};

inline DriftProfile drift_profile(const StepMeasure& mu) {
  const std::size_t d = mu.dim();
  std::map<std::uint64_t, std::vector<Rational>> coeffs;
  for (auto p : relevant_primes(mu)) {
    std::vector<Rational> r(d);
    Place place = Place::prime(p);
    for (const auto& atom : mu.atoms()) {
      for (std::size_t i = 0; i < d; ++i) {
        r[i] -= atom.weight * Rational(valuation(atom.matrix(i, i), place));
      }
    }
    coeffs.emplace(p, std::move(r));
  }
  std::vector<LogLinear> arch(d);
  for (const auto& atom : mu.atoms()) {
    for (std::size_t i = 0; i < d; ++i) arch[i] += LogLinear::log_abs(atom.matrix(i, i)) * atom.weight;
  }
  return DriftProfile(d, std::move(coeffs), std::move(arch));
}

/**
 * Integrability data: K_p = sum_{r<=s} E|ln|a_rs|_p| per place and the total
 * over all places. Zero entries contribute nothing.
 */
struct MomentReport {
  std::map<Place, LogLinear> per_place;
  double total = 0.0;

  [[nodiscard]] double k(const Place& place) const {
    auto it = per_place.find(place);
    return it == per_place.end() ? 0.0 : it->second.to_double();
  }
};

inline MomentReport moment_value(const StepMeasure& mu) {
  MomentReport out;
  const std::size_t d = mu.dim();
  for (const auto& place : relevant_places(mu)) {
    LogLinear acc;
    for (const auto& atom : mu.atoms()) {
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t s = r; s < d; ++s) {
          const auto& x = atom.matrix(r, s);
          if (x.is_zero()) continue;
          LogLinear term = place.is_infinite()
                               ? LogLinear::log_abs(x).abs()
                               : LogLinear::term(place.p(), Rational(std::labs(valuation(x, place))));
          acc += term * atom.weight;
        }
      }
    }
    out.total += acc.to_double();
    out.per_place.emplace(place, std::move(acc));
  }
  return out;
}

}  // namespace boundarylab
