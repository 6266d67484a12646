#pragma once

// Heights, finitely supported adelic points, the adelic length on H = U(A) Delta(Q),
// the q_n^i approximants and the two Monte-Carlo statistics built on them.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/boundary.hpp"
#include "boundarylab/measure.hpp"
#include "boundarylab/parallel.hpp"
#include "boundarylab/rational.hpp"
#include "boundarylab/trajectory.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

/// r*s for q = +-r/s; <q> = ln(r*s).
inline mpz_class height_size(const Rational& q) {
  if (q.is_zero()) throw std::invalid_argument("height of zero");
  return abs(q.num()) * q.den();
}

inline double height(const Rational& q) { return log_abs(height_size(q)); }

/// max(s, |r|), with 1 for q = 0; <q>^+ over all places = ln of it.
inline mpz_class height_plus_size(const Rational& q) {
  if (q.is_zero()) return 1;
  mpz_class r = abs(q.num());
  return r > q.den() ? r : q.den();
}

inline double height_plus(const Rational& q) { return log_abs(height_plus_size(q)); }

/// ln^+ |q|_place.
inline double height_plus_at(const Rational& q, const Place& place) {
  if (q.is_zero()) return 0;
  if (place.is_infinite()) return std::max(0.0, q.log_abs());
  long v = valuation(q, place);
  return v < 0 ? -static_cast<double>(v) * std::log(static_cast<double>(place.p())) : 0.0;
}

/**
 * Finitely supported adele: explicit rational components at some places and
 * one rational `rest` used at every other place (0 or a diagonally embedded q).
 */
struct AdelePoint {
  std::map<Place, Rational> at;
  Rational rest;

  static AdelePoint embed(const Rational& q) { return AdelePoint{{}, q}; }

  [[nodiscard]] const Rational& value(const Place& place) const {
    auto it = at.find(place);
    return it == at.end() ? rest : it->second;
  }

  /// <b>^+ = sum over all places of ln^+|b^p|_p.
  [[nodiscard]] double height_plus() const {
    double total = 0;
    for (const auto& [place, x] : at) total += height_plus_at(x, place);
    if (rest.is_zero()) return total;
    // Primes outside `at`: only those dividing the denominator of rest.
    mpz_class den = rest.den();
    for (const auto& [place, x] : at) {
      if (!place.is_prime()) continue;
      const mpz_class p(static_cast<unsigned long>(place.p()));
      while (mpz_divisible_p(den.get_mpz_t(), p.get_mpz_t())) den /= p;
    }
    total += log_abs(den);
    if (!at.count(Place::infinity())) total += height_plus_at(rest, Place::infinity());
    return total;
  }
};

/// h = u * delta with u unipotent over A and delta rational diagonal.
class HPoint {
 public:
  explicit HPoint(std::size_t d) : d_(d), u_(d * d), delta_(d, Rational(1)) {
    for (std::size_t i = 0; i < d; ++i) u_[i * d + i] = AdelePoint::embed(1);
  }

  static HPoint embed(const TriMatrix& a) {
    auto s = split_ud(a);
    HPoint h(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
      for (std::size_t j = i; j < a.dim(); ++j) h.u_[i * h.d_ + j] = AdelePoint::embed(s.unipotent(i, j));
    h.delta_ = s.diagonal;
    return h;
  }

  [[nodiscard]] std::size_t dim() const { return d_; }
  [[nodiscard]] const AdelePoint& u(std::size_t i, std::size_t j) const { return u_.at(i * d_ + j); }
  AdelePoint& u(std::size_t i, std::size_t j) { return u_.at(i * d_ + j); }
  [[nodiscard]] const std::vector<Rational>& delta() const { return delta_; }
  std::vector<Rational>& delta() { return delta_; }

  [[nodiscard]] std::set<Place> explicit_places() const {
    std::set<Place> out;
    for (const auto& e : u_)
      for (const auto& [p, x] : e.at) out.insert(p);
    return out;
  }

  /// Unipotent component at `place`, or the rest component when place is empty.
  [[nodiscard]] TriMatrix unipotent_at(const std::optional<Place>& place) const {
    std::vector<Rational> e(d_ * d_);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = i; j < d_; ++j) {
        const auto& a = u_[i * d_ + j];
        e[i * d_ + j] = place ? a.value(*place) : a.rest;
      }
    return TriMatrix(d_, std::move(e));
  }

  /// ||h|| = <u>^+ + <delta>.
  [[nodiscard]] double length() const {
    double total = 0;
    for (std::size_t i = 0; i < d_; ++i) {
      total += height(delta_[i]);
      for (std::size_t j = i + 1; j < d_; ++j) total += u_[i * d_ + j].height_plus();
    }
    return total;
  }

  /// Placewise product: u delta u' delta' = u (delta u' delta^-1) delta delta'.
  friend HPoint operator*(const HPoint& a, const HPoint& b) {
    if (a.d_ != b.d_) throw std::invalid_argument("dimension mismatch in H product");
    const std::size_t d = a.d_;
    auto conj = [&](const TriMatrix& v) {
      std::vector<Rational> e(v.entries());
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) e[i * d + j] *= a.delta_[i] / a.delta_[j];
      return TriMatrix(d, std::move(e));
    };
    HPoint out(d);
    auto places = a.explicit_places();
    for (const auto& p : b.explicit_places()) places.insert(p);
    TriMatrix rest = a.unipotent_at(std::nullopt) * conj(b.unipotent_at(std::nullopt));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) out.u(i, j).rest = rest(i, j);
    for (const auto& p : places) {
      TriMatrix m = a.unipotent_at(p) * conj(b.unipotent_at(p));
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) out.u(i, j).at[p] = m(i, j);
    }
    for (std::size_t i = 0; i < d; ++i) out.delta_[i] = a.delta_[i] * b.delta_[i];
    return out;
  }

 private:
  std::size_t d_;
  std::vector<AdelePoint> u_;
  std::vector<Rational> delta_;
};

/// e^{||a||} for a rational matrix a: an exact integer.
inline mpz_class length_size(const TriMatrix& a) {
  auto s = split_ud(a);
  mpz_class n = 1;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    n *= height_size(s.diagonal[i]);
    for (std::size_t j = i + 1; j < a.dim(); ++j) n *= height_plus_size(s.unipotent(i, j));
  }
  return n;
}

inline double adelic_length(const TriMatrix& a) { return log_abs(length_size(a)); }
inline double adelic_length(const HPoint& h) { return h.length(); }

struct SubadditivityReport {
  std::size_t scalar_checks = 0;
  std::size_t scalar_violations = 0;
  std::size_t pairs = 0;
  /// (K', smallest K with ||hh'|| <= K + K'(||h|| + ||h'||) on the sample).
  std::vector<std::pair<double, double>> fit;
};

/**
 * Exact integer forms of the two scalar inequalities:
 * <qq'> <= <q> + <q'> and <b + q b' b''>^+ <= ln 2 + <b>^+ + <b'>^+ + <b''>^+ + <q>.
 */
inline bool height_product_holds(const Rational& q, const Rational& q2) {
  return height_size(q * q2) <= height_size(q) * height_size(q2);
}

inline bool height_plus_sum_holds(const Rational& b, const Rational& b1, const Rational& b2, const Rational& q) {
  mpz_class rhs = 2 * height_plus_size(b) * height_plus_size(b1) * height_plus_size(b2) * height_size(q);
  return height_plus_size(b + q * b1 * b2) <= rhs;
}

/// Scalar samples are the terms of the products themselves: b = u_ij, b' = u_ik, b'' = u'_kj, q = delta_k / delta_j.
inline SubadditivityReport near_subadditivity_check(const std::vector<std::pair<TriMatrix, TriMatrix>>& pairs) {
  SubadditivityReport out;
  out.pairs = pairs.size();
  std::size_t d = pairs.empty() ? 2 : pairs.front().first.dim();
  std::vector<double> grid;
  for (std::size_t k = 1; k <= std::max<std::size_t>(2, d); ++k) grid.push_back(static_cast<double>(k));
  std::vector<double> worst(grid.size(), 0.0);
  for (const auto& [h, h2] : pairs) {
    auto s = split_ud(h), s2 = split_ud(h2);
    for (std::size_t i = 0; i < h.dim(); ++i) {
      ++out.scalar_checks;
      if (!height_product_holds(s.diagonal[i], s2.diagonal[i])) ++out.scalar_violations;
      for (std::size_t j = i + 1; j < h.dim(); ++j) {
        for (std::size_t k = i; k <= j; ++k) {
          ++out.scalar_checks;
          Rational q = s.diagonal[k] / s.diagonal[j];
          if (!height_plus_sum_holds(s.unipotent(i, j), s.unipotent(i, k), s2.unipotent(k, j), q))
            ++out.scalar_violations;
        }
      }
    }
    double lhs = adelic_length(h * h2), rhs = adelic_length(h) + adelic_length(h2);
    for (std::size_t g = 0; g < grid.size(); ++g) worst[g] = std::max(worst[g], lhs - grid[g] * rhs);
  }
  for (std::size_t g = 0; g < grid.size(); ++g) out.fit.emplace_back(grid[g], worst[g]);
  return out;
}

/// q_n^i = prod_p p^{-[n r_{p,i}]} with phi_p(i) = r_{p,i} ln p and the signed integer part.
inline Rational qn_approximant(const DriftProfile& profile, std::size_t i, std::size_t n) {
  Rational q(1);
  for (auto p : profile.primes()) {
    Rational x = Rational(static_cast<long>(n)) * profile.prime_coefficients(p).at(i);
    mpz_class e = truncated_integer_part(x);
    q *= pow(Rational(static_cast<long>(p)), -e.get_si());
  }
  return q;
}

/// <(x_n)^{-1}_{ii} q_n^i> / n at each n of `ns` along one trajectory.
inline std::vector<double> qni_values(Trajectory& traj, const DriftProfile& profile, std::size_t i,
                                      const std::vector<std::size_t>& ns) {
  std::vector<double> out;
  Rational diag(1);
  std::size_t at = 0;
  for (std::size_t n : ns) {
    for (; at < n; ++at) diag *= traj.increment(at + 1)(i, i);
    out.push_back(height(diag.inverse() * qn_approximant(profile, i, n)) / static_cast<double>(n));
  }
  return out;
}

struct QniRow {
  std::size_t n = 0;
  double mean = 0;
  std::vector<double> values;  // per seed, in seed order
};

inline std::vector<QniRow> qni_statistic(const std::shared_ptr<const StepMeasure>& mu,
                                         const std::vector<std::uint64_t>& seeds, std::vector<std::size_t> ns,
                                         std::size_t i = 0, std::size_t workers = 0) {
  if (i >= mu->dim()) throw std::out_of_range("qni index out of range");
  std::sort(ns.begin(), ns.end());
  auto profile = drift_profile(*mu);
  auto per_seed = parallel_map(seeds, [&](std::uint64_t seed) {
    Trajectory traj(mu, seed);
    return qni_values(traj, profile, i, ns);
  }, workers);
  std::vector<QniRow> out;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    QniRow row;
    row.n = ns[k];
    for (const auto& v : per_seed) row.values.push_back(v[k]);
    double sum = 0;
    for (double v : row.values) sum += v;
    row.mean = row.values.empty() ? 0 : sum / static_cast<double>(row.values.size());
    out.push_back(std::move(row));
  }
  return out;
}

/// True when every mean is strictly below the previous one.
inline bool strictly_decreasing(const std::vector<QniRow>& rows) {
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].mean < rows[k - 1].mean)) return false;
  return true;
}

struct PiResult {
  HPoint point;
  std::vector<std::string> warnings;
};

/**
 * pi_n^P: off-diagonal entries z^p_ij at p in P (0 elsewhere), diagonal q_n.
 * Places of P without a point in `points` count as trivial cells.
 */
inline PiResult pi_np(const std::map<Place, BoundaryPoint>& points, const std::vector<Place>& places, std::size_t n,
                      const DriftProfile& profile) {
  const std::size_t d = profile.dim();
  if (std::find(places.begin(), places.end(), Place::infinity()) == places.end())
    throw std::invalid_argument("P must contain the archimedean place");
  PiResult out{HPoint(d), {}};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) out.point.u(i, j).rest = Rational(0);
  for (const auto& place : places) {
    auto it = points.find(place);
    TriMatrix z = it == points.end() ? TriMatrix::identity(d) : it->second.matrix();
    if (it != points.end() && !it->second.certified())
      out.warnings.push_back("uncertified boundary entries at place " + place.to_string());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j) out.point.u(i, j).at[place] = z(i, j);
  }
  for (std::size_t i = 0; i < d; ++i) out.point.delta()[i] = qn_approximant(profile, i, n);
  return out;
}

struct EstimgaugeSample {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  double value = 0;  // ||x_n^{-1} pi_n^P(Z)|| / n
  bool certified = true;
  std::vector<std::string> warnings;
};

struct EstimgaugeOptions {
  std::size_t boundary_steps = 0;  // 0: max(4n, 200)
  ProjectiveOptions projective;
};

inline EstimgaugeSample estimgauge_value(const std::shared_ptr<const StepMeasure>& mu, const DriftProfile& profile,
                                         std::uint64_t seed, std::size_t n, const std::vector<Place>& places,
                                         const EstimgaugeOptions& options = {}) {
  Trajectory traj(mu, seed);
  ProjectiveOptions po = options.projective;
  po.max_steps = options.boundary_steps != 0 ? options.boundary_steps : std::max<std::size_t>(4 * n, 200);
  std::map<Place, BoundaryPoint> points;
  for (const auto& p : places) points.emplace(p, assemble_boundary_point(traj, profile, p, po).point);
  auto pi = pi_np(points, places, n, profile);
  HPoint h = HPoint::embed(traj.product(n).inverse()) * pi.point;
  EstimgaugeSample out;
  out.seed = seed;
  out.n = n;
  out.value = h.length() / static_cast<double>(n);
  out.certified = pi.warnings.empty();
  out.warnings = std::move(pi.warnings);
  return out;
}

inline std::vector<EstimgaugeSample> estimgauge_statistic(const std::shared_ptr<const StepMeasure>& mu,
                                                          const std::vector<std::uint64_t>& seeds, std::size_t n,
                                                          const std::vector<Place>& places,
                                                          const EstimgaugeOptions& options = {},
                                                          std::size_t workers = 0) {
  auto profile = drift_profile(*mu);
  return parallel_map(seeds, [&](std::uint64_t seed) {
    return estimgauge_value(mu, profile, seed, n, places, options);
  }, workers);
}

/// Empirical quantile with the nearest-rank rule.
inline double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

}  // namespace boundarylab
