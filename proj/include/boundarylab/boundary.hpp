#pragma once

// Projective iteration on the wedge subspace, Cauchy certification of the
// iterates at one place, and column-by-column assembly of boundary points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/bruhat.hpp"
#include "boundarylab/exterior.hpp"
#include "boundarylab/log_linear.hpp"
#include "boundarylab/matrix.hpp"
#include "boundarylab/measure.hpp"
#include "boundarylab/trajectory.hpp"

namespace boundarylab {

/// J_j = {i <= j : phi(i) >= phi(j)}, 0-based, always containing j.
inline IndexTuple j_set(const std::vector<LogLinear>& phi, std::size_t j) {
  IndexTuple out;
  for (std::size_t i = 0; i <= j; ++i) {
    if (compare(phi[i], phi[j]) >= 0) out.push_back(i);
  }
  return out;
}

/// Basis of the wedge subspace for the (j+1)-minor.
inline SubspaceBasis basis_for(const std::vector<LogLinear>& phi, std::size_t j) {
  return SubspaceBasis(j + 1, j_set(phi, j));
}

/// Sign relating a column entry Z_{l,j} to its wedge coordinate.
inline int column_sign(const IndexTuple& top, std::size_t l) {
  std::size_t count = 0;
  for (std::size_t i : top) count += (i > l && i < top.back());
  return count % 2 ? -1 : 1;
}

/**
 * phi'(k) = sum_{K} phi - sum_{J} phi for the basis tuples k < m-1 (the last
 * tuple is J itself). Every value must be negative; anything else means the
 * basis does not come from the drifts.
 */
inline std::vector<LogLinear> reduced_drifts(const std::vector<LogLinear>& phi, const SubspaceBasis& basis) {
  LogLinear top_sum;
  for (std::size_t j : basis.top()) top_sum += phi.at(j);
  std::vector<LogLinear> out;
  for (std::size_t k = 0; k + 1 < basis.size(); ++k) {
    LogLinear v = -top_sum;
    for (std::size_t i : basis.tuple(k)) v += phi.at(i);
    if (v.sign() >= 0) {
      throw std::logic_error("reduced drift " + basis.label(k) + " is not negative: " + v.to_string());
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<LogLinear> reduced_drifts(const DriftProfile& profile, const SubspaceBasis& basis,
                                             const Place& place) {
  return reduced_drifts(profile.drifts(place), basis);
}

/// Slowest reduced drift feeding coordinate k: max over tuples l >= k that dominate tuple k.
inline LogLinear predicted_rate(const std::vector<LogLinear>& reduced, const SubspaceBasis& basis, std::size_t k) {
  std::optional<LogLinear> best;
  for (std::size_t l = k; l < reduced.size(); ++l) {
    if (!dominated(basis.tuple(k), basis.tuple(l))) continue;
    if (!best || compare(reduced[l], *best) > 0) best = reduced[l];
  }
  return *best;
}

/// Ordinary least squares slope of y against x.
inline std::optional<double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

/// A rational approximation of one coordinate of a limit, with its error claim.
struct PadicApproximant {
  Place place = Place::infinity();
  Rational value;
  bool certified = false;
  bool exact = false;          // no nonzero difference was ever seen
  long error_exponent = 0;     // prime places: v_p(limit - value) >= error_exponent
  Rational error_bound;        // infinity: |limit - value| <= error_bound

  [[nodiscard]] PadicApproximant negated() const {
    PadicApproximant out = *this;
    out.value = -value;
    return out;
  }

  [[nodiscard]] std::string error_string() const {
    if (exact) return "exact";
    if (!certified) return "uncertified";
    return place.is_infinite() ? error_bound.to_string() : std::to_string(error_exponent);
  }
};

/// Whether two approximants of one limit are compatible with their error claims.
inline bool agree(const PadicApproximant& a, const PadicApproximant& b) {
  Rational diff = a.value - b.value;
  if (diff.is_zero()) return true;
  if (a.exact && b.exact) return false;
  if (a.place.is_infinite()) {
    Rational tol = (a.exact ? Rational(0) : a.error_bound) + (b.exact ? Rational(0) : b.error_bound);
    return diff.abs() <= tol;
  }
  long e = std::min(a.exact ? std::numeric_limits<long>::max() : a.error_exponent,
                    b.exact ? std::numeric_limits<long>::max() : b.error_exponent);
  return valuation(diff, a.place) >= e;
}

struct MonitorOptions {
  std::size_t window = 10;
  double safety = 2.0;
};

/**
 * Watches the successive differences of one coordinate at one place.
 *
 * Prime p: certified once the lower envelope of the last `window` valuations
 * rises at a majority of steps with mean increment at least half the predicted
 * rate in units of ln p. Strictly increasing windows always qualify; the
 * envelope also admits the small periodic dips seen in some wedge coordinates. The error exponent is the running maximum of the
 * smallest valuation in the trailing window. This bounds the distance to every
 * later iterate only if later differences stay above it; violations are counted.
 *
 * Infinity: a least-squares slope s < 0 of ln|diff| over the recent half of the
 * history gives a ratio rho = e^s, and the bound is
 * safety * rho / (1 - rho) * max |diff| over the trailing window, kept as a running minimum.
 */
class CauchyMonitor {
 public:
  CauchyMonitor(Place place, double predicted_rate, MonitorOptions options = {})
      : place_(place), predicted_(predicted_rate), options_(options) {}

  void observe(std::size_t n, const Rational& delta) {
    if (delta.is_zero()) return;
    ++nonzero_;
    steps_.push_back(static_cast<double>(n));
    if (place_.is_infinite()) observe_real(n, delta);
    else observe_prime(n, delta);
  }

  [[nodiscard]] const Place& place() const { return place_; }
  [[nodiscard]] double predicted_rate() const { return predicted_; }
  [[nodiscard]] bool exact() const { return nonzero_ == 0; }
  [[nodiscard]] bool certified() const { return exact() || certified_at_ != 0; }
  [[nodiscard]] std::size_t certified_at() const { return certified_at_; }
  [[nodiscard]] std::size_t violations() const { return violations_; }
  [[nodiscard]] std::size_t nonzero_differences() const { return nonzero_; }
  [[nodiscard]] long error_exponent() const { return error_exponent_; }
  [[nodiscard]] const Rational& error_bound() const { return error_bound_; }

  /// (n, ln|diff_n|_place) for every nonzero difference.
  [[nodiscard]] std::vector<std::pair<std::size_t, double>> history() const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t i = 0; i < steps_.size(); ++i) out.emplace_back(static_cast<std::size_t>(steps_[i]), logs_[i]);
    return out;
  }

  /// Valuations of the nonzero differences (prime places only).
  [[nodiscard]] const std::vector<long>& valuations() const { return valuations_; }

  /// Slope of ln|diff_n| over n from certification onwards; needs `window` points.
  [[nodiscard]] std::optional<double> observed_slope() const {
    if (certified_at_ == 0) return std::nullopt;
    auto first = std::lower_bound(steps_.begin(), steps_.end(), static_cast<double>(certified_at_));
    std::size_t from = static_cast<std::size_t>(first - steps_.begin());
    from = std::min(from, steps_.size() >= options_.window ? steps_.size() - options_.window : 0);
    if (steps_.size() - from < options_.window) return std::nullopt;
    return ols_slope({steps_.begin() + static_cast<long>(from), steps_.end()},
                     {logs_.begin() + static_cast<long>(from), logs_.end()});
  }

  [[nodiscard]] PadicApproximant approximant(const Rational& value) const {
    PadicApproximant out;
    out.place = place_;
    out.value = value;
    out.exact = exact();
    out.certified = certified();
    out.error_exponent = error_exponent_;
    out.error_bound = error_bound_;
    return out;
  }

 private:
  void observe_prime(std::size_t n, const Rational& delta) {
    long v = valuation(delta, place_);
    valuations_.push_back(v);
    logs_.push_back(-static_cast<double>(v) * std::log(static_cast<double>(place_.p())));
    recent_val_.push_back(v);
    if (recent_val_.size() > options_.window) recent_val_.pop_front();
    long floor = *std::min_element(recent_val_.begin(), recent_val_.end());
    if (certified_at_ != 0) {
      if (v < error_exponent_) ++violations_;
      error_exponent_ = std::max(error_exponent_, floor);
      return;
    }
    if (recent_val_.size() < options_.window) return;
    // Lower envelope: e_i = min(v_i, ..., v_n) over the window.
    std::vector<long> env(recent_val_.begin(), recent_val_.end());
    for (std::size_t i = env.size() - 1; i-- > 0;) env[i] = std::min(env[i], env[i + 1]);
    std::size_t rises = 0;
    for (std::size_t i = 1; i < env.size(); ++i) rises += env[i] > env[i - 1];
    if (2 * rises < options_.window - 1) return;
    double mean_step = static_cast<double>(env.back() - env.front()) /
                       static_cast<double>(options_.window - 1);
    double needed = 0.5 * (-predicted_ / std::log(static_cast<double>(place_.p())));
    if (mean_step + 1e-12 < needed) return;
    certified_at_ = n;
    error_exponent_ = floor;
  }

  void observe_real(std::size_t n, const Rational& delta) {
    logs_.push_back(delta.log_abs());
    recent_abs_.push_back(delta.abs());
    if (recent_abs_.size() > options_.window) recent_abs_.pop_front();
    // Prefix sums for the regression window.
    const double x = static_cast<double>(n), y = logs_.back();
    sx_.push_back((sx_.empty() ? 0 : sx_.back()) + x);
    sy_.push_back((sy_.empty() ? 0 : sy_.back()) + y);
    sxx_.push_back((sxx_.empty() ? 0 : sxx_.back()) + x * x);
    sxy_.push_back((sxy_.empty() ? 0 : sxy_.back()) + x * y);
    if (nonzero_ < options_.window) return;
    const std::size_t len = std::max(options_.window, nonzero_ / 2);
    const std::size_t lo = nonzero_ - len;
    auto range = [&](const std::vector<double>& s) { return s.back() - (lo == 0 ? 0 : s[lo - 1]); };
    const double cnt = static_cast<double>(len);
    const double mx = range(sx_) / cnt, my = range(sy_) / cnt;
    const double sxx = range(sxx_) - cnt * mx * mx, sxy = range(sxy_) - cnt * mx * my;
    if (!(sxx > 0)) return;
    const double slope = sxy / sxx;
    if (certified_at_ != 0) {
      const Rational& prev = error_bound_;
      if (delta.abs() > prev) ++violations_;
    }
    if (!(slope < 0)) return;
    const double rho = std::exp(slope);
    const double factor = options_.safety * rho / (1 - rho);
    if (!std::isfinite(factor)) return;
    Rational largest = *std::max_element(recent_abs_.begin(), recent_abs_.end());
    Rational bound = Rational(mpq_class(factor * (1 + 1e-9))) * largest;
    if (certified_at_ == 0) {
      certified_at_ = n;
      error_bound_ = bound;
    } else if (bound < error_bound_) {
      error_bound_ = bound;
    }
  }

  Place place_;
  double predicted_;
  MonitorOptions options_;
  std::size_t nonzero_ = 0;
  std::size_t certified_at_ = 0;
  std::size_t violations_ = 0;
  long error_exponent_ = 0;
  Rational error_bound_;
  std::vector<double> steps_, logs_;
  std::vector<long> valuations_;
  std::deque<long> recent_val_;
  std::deque<Rational> recent_abs_;
  std::vector<double> sx_, sy_, sxx_, sxy_;
};

struct ProjectiveOptions {
  std::size_t max_steps = 2000;
  std::size_t bit_guard = std::size_t{1} << 22;
  MonitorOptions monitor;
};

struct ProjectiveResult {
  Place place = Place::infinity();
  SubspaceBasis basis{1, {0}};
  std::vector<Rational> start;                   // u0
  std::vector<PadicApproximant> approximants;    // coordinates k < m-1; the last is 1
  std::vector<CauchyMonitor> monitors;
  std::size_t steps_used = 0;

  [[nodiscard]] bool certified() const {
    return std::all_of(monitors.begin(), monitors.end(), [](const auto& m) { return m.certified(); });
  }
};

/// a' for the (j+1)-minor of every atom, indexed like the atoms.
inline std::vector<DenseMatrix> normalized_atom_reps(const StepMeasure& mu, const SubspaceBasis& basis) {
  std::vector<DenseMatrix> out;
  for (const auto& atom : mu.atoms()) {
    TriMatrix a = atom.matrix.minor(basis.dim());
    out.push_back(wedge_rep(a, basis).normalized(a, basis));
  }
  return out;
}

/**
 * Iterates x_n . u0 = x'_n u0 exactly for the minor of size basis.dim() and
 * monitors every coordinate but the last. Always runs to max_steps.
 */
inline ProjectiveResult iterate_projective(Trajectory& traj, const SubspaceBasis& basis, std::vector<Rational> u0,
                                           const Place& place, const std::vector<LogLinear>& phi,
                                           const ProjectiveOptions& options = {}) {
  const std::size_t m = basis.size();
  if (u0.size() != m) throw std::invalid_argument("start vector has wrong length");
  if (!u0.back().is_one()) throw std::invalid_argument("start vector must have last coordinate 1");
  ProjectiveResult out;
  out.place = place;
  out.basis = basis;
  out.start = u0;
  if (m == 1) return out;
  auto reduced = reduced_drifts(phi, basis);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    out.monitors.emplace_back(place, predicted_rate(reduced, basis, k).to_double(), options.monitor);
  }
  auto reps = normalized_atom_reps(traj.measure(), basis);
  DenseMatrix x = DenseMatrix::identity(m);
  std::vector<Rational> prev = u0;
  for (std::size_t n = 1; n <= options.max_steps; ++n) {
    x = x * reps[traj.atom_index(n)];
    std::vector<Rational> v = x * std::span<const Rational>(u0);
    for (std::size_t k = 0; k + 1 < m; ++k) out.monitors[k].observe(n, v[k] - prev[k]);
    prev = std::move(v);
    if (n % 64 == 0 && x.max_bit_size() > options.bit_guard) {
      throw BudgetExceeded("iterate bit size exceeded " + std::to_string(options.bit_guard) + " bits at step " +
                           std::to_string(n) + " (place " + place.to_string() + ")");
    }
  }
  out.steps_used = options.max_steps;
  for (std::size_t k = 0; k + 1 < m; ++k) out.approximants.push_back(out.monitors[k].approximant(prev[k]));
  return out;
}

/// Start vector e_m.
inline std::vector<Rational> last_basis_vector(std::size_t m) {
  std::vector<Rational> u(m);
  u.back() = Rational(1);
  return u;
}

struct BoundaryPoint {
  Place place = Place::infinity();
  CellDescriptor cell;
  std::map<Position, PadicApproximant> entries;

  [[nodiscard]] bool certified() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.second.certified; });
  }

  /// Unipotent matrix of approximant values; non-free entries are exactly 0.
  [[nodiscard]] TriMatrix matrix() const {
    const std::size_t d = cell.weyl.dim();
    std::vector<Rational> e(d * d);
    for (std::size_t i = 0; i < d; ++i) e[i * d + i] = Rational(1);
    for (const auto& [pos, a] : entries) e[pos.first * d + pos.second] = a.value;
    return TriMatrix(d, std::move(e));
  }
};

struct EntryReport {
  Position position;
  std::size_t coordinate = 0;
  double predicted_rate = 0;
  std::optional<double> observed_slope;
  bool certified = false;
  bool exact = false;
  std::size_t certified_at = 0;
  std::size_t violations = 0;
};

struct ConvergenceReport {
  Place place = Place::infinity();
  std::vector<EntryReport> entries;
  std::size_t steps_used = 0;

  [[nodiscard]] bool certified() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.certified; });
  }
};

struct BoundaryAssembly {
  BoundaryPoint point;
  std::map<std::size_t, ProjectiveResult> sublimits;  // keyed by column j
  ConvergenceReport report;
};

inline CellDescriptor point_cell(const Place& place, std::size_t d) {
  return CellDescriptor{place, WeylPerm::longest(d), {}};
}

/**
 * Column j of Z is read off the wedge limit Z(j) of the (j+1)-minor walk:
 * Z_{l,j} = eps_l * Z(j)_k with k the tuple (J_j \ {j}) u {l}, for each l not in J_j.
 */
inline BoundaryAssembly assemble_boundary_point(Trajectory& traj, const DriftProfile& profile, const Place& place,
                                                const ProjectiveOptions& options = {}) {
  const std::size_t d = profile.dim();
  BoundaryAssembly out;
  out.point.place = place;
  out.report.place = place;
  if (!profile.covers(place)) {
    out.point.cell = point_cell(place, d);
    return out;
  }
  out.point.cell = cell_of(profile, place);
  auto phi = profile.drifts(place);
  for (std::size_t j = 1; j < d; ++j) {
    SubspaceBasis basis = basis_for(phi, j);
    if (basis.size() == 1) continue;
    auto result = iterate_projective(traj, basis, last_basis_vector(basis.size()), place, phi, options);
    out.report.steps_used = std::max(out.report.steps_used, result.steps_used);
    for (std::size_t l = 0; l < j; ++l) {
      if (std::find(basis.top().begin(), basis.top().end(), l) != basis.top().end()) continue;
      std::size_t k = basis.index_of(appendix_rows(basis.top(), l));
      const auto& coord = result.approximants[k];
      out.point.entries.emplace(Position{l, j}, column_sign(basis.top(), l) < 0 ? coord.negated() : coord);
      const auto& mon = result.monitors[k];
      out.report.entries.push_back({Position{l, j}, k, mon.predicted_rate(), mon.observed_slope(), mon.certified(),
                                    mon.exact(), mon.certified_at(), mon.violations()});
    }
    out.sublimits.emplace(j, std::move(result));
  }
  return out;
}

struct WedgeCheck {
  std::size_t column = 0;
  std::size_t coordinate = 0;
  std::string label;
  Rational recomputed;
  Rational iterated;
  bool agrees = false;
};

/**
 * Recomputes every wedge coordinate of Z(j) as a minor of the assembled matrix
 * and compares it with the iterated value. The error of the minor is taken to
 * first order from the entry errors times their cofactors, doubled.
 */
inline std::vector<WedgeCheck> wedge_consistency(const BoundaryAssembly& assembly) {
  std::vector<WedgeCheck> out;
  const auto& point = assembly.point;
  TriMatrix z = point.matrix();
  DenseMatrix dense = z.dense();
  const bool real = point.place.is_infinite();
  for (const auto& [j, result] : assembly.sublimits) {
    const auto& basis = result.basis;
    const auto& cols = basis.top();
    for (std::size_t k = 0; k + 1 < basis.size(); ++k) {
      const auto& rows = basis.tuple(k);
      DenseMatrix sub = dense.select(rows, cols);
      PadicApproximant minor_approx;
      minor_approx.place = point.place;
      minor_approx.value = bareiss_determinant(sub);
      minor_approx.certified = true;
      minor_approx.exact = true;
      minor_approx.error_exponent = std::numeric_limits<long>::max();
      Rational tol;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          auto it = point.entries.find(Position{rows[r], cols[c]});
          if (it == point.entries.end() || it->second.exact) continue;
          const auto& e = it->second;
          if (!e.certified) minor_approx.certified = false;
          std::vector<std::size_t> rr, cc;
          for (std::size_t t = 0; t < rows.size(); ++t) if (t != r) rr.push_back(t);
          for (std::size_t t = 0; t < cols.size(); ++t) if (t != c) cc.push_back(t);
          Rational cof = rr.empty() ? Rational(1) : bareiss_determinant(sub.select(rr, cc));
          if (cof.is_zero()) continue;
          minor_approx.exact = false;
          if (real) tol += Rational(2) * e.error_bound * cof.abs();
          else minor_approx.error_exponent = std::min(minor_approx.error_exponent,
                                                      e.error_exponent + valuation(cof, point.place));
        }
      }
      minor_approx.error_bound = tol;
      const auto& it = result.approximants[k];
      out.push_back({j, k, basis.label(k), minor_approx.value, it.value, agree(minor_approx, it)});
    }
  }
  return out;
}

/// Indices l < j outside J_j: the domain of the determinant series for column j.
inline std::vector<std::size_t> snl_domain(const DriftProfile& profile, const Place& place, std::size_t j) {
  if (!profile.covers(place)) return {};
  auto top = j_set(profile.drifts(place), j);
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < j; ++l) {
    if (std::find(top.begin(), top.end(), l) == top.end()) out.push_back(l);
  }
  return out;
}

/**
 * S_n^l = eps_l / prod_{i in J} (x_n)_{ii} * det((x_n)_{i,i'})_{i in I^l, i' in J}
 * for n = 1..max_steps, computed from the full products x_n (column j defaults to d-1).
 */
inline std::vector<Rational> snl_series(Trajectory& traj, const DriftProfile& profile, const Place& place,
                                        std::size_t l, std::size_t max_steps,
                                        std::optional<std::size_t> column = std::nullopt) {
  const std::size_t j = column.value_or(profile.dim() - 1);
  if (j >= profile.dim() || l >= j) throw std::out_of_range("index out of range for the determinant series");
  if (!profile.covers(place)) throw std::invalid_argument("place has a point cell; the series has empty domain");
  auto top = j_set(profile.drifts(place), j);
  if (std::find(top.begin(), top.end(), l) != top.end()) {
    throw std::invalid_argument("index l = " + std::to_string(l + 1) + " belongs to J");
  }
  IndexTuple rows = appendix_rows(top, l);
  const Rational eps(column_sign(top, l));
  std::vector<Rational> out;
  out.reserve(max_steps);
  TriMatrix x = TriMatrix::identity(profile.dim());
  for (std::size_t n = 1; n <= max_steps; ++n) {
    x = x * traj.increment(n);
    Rational scale(1);
    for (std::size_t i : top) scale *= x(i, i);
    out.push_back(eps * bareiss_determinant(x.dense().select(rows, top)) / scale);
  }
  return out;
}

}  // namespace boundarylab
