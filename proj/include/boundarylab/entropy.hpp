#pragma once

// Exact convolution powers of finitely supported measures, their Shannon entropy,
// and the first moment with respect to the gauge (G_n^{Id}).

#include <mpfr.h>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "boundarylab/gauge.hpp"
#include "boundarylab/log_linear.hpp"
#include "boundarylab/measure.hpp"
#include "boundarylab/parallel.hpp"
#include "boundarylab/tri_matrix.hpp"

namespace boundarylab {

inline constexpr std::size_t kSupportGuard = 500'000;

/// Probability on A(Q) with finite support, keyed by the canonical matrix text.
class GroupDistribution {
 public:
  struct Entry {
    TriMatrix matrix;
    Rational weight;
  };

  explicit GroupDistribution(std::size_t d) : d_(d) {}

  static GroupDistribution dirac(const TriMatrix& g) {
    GroupDistribution out(g.dim());
    out.add(g, Rational(1));
    return out;
  }

  static GroupDistribution from_measure(const StepMeasure& mu) {
    GroupDistribution out(mu.dim());
    for (const auto& a : mu.atoms()) out.add(a.matrix, a.weight);
    return out;
  }

  void add(const TriMatrix& g, const Rational& w) {
    if (g.dim() != d_) throw std::invalid_argument("dimension mismatch in distribution");
    if (w.sign() <= 0) throw std::invalid_argument("weights must be positive");
    auto [it, fresh] = atoms_.try_emplace(g.to_string(), Entry{g, w});
    if (!fresh) it->second.weight += w;
  }

  [[nodiscard]] std::size_t dim() const { return d_; }
  [[nodiscard]] std::size_t size() const { return atoms_.size(); }
  [[nodiscard]] const std::map<std::string, Entry>& atoms() const { return atoms_; }

  [[nodiscard]] Rational total() const {
    Rational t(0);
    for (const auto& [k, e] : atoms_) t += e.weight;
    return t;
  }

  [[nodiscard]] Rational weight(const TriMatrix& g) const {
    auto it = atoms_.find(g.to_string());
    return it == atoms_.end() ? Rational(0) : it->second.weight;
  }

  friend bool operator==(const GroupDistribution& a, const GroupDistribution& b) {
    if (a.d_ != b.d_ || a.atoms_.size() != b.atoms_.size()) return false;
    for (const auto& [k, e] : a.atoms_) {
      auto it = b.atoms_.find(k);
      if (it == b.atoms_.end() || it->second.weight != e.weight) return false;
    }
    return true;
  }

 private:
  std::size_t d_;
  std::map<std::string, Entry> atoms_;
};

namespace detail {

/// -sum w ln w accumulated in MPFR.
inline void entropy_into(const GroupDistribution& rho, MpfrValue& sum) {
  const mpfr_prec_t bits = mpfr_get_prec(sum.get());
  MpfrValue w(bits), lw(bits);
  mpfr_set_zero(sum.get(), 1);
  for (const auto& [k, e] : rho.atoms()) {
    mpfr_set_q(w.get(), e.weight.raw().get_mpq_t(), MPFR_RNDN);
    mpfr_log(lw.get(), w.get(), MPFR_RNDN);
    mpfr_mul(lw.get(), lw.get(), w.get(), MPFR_RNDN);
    mpfr_sub(sum.get(), sum.get(), lw.get(), MPFR_RNDN);
  }
}

}  // namespace detail

/// H(rho) = -sum rho(g) ln rho(g), evaluated at 256 bits and rounded once.
inline double entropy(const GroupDistribution& rho) {
  detail::MpfrValue sum(256);
  detail::entropy_into(rho, sum);
  return mpfr_get_d(sum.get(), MPFR_RNDN);
}

/// Push-forward of rho x sigma under multiplication; refuses supports above `guard`.
inline GroupDistribution convolve(const GroupDistribution& rho, const GroupDistribution& sigma,
                                  std::size_t guard = kSupportGuard, std::size_t workers = 1) {
  if (rho.dim() != sigma.dim()) throw std::invalid_argument("dimension mismatch in convolution");
  std::vector<const GroupDistribution::Entry*> left;
  for (const auto& [k, e] : rho.atoms()) left.push_back(&e);
  // Chunks of left atoms convolve independently; the merge below is order-free
  // because weights add exactly.
  const std::size_t chunks = std::max<std::size_t>(1, std::min(worker_count(workers), left.size()));
  std::vector<std::size_t> ids(chunks);
  for (std::size_t c = 0; c < chunks; ++c) ids[c] = c;
  auto partial = parallel_map(ids, [&](std::size_t c) {
    GroupDistribution part(rho.dim());
    for (std::size_t i = c; i < left.size(); i += chunks) {
      for (const auto& [k, e] : sigma.atoms()) {
        part.add(left[i]->matrix * e.matrix, left[i]->weight * e.weight);
        if (part.size() > guard) throw BudgetExceeded("convolution support exceeds guard " + std::to_string(guard));
      }
    }
    return std::optional<GroupDistribution>(std::move(part));
  }, workers);
  GroupDistribution out(rho.dim());
  for (const auto& part : partial) {
    for (const auto& [k, e] : part->atoms()) {
      out.add(e.matrix, e.weight);
      if (out.size() > guard) throw BudgetExceeded("convolution support exceeds guard " + std::to_string(guard));
    }
  }
  return out;
}

struct EntropyRow {
  std::size_t n = 0;
  double entropy = 0;
  std::optional<double> increment;  // H(mu^{*(n+1)}) - H(mu^{*n}) when level n+1 was computed
  std::size_t support = 0;
};

struct EntropySequence {
  std::vector<EntropyRow> rows;
  bool truncated = false;
  std::string note;

  /// Increments non-increasing up to a relative rounding slack.
  [[nodiscard]] bool increments_non_increasing(double slack = 1e-12) const {
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (!rows[k].increment || !rows[k - 1].increment) continue;
      if (*rows[k].increment > *rows[k - 1].increment + slack) return false;
    }
    return true;
  }

  /// H(mu^{*n}) <= n H(mu).
  [[nodiscard]] bool subadditive(double slack = 1e-12) const {
    if (rows.empty()) return true;
    const double h1 = rows.front().entropy;
    for (const auto& r : rows)
      if (r.entropy > static_cast<double>(r.n) * h1 + slack * static_cast<double>(r.n)) return false;
    return true;
  }
};

/// Levels 1..n_max; stops early with truncated = true once the support guard refuses a level.
inline EntropySequence entropy_sequence(const StepMeasure& mu, std::size_t n_max, std::size_t guard = kSupportGuard,
                                        std::size_t workers = 1) {
  EntropySequence out;
  if (n_max == 0) return out;
  const GroupDistribution base = GroupDistribution::from_measure(mu);
  GroupDistribution level = base;
  std::vector<std::pair<std::size_t, double>> values;
  std::vector<std::size_t> sizes;
  for (std::size_t n = 1; n <= n_max + 1; ++n) {
    if (n > 1) {
      try {
        level = convolve(level, base, guard, workers);
      } catch (const BudgetExceeded& e) {
        if (n <= n_max) {
          out.truncated = true;
          out.note = e.what();
        }
        break;
      }
    }
    values.emplace_back(n, entropy(level));
    sizes.push_back(level.size());
  }
  for (std::size_t k = 0; k < values.size() && values[k].first <= n_max; ++k) {
    EntropyRow r;
    r.n = values[k].first;
    r.entropy = values[k].second;
    r.support = sizes[k];
    if (k + 1 < values.size()) r.increment = values[k + 1].second - values[k].second;
    out.rows.push_back(r);
  }
  return out;
}

struct DerriennicReport {
  Rational first_moment;               // |mu|_G, exact since every |g|_G is an integer
  std::vector<std::uint64_t> indices;  // |g|_G per atom, in atom order
  bool finite = true;
  double entropy = 0;
  std::vector<GaugeReport> growth;
  bool finite_entropy_certified = false;
};

/// |mu|_G for G = (G_n^{Id}), paired with gauge growth at the given radii (d = dim mu).
inline DerriennicReport derriennic_check(const StepMeasure& mu, const std::vector<GaugeRadius>& radii = {}) {
  DerriennicReport r;
  r.first_moment = Rational(0);
  for (const auto& a : mu.atoms()) {
    std::uint64_t idx = gauge_index(a.matrix);
    r.indices.push_back(idx);
    r.first_moment += Rational(static_cast<long>(idx)) * a.weight;
  }
  r.entropy = entropy(GroupDistribution::from_measure(mu));
  bool growth_ok = true;
  for (const auto& k : radii) {
    r.growth.push_back(gauge_report(k, TriMatrix::identity(mu.dim())));
    growth_ok = growth_ok && r.growth.back().pass;
  }
  r.finite_entropy_certified = r.finite && growth_ok && std::isfinite(r.entropy);
  return r;
}

}  // namespace boundarylab
