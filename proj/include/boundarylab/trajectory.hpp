#pragma once

// Seeded sample paths x_n = g_1 ... g_n of a step measure.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "boundarylab/measure.hpp"

namespace boundarylab {

/**
 * Lazily sampled increments g_1, g_2, ... drawn from a std::mt19937_64 seeded
 * with `seed`. A trajectory with offset k reproduces the increments g_{k+1},
 * g_{k+2}, ... of the offset-0 trajectory with the same seed.
 *
 * Not thread-safe: extension mutates the step and product caches.
 */
class Trajectory {
 public:
  Trajectory(std::shared_ptr<const StepMeasure> mu, std::uint64_t seed, std::size_t offset = 0)
      : mu_(std::move(mu)), seed_(seed), offset_(offset), rng_(seed) {
    rng_.discard(offset);
    products_.emplace(0, TriMatrix::identity(mu_->dim()));
  }

  [[nodiscard]] const StepMeasure& measure() const { return *mu_; }
  [[nodiscard]] const std::shared_ptr<const StepMeasure>& measure_ptr() const { return mu_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] std::size_t dim() const { return mu_->dim(); }

  /// Trajectory of g_{k+1}, g_{k+2}, ...
  [[nodiscard]] Trajectory shifted(std::size_t k) const { return Trajectory(mu_, seed_, offset_ + k); }

  void materialize(std::size_t n) {
    while (steps_.size() < n) steps_.push_back(static_cast<std::uint32_t>(mu_->pick(rng_())));
  }

  /// Atom index of g_n, n >= 1.
  std::size_t atom_index(std::size_t n) {
    materialize(n);
    return steps_.at(n - 1);
  }

  /// g_n, n >= 1.
  const TriMatrix& increment(std::size_t n) { return mu_->atom(atom_index(n)).matrix; }

  /// x_n (x_0 = Id), extended from the nearest cached product below n.
  const TriMatrix& product(std::size_t n) {
    auto it = products_.upper_bound(n);
    --it;
    if (it->first == n) return it->second;
    TriMatrix x = it->second;
    for (std::size_t k = it->first + 1; k <= n; ++k) x = x * increment(k);
    if (products_.size() >= kMaxCachedProducts) products_.erase(std::next(products_.begin()));
    return products_.insert_or_assign(n, std::move(x)).first->second;
  }

 private:
  static constexpr std::size_t kMaxCachedProducts = 16;

  std::shared_ptr<const StepMeasure> mu_;
  std::uint64_t seed_;
  std::size_t offset_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> steps_;
  std::map<std::size_t, TriMatrix> products_;
};

}  // namespace boundarylab
