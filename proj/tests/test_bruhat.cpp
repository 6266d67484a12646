#include <gtest/gtest.h>

#include <random>

#include "boundarylab/bruhat.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

namespace bl = boundarylab;
using bl::LogLinear;
using bl::Place;
using bl::Position;
using bl::Rational;
using bl::TriMatrix;
using bl::WeylPerm;
using bl::testing::M;

namespace {

std::vector<LogLinear> at_prime(std::uint64_t p, const std::vector<Rational>& r) {
  std::vector<LogLinear> out;
  for (const auto& x : r) out.push_back(LogLinear::term(p, x));
  return out;
}

bl::DriftProfile profile_at(std::uint64_t p, const std::vector<Rational>& r) {
  std::vector<LogLinear> arch;
  for (const auto& x : r) arch.push_back(LogLinear::term(p, -x));
  return bl::DriftProfile(r.size(), {{p, r}}, arch);
}

}  // namespace

TEST(WeylPerm, Validation) {
  EXPECT_THROW(WeylPerm({0, 0}), std::invalid_argument);
  EXPECT_THROW(WeylPerm({0, 2}), std::invalid_argument);
  EXPECT_EQ(WeylPerm::longest(3).values(), (std::vector<std::size_t>{2, 1, 0}));
}

TEST(WeylFromDrifts, Examples) {
  EXPECT_EQ(bl::weyl_from_drifts(at_prime(2, {-1, 0})), WeylPerm::identity(2));
  EXPECT_EQ(bl::weyl_from_drifts(at_prime(3, {1, 1, 1})), WeylPerm::longest(3));
  EXPECT_EQ(bl::weyl_from_drifts(at_prime(5, {-1, 0, 2})), WeylPerm::identity(3));
  EXPECT_EQ(bl::testing::brute_force_weyl({-1, 0}).size(), 1u);
}

TEST(WeylFromDrifts, MatchesBruteForceAndIsUnique) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 1000; ++t) {
    std::size_t d = 1 + static_cast<std::size_t>(rng() % 5);
    std::vector<Rational> r(d);
    // Small range so ties are frequent.
    for (auto& x : r) x = Rational(static_cast<long>(rng() % 5) - 2, 1 + static_cast<long>(rng() % 2));
    auto w = bl::weyl_from_drifts(at_prime(3, r));
    auto all = bl::testing::brute_force_weyl(r);
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(w.values(), all.front());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        if (r[i] >= r[j]) { EXPECT_GT(w(i), w(j)); }
  }
}

TEST(WeylFromDrifts, ArchimedeanComparisonsAreExact) {
  // ln 3 - (3/2) ln 2 > 0 (3 > 2^{3/2}) and 19 ln 2 < 12 ln 3.
  std::vector<LogLinear> phi = {LogLinear::term(3, 1), LogLinear::term(2, Rational(3, 2))};
  EXPECT_EQ(bl::weyl_from_drifts(phi), WeylPerm::longest(2));
  phi = {LogLinear::term(2, 19), LogLinear::term(3, 12)};
  EXPECT_EQ(bl::weyl_from_drifts(phi), WeylPerm::identity(2));
  phi = {LogLinear::log_abs(Rational(6)), LogLinear::term(2, 1) + LogLinear::term(3, 1)};
  EXPECT_EQ(bl::weyl_from_drifts(phi), WeylPerm::longest(2));
}

TEST(CellOf, Examples) {
  auto contracting = bl::cell_of(profile_at(2, {-1, 0}), Place::prime(2));
  EXPECT_EQ(contracting.free_positions, (std::set<Position>{{0, 1}}));
  auto expanding = bl::cell_of(profile_at(2, {1, 0}), Place::prime(2));
  EXPECT_TRUE(expanding.is_point());
  auto tie = bl::cell_of(profile_at(2, {0, 0}), Place::prime(2));
  EXPECT_TRUE(tie.is_point());
  auto three = bl::cell_of(profile_at(2, {-1, 0, 2}), Place::prime(2));
  EXPECT_EQ(three.free_positions, (std::set<Position>{{0, 1}, {0, 2}, {1, 2}}));
  // At infinity the signs flip for these profiles.
  EXPECT_TRUE(bl::cell_of(profile_at(2, {-1, 0}), Place::infinity()).is_point());
}

TEST(CellOf, RaisingADriftRemovesThePosition) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 200; ++t) {
    std::size_t d = 2 + static_cast<std::size_t>(rng() % 4);
    std::vector<Rational> r(d);
    for (auto& x : r) x = Rational(static_cast<long>(rng() % 7) - 3);
    std::size_t i = rng() % (d - 1), j = i + 1 + rng() % (d - 1 - i);
    auto before = bl::cell_of(profile_at(2, r), Place::prime(2));
    r[i] = r[j] + Rational(1, 2);
    auto after = bl::cell_of(profile_at(2, r), Place::prime(2));
    EXPECT_FALSE(after.free_positions.count({i, j}));
    EXPECT_EQ(before.free_positions.count({i, j}), before.weyl.is_free(i, j) ? 1u : 0u);
  }
}

TEST(FactorizeU, Examples) {
  std::mt19937_64 rng(35);
  TriMatrix u = bl::testing::random_unipotent(rng, 4);
  auto id = bl::factorize_u(u, WeylPerm::identity(4));
  EXPECT_EQ(id.free_part, u);
  EXPECT_EQ(id.fixed_part, TriMatrix::identity(4));
  auto longest = bl::factorize_u(u, WeylPerm::longest(4));
  EXPECT_EQ(longest.free_part, TriMatrix::identity(4));
  EXPECT_EQ(longest.fixed_part, u);

  auto w = bl::weyl_from_drifts(at_prime(2, {-1, 0, 0}));
  auto f = bl::factorize_u(M({{"1", "2", "5"}, {"0", "1", "3"}, {"0", "0", "1"}}), w);
  EXPECT_EQ(f.free_part, M({{"1", "2", "-1"}, {"0", "1", "0"}, {"0", "0", "1"}}));
  EXPECT_EQ(f.fixed_part, M({{"1", "0", "0"}, {"0", "1", "3"}, {"0", "0", "1"}}));
}

TEST(FactorizeU, RoundTripAndUniqueness) {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 300; ++t) {
    std::size_t d = 2 + static_cast<std::size_t>(rng() % 4);
    std::vector<Rational> r(d);
    for (auto& x : r) x = Rational(static_cast<long>(rng() % 5) - 2);
    auto w = bl::weyl_from_drifts(at_prime(2, r));
    TriMatrix u = bl::testing::random_unipotent(rng, d);
    auto f = bl::factorize_u(u, w);
    EXPECT_EQ(f.free_part * f.fixed_part, u);
    bl::CellDescriptor cell{Place::prime(2), w, {}};
    EXPECT_TRUE(cell.contains(f.free_part));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i + 1; j < d; ++j)
        if (w.is_free(i, j)) { EXPECT_TRUE(f.fixed_part(i, j).is_zero()); }
    auto again = bl::factorize_u(f.free_part, w);
    EXPECT_EQ(again.free_part, f.free_part);
    EXPECT_EQ(again.fixed_part, TriMatrix::identity(d));
  }
}

TEST(BoundaryAction, Examples) {
  TriMatrix a = M({{"2", "3"}, {"0", "5"}});
  EXPECT_EQ(bl::boundary_action(a, TriMatrix::identity(2), WeylPerm::longest(2)), TriMatrix::identity(2));
  // Affine action z -> (alpha z + beta) / gamma.
  TriMatrix b = M({{"1", "7/3"}, {"0", "1"}});
  auto image = bl::boundary_action(a, b, WeylPerm::identity(2));
  EXPECT_EQ(image(0, 1), (Rational(2) * Rational(7, 3) + Rational(3)) / Rational(5));
  EXPECT_THROW(bl::boundary_action(a, b, WeylPerm::longest(2)), std::invalid_argument);
}

TEST(BoundaryAction, IsAGroupAction) {
  std::mt19937_64 rng(39);
  for (int t = 0; t < 200; ++t) {
    std::size_t d = 2 + static_cast<std::size_t>(rng() % 3);
    std::vector<Rational> r(d);
    for (auto& x : r) x = Rational(static_cast<long>(rng() % 5) - 2);
    auto w = bl::weyl_from_drifts(at_prime(2, r));
    TriMatrix a = bl::testing::random_tri(rng, d, 6);
    TriMatrix c = bl::testing::random_tri(rng, d, 6);
    TriMatrix b = bl::factorize_u(bl::testing::random_unipotent(rng, d, 6), w).free_part;
    EXPECT_EQ(bl::boundary_action(TriMatrix::identity(d), b, w), b);
    EXPECT_EQ(bl::boundary_action(a * c, b, w), bl::boundary_action(a, bl::boundary_action(c, b, w), w));
  }
}
