#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "boundarylab/boundary.hpp"
#include "support/builders.hpp"

namespace bl = boundarylab;
using bl::LogLinear;
using bl::Place;
using bl::Position;
using bl::Rational;
using bl::StepMeasure;
using bl::SubspaceBasis;
using bl::TriMatrix;
using bl::testing::M;

namespace {

using MeasurePtr = std::shared_ptr<const StepMeasure>;

MeasurePtr dirac_half() { return std::make_shared<const StepMeasure>(StepMeasure::dirac(M({{"1/2", "1"}, {"0", "1"}}))); }

MeasurePtr two_atoms(const char* heavy, const char* light) {
  return std::make_shared<const StepMeasure>(
      2, std::vector<bl::Atom>{{M({{heavy, "1"}, {"0", "1"}}), Rational(3, 4)},
                               {M({{light, "1"}, {"0", "1"}}), Rational(1, 4)}});
}

// Contracting at infinity, point at 2.
MeasurePtr affine2() { return two_atoms("1/2", "2"); }
// Contracting at 2, point at infinity.
MeasurePtr mirror() { return two_atoms("2", "1/2"); }

MeasurePtr three_dim() {
  std::vector<bl::Atom> atoms;
  const char* v[2] = {"1/2", "2"};
  const long w[2] = {3, 1};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      atoms.push_back({M({{"3", "1", "1"}, {"0", v[a], "-1"}, {"0", "0", v[b]}}), Rational(w[a] * w[b], 16)});
  return std::make_shared<const StepMeasure>(3, std::move(atoms));
}

std::vector<LogLinear> at_prime(std::uint64_t p, const std::vector<Rational>& r) {
  std::vector<LogLinear> out;
  for (const auto& x : r) out.push_back(LogLinear::term(p, x));
  return out;
}

// |x|_place as a double, for tolerance arithmetic in tests.
double norm(const Rational& x, const Place& place) {
  if (x.is_zero()) return 0.0;
  if (place.is_infinite()) return std::fabs(x.to_double());
  return std::pow(static_cast<double>(place.p()), -static_cast<double>(bl::valuation(x, place)));
}

}  // namespace

TEST(ReducedDrifts, Examples) {
  auto phi = at_prime(2, {-1, 0});
  SubspaceBasis b = bl::basis_for(phi, 1);
  EXPECT_EQ(b.top(), (bl::IndexTuple{1}));
  auto red = bl::reduced_drifts(phi, b);
  ASSERT_EQ(red.size(), 1u);
  EXPECT_EQ(red[0], LogLinear::term(2, -1));

  auto phi3 = at_prime(5, {-1, 0, 2});
  SubspaceBasis b3 = bl::basis_for(phi3, 2);
  EXPECT_EQ(b3.top(), (bl::IndexTuple{2}));
  EXPECT_EQ(bl::reduced_drifts(phi3, b3), (std::vector<LogLinear>{LogLinear::term(5, -3), LogLinear::term(5, -2)}));
}

TEST(ReducedDrifts, AlwaysNegativeForDriftBases) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 300; ++t) {
    std::size_t d = 2 + rng() % 5;
    std::vector<Rational> r(d);
    for (auto& x : r) x = Rational(static_cast<long>(rng() % 7) - 3, 1 + static_cast<long>(rng() % 3));
    auto phi = at_prime(3, r);
    for (std::size_t j = 0; j < d; ++j) EXPECT_NO_THROW(bl::reduced_drifts(phi, bl::basis_for(phi, j)));
  }
  // A basis not built from the drifts is rejected.
  EXPECT_THROW(bl::reduced_drifts(at_prime(2, {1, 0}), SubspaceBasis(2, {1})), std::logic_error);
}

TEST(CauchyMonitor, GeometricSequenceAtInfinity) {
  bl::CauchyMonitor mon(Place::infinity(), -std::numbers::ln2);
  for (std::size_t n = 1; n <= 60; ++n) mon.observe(n, Rational(mpz_class(1), mpz_class(1) << n));
  ASSERT_TRUE(mon.certified());
  ASSERT_TRUE(mon.observed_slope().has_value());
  EXPECT_NEAR(*mon.observed_slope(), -std::numbers::ln2, 1e-9);
  // Remaining tail is 2^-60; the bound is conservative but of the same order.
  Rational tail(mpz_class(1), mpz_class(1) << 60);
  EXPECT_GE(mon.error_bound(), tail);
  EXPECT_LE(mon.error_bound(), tail * Rational(1 << 12));
  EXPECT_EQ(mon.violations(), 0u);
}

TEST(CauchyMonitor, PrimeValuationsAndViolations) {
  bl::CauchyMonitor mon(Place::prime(3), -std::log(3.0));
  for (long n = 1; n <= 30; ++n) mon.observe(static_cast<std::size_t>(n), Rational(2) * bl::pow(Rational(3), n));
  ASSERT_TRUE(mon.certified());
  EXPECT_EQ(mon.certified_at(), 10u);
  EXPECT_EQ(mon.error_exponent(), 21);
  mon.observe(31, Rational(1));
  EXPECT_EQ(mon.violations(), 1u);
  EXPECT_EQ(mon.error_exponent(), 21);
}

TEST(CauchyMonitor, AllZeroDifferencesAreExact) {
  bl::CauchyMonitor mon(Place::prime(2), -1.0);
  for (std::size_t n = 1; n <= 10; ++n) mon.observe(n, Rational(0));
  EXPECT_TRUE(mon.exact());
  EXPECT_TRUE(mon.certified());
}

TEST(IterateProjective, DiracAtInfinity) {
  bl::Trajectory traj(dirac_half(), 1);
  auto prof = bl::drift_profile(traj.measure());
  auto phi = prof.drifts(Place::infinity());
  SubspaceBasis basis = bl::basis_for(phi, 1);
  ASSERT_EQ(basis.size(), 2u);
  bl::ProjectiveOptions opt;
  opt.max_steps = 60;
  auto res = bl::iterate_projective(traj, basis, {0, 1}, Place::infinity(), phi, opt);
  ASSERT_TRUE(res.certified());
  const auto& a = res.approximants[0];
  Rational err(mpz_class(1), mpz_class(1) << 59);  // 2^{1-n}
  EXPECT_EQ(a.value, Rational(2) - err);
  EXPECT_GE(a.error_bound, err);
  EXPECT_NEAR(*res.monitors[0].observed_slope(), -std::numbers::ln2, 1e-9);
}

TEST(IterateProjective, DiracAtTwoIsAPoint) {
  bl::Trajectory traj(dirac_half(), 1);
  auto phi = bl::drift_profile(traj.measure()).drifts(Place::prime(2));
  SubspaceBasis basis = bl::basis_for(phi, 1);
  EXPECT_EQ(basis.size(), 1u);
  auto res = bl::iterate_projective(traj, basis, {1}, Place::prime(2), phi);
  EXPECT_TRUE(res.approximants.empty());
  EXPECT_TRUE(res.certified());
  EXPECT_THROW(bl::iterate_projective(traj, basis, {2}, Place::prime(2), phi), std::invalid_argument);
}

TEST(IterateProjective, StartVectorIndependence) {
  for (auto [mu, place] : {std::pair{affine2(), Place::infinity()}, std::pair{mirror(), Place::prime(2)}}) {
    auto phi = bl::drift_profile(*mu).drifts(place);
    SubspaceBasis basis = bl::basis_for(phi, 1);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      bl::Trajectory t1(mu, seed), t2(mu, seed);
      auto a = bl::iterate_projective(t1, basis, {0, 1}, place, phi);
      auto b = bl::iterate_projective(t2, basis, {Rational(-7, 3), 1}, place, phi);
      ASSERT_TRUE(a.certified() && b.certified());
      EXPECT_TRUE(bl::agree(a.approximants[0], b.approximants[0])) << "seed " << seed;
    }
  }
}

TEST(Assemble, DiracExample) {
  bl::Trajectory traj(dirac_half(), 3);
  auto prof = bl::drift_profile(traj.measure());
  bl::ProjectiveOptions opt;
  opt.max_steps = 80;
  auto inf = bl::assemble_boundary_point(traj, prof, Place::infinity(), opt);
  ASSERT_EQ(inf.point.entries.size(), 1u);
  const auto& z = inf.point.entries.at(Position{0, 1});
  EXPECT_TRUE(z.certified);
  EXPECT_LE((z.value - Rational(2)).abs(), z.error_bound);
  auto two = bl::assemble_boundary_point(traj, prof, Place::prime(2), opt);
  EXPECT_TRUE(two.point.cell.is_point());
  EXPECT_EQ(two.point.matrix(), TriMatrix::identity(2));
  auto five = bl::assemble_boundary_point(traj, prof, Place::prime(5), opt);
  EXPECT_TRUE(five.point.entries.empty());
}

TEST(Assemble, PointCellNeedsNoIteration) {
  auto mu = std::make_shared<const StepMeasure>(StepMeasure::uniform(
      {M({{"1", "1", "0"}, {"0", "1", "2"}, {"0", "0", "1"}}), M({{"1", "-1", "1"}, {"0", "1", "0"}, {"0", "0", "1"}})}));
  bl::Trajectory traj(mu, 5);
  auto res = bl::assemble_boundary_point(traj, bl::drift_profile(*mu), Place::infinity());
  EXPECT_TRUE(res.point.cell.is_point());
  EXPECT_TRUE(res.sublimits.empty());
  EXPECT_EQ(res.point.matrix(), TriMatrix::identity(3));
}

TEST(Assemble, RateMatchesPrediction) {
  for (auto [mu, place] : {std::pair{affine2(), Place::infinity()}, std::pair{mirror(), Place::prime(2)}}) {
    auto prof = bl::drift_profile(*mu);
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      bl::Trajectory traj(mu, seed);
      auto res = bl::assemble_boundary_point(traj, prof, place);
      ASSERT_EQ(res.report.entries.size(), 1u);
      const auto& e = res.report.entries[0];
      EXPECT_NEAR(e.predicted_rate, -0.5 * std::numbers::ln2, 1e-12);
      if (e.certified && e.observed_slope &&
          std::fabs(*e.observed_slope - e.predicted_rate) <= 0.15 * std::fabs(e.predicted_rate)) {
        ++good;
      }
    }
    EXPECT_GE(good, 18) << place.to_string();
  }
}

TEST(Assemble, StationarityUnderFirstStep) {
  for (auto [mu, place] : {std::pair{affine2(), Place::infinity()}, std::pair{mirror(), Place::prime(2)}}) {
    auto prof = bl::drift_profile(*mu);
    bl::ProjectiveOptions opt;
    opt.max_steps = 600;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      bl::Trajectory traj(mu, seed);
      bl::Trajectory tail = traj.shifted(1);
      auto z = bl::assemble_boundary_point(traj, prof, place, opt);
      auto zt = bl::assemble_boundary_point(tail, prof, place, opt);
      ASSERT_TRUE(z.point.certified() && zt.point.certified());
      const TriMatrix& g = traj.increment(1);
      TriMatrix moved = bl::boundary_action(g, zt.point.matrix(), z.point.cell.weyl);
      const auto& a = z.point.entries.at({0, 1});
      const auto& b = zt.point.entries.at({0, 1});
      Rational diff = moved(0, 1) - a.value;
      Rational scale = g(0, 0) / g(1, 1);
      if (place.is_infinite()) {
        EXPECT_LE(diff.abs(), a.error_bound + scale.abs() * b.error_bound) << "seed " << seed;
      } else if (!diff.is_zero()) {
        EXPECT_GE(bl::valuation(diff, place),
                  std::min(a.error_exponent, b.error_exponent + bl::valuation(scale, place)))
            << "seed " << seed;
      }
    }
  }
}

TEST(Assemble, ThreeDimensionalCellAndWedgeConsistency) {
  auto mu = three_dim();
  auto prof = bl::drift_profile(*mu);
  bl::ProjectiveOptions opt;
  opt.max_steps = 400;
  for (auto place : {Place::prime(2), Place::prime(3)}) {
    auto cell = bl::cell_of(prof, place);
    EXPECT_EQ(cell.free_positions, (std::set<Position>{{0, 1}, {0, 2}})) << place.to_string();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      bl::Trajectory traj(mu, seed);
      auto res = bl::assemble_boundary_point(traj, prof, place, opt);
      ASSERT_TRUE(res.point.certified());
      EXPECT_TRUE(cell.contains(res.point.matrix()));
      auto checks = bl::wedge_consistency(res);
      EXPECT_FALSE(checks.empty());
      for (const auto& c : checks) EXPECT_TRUE(c.agrees) << place.to_string() << " column " << c.column << " " << c.label;
    }
  }
  EXPECT_TRUE(bl::cell_of(prof, Place::infinity()).is_point());
}

TEST(Snl, DiracExampleConvergesToTwo) {
  bl::Trajectory traj(dirac_half(), 1);
  auto prof = bl::drift_profile(traj.measure());
  auto s = bl::snl_series(traj, prof, Place::infinity(), 0, 40);
  ASSERT_EQ(s.size(), 40u);
  for (std::size_t n = 1; n <= 40; ++n) {
    EXPECT_EQ(s[n - 1], Rational(2) - Rational(mpz_class(2), mpz_class(1) << n));
  }
  EXPECT_THROW(bl::snl_series(traj, prof, Place::prime(2), 0, 5), std::invalid_argument);
  EXPECT_TRUE(bl::snl_domain(prof, Place::prime(2), 1).empty());
  EXPECT_EQ(bl::snl_domain(prof, Place::infinity(), 1), (std::vector<std::size_t>{0}));
}

TEST(Snl, AgreesWithWedgePath) {
  struct Case { MeasurePtr mu; Place place; };
  for (const auto& c : {Case{affine2(), Place::infinity()}, Case{mirror(), Place::prime(2)},
                        Case{three_dim(), Place::prime(2)}, Case{three_dim(), Place::prime(3)}}) {
    auto prof = bl::drift_profile(*c.mu);
    bl::ProjectiveOptions opt;
    opt.max_steps = 300;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      bl::Trajectory traj(c.mu, seed);
      auto res = bl::assemble_boundary_point(traj, prof, c.place, opt);
      for (const auto& [pos, entry] : res.point.entries) {
        auto s = bl::snl_series(traj, prof, c.place, pos.first, opt.max_steps, pos.second);
        // The two paths compute the same rational at every n.
        EXPECT_EQ(s.back(), entry.value);
        bl::PadicApproximant series = entry;
        series.value = s.back();
        EXPECT_TRUE(bl::agree(series, entry));
        EXPECT_LT(norm(s[s.size() / 2] - entry.value, c.place), 1e-6);
      }
    }
  }
}
