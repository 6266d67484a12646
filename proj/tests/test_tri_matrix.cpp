#include <gtest/gtest.h>

#include <random>

#include "boundarylab/exterior.hpp"
#include "boundarylab/tri_matrix.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

namespace bl = boundarylab;
using bl::DenseMatrix;
using bl::IndexTuple;
using bl::Rational;
using bl::SubspaceBasis;
using bl::TriMatrix;
using bl::testing::M;

namespace {

IndexTuple random_top(std::mt19937_64& rng, std::size_t d) {
  IndexTuple top;
  for (std::size_t i = 0; i + 1 < d; ++i) if (rng() & 1) top.push_back(i);
  top.push_back(d - 1);
  return top;
}

}  // namespace

TEST(TriMatrix, RejectsInvalidShapes) {
  EXPECT_THROW(M({{"0", "1"}, {"0", "1"}}), std::invalid_argument);
  EXPECT_THROW(M({{"1", "1"}, {"2", "1"}}), std::invalid_argument);
  EXPECT_THROW(TriMatrix::identity(9), std::invalid_argument);
  EXPECT_THROW(TriMatrix::identity(2) * TriMatrix::identity(3), std::invalid_argument);
}

TEST(TriMatrix, MultiplyExamples) {
  TriMatrix a = M({{"1/2", "1"}, {"0", "1"}});
  EXPECT_EQ(TriMatrix::identity(2) * a, a);
  EXPECT_EQ(a * a, M({{"1/4", "3/2"}, {"0", "1"}}));
  EXPECT_EQ(a * a.inverse(), TriMatrix::identity(2));
}

TEST(TriMatrix, InverseExamples) {
  EXPECT_EQ(TriMatrix::identity(3).inverse(), TriMatrix::identity(3));
  EXPECT_EQ(M({{"2", "1"}, {"0", "3"}}).inverse(), M({{"1/2", "-1/6"}, {"0", "1/3"}}));
  auto diag = TriMatrix::diagonal({Rational(2), Rational(-3, 5), Rational(7)});
  EXPECT_EQ(diag.inverse(), TriMatrix::diagonal({Rational(1, 2), Rational(-5, 3), Rational(1, 7)}));
}

TEST(TriMatrix, InverseOfRandomMatrices) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    TriMatrix a = bl::testing::random_tri(rng, 1 + t % 6);
    EXPECT_EQ(a * a.inverse(), TriMatrix::identity(a.dim()));
    EXPECT_EQ(a.inverse() * a, TriMatrix::identity(a.dim()));
  }
}

TEST(TriMatrix, SplitExamples) {
  auto s = bl::split_ud(TriMatrix::diagonal({Rational(2), Rational(3)}));
  EXPECT_EQ(s.unipotent, TriMatrix::identity(2));
  EXPECT_EQ(s.diagonal, (std::vector<Rational>{2, 3}));
  auto s2 = bl::split_ud(M({{"2", "1/3"}, {"0", "3"}}));
  EXPECT_EQ(s2.unipotent(0, 1), Rational(1, 9));
  TriMatrix u = M({{"1", "5"}, {"0", "1"}});
  EXPECT_EQ(bl::split_ud(u).unipotent, u);
  EXPECT_EQ(bl::split_ud(u).diagonal, (std::vector<Rational>{1, 1}));
}

TEST(TriMatrix, SplitRoundTrip) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    TriMatrix a = bl::testing::random_tri(rng, 1 + t % 5);
    auto s = bl::split_ud(a);
    EXPECT_TRUE(s.unipotent.is_unipotent());
    EXPECT_EQ(bl::recompose(s), a);
  }
}

TEST(TriMatrix, MinorExamples) {
  TriMatrix a = M({{"1", "2", "3"}, {"0", "4", "5"}, {"0", "0", "6"}});
  EXPECT_EQ(a.minor(3), a);
  EXPECT_EQ(a.minor(2), M({{"1", "2"}, {"0", "4"}}));
  EXPECT_EQ(a.minor(1), M({{"1"}}));
  EXPECT_THROW(a.minor(0), std::out_of_range);
  EXPECT_THROW(a.minor(4), std::out_of_range);
}

TEST(Determinant, BareissMatchesLeibniz) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 1 + t % 5;
    std::vector<Rational> e(n * n);
    for (auto& x : e) x = bl::testing::random_rational(rng, 12, true);
    DenseMatrix m(n, n, e);
    Rational expected = bl::testing::leibniz_determinant(m);
    EXPECT_EQ(bl::bareiss_determinant(m), expected);
    EXPECT_EQ(bl::cofactor_determinant(m), expected);
  }
}

TEST(SubspaceBasis, LexicographicTuples) {
  SubspaceBasis b(3, {0, 2});
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.tuple(0), (IndexTuple{0, 1}));
  EXPECT_EQ(b.tuple(1), (IndexTuple{0, 2}));
  EXPECT_EQ(b.label(1), "e1^e3");
  SubspaceBasis c(4, {1, 3});
  EXPECT_EQ(c.size(), 5u);  // 01 02 03 12 13
  EXPECT_THROW(SubspaceBasis(3, {0, 1}), std::invalid_argument);
  EXPECT_THROW(SubspaceBasis(3, {2, 2}), std::invalid_argument);
}

TEST(SubspaceBasis, InvariantsOnAllIndexSets) {
  for (std::size_t d = 1; d <= 6; ++d) {
    for (unsigned mask = 0; mask < (1u << (d - 1)); ++mask) {
      IndexTuple top;
      for (std::size_t i = 0; i + 1 < d; ++i) if (mask >> i & 1) top.push_back(i);
      top.push_back(d - 1);
      SubspaceBasis b(d, top);
      EXPECT_EQ(b.tuples().back(), top);
      EXPECT_TRUE(std::is_sorted(b.tuples().begin(), b.tuples().end()));
      for (const auto& t : b.tuples()) {
        EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
        EXPECT_EQ(std::adjacent_find(t.begin(), t.end()), t.end());
        for (std::size_t s = 0; s < t.size(); ++s) EXPECT_LE(t[s], top[s]);
      }
    }
  }
}

TEST(WedgeRep, Examples) {
  SubspaceBasis b(3, {0, 2});
  EXPECT_EQ(bl::wedge_rep(TriMatrix::identity(3), b).matrix, DenseMatrix::identity(2));
  auto diag = TriMatrix::diagonal({Rational(2), Rational(3), Rational(5)});
  EXPECT_EQ(bl::wedge_rep(diag, b).matrix, DenseMatrix(2, 2, {6, 0, 0, 10}));
  TriMatrix a = M({{"1", "1", "0"}, {"0", "1", "1"}, {"0", "0", "1"}});
  EXPECT_EQ(bl::wedge_rep(a, b).matrix, DenseMatrix(2, 2, {1, 1, 0, 1}));
}

TEST(WedgeRep, MatchesExteriorAlgebraExpansion) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 100; ++t) {
    std::size_t d = 2 + t % 4;
    TriMatrix a = bl::testing::random_tri(rng, d, 6);
    SubspaceBasis b(d, random_top(rng, d));
    auto rep = bl::wedge_rep(a, b).matrix;
    for (std::size_t l = 0; l < b.size(); ++l) {
      auto expansion = bl::testing::wedge_of_columns(a, b.tuple(l));
      for (std::size_t k = 0; k < b.size(); ++k) {
        auto it = expansion.find(b.tuple(k));
        EXPECT_EQ(rep(k, l), it == expansion.end() ? Rational(0) : it->second);
      }
      // The image stays inside the subspace.
      for (const auto& [tuple, c] : expansion) EXPECT_TRUE(b.contains(tuple));
    }
    EXPECT_TRUE(rep.is_upper_triangular());
  }
}

TEST(WedgeRep, Functoriality) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    std::size_t d = 1 + t % 5;
    TriMatrix a = bl::testing::random_tri(rng, d, 5);
    TriMatrix c = bl::testing::random_tri(rng, d, 5);
    for (unsigned mask = 0; mask < (1u << (d - 1)); ++mask) {
      IndexTuple top;
      for (std::size_t i = 0; i + 1 < d; ++i) if (mask >> i & 1) top.push_back(i);
      top.push_back(d - 1);
      SubspaceBasis b(d, top);
      EXPECT_EQ(bl::wedge_rep(a * c, b).matrix, bl::wedge_rep(a, b).matrix * bl::wedge_rep(c, b).matrix);
    }
  }
}

TEST(WedgeRep, NormalizedDiagonal) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 100; ++t) {
    std::size_t d = 2 + t % 4;
    TriMatrix a = bl::testing::random_tri(rng, d);
    SubspaceBasis b(d, random_top(rng, d));
    auto norm = bl::wedge_rep(a, b).normalized(a, b);
    EXPECT_EQ(norm(b.size() - 1, b.size() - 1), Rational(1));
    Rational jprod(1);
    for (auto j : b.top()) jprod *= a(j, j);
    for (std::size_t k = 0; k < b.size(); ++k) {
      Rational kprod(1);
      for (auto i : b.tuple(k)) kprod *= a(i, i);
      EXPECT_EQ(norm(k, k), kprod / jprod);
    }
  }
}

TEST(AppendixIdentity, Examples) {
  TriMatrix a = M({{"3", "7/2"}, {"0", "5"}});
  EXPECT_TRUE(bl::appendix_identity_check(a, {1}, 0));
  SubspaceBasis b(2, {1});
  EXPECT_EQ(bl::wedge_rep(a, b).matrix(0, 1), Rational(7, 2));
  EXPECT_TRUE(bl::appendix_identity_check(TriMatrix::identity(4), {1, 3}, 0));
  EXPECT_TRUE(bl::appendix_identity_check(TriMatrix::identity(4), {1, 3}, 2));
  EXPECT_THROW(bl::appendix_identity_check(a, {1}, 1), std::invalid_argument);
}

TEST(AppendixIdentity, RandomInstancesAgainstLeibniz) {
  std::mt19937_64 rng(16);
  int instances = 0;
  while (instances < 500) {
    std::size_t d = 2 + static_cast<std::size_t>(rng() % 4);
    TriMatrix a = bl::testing::random_tri(rng, d);
    IndexTuple top = random_top(rng, d);
    SubspaceBasis basis(d, top);
    auto rep = bl::wedge_rep(a, basis).matrix;
    for (std::size_t l = 0; l < d; ++l) {
      if (std::find(top.begin(), top.end(), l) != top.end()) continue;
      EXPECT_TRUE(bl::appendix_identity_check(a, top, l));
      IndexTuple rows = bl::appendix_rows(top, l);
      Rational oracle = bl::testing::leibniz_determinant(a.dense().select(rows, top));
      EXPECT_EQ(rep(basis.index_of(rows), basis.size() - 1), oracle);
      ++instances;
    }
  }
}
