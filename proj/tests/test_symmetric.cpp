#include <gtest/gtest.h>

#include <random>

#include "stable_slices/symmetric.hpp"
#include "support/oracles.hpp"

using namespace stable_slices;
using namespace std::complex_literals;

namespace {

Exponents unit(std::size_t n, std::size_t i, int p = 1) {
  Exponents e(n, 0);
  e[i] = p;
  return e;
}

// g(e(x)) with every e_i computed over explicit subsets.
Complex eval_by_subsets(const SparsePoly& g, const CVector& x) {
  CVector e(x.size());
  for (std::size_t k = 1; k <= x.size(); ++k) e[k - 1] = oracle::elementary_subset(x, k);
  return g.eval(e);
}

Complex random_in(std::mt19937_64& rng, const HalfPlane& h, double w) {
  return h.from_upper(oracle::random_complex(rng, -w, w, 0.0, w));
}

HalfPlane random_halfplane(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-3.14159, 3.14159);
  return HalfPlane(ang(rng), oracle::random_complex(rng, 1.0));
}

SymmetricPoly example_poly() {
  SparsePoly g(5);
  g.add(unit(5, 0, 2), 1.0).add(unit(5, 1), 1.0).add(unit(5, 2), 2.0);
  return SymmetricPoly(5, g, 3);
}

}  // namespace

TEST(Elementary, Examples) {
  const CVector ones(5, 1.0);
  const CVector e = elementary_symmetrics(ones);
  const CVector want{5.0, 10.0, 10.0, 5.0, 1.0};
  EXPECT_LT(oracle::max_abs_diff(e, want), 1e-15);
  EXPECT_LT(oracle::max_abs_diff(elementary_symmetrics(CVector{1i, 2i}), CVector{3i, -2.0}), 1e-15);
  const CVector x{-20.0 + 1i, 1i, 20.0 + 1i, 20i};
  EXPECT_LT(oracle::max_abs_diff(elementary_symmetrics(x), oracle::vieta_coordinates(x)), 1e-9);
  EXPECT_LT(oracle::max_abs_diff(elementary_symmetrics(x), CVector{23i, -463.0, -8461i, 8020.0}), 1e-9);
}

TEST(SymmetricPoly, Validation) {
  SparsePoly g(3);
  g.add(unit(3, 2), 1.0);
  EXPECT_THROW(SymmetricPoly(3, g, 2), ValidationError);
  SparsePoly sq(3);
  sq.add(unit(3, 1, 2), 1.0);
  EXPECT_THROW(SymmetricPoly(3, sq, 3), ValidationError);
  EXPECT_NO_THROW(SymmetricPoly(4, SparsePoly(4).add(unit(4, 1, 2), 1.0), 4));
  EXPECT_THROW(SymmetricPoly(3, SparsePoly(2), 1), DimensionMismatch);
  EXPECT_THROW(SymmetricPoly(3, g, 4), ValidationError);
  EXPECT_TRUE(SymmetricPoly::affine({1.0, 2.0, 0.0}).is_multiaffine());
  EXPECT_EQ(SymmetricPoly::affine({1.0, 2.0, 0.0}).degree(), 1);
  EXPECT_FALSE(example_poly().is_multiaffine());
}

TEST(EvalSymmetric, Examples) {
  EXPECT_LT(std::abs(eval_symmetric(example_poly(), CVector(5, 1.0)) - 55.0), 1e-12);
  const SymmetricPoly c(3, SparsePoly::constant(3, 5.0), 0);
  EXPECT_EQ(eval_symmetric(c, CVector{1i, 7.0, -3.0}), Complex(5.0));
  EXPECT_THROW(eval_symmetric(c, CVector{1.0}), DimensionMismatch);
}

TEST(EvalSymmetric, MatchesExpansion) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nd(1, 6), pick(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(nd(rng));
    const int d = std::min<int>(3, static_cast<int>(n));
    SparsePoly g(n);
    // monomials of weighted degree <= d in Z_1..Z_d
    for (int t = 0; t < 4; ++t) {
      Exponents e(n, 0);
      int w = 0;
      for (int s = 0; s < 3; ++s) {
        const int i = pick(rng) % d;
        if (w + i + 1 > d) continue;
        ++e[static_cast<std::size_t>(i)];
        w += i + 1;
      }
      g.add(e, oracle::random_complex(rng, 2.0));
    }
    const SymmetricPoly f(n, g, d);
    CVector x(n);
    for (auto& v : x) v = oracle::random_complex(rng, 3.0);
    const Complex want = eval_by_subsets(g, x);
    EXPECT_LT(std::abs(eval_symmetric(f, x) - want), 1e-8 * (1.0 + std::abs(want)));
  }
}

TEST(SparsePoly, GradientMatchesDifferences) {
  std::mt19937_64 rng(3);
  SparsePoly g(3);
  g.add({2, 1, 0}, 1.5 - 1i).add({0, 0, 3}, 2.0).add({1, 1, 1}, 1i).add({0, 0, 0}, 4.0);
  const CVector w{oracle::random_complex(rng, 1.0), oracle::random_complex(rng, 1.0), oracle::random_complex(rng, 1.0)};
  const CVector grad = g.gradient(w);
  for (std::size_t j = 0; j < 3; ++j) {
    CVector p = w, m = w;
    p[j] += 1e-6;
    m[j] -= 1e-6;
    EXPECT_LT(std::abs((g.eval(p) - g.eval(m)) / 2e-6 - grad[j]), 1e-6);
  }
}

TEST(CoordinateProfile, Examples) {
  const auto up = HalfPlane::upper();
  const auto p1 = coordinate_profile(CVector{-20.0 + 1i, 1i, 20.0 + 1i, 20i}, up);
  EXPECT_EQ(p1.boundary_distinct, 0);
  EXPECT_EQ(p1.interior_count, 4);
  const auto p2 = coordinate_profile(CVector{1.0, 1.0, 2.0, 1i}, up);
  EXPECT_EQ(p2.boundary_distinct, 2);
  EXPECT_EQ(p2.interior_count, 1);
  EXPECT_TRUE(p2.within(2, 1));
  EXPECT_FALSE(p2.within(1, 1));
  const auto p3 = coordinate_profile(CVector{0.0, 0.0, 0.0}, up);
  EXPECT_EQ(p3.boundary_distinct, 1);
  EXPECT_EQ(p3.interior_count, 0);
  EXPECT_EQ(coordinate_profile(CVector{-1i}, up).outside_count, 1);
}

TEST(Gws, Examples) {
  const auto up = HalfPlane::upper();
  EXPECT_LT(std::abs(gws_solve(SymmetricPoly::affine({0.0, 1.0, 0.0, 0.0}), CVector{1i, 2i, 3i}, up) - 2i), 1e-12);
  EXPECT_LT(std::abs(gws_solve(SymmetricPoly::affine({0.0, 0.0, 1.0}), CVector{2i, 8i}, up) - 4i), 1e-12);
  EXPECT_EQ(gws_solve(SymmetricPoly::affine({3.0, 0.0, 0.0}), CVector{5i, 1i}, up), 5i);
  EXPECT_THROW(gws_solve(example_poly(), CVector(5, 1i), up), ValidationError);
  EXPECT_THROW(gws_solve(SymmetricPoly::affine({0.0, 1.0}), CVector{-1i}, up), ValidationError);
}

TEST(Gws, SmallestModulusTieBreak) {
  // u(Y) = Y^2 - 1 on the upper half-plane: both roots are real, same modulus.
  const auto y = gws_solve(SymmetricPoly::affine({0.0, 0.0, 1.0}), CVector{1.0, 1.0}, HalfPlane::upper());
  EXPECT_LT(std::abs(y + 1.0), 1e-12);
}

TEST(Gws, RandomInstances) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nd(1, 10);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = static_cast<std::size_t>(nd(rng));
    const HalfPlane h = random_halfplane(rng);
    CVector c(n + 1);
    for (auto& v : c) v = unif(rng) < 0.2 ? Complex{} : oracle::random_complex(rng, 2.0);
    const SymmetricPoly f = SymmetricPoly::affine(c);
    CVector x(n);
    for (auto& v : x) v = random_in(rng, h, 2.0);
    Complex y;
    ASSERT_NO_THROW(y = gws_solve(f, x, h)) << "trial " << trial;
    const Complex fx = eval_by_subsets(f.g(), x);
    const Complex fy = eval_by_subsets(f.g(), CVector(n, y));
    EXPECT_LT(std::abs(fy - fx), 1e-8 * (1.0 + std::abs(fx))) << "trial " << trial;
    EXPECT_NE(halfplane_contains(h, y, Tolerances{}.boundary_for(std::abs(y))), Location::outside);
  }
}

TEST(Young, Example) {
  const BlockForm f = BlockForm::from_multiaffine({2, 2}, {{{0, 1}, 1.0}, {{2, 3}, 1.0}});
  const CVector x{1i, 4i, 2i, 8i};
  EXPECT_LT(std::abs(f.eval(x) + 20.0), 1e-12);
  const CVector y = young_gws(f, x, HalfPlane::upper());
  ASSERT_EQ(y.size(), 2u);
  EXPECT_LT(std::abs(y[0] - 2i), 1e-12);
  EXPECT_LT(std::abs(y[1] - 4i), 1e-12);
  EXPECT_LT(std::abs(f.eval(CVector{y[0], y[0], y[1], y[1]}) + 20.0), 1e-10);
}

TEST(Young, RejectsNonInvariant) {
  EXPECT_THROW(BlockForm::from_multiaffine({2, 2}, {{{0, 2}, 1.0}}), ValidationError);
  EXPECT_THROW(BlockForm::from_multiaffine({2}, {{{0}, 1.0}, {{1}, 2.0}}), ValidationError);
}

TEST(Young, OneBlockIsGws) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const HalfPlane h = random_halfplane(rng);
    CVector c(n + 1);
    for (auto& v : c) v = oracle::random_complex(rng, 2.0);
    std::map<std::vector<int>, Complex> coeffs;
    for (std::size_t i = 0; i <= n; ++i) coeffs[{static_cast<int>(i)}] = c[i];
    CVector x(n);
    for (auto& v : x) v = random_in(rng, h, 2.0);
    const CVector y = young_gws(BlockForm({n}, coeffs), x, h);
    EXPECT_LT(std::abs(y[0] - gws_solve(SymmetricPoly::affine(c), x, h)), 1e-9 * (1.0 + std::abs(y[0])));
  }
}

TEST(Young, IndependentBlockKeepsCoordinate) {
  const BlockForm f({1, 2}, {{{0, 2}, 1.0}, {{0, 0}, 3.0}});
  const CVector y = young_gws(f, CVector{5i, 1i, 3i}, HalfPlane::upper());
  EXPECT_EQ(y[0], 5i);
}

TEST(Young, RandomInstances) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> bs(1, 3), nb(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> blocks(static_cast<std::size_t>(nb(rng)));
    for (auto& b : blocks) b = static_cast<std::size_t>(bs(rng));
    std::size_t n = 0;
    std::vector<std::size_t> block_of;
    for (std::size_t j = 0; j < blocks.size(); ++j)
      for (std::size_t i = 0; i < blocks[j]; ++i) block_of.push_back(j), ++n;
    std::map<std::vector<int>, Complex> by_alpha;
    std::map<std::vector<std::size_t>, Complex> terms;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<std::size_t> subset;
      std::vector<int> alpha(blocks.size(), 0);
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) subset.push_back(i), ++alpha[block_of[i]];
      if (!by_alpha.count(alpha)) by_alpha[alpha] = oracle::random_complex(rng, 1.0);
      terms[subset] = by_alpha[alpha];
    }
    const BlockForm f = BlockForm::from_multiaffine(blocks, terms);
    const HalfPlane h = random_halfplane(rng);
    CVector x(n);
    for (auto& v : x) v = random_in(rng, h, 2.0);
    auto direct = [&](const CVector& p) {
      Complex s{};
      for (const auto& [subset, c] : terms) {
        Complex t = c;
        for (auto i : subset) t *= p[i];
        s += t;
      }
      return s;
    };
    const CVector y = young_gws(f, x, h);
    CVector p;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      EXPECT_NE(halfplane_contains(h, y[j], 1e-8 * (1.0 + std::abs(y[j]))), Location::outside);
      for (std::size_t i = 0; i < blocks[j]; ++i) p.push_back(y[j]);
    }
    const Complex fx = direct(x);
    EXPECT_LT(std::abs(direct(p) - fx), 1e-8 * (1.0 + std::abs(fx))) << "trial " << trial;
  }
}

TEST(Coincide, SquareOfFirst) {
  std::mt19937_64 rng(8);
  CMatrix A = CMatrix::Zero(1, 6);
  A(0, 0) = 1.0;
  const SufficientForm f(A, SparsePoly(1).add({2}, 1.0));
  CVector x(6);
  for (auto& v : x) v = random_in(rng, HalfPlane::upper(), 3.0);
  const auto r = coincide(f, x, HalfPlane::upper());
  EXPECT_LT(std::abs(r.value_after - r.value_before), 1e-6 * (1.0 + std::abs(r.value_before)));
  EXPECT_TRUE(coordinate_profile(r.x, HalfPlane::upper()).within(6, 3));
}

TEST(Coincide, SufficientExample) {
  std::mt19937_64 rng(9);
  CMatrix A = CMatrix::Zero(2, 5);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A(1, 2) = 2.0;
  const SufficientForm f(A, SparsePoly(2).add({2, 0}, 1.0).add({0, 1}, 1.0));
  CVector x(5);
  for (auto& v : x) v = random_in(rng, HalfPlane::upper(), 3.0);
  EXPECT_LT(std::abs(eval_symmetric(f, x) - eval_symmetric(example_poly(), x)), 1e-9 * (1.0 + std::abs(eval_symmetric(f, x))));
  const auto r = coincide(f, x, HalfPlane::upper());
  EXPECT_LT(std::abs(r.value_after - r.value_before), 1e-6 * (1.0 + std::abs(r.value_before)));
  EXPECT_TRUE(coordinate_profile(r.x, HalfPlane::upper()).within(8, 4));
  EXPECT_FALSE(r.sharpened);
}

TEST(Coincide, AlreadyCompressedIsUnchanged) {
  CMatrix A = CMatrix::Zero(1, 3);
  A(0, 0) = 1.0;
  const SufficientForm f(A, SparsePoly(1).add({1}, 1.0));
  const CVector x{1i, 1i, 2.0};
  const auto r = coincide(f, x, HalfPlane::upper());
  EXPECT_EQ(r.report.iterations, 0);
  EXPECT_EQ(r.x, x);
}

TEST(Coincide, RandomForms) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nd(2, 8), kd(1, 2), ex(0, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int sharpened = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(nd(rng));
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(kd(rng)), n - 1);
    CMatrix A = CMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    const bool projection = unif(rng) < 0.3;
    for (Eigen::Index j = 0; j < A.rows(); ++j)
      for (Eigen::Index i = 0; i < A.cols(); ++i)
        A(j, i) = projection ? Complex(i == j ? 1.0 : 0.0) : (unif(rng) < 0.3 ? Complex{} : oracle::random_complex(rng, 1.0));
    SparsePoly g(k);
    for (int t = 0; t < 3; ++t) {
      Exponents e(k);
      for (auto& v : e) v = ex(rng);
      g.add(e, oracle::random_complex(rng, 1.0));
    }
    const SufficientForm f(A, g);
    const HalfPlane h = trial % 2 ? HalfPlane::upper() : random_halfplane(rng);
    CVector x(n);
    for (auto& v : x) v = random_in(rng, h, 2.0);
    const auto r = coincide(f, x, h);
    ASSERT_NE(r.report.status, CompressionStatus::cap_reached) << "trial " << trial;
    const Complex want = eval_symmetric(f, x);
    EXPECT_LT(std::abs(r.value_after - want), 1e-6 * (1.0 + std::abs(want))) << "trial " << trial;
    const auto p = coordinate_profile(r.x, h);
    EXPECT_TRUE(p.within(2 * (static_cast<int>(k) + 2), static_cast<int>(k) + 2)) << "trial " << trial;
    if (r.sharpened) {
      ++sharpened;
      EXPECT_TRUE(p.within(static_cast<int>(k), static_cast<int>(k))) << "trial " << trial;
    }
  }
  EXPECT_GT(sharpened, 0);
}
