#include <gtest/gtest.h>

#include <random>

#include "stable_slices/compress.hpp"
#include "support/oracles.hpp"

using namespace stable_slices;
using namespace std::complex_literals;

namespace {

// Linear residual computed directly from L and a.
double linear_residual(const Slice& s, const CVector& z) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < s.L().rows(); ++i) {
    Complex v{};
    for (Eigen::Index j = 0; j < s.L().cols(); ++j) v += s.L()(i, j) * z[static_cast<std::size_t>(j)];
    r = std::max(r, std::abs(v - s.a()[static_cast<std::size_t>(i)]));
  }
  return r;
}

bool lex_less(const RootProfile& a, const RootProfile& b) {
  return a.interior_total() < b.interior_total() ||
         (a.interior_total() == b.interior_total() && a.boundary_distinct() < b.boundary_distinct());
}

void check_trace(const CompressionReport& r, const Slice& s, const HalfPlane& h) {
  const double tol = 1e-9 * (1.0 + oracle::max_abs(s.a()));
  RootProfile prev = r.initial_profile;
  for (const auto& st : r.steps) {
    if (st.method == "cap") continue;
    EXPECT_LE(linear_residual(s, st.z.z()), tol);
    EXPECT_TRUE(is_stable(st.z, h).stable);
    EXPECT_TRUE(lex_less(st.profile, prev)) << st.method;
    prev = st.profile;
  }
  EXPECT_LE(linear_residual(s, r.final_z.z()), tol);
  EXPECT_TRUE(slice_contains(s, r.final_z, h));
}

// Profile of the final point recomputed from its coefficients.
RootProfile numeric_profile(const Poly& z, const HalfPlane& h) { return cluster_poly_roots(z, find_roots(z), h); }

}  // namespace

TEST(Compress, DegreeTenInstance) {
  const RootMultiset x{1.0 + 1i, -1.0 + 1i, 2.0, -2.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0};
  const Poly z(oracle::vieta_coordinates(x));
  EXPECT_LE(std::abs(z.z(1) - (-4.0 + 2i)), 1e-12);
  EXPECT_LE(std::abs(z.z(2) - (-1.0 - 8i)), 1e-12);
  const Slice s = Slice::leading_projection(10, {-4.0 + 2i, -1.0 - 8i});
  const auto r = compress(z, s);
  EXPECT_EQ(r.status, CompressionStatus::converged);
  EXPECT_TRUE(r.sharpened);
  EXPECT_EQ(r.initial_profile.interior_total(), 2);
  EXPECT_EQ(r.initial_profile.boundary_distinct(), 4);
  EXPECT_LE(r.final_profile.interior_total(), 2);
  EXPECT_LE(r.final_profile.boundary_distinct(), 2);
  const auto np = numeric_profile(r.final_z, HalfPlane::upper());
  EXPECT_LE(np.interior_total(), 2);
  EXPECT_LE(np.boundary_distinct(), 2);
  EXPECT_LE(std::abs(r.final_z.z(1) - (-4.0 + 2i)), 1e-9);
  EXPECT_LE(std::abs(r.final_z.z(2) - (-1.0 - 8i)), 1e-9);
  check_trace(r, s, HalfPlane::upper());
}

TEST(Compress, PinnedSecondCoordinateKeepsTwoRoots) {
  // With z_2 = 11 pinned next to z_1 = 6, one distinct real root is impossible; the reduced point
  // has a double root t and a simple root s with 2t + s = 6, t^2 + 2ts = 11, so t = 2 +- 1/sqrt 3.
  const Slice s = Slice::leading_projection(3, {6.0});
  const Poly z(oracle::vieta_coordinates({1.0, 2.0, 3.0}));
  const auto r = compress(z, s);
  EXPECT_EQ(r.status, CompressionStatus::converged);
  EXPECT_EQ(r.rank, 2);
  EXPECT_EQ(r.final_profile.interior_total(), 0);
  EXPECT_EQ(r.final_profile.boundary_distinct(), 2);
  EXPECT_LE(std::abs(r.final_z.z(1) - 6.0), 1e-9);
  EXPECT_LE(std::abs(r.final_z.z(2) - 11.0), 1e-9);
  const double d = 1.0 / std::sqrt(3.0);
  const std::vector<Complex> a{2.0 + d, 2.0 + d, 2.0 - 2.0 * d}, b{2.0 - d, 2.0 - d, 2.0 + 2.0 * d};
  EXPECT_LE(std::min(oracle::matching_distance(r.final_roots, a), oracle::matching_distance(r.final_roots, b)), 1e-7);
  check_trace(r, s, HalfPlane::upper());
}

TEST(Compress, WithoutAugmentationUsesRankOne) {
  const Slice s = Slice::leading_projection(3, {6.0});
  CompressOptions opts;
  opts.augment = false;
  const auto r = compress(Poly(oracle::vieta_coordinates({1.0, 2.0, 3.0})), s, HalfPlane::upper(), opts);
  EXPECT_EQ(r.rank, 1);
  EXPECT_LE(r.final_profile.boundary_distinct(), 2);
  check_trace(r, s, HalfPlane::upper());
}

TEST(Compress, UnchangedWhenBoundsHold) {
  const Slice s = Slice::leading_projection(2, {3i, -2.0});
  const Poly z({3i, -2.0});
  const auto r = compress(z, s);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.steps.empty());
  EXPECT_EQ(r.final_z, z);
  EXPECT_EQ(r.status, CompressionStatus::converged);
}

TEST(Compress, RejectsInvalidStart) {
  const Slice s = Slice::leading_projection(2, {-3i});
  EXPECT_THROW(compress(Poly({-3i, -2.0}), s), ValidationError);
  EXPECT_THROW(compress(Poly({-3i}), s), DimensionMismatch);
  EXPECT_THROW(compress_hurwitz(Poly({3.0, 2.0}), Slice::leading_projection(2, {3.0})), ValidationError);
}

TEST(Compress, IterationCap) {
  const RootMultiset x{1.0 + 1i, -1.0 + 1i, 2.0, -2.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0};
  const Slice s = Slice::leading_projection(10, {-4.0 + 2i, -1.0 - 8i});
  CompressOptions opts;
  opts.max_iterations = 1;
  const auto r = compress(vieta_from_roots(x), s, HalfPlane::upper(), opts);
  EXPECT_EQ(r.status, CompressionStatus::cap_reached);
  ASSERT_FALSE(r.steps.empty());
  EXPECT_EQ(r.steps.back().event, StepEvent::cap_reached);
  EXPECT_EQ(r.iterations, 1);
  check_trace(r, s, HalfPlane::upper());
}

TEST(Compress, RandomComplexSlices) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.05, 2.0);
  int converged = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    const int n = 3 + t % 8;
    const int k = std::min(n - 1, 1 + (t / 8) % 3);
    RootMultiset x(static_cast<std::size_t>(n));
    for (auto& v : x) v = Complex(re(rng), g(rng) > 0.5 ? 0.0 : im(rng));
    const Poly z(oracle::vieta_coordinates(x));
    CMatrix L(k, n);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = Complex(g(rng), g(rng));
    CVector a(static_cast<std::size_t>(k), Complex{});
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)] += L(i, j) * z.z()[static_cast<std::size_t>(j)];
    const Slice s(L, a);
    const auto r = compress(z, s);
    if (r.status != CompressionStatus::converged) continue;
    ++converged;
    const auto np = numeric_profile(r.final_z, HalfPlane::upper());
    EXPECT_LE(np.interior_total(), s.rank() + 2);
    EXPECT_LE(np.boundary_distinct(), 2 * (s.rank() + 2));
    check_trace(r, s, HalfPlane::upper());
  }
  EXPECT_GE(converged, trials * 95 / 100);
}

TEST(Compress, RandomProjectionsSharpened) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.05, 2.0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 7);
    const std::size_t k = 2 + static_cast<std::size_t>(t % 2);
    if (k >= n) continue;
    RootMultiset x(n);
    for (auto& v : x) v = Complex(re(rng), im(rng));
    const Poly z(oracle::vieta_coordinates(x));
    const Slice s = Slice::leading_projection(n, CVector(z.z().begin(), z.z().begin() + static_cast<std::ptrdiff_t>(k)));
    const auto r = compress(z, s);
    ASSERT_EQ(r.status, CompressionStatus::converged);
    EXPECT_TRUE(r.sharpened);
    const auto np = numeric_profile(r.final_z, HalfPlane::upper());
    EXPECT_LE(np.interior_total(), static_cast<int>(k));
    EXPECT_LE(np.boundary_distinct(), static_cast<int>(k));
    check_trace(r, s, HalfPlane::upper());
  }
}

TEST(Compress, GeneralHalfPlane) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.05, 2.0);
  const HalfPlane h(1.1, 0.5 - 0.25i);
  for (int t = 0; t < 20; ++t) {
    const int n = 3 + t % 6, k = 1 + t % 2;
    RootMultiset x(static_cast<std::size_t>(n));
    for (auto& v : x) v = h.from_upper(Complex(re(rng), im(rng)));
    const Poly z(oracle::vieta_coordinates(x));
    CMatrix L(k, n);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = Complex(g(rng), g(rng));
    CVector a(static_cast<std::size_t>(k), Complex{});
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)] += L(i, j) * z.z()[static_cast<std::size_t>(j)];
    const Slice s(L, a);
    const auto r = compress(z, s, h);
    ASSERT_EQ(r.status, CompressionStatus::converged);
    const auto np = numeric_profile(r.final_z, h);
    EXPECT_LE(np.interior_total(), r.target_interior);
    EXPECT_LE(np.boundary_distinct(), r.target_boundary);
    check_trace(r, s, h);
  }
}

TEST(CompressHurwitz, RandomRealSlices) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.05, 2.0), y(0.1, 2.0);
  for (int t = 0; t < 40; ++t) {
    const int n = 3 + t % 8, k = std::min(n - 1, 1 + t % 3);
    RootMultiset x;
    while (static_cast<int>(x.size()) < n) {
      if (static_cast<int>(x.size()) + 1 < n && g(rng) > 0) {
        const Complex w(-u(rng), y(rng));
        x.push_back(w);
        x.push_back(std::conj(w));
      } else {
        x.emplace_back(g(rng) > 1.0 ? 0.0 : -u(rng));
      }
    }
    CVector zc = oracle::vieta_coordinates(x);
    for (auto& v : zc) v = v.real();
    const Poly z(zc);
    CMatrix L(k, n);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = g(rng);
    CVector a(static_cast<std::size_t>(k), Complex{});
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)] += L(i, j) * zc[static_cast<std::size_t>(j)];
    const Slice s(L, a, Field::real);
    const auto r = compress_hurwitz(z, s);
    ASSERT_EQ(r.status, CompressionStatus::converged);
    EXPECT_TRUE(r.final_z.is_real());
    const auto np = numeric_profile(r.final_z, HalfPlane::left());
    EXPECT_LE(np.interior_total(), s.rank() + 2);
    EXPECT_LE(np.boundary_distinct(), 2 * (s.rank() + 2));
    check_trace(r, s, HalfPlane::left());
    for (const auto& st : r.steps) EXPECT_TRUE(is_weakly_hurwitz(st.z).stable);
  }
}

TEST(CompressHurwitz, OriginIsReported) {
  const Slice s = Slice::leading_projection(3, {-6.0}, Field::real);
  CompressOptions opts;
  opts.augment = false;
  const auto r = compress_hurwitz(Poly(oracle::vieta_coordinates({-1.0, -2.0, -3.0})), s, opts);
  EXPECT_EQ(r.status, CompressionStatus::converged);
  EXPECT_LE(r.final_profile.interior_total(), 1);
  int at_origin = 0;
  for (const auto& c : numeric_profile(r.final_z, HalfPlane::left()).clusters)
    if (std::abs(c.center) <= 1e-6) at_origin += c.multiplicity;
  EXPECT_EQ(r.origin_multiplicity, at_origin);
  check_trace(r, s, HalfPlane::left());
}
