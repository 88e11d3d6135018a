#pragma once

// Independent reference computations used only by tests. Nothing here calls the library's
// Vieta recurrence, root finder or clustering.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

struct GaussInt {
  std::int64_t re = 0, im = 0;
  GaussInt operator*(const GaussInt& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  GaussInt& operator+=(const GaussInt& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  bool operator==(const GaussInt&) const = default;
};

/// e_1..e_n by summing products over all k-subsets, exactly in Gaussian integers.
inline std::vector<GaussInt> elementary_by_subsets(const std::vector<GaussInt>& x) {
  const std::size_t n = x.size();
  std::vector<GaussInt> e(n);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    GaussInt prod{1, 0};
    int k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) {
        prod = prod * x[j];
        ++k;
      }
    e[k - 1] += prod;
  }
  return e;
}

/// Floating-point e_k(x) by subset enumeration (n <= ~16).
inline Complex elementary_subset(const std::vector<Complex>& x, std::size_t k) {
  const std::size_t n = x.size();
  if (k == 0) return 1.0;
  Complex s{};
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    Complex prod = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (1u << j)) prod *= x[j];
    s += prod;
  }
  return s;
}

/// Minimum over permutations of the maximum pairwise distance (bitmask DP, n <= 16).
inline double matching_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  const std::size_t n = a.size();
  if (b.size() != n) return std::numeric_limits<double>::infinity();
  std::vector<double> best(1u << n, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!std::isfinite(best[mask])) continue;
    const int i = __builtin_popcount(mask);
    if (static_cast<std::size_t>(i) >= n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask & (1u << j)) continue;
      const std::uint32_t next = mask | (1u << j);
      best[next] = std::min(best[next], std::max(best[mask], std::abs(a[i] - b[j])));
    }
  }
  return best[(1u << n) - 1];
}

/// Coefficients (descending, raw) of prod (T - x_j) by repeated linear-factor multiplication.
inline std::vector<Complex> expand_linear_factors(const std::vector<Complex>& x) {
  std::vector<Complex> c{1.0};
  for (const auto& r : x) {
    std::vector<Complex> next(c.size() + 1, Complex{});
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = next;
  }
  return c;
}

/// Vieta coordinates z_k = e_k(x) read off the raw expansion: z_k = (-1)^k c_k.
inline std::vector<Complex> vieta_coordinates(const std::vector<Complex>& x) {
  const auto c = expand_linear_factors(x);
  std::vector<Complex> z(x.size());
  for (std::size_t k = 1; k <= x.size(); ++k) z[k - 1] = (k % 2 == 0 ? 1.0 : -1.0) * c[k];
  return z;
}

inline Complex random_complex(std::mt19937_64& rng, double lo_re, double hi_re, double lo_im, double hi_im) {
  std::uniform_real_distribution<double> re(lo_re, hi_re), im(lo_im, hi_im);
  const double r = re(rng);
  return {r, im(rng)};
}

inline Complex random_complex(std::mt19937_64& rng, double half_width) {
  return random_complex(rng, -half_width, half_width, -half_width, half_width);
}

inline double max_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace oracle
