#pragma once

/**
 * @file regions.hpp
 * @brief Reduction of half-plane stability to the upper half-plane, and Moebius transforms of
 *        polynomials for circular regions.
 */

#include <cmath>

#include "halfplane.hpp"
#include "poly_core.hpp"

namespace stable_slices {

/**
 * Monic polynomial whose roots are e^{-i theta}(x_j - base) for the roots x_j of p.
 *
 * Computed on the coefficients as s^n p((T - t) / s) with s = e^{-i theta}, t = -s * base, so no
 * root finding is involved.
 */
inline Poly to_upper_halfplane(const HalfPlane& h, const Poly& p) {
  if (h.is_upper()) return p;
  const Complex s = std::conj(h.rotation());
  const Complex t = -s * h.base();
  CVector raw = compose_affine(p.raw(), 1.0 / s, -t / s);
  const Complex lead = std::pow(s, static_cast<double>(p.degree()));
  for (auto& c : raw) c *= lead;
  return Poly::from_raw(raw);
}

/// z -> (a z + b) / (c z + d).
class Moebius {
 public:
  Moebius(Complex a, Complex b, Complex c, Complex d) : a_(a), b_(b), c_(c), d_(d) {
    if (!is_finite(a) || !is_finite(b) || !is_finite(c) || !is_finite(d))
      throw ValidationError("Moebius coefficients must be finite");
    const double scale = std::abs(a * d) + std::abs(b * c);
    if (!(std::abs(a * d - b * c) > 1e-12 * scale)) throw DegenerateMap("Moebius map has vanishing determinant");
  }

  static Moebius identity() { return {1.0, 0.0, 0.0, 1.0}; }

  Complex a() const { return a_; }
  Complex b() const { return b_; }
  Complex c() const { return c_; }
  Complex d() const { return d_; }
  Complex determinant() const { return a_ * d_ - b_ * c_; }

  Complex operator()(Complex z) const { return (a_ * z + b_) / (c_ * z + d_); }

  Moebius inverse() const { return {d_, -b_, -c_, a_}; }

  /// (*this)(other(z)).
  Moebius after(const Moebius& o) const {
    return {a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_, c_ * o.a_ + d_ * o.c_, c_ * o.b_ + d_ * o.d_};
  }

 private:
  Complex a_, b_, c_, d_;
};

struct MoebiusImage {
  CVector raw;              ///< trimmed descending coefficients, possibly non-monic
  std::size_t degree_drop;  ///< deg_hint - degree(raw)
};

/**
 * Coefficients of (cT + d)^n f((aT + b) / (cT + d)) with n = deg_hint >= deg f.
 *
 * Leading coefficients whose magnitude is below `trim_tol` times the largest coefficient are
 * dropped; the count is reported as degree_drop. The roots of the result are M^{-1}(x_j) for the
 * roots x_j of f away from the pole a/c of M^{-1}.
 */
inline MoebiusImage moebius_transform_poly(const Moebius& m, const Poly& p, std::size_t deg_hint, double trim_tol = 1e-12) {
  if (deg_hint < p.degree()) throw DimensionMismatch("degree hint below the polynomial degree");
  const CVector f = p.raw();
  const std::size_t deg = p.degree();
  const std::size_t n = deg_hint;
  const CVector num{m.a(), m.b()}, den{m.c(), m.d()};

  // pow_num[k] = (aT+b)^k, pow_den[k] = (cT+d)^k
  std::vector<CVector> pow_num{{1.0}}, pow_den{{1.0}};
  for (std::size_t k = 1; k <= n; ++k) {
    pow_num.push_back(multiply(pow_num.back(), num));
    pow_den.push_back(multiply(pow_den.back(), den));
  }
  CVector out(n + 1, Complex{});
  for (std::size_t k = 0; k <= deg; ++k) {
    // f_k T^{deg-k}  ->  f_k (aT+b)^{deg-k} (cT+d)^{n-deg+k}
    const CVector term = multiply(pow_num[deg - k], pow_den[n - deg + k]);
    for (std::size_t i = 0; i <= n; ++i) out[i] += f[k] * term[i];
  }
  const double tol = trim_tol * max_abs(out);
  const std::size_t drop = trim_leading(out, tol);
  return {out, drop};
}

}  // namespace stable_slices
