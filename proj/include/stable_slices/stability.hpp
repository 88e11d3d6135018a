#pragma once

/**
 * @file stability.hpp
 * @brief Half-plane stability verdicts and the Hurwitz embedding of real polynomials into
 *        upper-half-plane-stable ones.
 */

#include <algorithm>

#include "halfplane.hpp"
#include "poly_core.hpp"

namespace stable_slices {

struct StabilityVerdict {
  bool stable = false;
  RootProfile profile;
  RootMultiset witness;  ///< the roots the verdict was computed from

  /// Every cluster strictly inside the half-plane.
  bool strict() const {
    return stable && std::all_of(profile.clusters.begin(), profile.clusters.end(),
                                 [](const RootCluster& c) { return c.location == Location::interior; });
  }
};

/// Verdict from already computed roots of p.
inline StabilityVerdict verdict_from_roots(const Poly& p, RootMultiset roots, const HalfPlane& h, const Tolerances& tol = {}) {
  StabilityVerdict v;
  v.profile = cluster_poly_roots(p, roots, h, tol);
  v.stable = v.profile.outside_total() == 0;
  v.witness = std::move(roots);
  return v;
}

inline StabilityVerdict is_stable(const Poly& p, const HalfPlane& h, const Tolerances& tol = {}) {
  RootFinderOptions opts;
  opts.residual = tol.residual;
  return verdict_from_roots(p, find_roots(p, opts), h, tol);
}

namespace detail {

inline void require_real(const Poly& p, const char* what) {
  if (!p.is_real()) throw NonRealInput(std::string(what) + " needs real coefficients");
}

// (-i)^k
inline Complex neg_i_pow(std::size_t k) {
  static const Complex table[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  return table[k % 4];
}

inline Complex i_pow(std::size_t k) {
  static const Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[k % 4];
}

}  // namespace detail

/**
 * (-i)^n f(iT) = T^n + sum_k i^k z_k T^{n-k} for real f. The roots are -i times those of f, so
 * the output is upper-half-plane stable iff f is weakly Hurwitz.
 */
inline Poly hurwitz_embed(const Poly& p) {
  detail::require_real(p, "hurwitz_embed");
  CVector z(p.degree());
  for (std::size_t k = 1; k <= p.degree(); ++k) z[k - 1] = detail::neg_i_pow(k) * p.z(k).real();
  return Poly(std::move(z));
}

/// Inverse of hurwitz_embed, i^n g(-iT). Throws NotInImage when the result is not real within 1e-10.
inline Poly hurwitz_unembed(const Poly& g) {
  CVector z(g.degree());
  const double scale = 1.0 + max_abs(g.z());
  for (std::size_t k = 1; k <= g.degree(); ++k) {
    const Complex v = detail::i_pow(k) * g.z(k);
    if (std::abs(v.imag()) > 1e-10 * scale) throw NotInImage("coefficients do not alternate between R and iR");
    z[k - 1] = v.real();
  }
  return Poly(std::move(z));
}

/// Stability against the closed left half-plane. strict() distinguishes Hurwitz from weakly Hurwitz.
inline StabilityVerdict is_weakly_hurwitz(const Poly& p, const Tolerances& tol = {}) {
  detail::require_real(p, "is_weakly_hurwitz");
  return is_stable(p, HalfPlane::left(), tol);
}

}  // namespace stable_slices
