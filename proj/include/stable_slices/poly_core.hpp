#pragma once

/**
 * @file poly_core.hpp
 * @brief Monic polynomials in Vieta coordinates, raw coefficient arithmetic, root finding and
 *        multiplicity clustering.
 *
 * A Poly of degree n stores z = (z_1, ..., z_n) and represents
 *
 *     f_z(T) = T^n - z_1 T^{n-1} + z_2 T^{n-2} - ... + (-1)^n z_n,
 *
 * so that z_i = e_i(roots). Raw coefficient lists are descending powers without sign changes;
 * vieta_to_raw / raw_to_vieta convert between the two.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "halfplane.hpp"
#include "linalg.hpp"
#include "types.hpp"

namespace stable_slices {

// ------------------------------------------------------------------------------------------------
// Raw coefficient helpers (descending powers)
// ------------------------------------------------------------------------------------------------

/// Signed Vieta vector -> raw monic coefficient list (1, -z_1, z_2, ...).
inline CVector vieta_to_raw(std::span<const Complex> z) {
  CVector raw(z.size() + 1);
  raw[0] = 1.0;
  for (std::size_t k = 1; k <= z.size(); ++k) raw[k] = (k % 2 == 0) ? z[k - 1] : -z[k - 1];
  return raw;
}

/// Raw coefficient list -> signed Vieta vector of the monic normalization.
inline CVector raw_to_vieta(std::span<const Complex> raw) {
  if (raw.empty() || raw[0] == Complex{}) throw ValidationError("raw coefficient list needs a nonzero leading term");
  CVector z(raw.size() - 1);
  for (std::size_t k = 1; k < raw.size(); ++k) {
    const Complex c = raw[k] / raw[0];
    z[k - 1] = (k % 2 == 0) ? c : -c;
  }
  return z;
}

/// Convolution of two raw coefficient lists.
inline CVector multiply(std::span<const Complex> p, std::span<const Complex> q) {
  if (p.empty() || q.empty()) throw ValidationError("multiply needs non-empty coefficient lists");
  CVector out(p.size() + q.size() - 1, Complex{});
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
  return out;
}

/// Horner evaluation of a raw coefficient list.
inline Complex eval_raw(std::span<const Complex> raw, Complex t) {
  Complex v{};
  for (const auto& c : raw) v = v * t + c;
  return v;
}

/// Raw coefficients of q(T) = p(s*T + t).
inline CVector compose_affine(std::span<const Complex> raw, Complex s, Complex t) {
  if (raw.empty()) return {};
  CVector acc{raw[0]};
  for (std::size_t k = 1; k < raw.size(); ++k) {
    CVector next(acc.size() + 1, Complex{});
    for (std::size_t i = 0; i < acc.size(); ++i) {
      next[i] += acc[i] * s;
      next[i + 1] += acc[i] * t;
    }
    next.back() += raw[k];
    acc = std::move(next);
  }
  return acc;
}

/// Drop leading coefficients with |c| <= tol. Returns the number of dropped terms.
inline std::size_t trim_leading(CVector& raw, double tol) {
  std::size_t drop = 0;
  while (drop + 1 < raw.size() && std::abs(raw[drop]) <= tol) ++drop;
  raw.erase(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(drop));
  return drop;
}

// ------------------------------------------------------------------------------------------------
// Poly
// ------------------------------------------------------------------------------------------------

class Poly {
 public:
  explicit Poly(CVector z) : z_(std::move(z)) {
    if (z_.empty()) throw ValidationError("polynomial degree must be at least 1");
    for (const auto& c : z_)
      if (!is_finite(c)) throw ValidationError("polynomial coefficients must be finite");
  }

  /// Monic normalization of a raw descending coefficient list.
  static Poly from_raw(std::span<const Complex> raw) { return Poly(raw_to_vieta(raw)); }

  std::size_t degree() const { return z_.size(); }
  const CVector& z() const { return z_; }
  /// 1-based access, z(i) = e_i of the roots.
  Complex z(std::size_t i) const { return z_.at(i - 1); }

  CVector raw() const { return vieta_to_raw(z_); }

  bool is_real(double rel_tol = 1e-12) const {
    const double scale = 1.0 + max_abs(z_);
    return std::all_of(z_.begin(), z_.end(), [&](Complex c) { return std::abs(c.imag()) <= rel_tol * scale; });
  }

  bool operator==(const Poly&) const = default;

 private:
  CVector z_;
};

/// Value of f_z at t (Horner with the alternating sign convention).
inline Complex eval(const Poly& p, Complex t) {
  Complex v = 1.0;
  for (std::size_t k = 1; k <= p.degree(); ++k) v = v * t + ((k % 2 == 0) ? p.z(k) : -p.z(k));
  return v;
}

/// Elementary symmetric polynomials e_1..e_n of x by the product recurrence (e_0 = 1).
inline CVector elementary_symmetric_values(std::span<const Complex> x) {
  CVector e(x.size() + 1, Complex{});
  e[0] = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t k = j + 1; k >= 1; --k) e[k] += x[j] * e[k - 1];
  return CVector(e.begin() + 1, e.end());
}

inline Poly vieta_from_roots(std::span<const Complex> x) {
  if (x.empty()) throw ValidationError("need at least one root");
  return Poly(elementary_symmetric_values(x));
}

// ------------------------------------------------------------------------------------------------
// Root finding (Aberth-Ehrlich simultaneous iteration)
// ------------------------------------------------------------------------------------------------

struct RootFinderOptions {
  int max_iterations = 2000;
  double residual = 1e-10;  ///< tau_res relative factor, scaled by 1 + max|z_i|
};

namespace detail {

// Upper bound on root moduli of a monic raw polynomial (Fujiwara).
inline double fujiwara_bound(std::span<const Complex> a) {
  const std::size_t n = a.size() - 1;
  double b = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    double c = std::abs(a[k]);
    if (k == n) c *= 0.5;
    b = std::max(b, std::pow(c, 1.0 / static_cast<double>(k)));
  }
  return 2.0 * b;
}

// p, p' and the running-error magnitude sum |a_k| |x|^{n-k}.
struct HornerResult {
  Complex value, derivative;
  double magnitude;
};

inline HornerResult horner_with_derivative(std::span<const Complex> a, Complex x) {
  Complex p = a[0], dp{};
  double m = std::abs(a[0]);
  const double ax = std::abs(x);
  for (std::size_t k = 1; k < a.size(); ++k) {
    dp = dp * x + p;
    p = p * x + a[k];
    m = m * ax + std::abs(a[k]);
  }
  return {p, dp, m};
}

// Reconstruction residual: max |coefficient of prod(T - x_j) - a|.
inline double reconstruction_error(std::span<const Complex> z, std::span<const Complex> roots) {
  const CVector e = elementary_symmetric_values(roots);
  double worst = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) worst = std::max(worst, std::abs(e[k] - z[k]));
  return worst;
}

// Rounding floor of the reconstruction: e_k evaluated on |roots| times a small multiple of eps.
inline double reconstruction_floor(std::span<const Complex> roots) {
  CVector mags;
  mags.reserve(roots.size());
  for (const auto& r : roots) mags.emplace_back(std::abs(r));
  const CVector e = elementary_symmetric_values(mags);
  return 64.0 * static_cast<double>(roots.size()) * kEps * (1.0 + max_abs(e));
}

inline RootMultiset aberth_monic(std::span<const Complex> a, int max_iterations, bool& converged) {
  const std::size_t n = a.size() - 1;
  converged = true;
  if (n == 0) return {};
  if (n == 1) return {-a[1]};

  const Complex centre = -a[1] / static_cast<double>(n);
  const CVector shifted = compose_affine(a, 1.0, centre);
  double radius = fujiwara_bound(shifted);
  RootMultiset x(n, centre);
  if (radius == 0.0) return x;

  // Deterministic start: circle about the centroid with an angular offset that breaks
  // conjugate symmetry, radii alternating slightly.
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n) + 0.7 / static_cast<double>(n);
    const double r = radius * (1.0 + 0.01 * static_cast<double>(j % 3));
    x[j] = centre + std::polar(r, angle);
  }

  // Every root keeps moving until all satisfy the backward-error test; freezing roots one at a
  // time leaves clusters of a multiple root lopsided and spoils the reconstruction.
  const double mu = 4.0 * static_cast<double>(n) * kEps;
  converged = false;
  int extra = -1;
  for (int it = 0; it < max_iterations; ++it) {
    bool all = true;
    for (std::size_t j = 0; j < n; ++j) {
      const auto h = horner_with_derivative(a, x[j]);
      if (h.value == Complex{}) continue;
      if (std::abs(h.value) > mu * h.magnitude) all = false;
      Complex sum{};
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        const Complex d = x[j] - x[k];
        if (d != Complex{}) sum += 1.0 / d;
      }
      Complex w;
      if (h.derivative == Complex{}) {
        w = std::polar(1e-3 * (1.0 + std::abs(x[j])), 0.3 * static_cast<double>(j + 1));
      } else {
        const Complex ratio = h.value / h.derivative;
        const Complex denom = 1.0 - ratio * sum;
        w = (denom == Complex{}) ? ratio : ratio / denom;
      }
      if (is_finite(w)) x[j] -= w;
    }
    if (all && extra < 0) extra = 3;
    if (extra >= 0 && extra-- == 0) {
      converged = true;
      break;
    }
  }
  return x;
}

// One Newton correction per isolated root, accepted only when it halves |p|.
inline void polish_simple_roots(std::span<const Complex> a, RootMultiset& x) {
  const std::size_t n = x.size();
  for (std::size_t j = 0; j < n; ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) nearest = std::min(nearest, std::abs(x[j] - x[k]));
    const auto h = horner_with_derivative(a, x[j]);
    if (h.derivative == Complex{}) continue;
    const Complex step = h.value / h.derivative;
    if (!(std::abs(step) < 0.1 * nearest)) continue;
    const Complex cand = x[j] - step;
    if (std::abs(eval_raw(a, cand)) < 0.5 * std::abs(h.value)) x[j] = cand;
  }
}

// Raw coefficients of the k-th derivative.
inline CVector derivative_raw(std::span<const Complex> a, std::size_t k) {
  CVector d(a.begin(), a.end());
  for (std::size_t r = 0; r < k && d.size() > 1; ++r) {
    const std::size_t n = d.size() - 1;
    CVector next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = d[i] * static_cast<double>(n - i);
    d = std::move(next);
  }
  return d;
}

// Re-seat groups of nearly coincident roots. The group mean is refined as a root of the
// (m-1)-th derivative and the members are replaced by the roots of the degree-m Taylor
// truncation about it, which keeps the group's power sums consistent with the coefficients.
inline RootMultiset reseat_clusters(std::span<const Complex> a, const RootMultiset& x, double link_radius,
                                    int max_iterations) {
  const std::size_t n = x.size();
  std::vector<std::size_t> group(n);
  std::iota(group.begin(), group.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (group[i] != i) i = group[i] = group[group[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(x[i] - x[j]) <= link_radius) {
        const std::size_t ri = find(i), rj = find(j);
        group[std::max(ri, rj)] = std::min(ri, rj);
      }

  RootMultiset out = x;
  for (std::size_t g = 0; g < n; ++g) {
    if (find(g) != g) continue;
    std::vector<std::size_t> members;
    Complex c{};
    for (std::size_t i = 0; i < n; ++i)
      if (find(i) == g) {
        members.push_back(i);
        c += x[i];
      }
    const std::size_t m = members.size();
    if (m < 2) continue;
    c /= static_cast<double>(m);
    const CVector d = derivative_raw(a, m - 1);
    for (int it = 0; it < 20; ++it) {
      const auto h = horner_with_derivative(d, c);
      if (h.derivative == Complex{}) break;
      const Complex step = h.value / h.derivative;
      c -= step;
      if (std::abs(step) <= 2.0 * kEps * (1.0 + std::abs(c))) break;
    }
    const CVector shifted = compose_affine(a, 1.0, c);  // p(T + c), descending
    const std::size_t deg = shifted.size() - 1;
    CVector local(m + 1);
    for (std::size_t k = 0; k <= m; ++k) local[m - k] = shifted[deg - k];
    if (local[0] == Complex{}) continue;
    for (std::size_t k = 1; k <= m; ++k) local[k] /= local[0];
    local[0] = 1.0;
    bool ok = true;
    RootMultiset u;
    if (local.back() == Complex{}) {
      u.assign(m, Complex{});
    } else {
      u = aberth_monic(local, max_iterations, ok);
    }
    for (std::size_t k = 0; k < m; ++k) out[members[k]] = c + u[k];
  }
  return out;
}

// Gauss-Newton on e(x) = z over the whole multiset with minimum-norm steps. Clustered roots give
// nearly equal Jacobian columns; the truncated solve moves them only along directions that change
// the coefficients.
inline RootMultiset coefficient_polish(std::span<const Complex> z, RootMultiset x, int sweeps = 8) {
  const std::size_t n = x.size();
  double err = reconstruction_error(z, x);
  for (int it = 0; it < sweeps && err > 0; ++it) {
    CMatrix J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      RootMultiset rest;
      rest.reserve(n - 1);
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) rest.push_back(x[i]);
      const CVector e = elementary_symmetric_values(rest);
      J(0, static_cast<Eigen::Index>(j)) = 1.0;
      for (std::size_t k = 1; k < n; ++k) J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = e[k - 1];
    }
    const CVector ex = elementary_symmetric_values(x);
    CColumn r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) r(static_cast<Eigen::Index>(k)) = z[k] - ex[k];
    const CColumn step = min_norm_solve(J, r, 1e-14);
    RootMultiset next = x;
    for (std::size_t j = 0; j < n; ++j) next[j] += step(static_cast<Eigen::Index>(j));
    const double e2 = reconstruction_error(z, next);
    if (!(e2 < err)) break;
    err = e2;
    x = std::move(next);
  }
  return x;
}

}  // namespace detail

/**
 * Roots of a monic polynomial, listed with multiplicity.
 *
 * Exact zero roots (trailing zero coefficients) are deflated first. The remaining roots come from
 * Aberth-Ehrlich iteration started on a circle about the root centroid, followed by Newton
 * polishing of isolated roots. Throws NonConvergence when the roots do not reproduce the
 * coefficients to tau_res = residual * (1 + max|z_i|) (floored at the rounding error of the
 * expansion itself); `converged` only records whether the iteration cap was hit.
 */
inline RootMultiset find_roots(const Poly& p, const RootFinderOptions& opts = {}) {
  CVector a = p.raw();
  RootMultiset roots;
  while (a.size() > 1 && a.back() == Complex{}) {
    a.pop_back();
    roots.emplace_back(0.0);
  }
  bool converged = true;  // informational
  RootMultiset rest = detail::aberth_monic(a, opts.max_iterations, converged);
  detail::polish_simple_roots(a, rest);
  if (rest.size() > 1) {
    // Try a ladder of linking radii and keep the configuration that best reproduces the coefficients.
    const CVector zr = raw_to_vieta(a);
    const double scale = 1.0 + max_abs(rest);
    double best = detail::reconstruction_error(zr, rest);
    RootMultiset chosen = rest;
    for (double f = 1e-12; f <= 2e-2 && best > 0; f *= 4.0) {
      RootMultiset seated = detail::reseat_clusters(a, rest, f * scale, opts.max_iterations);
      RootMultiset polished = seated;
      detail::polish_simple_roots(a, polished);
      for (auto* cand : {&seated, &polished}) {
        const double err = detail::reconstruction_error(zr, *cand);
        if (err < best) {
          best = err;
          chosen = *cand;
        }
      }
    }
    rest = std::move(chosen);
    if (best > 0) rest = detail::coefficient_polish(zr, std::move(rest));
  }
  roots.insert(roots.end(), rest.begin(), rest.end());

  const double tau = std::max(opts.residual * (1.0 + max_abs(p.z())), detail::reconstruction_floor(roots));
  const double err = detail::reconstruction_error(p.z(), roots);
  if (!std::isfinite(err) || err > tau)
    throw NonConvergence("root finder did not converge (reconstruction error " + std::to_string(err) + ")");
  return roots;
}

/// Roots of a raw (possibly non-monic) coefficient list; leading zeros are not allowed.
inline RootMultiset find_roots_raw(std::span<const Complex> raw, const RootFinderOptions& opts = {}) {
  if (raw.size() < 2) return {};
  return find_roots(Poly::from_raw(raw), opts);
}

// ------------------------------------------------------------------------------------------------
// Clustering
// ------------------------------------------------------------------------------------------------

struct RootCluster {
  Complex center;
  int multiplicity = 0;
  Location location = Location::interior;
};

struct RootProfile {
  std::vector<RootCluster> clusters;

  int degree() const {
    int d = 0;
    for (const auto& c : clusters) d += c.multiplicity;
    return d;
  }
  /// Roots in the open half-plane, counted with multiplicity.
  int interior_total() const {
    int d = 0;
    for (const auto& c : clusters)
      if (c.location == Location::interior) d += c.multiplicity;
    return d;
  }
  /// Distinct roots on the boundary line.
  int boundary_distinct() const {
    return static_cast<int>(std::count_if(clusters.begin(), clusters.end(),
                                          [](const RootCluster& c) { return c.location == Location::boundary; }));
  }
  int outside_total() const {
    int d = 0;
    for (const auto& c : clusters)
      if (c.location == Location::outside) d += c.multiplicity;
    return d;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Groups roots linked by `linked(i, j)`, then keeps merging groups whose centres are within
// `radius`. Returns (center, multiplicity) pairs sorted by (Re, Im).
template <typename Linked>
std::vector<std::pair<Complex, int>> link_clusters(std::span<const Complex> x, double radius, Linked linked) {
  const std::size_t n = x.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (linked(i, j)) sets.unite(i, j);

  for (;;) {
    std::vector<std::size_t> reps;
    std::vector<Complex> sums;
    std::vector<int> counts;
    std::vector<std::size_t> index_of(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = sets.find(i);
      auto it = std::find(reps.begin(), reps.end(), r);
      std::size_t slot;
      if (it == reps.end()) {
        slot = reps.size();
        reps.push_back(r);
        sums.emplace_back(0.0);
        counts.push_back(0);
      } else {
        slot = static_cast<std::size_t>(it - reps.begin());
      }
      index_of[i] = slot;
      sums[slot] += x[i];
      counts[slot] += 1;
    }
    bool merged = false;
    for (std::size_t a = 0; a < reps.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < reps.size() && !merged; ++b) {
        const Complex ca = sums[a] / static_cast<double>(counts[a]);
        const Complex cb = sums[b] / static_cast<double>(counts[b]);
        if (std::abs(ca - cb) <= radius) {
          sets.unite(reps[a], reps[b]);
          merged = true;
        }
      }
    if (merged) continue;

    std::vector<std::pair<Complex, int>> out;
    for (std::size_t s = 0; s < reps.size(); ++s) out.emplace_back(sums[s] / static_cast<double>(counts[s]), counts[s]);
    std::sort(out.begin(), out.end(), [](const auto& l, const auto& r) {
      if (l.first.real() != r.first.real()) return l.first.real() < r.first.real();
      return l.first.imag() < r.first.imag();
    });
    return out;
  }
}

inline RootProfile classify_clusters(const std::vector<std::pair<Complex, int>>& groups, const HalfPlane& h,
                                     double boundary_tol) {
  RootProfile prof;
  for (const auto& [c, m] : groups) prof.clusters.push_back({c, m, halfplane_contains(h, c, boundary_tol)});
  return prof;
}

}  // namespace detail

/**
 * Single-linkage clustering of a root multiset at a fixed radius. Cluster centres are
 * multiplicity-weighted means, classified against `h` with tolerance `boundary_tol`.
 */
inline RootProfile cluster_roots(std::span<const Complex> x, const HalfPlane& h, double radius, double boundary_tol) {
  if (!(radius > 0) || !(boundary_tol > 0)) throw ValidationError("cluster radius and boundary tolerance must be positive");
  const auto groups = detail::link_clusters(x, radius, [&](std::size_t i, std::size_t j) { return std::abs(x[i] - x[j]) <= radius; });
  return detail::classify_clusters(groups, h, boundary_tol);
}


namespace detail {

// Radius within which rounding alone can scatter an m-fold root at c:
// (n * mu * sum|a_k||c|^{n-k} / |q_m|)^{1/m}, q_m the m-th Taylor coefficient of p about c.
inline double multiple_root_noise_radius(std::span<const Complex> a, Complex c, std::size_t m) {
  const std::size_t n = a.size() - 1;
  const CVector shifted = compose_affine(a, 1.0, c);
  const double qm = std::abs(shifted[n - m]);
  const double mag = horner_with_derivative(a, c).magnitude;
  const double noise = 8.0 * static_cast<double>(n * n) * kEps * mag;
  if (qm == 0.0) return 0.0;
  const double rho = std::pow(noise / qm, 1.0 / static_cast<double>(m));
  // The lower Taylor coefficients of a scattered m-fold root are bounded by binom(m, j) qm rho^{m-j}.
  double binom = 1.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j > 0) binom = binom * static_cast<double>(m - j + 1) / static_cast<double>(j);
    const double allowed = 4.0 * binom * qm * std::pow(2.0 * rho, static_cast<double>(m - j)) + noise;
    if (std::abs(shifted[n - j]) > allowed) return 0.0;
  }
  return rho;
}

}  // namespace detail

/**
 * Clustering used by the stability predicates. Roots are first linked at the cluster radius; two
 * groups are then merged while their distance is within twice the rounding scatter of the merged
 * multiple root, which absorbs the eps^{1/m} splitting an m-fold root suffers.
 */
inline RootProfile cluster_poly_roots(const Poly& p, std::span<const Complex> x, const HalfPlane& h, const Tolerances& tol = {}) {
  const double scale = max_abs(CVector(x.begin(), x.end()));
  const double radius = tol.cluster_radius_for(scale);
  const double btol = tol.boundary_for(scale);
  const CVector raw = p.raw();
  auto groups = detail::link_clusters(x, radius, [&](std::size_t i, std::size_t j) { return std::abs(x[i] - x[j]) <= radius; });

  for (;;) {
    double best = 1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const auto& [ci, mi] = groups[i];
        const auto& [cj, mj] = groups[j];
        const int m = mi + mj;
        const Complex c = (ci * static_cast<double>(mi) + cj * static_cast<double>(mj)) / static_cast<double>(m);
        const double rho = detail::multiple_root_noise_radius(raw, c, static_cast<std::size_t>(m));
        const double ratio = std::abs(ci - cj) / (2.0 * rho);
        if (ratio <= best) {
          best = ratio;
          bi = i;
          bj = j;
        }
      }
    if (bi == bj) break;
    const auto [ci, mi] = groups[bi];
    const auto [cj, mj] = groups[bj];
    const int m = mi + mj;
    groups[bi] = {(ci * static_cast<double>(mi) + cj * static_cast<double>(mj)) / static_cast<double>(m), m};
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& l, const auto& r) {
    if (l.first.real() != r.first.real()) return l.first.real() < r.first.real();
    return l.first.imag() < r.first.imag();
  });
  return detail::classify_clusters(groups, h, btol);
}

}  // namespace stable_slices
