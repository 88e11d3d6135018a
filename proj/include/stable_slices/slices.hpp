#pragma once

/**
 * @file slices.hpp
 * @brief Linear slices S ∩ L^{-1}(a) of stable polynomials: membership, compactness bounds,
 *        augmentation, perturbation directions and maximal stable steps.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>

#include "halfplane.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "poly_core.hpp"
#include "stability.hpp"

namespace stable_slices {

enum class Field { complex, real };

/**
 * Affine constraints L z = a on Vieta coordinates. For Field::real, L and a must be real and
 * members are real polynomials.
 */
class Slice {
 public:
  Slice(CMatrix L, CVector a, Field field = Field::complex) : L_(std::move(L)), a_(std::move(a)), field_(field) {
    if (static_cast<std::size_t>(L_.rows()) != a_.size()) throw DimensionMismatch("slice: L has " + std::to_string(L_.rows()) + " rows but a has " + std::to_string(a_.size()) + " entries");
    if (L_.cols() < 1) throw DimensionMismatch("slice: ambient dimension must be at least 1");
    if (L_.rows() > L_.cols()) throw DimensionMismatch("slice: more constraints than coordinates");
    for (Eigen::Index i = 0; i < L_.rows(); ++i)
      for (Eigen::Index j = 0; j < L_.cols(); ++j)
        if (!is_finite(L_(i, j))) throw ValidationError("slice: L must be finite");
    for (const auto& v : a_)
      if (!is_finite(v)) throw ValidationError("slice: a must be finite");
    if (field_ == Field::real) {
      const double scale = 1.0 + (L_.size() ? L_.cwiseAbs().maxCoeff() : 0.0);
      for (Eigen::Index i = 0; i < L_.rows(); ++i)
        for (Eigen::Index j = 0; j < L_.cols(); ++j)
          if (std::abs(L_(i, j).imag()) > 1e-12 * scale) throw NonRealInput("real slice needs a real matrix");
      for (const auto& v : a_)
        if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v))) throw NonRealInput("real slice needs a real right-hand side");
    }
    rank_ = field_ == Field::real ? numerical_rank(RMatrix(L_.real())) : numerical_rank(L_);
  }

  /// Constraints fixing the first values.size() coordinates of C^n.
  static Slice leading_projection(std::size_t n, const CVector& values, Field field = Field::complex) {
    CMatrix L = CMatrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < values.size(); ++i) L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    return Slice(std::move(L), values, field);
  }

  const CMatrix& L() const { return L_; }
  const CVector& a() const { return a_; }
  Field field() const { return field_; }
  std::size_t n() const { return static_cast<std::size_t>(L_.cols()); }
  std::size_t k() const { return static_cast<std::size_t>(L_.rows()); }
  int rank() const { return rank_; }

  CVector apply(std::span<const Complex> z) const {
    if (z.size() != n()) throw DimensionMismatch("slice: expected " + std::to_string(n()) + " coordinates, got " + std::to_string(z.size()));
    CVector out(k(), Complex{});
    for (std::size_t i = 0; i < k(); ++i)
      for (std::size_t j = 0; j < n(); ++j) out[i] += L_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * z[j];
    return out;
  }

  /// max_i |(L z - a)_i|
  double residual(std::span<const Complex> z) const {
    const CVector lz = apply(z);
    double r = 0.0;
    for (std::size_t i = 0; i < k(); ++i) r = std::max(r, std::abs(lz[i] - a_[i]));
    return r;
  }

  /// Linear tolerance rel * (1 + |a|_inf).
  double linear_tolerance(double rel) const { return rel * (1.0 + max_abs(a_)); }

  /// Number r when the row space is exactly span(e_1, ..., e_r), otherwise 0.
  int leading_projection_rank() const {
    if (rank_ == 0) return 0;
    const double scale = L_.cwiseAbs().maxCoeff();
    for (Eigen::Index j = rank_; j < L_.cols(); ++j)
      for (Eigen::Index i = 0; i < L_.rows(); ++i)
        if (std::abs(L_(i, j)) > 1e-12 * scale) return 0;
    return numerical_rank(CMatrix(L_.leftCols(rank_))) == rank_ ? rank_ : 0;
  }

 private:
  CMatrix L_;
  CVector a_;
  Field field_;
  int rank_ = 0;
};

struct SliceCheck {
  bool member = false;
  bool linear_ok = false;
  double residual = 0.0;
  StabilityVerdict verdict;
};

/// Linear residual within tol.slice * (1 + |a|) and stability against h.
inline SliceCheck check_slice(const Slice& s, const Poly& z, const HalfPlane& h, const Tolerances& tol = {}) {
  if (z.degree() != s.n()) throw DimensionMismatch("slice has dimension " + std::to_string(s.n()) + ", polynomial degree " + std::to_string(z.degree()));
  SliceCheck c;
  c.residual = s.residual(z.z());
  c.linear_ok = c.residual <= s.linear_tolerance(tol.slice);
  if (s.field() == Field::real && !z.is_real()) c.linear_ok = false;
  c.verdict = is_stable(z, h, tol);
  c.member = c.linear_ok && c.verdict.stable;
  return c;
}

inline bool slice_contains(const Slice& s, const Poly& z, const HalfPlane& h, const Tolerances& tol = {}) {
  return check_slice(s, z, h, tol).member;
}

// ------------------------------------------------------------------------------------------------
// Compactness
// ------------------------------------------------------------------------------------------------

struct CompactnessBounds {
  double im_lo = 0.0;
  double im_hi = 0.0;
  double re_sq_bound = 0.0;
};

/**
 * For an upper-half-plane stable polynomial with e_1 = a1, e_2 = a2: every root has Im in
 * [0, Im a1] and sum Re(x)^2 <= Re(a1^2 - 2 a2) + n Im(a1)^2. Empty when either bound is negative.
 */
inline std::optional<CompactnessBounds> compactness_bounds(Complex a1, Complex a2, int n) {
  if (n < 2) throw ValidationError("compactness_bounds needs n >= 2");
  CompactnessBounds b;
  b.im_hi = a1.imag();
  b.re_sq_bound = (a1 * a1 - 2.0 * a2).real() + static_cast<double>(n) * a1.imag() * a1.imag();
  if (b.im_hi < 0 || b.re_sq_bound < 0) return std::nullopt;
  return b;
}

// ------------------------------------------------------------------------------------------------
// Augmentation
// ------------------------------------------------------------------------------------------------

/**
 * Appends rows pinning z_1 and z_2 to the values of z0 unless the unit row is already in the row
 * span of L. z0 must satisfy the constraints.
 */
inline Slice augment(const Slice& s, const Poly& z0, const Tolerances& tol = {}) {
  if (z0.degree() != s.n()) throw DimensionMismatch("augment: dimension mismatch");
  if (s.residual(z0.z()) > s.linear_tolerance(tol.slice)) throw ValidationError("augment: z0 does not satisfy the slice constraints");
  CMatrix L = s.L();
  CVector a = s.a();
  int rank = s.rank();
  for (std::size_t j = 0; j < std::min<std::size_t>(2, s.n()); ++j) {
    if (L.rows() >= L.cols()) break;
    CMatrix trial(L.rows() + 1, L.cols());
    trial.topRows(L.rows()) = L;
    trial.row(L.rows()).setZero();
    trial(L.rows(), static_cast<Eigen::Index>(j)) = 1.0;
    const int r = s.field() == Field::real ? numerical_rank(RMatrix(trial.real())) : numerical_rank(trial);
    if (r > rank) {
      L = std::move(trial);
      const Complex v = z0.z()[j];
      a.push_back(s.field() == Field::real ? Complex(v.real(), 0.0) : v);
      rank = r;
    }
  }
  return Slice(std::move(L), std::move(a), s.field());
}

// ------------------------------------------------------------------------------------------------
// Kernel directions
// ------------------------------------------------------------------------------------------------

enum class KernelMode { complex, real };

struct KernelDirection {
  CVector b;   ///< coefficients of h = b_1 T^{m-1} + ... + b_m
  CVector c;   ///< raw coefficients of h * cofactor (T^{n-1}, ..., T^0)
  CVector dz;  ///< the same perturbation in Vieta coordinates of the slice, L dz = 0
};

namespace detail {

// Vieta-signed direction of a raw perturbation c of length n: dz_k = (-1)^k c_k.
inline CVector signed_direction(std::span<const Complex> c) {
  CVector dz(c.size());
  for (std::size_t k = 1; k <= c.size(); ++k) dz[k - 1] = (k % 2 == 0) ? c[k - 1] : -c[k - 1];
  return dz;
}

using PerturbationMap = std::function<CVector(std::span<const Complex>)>;

// b with L T(h * cofactor) = 0 over the allowed entries of b. `allowed` empty means all entries.
inline std::optional<KernelDirection> kernel_direction_impl(const CMatrix& L, std::span<const Complex> cofactor, std::size_t m,
                                                            KernelMode mode, const std::vector<std::size_t>& allowed,
                                                            const PerturbationMap& to_slice) {
  const std::size_t n = static_cast<std::size_t>(L.cols());
  if (m == 0 || cofactor.size() + m != n + 1) throw DimensionMismatch("kernel_direction: cofactor degree must be n - m");
  std::vector<std::size_t> free = allowed;
  if (free.empty())
    for (std::size_t j = 0; j < m; ++j) free.push_back(j);
  const std::size_t d = free.size();
  if (d == 0) return std::nullopt;

  // Column j: image of the unit perturbation h = T^{m-1-free[j]}.
  std::vector<CVector> cols;
  CMatrix K(L.rows(), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) {
    CVector unit(m, Complex{});
    unit[free[j]] = 1.0;
    const CVector c = multiply(unit, cofactor);
    const CVector dz = to_slice(c);
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
      Complex s{};
      for (std::size_t t = 0; t < n; ++t) s += L(i, static_cast<Eigen::Index>(t)) * dz[t];
      K(i, static_cast<Eigen::Index>(j)) = s;
    }
  }

  CVector bfree(d);
  if (mode == KernelMode::complex) {
    const auto v = null_vector(K);
    if (!v) return std::nullopt;
    for (std::size_t j = 0; j < d; ++j) bfree[j] = (*v)(static_cast<Eigen::Index>(j));
  } else {
    RMatrix R(2 * K.rows(), K.cols());
    R.topRows(K.rows()) = K.real();
    R.bottomRows(K.rows()) = K.imag();
    const auto v = null_vector(R);
    if (!v) return std::nullopt;
    for (std::size_t j = 0; j < d; ++j) bfree[j] = (*v)(static_cast<Eigen::Index>(j));
  }
  // Scale so that the first entry of largest modulus is exactly 1.
  std::size_t arg = 0;
  for (std::size_t j = 1; j < d; ++j)
    if (std::abs(bfree[j]) > std::abs(bfree[arg]) * (1.0 + 1e-12)) arg = j;
  const Complex pivot = bfree[arg];
  for (auto& v : bfree) v /= pivot;
  bfree[arg] = 1.0;
  if (mode == KernelMode::real)
    for (auto& v : bfree) v = v.real();

  KernelDirection out;
  out.b.assign(m, Complex{});
  for (std::size_t j = 0; j < d; ++j) out.b[free[j]] = bfree[j];
  out.c = multiply(out.b, cofactor);
  out.dz = to_slice(out.c);
  return out;
}

}  // namespace detail

/**
 * Nonzero b with L(chi(b)) = 0, chi(b) the coefficients of h * cofactor. Real mode restricts b to
 * real entries. Returns nullopt (no kernel) when the relevant matrix has full column rank at the
 * 1e-10 singular-value threshold.
 *
 * `c` holds the raw coefficients of h * cofactor; the slice constraints act on Vieta coordinates,
 * so the annihilated vector is `dz` (c with alternating signs).
 */
inline std::optional<KernelDirection> kernel_direction(const Slice& s, std::span<const Complex> cofactor, std::size_t m,
                                                       KernelMode mode = KernelMode::complex) {
  return detail::kernel_direction_impl(s.L(), cofactor, m, mode, {}, detail::signed_direction);
}

/// Free entries of b for a perturbation that keeps imaginary-axis roots on the axis: even indices.
inline std::vector<std::size_t> hurwitz_free_indices(std::size_t m) {
  std::vector<std::size_t> free;
  for (std::size_t i = 2; i <= m; i += 2) free.push_back(i - 1);
  return free;
}

/**
 * Real kernel direction whose odd-index entries b_1, b_3, ... are exactly zero, so that h has the
 * parity of T^m and q + eps h keeps its roots on the imaginary axis. Every odd index is zeroed,
 * including b_m for odd m.
 */
inline std::optional<KernelDirection> hurwitz_kernel_direction(const Slice& s, std::span<const Complex> cofactor, std::size_t m) {
  if (s.field() != Field::real) throw ValidationError("hurwitz_kernel_direction needs a real slice");
  const auto free = hurwitz_free_indices(m);
  if (free.empty()) return std::nullopt;
  return detail::kernel_direction_impl(s.L(), cofactor, m, KernelMode::real, free, detail::signed_direction);
}

// ------------------------------------------------------------------------------------------------
// Maximal stable steps
// ------------------------------------------------------------------------------------------------

enum class StepEvent { root_hit_boundary, real_roots_merged, direction_unbounded, cap_reached };

inline const char* to_string(StepEvent e) {
  switch (e) {
    case StepEvent::root_hit_boundary: return "root-hit-boundary";
    case StepEvent::real_roots_merged: return "real-roots-merged";
    case StepEvent::direction_unbounded: return "direction-unbounded";
    case StepEvent::cap_reached: return "cap-reached";
  }
  return "?";
}

struct StepResult {
  double epsilon = 0.0;
  StepEvent event = StepEvent::root_hit_boundary;
};

namespace detail {

struct Endpoint {
  double epsilon = 0.0;
  bool unbounded = false;
};

/**
 * sup { eps in [0, cap] : stable(eps) } assuming stable(0), by doubling from `initial` and then
 * bisection to relative width 1e-10.
 */
template <typename Stable>
Endpoint stability_endpoint(Stable&& stable, double initial, double cap) {
  Endpoint e;
  double lo = 0.0, hi = std::min(initial, cap);
  while (stable(hi)) {
    lo = hi;
    if (hi >= cap) {
      e.epsilon = cap;
      e.unbounded = true;
      return e;
    }
    hi = std::min(2.0 * hi, cap);
  }
  while (hi - lo > 1e-10 * hi) {
    if (lo == 0.0 && hi < 1e-15 * initial) break;
    const double mid = 0.5 * (lo + hi);
    if (stable(mid))
      lo = mid;
    else
      hi = mid;
  }
  e.epsilon = lo;
  return e;
}

inline Poly shifted(const Poly& z, std::span<const Complex> dz, double eps) {
  CVector v = z.z();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += eps * dz[i];
  return Poly(std::move(v));
}

}  // namespace detail

/**
 * Largest eps in [0, cap] with z + eps * dz stable, located by doubling and bisection. The event is
 * read from the profiles at 0 and at the endpoint, re-clustered with a 1e3-fold radius.
 */
inline StepResult max_stable_step(const Poly& z, std::span<const Complex> dz, const Slice& s, const HalfPlane& h,
                                  double cap = 1e8, const Tolerances& tol = {}) {
  if (dz.size() != z.degree() || z.degree() != s.n()) throw DimensionMismatch("max_stable_step: dimension mismatch");
  StepResult r;
  if (!is_stable(z, h, tol).stable) return r;
  const double dn = max_abs(CVector(dz.begin(), dz.end()));
  if (dn == 0.0) {
    r.epsilon = cap;
    r.event = StepEvent::direction_unbounded;
    return r;
  }
  auto stable = [&](double eps) { return is_stable(detail::shifted(z, dz, eps), h, tol).stable; };
  const double initial = 1e-3 * (1.0 + max_abs(z.z())) / dn;
  const auto e = detail::stability_endpoint(stable, initial, cap);
  r.epsilon = e.epsilon;
  if (e.unbounded) {
    r.event = StepEvent::direction_unbounded;
    return r;
  }
  const auto before = is_stable(z, h, tol).witness;
  const Poly end = detail::shifted(z, dz, e.epsilon);
  const auto roots_end = find_roots(end);
  Tolerances wide = tol;
  const double scale0 = max_abs(before), scale1 = max_abs(roots_end);
  wide.cluster_radius = 1e3 * tol.cluster_radius_for(std::max(scale0, scale1));
  const auto p0 = cluster_poly_roots(z, before, h, wide);
  const auto p1 = cluster_poly_roots(end, roots_end, h, wide);
  if (p1.interior_total() < p0.interior_total())
    r.event = StepEvent::root_hit_boundary;
  else if (p1.boundary_distinct() < p0.boundary_distinct())
    r.event = StepEvent::real_roots_merged;
  else
    r.event = p0.interior_total() > 0 ? StepEvent::root_hit_boundary : StepEvent::real_roots_merged;
  return r;
}

// ------------------------------------------------------------------------------------------------
// Section sampling
// ------------------------------------------------------------------------------------------------

struct Window {
  double x_min = -1, x_max = 1, y_min = -1, y_max = 1;
};

struct SliceGrid {
  RVector xs, ys;                       ///< node coordinates, endpoints included
  std::vector<std::vector<char>> member;  ///< member[j][i] at (xs[i], ys[j])
};

namespace detail {

// Unit vector of real chart axis `axis` of R^{2n}: even -> Re z_{axis/2+1}, odd -> Im.
inline CVector chart_unit(std::size_t n, std::size_t axis) {
  CVector u(n, Complex{});
  u[axis / 2] = (axis % 2 == 0) ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
  return u;
}

}  // namespace detail

/**
 * Membership grid of the slice over two real chart axes. The remaining coordinates come from
 * `base` (default: the minimum-norm solution of L z = a) and both axes must lie in ker L.
 * Grid nodes include the window corners; row j is y = ys[j].
 */
inline SliceGrid sample_slice_section(const Slice& s, const HalfPlane& h, std::array<std::size_t, 2> axes, const Window& w,
                                      std::array<std::size_t, 2> resolution, const Tolerances& tol = {},
                                      std::optional<CVector> base = std::nullopt) {
  const std::size_t n = s.n();
  if (axes[0] >= 2 * n || axes[1] >= 2 * n || axes[0] == axes[1]) throw DimensionMismatch("sample_slice_section: invalid chart axes");
  if (resolution[0] == 0 || resolution[1] == 0) throw ValidationError("sample_slice_section: resolution must be positive");
  if (!(w.x_max >= w.x_min) || !(w.y_max >= w.y_min)) throw ValidationError("sample_slice_section: empty window");
  const double lscale = s.L().size() ? s.L().cwiseAbs().maxCoeff() : 0.0;
  for (auto ax : axes) {
    const CVector lu = s.apply(detail::chart_unit(n, ax));
    if (max_abs(lu) > 1e-12 * (1.0 + lscale)) throw ValidationError("sample_slice_section: chart axis not in the kernel of L");
  }
  CVector z0;
  if (base) {
    if (base->size() != n) throw DimensionMismatch("sample_slice_section: base point dimension");
    z0 = *base;
  } else {
    CColumn rhs(static_cast<Eigen::Index>(s.k()));
    for (std::size_t i = 0; i < s.k(); ++i) rhs(static_cast<Eigen::Index>(i)) = s.a()[i];
    const CColumn sol = s.k() ? min_norm_solve(s.L(), rhs) : CColumn(CColumn::Zero(static_cast<Eigen::Index>(n)));
    z0.assign(sol.data(), sol.data() + sol.size());
  }

  SliceGrid g;
  auto nodes = [](double lo, double hi, std::size_t count) {
    RVector v(count);
    for (std::size_t i = 0; i < count; ++i)
      v[i] = count == 1 ? lo : (i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
    return v;
  };
  g.xs = nodes(w.x_min, w.x_max, resolution[0]);
  g.ys = nodes(w.y_min, w.y_max, resolution[1]);
  g.member.assign(resolution[1], std::vector<char>(resolution[0], 0));

  auto set_axis = [](CVector& z, std::size_t axis, double v) {
    Complex& c = z[axis / 2];
    c = (axis % 2 == 0) ? Complex(v, c.imag()) : Complex(c.real(), v);
  };
  parallel_for(resolution[1], [&](std::size_t j) {
    for (std::size_t i = 0; i < resolution[0]; ++i) {
      CVector z = z0;
      set_axis(z, axes[0], g.xs[i]);
      set_axis(z, axes[1], g.ys[j]);
      g.member[j][i] = slice_contains(s, Poly(std::move(z)), h, tol) ? 1 : 0;
    }
  });
  return g;
}

}  // namespace stable_slices
