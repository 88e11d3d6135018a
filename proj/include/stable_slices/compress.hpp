#pragma once

/**
 * @file compress.hpp
 * @brief Descent inside a stable slice towards points with few interior roots and few distinct
 *        boundary roots.
 *
 * The current point is held as a list of root atoms with exact multiplicities (interior roots,
 * boundary roots, and for real Hurwitz slices conjugate pairs and imaginary-axis pairs). Each
 * iteration tries, in order:
 *
 *   1. an interior step  (p + eps h) r   along a kernel direction of the constraints,
 *   2. a boundary step   (q + eps h) s   with q the product of the simple boundary roots,
 *   3. a stratum descent: with the multiplicity pattern frozen, move the atoms inside the slice
 *      until one slack (distance of an interior root to the boundary, or gap between two
 *      boundary roots) vanishes.
 *
 * A step is accepted only if (interior_total, boundary_distinct) decreases lexicographically and the
 * new point passes the numerical membership test. After every step the atoms are corrected by
 * Gauss-Newton so that L z = a holds to rounding.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "poly_core.hpp"
#include "regions.hpp"
#include "slices.hpp"
#include "stability.hpp"

namespace stable_slices {

enum class CompressionStatus { converged, cap_reached, stalled };

inline const char* to_string(CompressionStatus s) {
  switch (s) {
    case CompressionStatus::converged: return "converged";
    case CompressionStatus::cap_reached: return "cap-reached";
    case CompressionStatus::stalled: return "stalled";
  }
  return "?";
}

struct CompressionStep {
  CVector direction;  ///< change of z per unit step, slice coordinates
  double step_size = 0.0;
  StepEvent event = StepEvent::root_hit_boundary;
  std::string method;  ///< interior-kernel, boundary-kernel, stratum-descent or cap
  Poly z{CVector{0.0}};
  RootProfile profile;
};

struct CompressionReport {
  std::vector<CompressionStep> steps;
  RootProfile initial_profile, final_profile;
  Poly final_z{CVector{0.0}};
  RootMultiset final_roots;
  int iterations = 0;
  CompressionStatus status = CompressionStatus::converged;
  int rank = 0;  ///< rank of the augmented constraints
  int target_interior = 0, target_boundary = 0;
  bool sharpened = false;        ///< constraints fix exactly the leading coordinates
  int origin_multiplicity = 0;   ///< real Hurwitz slices: multiplicity of the root at 0 at the end
};

struct CompressOptions {
  int max_iterations = 0;  ///< 0 means 4n
  bool augment = true;
  bool stratum_descent = true;
  double step_cap = 1e8;
  Tolerances tol;
};

namespace detail {

enum class AtomKind { interior, line, neg_real, conj_pair, axis_pair, origin };

// interior: root w (frame); line: real root w.real(); neg_real: real root w.real() < 0;
// conj_pair: w and conj(w), Im w > 0; axis_pair: +-i w.real(); origin: 0.
struct Atom {
  AtomKind kind = AtomKind::interior;
  Complex w;
  int mult = 1;
};

enum class Geometry { upper, hurwitz };

inline bool interior_kind(AtomKind k) { return k == AtomKind::interior || k == AtomKind::neg_real || k == AtomKind::conj_pair; }

inline int param_count(AtomKind k) {
  switch (k) {
    case AtomKind::interior:
    case AtomKind::conj_pair: return 2;
    case AtomKind::origin: return 0;
    default: return 1;
  }
}

using Atoms = std::vector<Atom>;

// (frame root, multiplicity) pairs of one atom.
inline void append_roots(const Atom& a, std::vector<std::pair<Complex, int>>& out) {
  switch (a.kind) {
    case AtomKind::interior: out.emplace_back(a.w, 1); break;
    case AtomKind::line: out.emplace_back(Complex(a.w.real(), 0.0), a.mult); break;
    case AtomKind::neg_real: out.emplace_back(Complex(a.w.real(), 0.0), 1); break;
    case AtomKind::conj_pair:
      out.emplace_back(a.w, 1);
      out.emplace_back(std::conj(a.w), 1);
      break;
    case AtomKind::axis_pair:
      out.emplace_back(Complex(0.0, a.w.real()), a.mult);
      out.emplace_back(Complex(0.0, -a.w.real()), a.mult);
      break;
    case AtomKind::origin: out.emplace_back(Complex{}, a.mult); break;
  }
}

inline RootMultiset expand(const std::vector<std::pair<Complex, int>>& rm) {
  RootMultiset x;
  for (const auto& [v, m] : rm)
    for (int j = 0; j < m; ++j) x.push_back(v);
  return x;
}

inline std::pair<int, int> measure(const Atoms& atoms) {
  int interior = 0, boundary = 0;
  for (const auto& a : atoms) switch (a.kind) {
      case AtomKind::interior:
      case AtomKind::neg_real: interior += 1; break;
      case AtomKind::conj_pair: interior += 2; break;
      case AtomKind::line:
      case AtomKind::origin: boundary += 1; break;
      case AtomKind::axis_pair: boundary += 2; break;
    }
  return {interior, boundary};
}

struct Context {
  Slice slice;          // augmented, original coordinates
  Geometry geometry;
  HalfPlane frame;      // upper: original root = frame.from_upper(frame root)
  HalfPlane region;     // stability region in original coordinates
  Tolerances tol;
  double scale = 1.0;   // 1 + max|root| at the start
};

inline Complex to_original(const Context& c, Complex w) { return c.geometry == Geometry::upper ? c.frame.from_upper(w) : w; }

inline std::vector<std::pair<Complex, int>> frame_roots(const Atoms& atoms) {
  std::vector<std::pair<Complex, int>> rm;
  for (const auto& a : atoms) append_roots(a, rm);
  return rm;
}

inline RootMultiset original_roots(const Context& c, const Atoms& atoms) {
  RootMultiset x = expand(frame_roots(atoms));
  for (auto& v : x) v = to_original(c, v);
  return x;
}

inline CVector z_of(const Context& c, const Atoms& atoms) {
  CVector z = elementary_symmetric_values(original_roots(c, atoms));
  if (c.geometry == Geometry::hurwitz)
    for (auto& v : z) v = v.real();
  return z;
}

inline RootProfile structural_profile(const Context& c, const Atoms& atoms) {
  RootProfile p;
  for (const auto& a : atoms) {
    std::vector<std::pair<Complex, int>> rm;
    append_roots(a, rm);
    const Location loc = interior_kind(a.kind) ? Location::interior : Location::boundary;
    for (const auto& [v, m] : rm) p.clusters.push_back({to_original(c, v), m, loc});
  }
  std::sort(p.clusters.begin(), p.clusters.end(), [](const RootCluster& l, const RootCluster& r) {
    if (l.center.real() != r.center.real()) return l.center.real() < r.center.real();
    return l.center.imag() < r.center.imag();
  });
  return p;
}

inline RVector get_params(const Atoms& atoms) {
  RVector th;
  for (const auto& a : atoms) {
    if (param_count(a.kind) >= 1) th.push_back(a.w.real());
    if (param_count(a.kind) == 2) th.push_back(a.w.imag());
  }
  return th;
}

inline Atoms set_params(const Atoms& atoms, const RVector& th) {
  Atoms out = atoms;
  std::size_t o = 0;
  for (auto& a : out) {
    const int pc = param_count(a.kind);
    if (pc == 1) a.w = Complex(th[o], 0.0);
    if (pc == 2) a.w = Complex(th[o], th[o + 1]);
    o += static_cast<std::size_t>(pc);
  }
  return out;
}

inline bool valid_atoms(const Atoms& atoms) {
  for (const auto& a : atoms) {
    if (!is_finite(a.w)) return false;
    switch (a.kind) {
      case AtomKind::interior:
        if (!(a.w.imag() > 0)) return false;
        break;
      case AtomKind::neg_real:
        if (!(a.w.real() < 0)) return false;
        break;
      case AtomKind::conj_pair:
        if (!(a.w.real() < 0 && a.w.imag() > 0)) return false;
        break;
      case AtomKind::axis_pair:
        if (!(a.w.real() > 0)) return false;
        break;
      default: break;
    }
  }
  return true;
}

// d z / d x for moving all mult copies of the original root x together: mult * e_{k-1}(rest).
inline CVector root_derivative(const RootMultiset& all, Complex x, int mult) {
  RootMultiset rest;
  rest.reserve(all.size());
  bool removed = false;
  for (const auto& v : all) {
    if (!removed && v == x) {
      removed = true;
      continue;
    }
    rest.push_back(v);
  }
  const CVector e = elementary_symmetric_values(rest);
  CVector d(all.size());
  d[0] = static_cast<double>(mult);
  for (std::size_t k = 1; k < all.size(); ++k) d[k] = static_cast<double>(mult) * e[k - 1];
  return d;
}

// Complex n x D matrix d z / d theta.
inline CMatrix z_jacobian(const Context& c, const Atoms& atoms) {
  const RootMultiset all = original_roots(c, atoms);
  const std::size_t n = all.size();
  std::size_t D = 0;
  for (const auto& a : atoms) D += static_cast<std::size_t>(param_count(a.kind));
  CMatrix J = CMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D));
  const Complex rho = c.geometry == Geometry::upper ? c.frame.rotation() : Complex(1.0, 0.0);
  const Complex I{0.0, 1.0};
  auto put = [&](Eigen::Index col, const CVector& v, Complex f) {
    for (std::size_t k = 0; k < n; ++k) J(static_cast<Eigen::Index>(k), col) += f * v[k];
  };
  Eigen::Index col = 0;
  for (const auto& a : atoms) {
    switch (a.kind) {
      case AtomKind::interior: {
        const CVector d = root_derivative(all, to_original(c, a.w), 1);
        put(col, d, rho);
        put(col + 1, d, I * rho);
        break;
      }
      case AtomKind::line: put(col, root_derivative(all, to_original(c, Complex(a.w.real(), 0.0)), a.mult), rho); break;
      case AtomKind::neg_real: put(col, root_derivative(all, Complex(a.w.real(), 0.0), 1), 1.0); break;
      case AtomKind::conj_pair: {
        const CVector d1 = root_derivative(all, a.w, 1), d2 = root_derivative(all, std::conj(a.w), 1);
        put(col, d1, 1.0);
        put(col, d2, 1.0);
        put(col + 1, d1, I);
        put(col + 1, d2, -I);
        break;
      }
      case AtomKind::axis_pair: {
        const double y = a.w.real();
        put(col, root_derivative(all, Complex(0.0, y), a.mult), I);
        put(col, root_derivative(all, Complex(0.0, -y), a.mult), -I);
        break;
      }
      case AtomKind::origin: break;
    }
    col += param_count(a.kind);
  }
  return J;
}

inline RColumn constraint_residual(const Context& c, const Atoms& atoms) {
  const CVector z = z_of(c, atoms);
  const CVector lz = c.slice.apply(z);
  const std::size_t k = c.slice.k();
  RColumn F(static_cast<Eigen::Index>(2 * k));
  for (std::size_t i = 0; i < k; ++i) {
    const Complex r = lz[i] - c.slice.a()[i];
    F(static_cast<Eigen::Index>(i)) = r.real();
    F(static_cast<Eigen::Index>(k + i)) = r.imag();
  }
  return F;
}

inline RMatrix constraint_jacobian(const Context& c, const Atoms& atoms) {
  const CMatrix LZ = c.slice.L() * z_jacobian(c, atoms);
  RMatrix J(2 * LZ.rows(), LZ.cols());
  J.topRows(LZ.rows()) = LZ.real();
  J.bottomRows(LZ.rows()) = LZ.imag();
  return J;
}

inline RColumn to_column(const RVector& v) { return Eigen::Map<const RColumn>(v.data(), static_cast<Eigen::Index>(v.size())); }
inline RVector to_vector(const RColumn& v) { return RVector(v.data(), v.data() + v.size()); }

/// Gauss-Newton with minimum-norm steps on L z(theta) = a. True when the residual ends within `accept`.
inline bool restore_constraints(const Context& c, Atoms& atoms, double accept) {
  if (c.slice.k() == 0) return true;
  const double floor = c.slice.linear_tolerance(1e-15);
  double res = constraint_residual(c, atoms).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < 40 && res > floor; ++it) {
    const RColumn F = constraint_residual(c, atoms);
    const RMatrix J = constraint_jacobian(c, atoms);
    if (J.cols() == 0) break;
    const RColumn step = min_norm_solve(J, RColumn(-F));
    const RVector th = get_params(atoms);
    bool improved = false;
    for (double alpha = 1.0; alpha > 1e-6; alpha *= 0.5) {
      RVector trial_th = th;
      for (std::size_t i = 0; i < th.size(); ++i) trial_th[i] += alpha * step(static_cast<Eigen::Index>(i));
      Atoms trial = set_params(atoms, trial_th);
      if (!valid_atoms(trial)) continue;
      const double r = constraint_residual(c, trial).lpNorm<Eigen::Infinity>();
      if (r < res) {
        atoms = std::move(trial);
        improved = res - r > 1e-3 * res;
        res = r;
        break;
      }
    }
    if (!improved) break;
  }
  return res <= accept;
}

// Merge boundary atoms that coincide within `radius` (frame coordinates).
inline void merge_boundary(Atoms& atoms, double radius) {
  for (bool again = true; again;) {
    again = false;
    for (std::size_t i = 0; i < atoms.size() && !again; ++i)
      for (std::size_t j = i + 1; j < atoms.size() && !again; ++j) {
        Atom& a = atoms[i];
        const Atom& b = atoms[j];
        if (a.kind != b.kind) continue;
        if (a.kind == AtomKind::origin) {
          a.mult += b.mult;
        } else if ((a.kind == AtomKind::line || a.kind == AtomKind::axis_pair) && std::abs(a.w.real() - b.w.real()) <= radius) {
          const double t = (a.w.real() * a.mult + b.w.real() * b.mult) / (a.mult + b.mult);
          a.w = Complex(t, 0.0);
          a.mult += b.mult;
        } else {
          continue;
        }
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(j));
        again = true;
      }
  }
}

inline bool lex_less(std::pair<int, int> a, std::pair<int, int> b) {
  return a.first < b.first || (a.first == b.first && a.second < b.second);
}

// Raw perturbation of the frame polynomial -> Vieta direction in original coordinates.
inline CVector frame_to_slice(const Context& c, std::span<const Complex> raw) {
  if (c.geometry == Geometry::hurwitz) return signed_direction(raw);
  const std::size_t n = raw.size();
  const Complex rho = c.frame.rotation();
  CVector full(n + 1, Complex{});
  std::copy(raw.begin(), raw.end(), full.begin() + 1);
  CVector orig = compose_affine(full, 1.0 / rho, -c.frame.base() / rho);
  const Complex lead = std::pow(rho, static_cast<double>(n));
  for (auto& v : orig) v *= lead;
  return signed_direction(std::span<const Complex>(orig).subspan(1));
}

inline CVector expand_raw(const RootMultiset& x) {
  CVector raw{1.0};
  for (const auto& v : x) raw = multiply(raw, CVector{1.0, -v});
  return raw;
}

// Real roots and upper members of conjugate pairs among the roots of a real polynomial. An upper
// root is paired with the nearest unused lower root when that partner mirrors it to within half its
// imaginary part; unpaired roots are read as real.
inline std::optional<std::pair<RVector, CVector>> pair_conjugates(const RootMultiset& roots, double btol) {
  std::vector<std::size_t> upper, lower;
  RVector reals;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (roots[i].imag() > btol)
      upper.push_back(i);
    else if (roots[i].imag() < -btol)
      lower.push_back(i);
    else
      reals.push_back(roots[i].real());
  }
  std::sort(upper.begin(), upper.end(), [&](std::size_t l, std::size_t r) { return roots[l].imag() > roots[r].imag(); });
  std::vector<char> used(roots.size(), 0);
  CVector pairs;
  for (std::size_t u : upper) {
    std::size_t best = roots.size();
    double dist = std::numeric_limits<double>::infinity();
    for (std::size_t l : lower)
      if (!used[l] && std::abs(roots[u] - std::conj(roots[l])) < dist) {
        dist = std::abs(roots[u] - std::conj(roots[l]));
        best = l;
      }
    if (best < roots.size() && dist <= 0.5 * roots[u].imag()) {
      used[best] = 1;
      pairs.push_back(0.5 * (roots[u] + std::conj(roots[best])));
    } else {
      reals.push_back(roots[u].real());
    }
  }
  for (std::size_t l : lower)
    if (!used[l]) {
      if (-roots[l].imag() > 1e-4 * (1.0 + std::abs(roots[l]))) return std::nullopt;
      reals.push_back(roots[l].real());
    }
  std::sort(reals.begin(), reals.end());
  std::sort(pairs.begin(), pairs.end(), [](Complex l, Complex r) { return l.real() < r.real() || (l.real() == r.real() && l.imag() < r.imag()); });
  return std::make_pair(reals, pairs);
}

struct Candidate {
  Atoms atoms;
  CVector direction;
  double step = 0.0;
  StepEvent event = StepEvent::root_hit_boundary;
  std::string method;
};

class Engine {
 public:
  Engine(Context ctx, Atoms atoms, std::pair<int, int> target, const CompressOptions& opts)
      : c_(std::move(ctx)), atoms_(std::move(atoms)), target_(target), opts_(opts) {}

  const Atoms& atoms() const { return atoms_; }
  const Context& context() const { return c_; }

  bool done() const {
    const auto m = measure(atoms_);
    return m.first <= target_.first && m.second <= target_.second;
  }

  std::optional<Candidate> step() {
    const auto m = measure(atoms_);
    if (m.first > target_.first)
      if (auto r = accept(interior_step())) return r;
    if (m.second > target_.second)
      if (auto r = accept(boundary_step())) return r;
    if (opts_.stratum_descent) return stratum_descent(m.first > target_.first);
    return std::nullopt;
  }

  void commit(const Candidate& cand) { atoms_ = cand.atoms; }

 private:
  double radius() const { return c_.tol.cluster_radius_for(c_.scale); }
  double boundary_tol() const { return c_.tol.boundary_for(c_.scale); }
  double accept_tol() const { return c_.slice.linear_tolerance(1e-11); }

  // Post-processing shared by all moves: constraint restoration, measure and membership checks.
  std::optional<Candidate> accept(std::optional<Candidate> cand) {
    if (!cand) return std::nullopt;
    merge_boundary(cand->atoms, radius());
    if (!valid_atoms(cand->atoms)) return std::nullopt;
    if (!restore_constraints(c_, cand->atoms, accept_tol())) return std::nullopt;
    if (!lex_less(measure(cand->atoms), measure(atoms_))) return std::nullopt;
    const Poly z(z_of(c_, cand->atoms));
    const SliceCheck chk = check_slice(c_.slice, z, c_.region, c_.tol);
    if (!chk.member) return std::nullopt;
    return cand;
  }

  // Frame-region stability of a small polynomial.
  bool small_stable(const CVector& raw, bool boundary_structure) const {
    const Poly p = Poly::from_raw(raw);
    try {
      if (c_.geometry == Geometry::upper) return is_stable(p, HalfPlane::upper()).stable;
      if (!boundary_structure) return is_stable(p, HalfPlane::left()).stable;
      return is_stable(hurwitz_embed(p), HalfPlane::upper()).stable;
    } catch (const NumericalError&) {
      return false;
    }
  }

  // Shared endpoint search for p + sigma eps h. Returns (sigma, eps) or nothing.
  std::optional<std::pair<double, double>> endpoint(const CVector& p_raw, const CVector& b, bool boundary_structure) const {
    std::optional<std::pair<double, double>> best;
    for (double sigma : {1.0, -1.0}) {
      auto stable = [&](double eps) {
        CVector r = p_raw;
        for (std::size_t i = 0; i < b.size(); ++i) r[i + 1] += sigma * eps * b[i];
        return small_stable(r, boundary_structure);
      };
      const double initial = 1e-3 * (1.0 + max_abs(p_raw));
      const Endpoint e = stability_endpoint(stable, initial, opts_.step_cap);
      if (e.unbounded || !(e.epsilon > 0)) continue;
      if (!best || e.epsilon < best->second) best = std::make_pair(sigma, e.epsilon);
    }
    return best;
  }

  static CVector perturbed(const CVector& p_raw, const CVector& b, double sigma, double eps) {
    CVector r = p_raw;
    for (std::size_t i = 0; i < b.size(); ++i) r[i + 1] += sigma * eps * b[i];
    return r;
  }

  std::optional<Candidate> interior_step() const {
    std::vector<std::pair<Complex, int>> in_r, bd_r;
    Atoms keep;
    for (const auto& a : atoms_) {
      if (interior_kind(a.kind)) {
        append_roots(a, in_r);
      } else {
        append_roots(a, bd_r);
        keep.push_back(a);
      }
    }
    const RootMultiset p_roots = expand(in_r);
    const std::size_t m = p_roots.size();
    if (m == 0) return std::nullopt;
    CVector p_raw = expand_raw(p_roots);
    CVector r_raw = expand_raw(expand(bd_r));
    if (c_.geometry == Geometry::hurwitz) {
      for (auto& v : p_raw) v = v.real();
      for (auto& v : r_raw) v = v.real();
    }
    const auto mode = c_.geometry == Geometry::upper ? KernelMode::complex : KernelMode::real;
    const auto kd = kernel_direction_impl(c_.slice.L(), r_raw, m, mode, {}, [&](std::span<const Complex> raw) { return frame_to_slice(c_, raw); });
    if (!kd) return std::nullopt;
    const auto ep = endpoint(p_raw, kd->b, false);
    if (!ep) return std::nullopt;
    const auto [sigma, eps] = *ep;
    RootMultiset roots;
    try {
      roots = find_roots_raw(perturbed(p_raw, kd->b, sigma, eps));
    } catch (const NumericalError&) {
      return std::nullopt;
    }
    Candidate cand;
    cand.atoms = keep;
    const double btol = boundary_tol();
    if (c_.geometry == Geometry::upper) {
      std::size_t low = 0;
      for (std::size_t i = 1; i < roots.size(); ++i)
        if (roots[i].imag() < roots[low].imag()) low = i;
      for (std::size_t i = 0; i < roots.size(); ++i) {
        if (i == low || roots[i].imag() <= btol)
          cand.atoms.push_back({AtomKind::line, Complex(roots[i].real(), 0.0), 1});
        else
          cand.atoms.push_back({AtomKind::interior, roots[i], 1});
      }
    } else {
      auto split = split_real_roots(roots, btol);
      if (!split) return std::nullopt;
      auto& [reals, pairs] = *split;
      // The root closest to the axis lands on it.
      double best = -std::numeric_limits<double>::infinity();
      int which = -1;  // 0 real, 1 pair
      std::size_t idx = 0;
      for (std::size_t i = 0; i < reals.size(); ++i)
        if (reals[i] > best) best = reals[i], which = 0, idx = i;
      for (std::size_t i = 0; i < pairs.size(); ++i)
        if (pairs[i].real() > best) best = pairs[i].real(), which = 1, idx = i;
      for (std::size_t i = 0; i < reals.size(); ++i) {
        if ((which == 0 && i == idx) || std::abs(reals[i]) <= btol)
          cand.atoms.push_back({AtomKind::origin, Complex{}, 1});
        else
          cand.atoms.push_back({AtomKind::neg_real, Complex(reals[i], 0.0), 1});
      }
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if ((which == 1 && i == idx) || std::abs(pairs[i].real()) <= btol)
          cand.atoms.push_back({AtomKind::axis_pair, Complex(pairs[i].imag(), 0.0), 1});
        else
          cand.atoms.push_back({AtomKind::conj_pair, pairs[i], 1});
      }
    }
    cand.direction = kd->dz;
    for (auto& v : cand.direction) v *= sigma;
    cand.step = eps;
    cand.event = StepEvent::root_hit_boundary;
    cand.method = "interior-kernel";
    return cand;
  }

  static std::optional<std::pair<RVector, CVector>> split_real_roots(const RootMultiset& roots, double btol) {
    return pair_conjugates(roots, btol);
  }

  std::optional<Candidate> boundary_step() const {
    std::vector<std::pair<Complex, int>> q_r, s_r;
    Atoms keep;
    std::vector<std::size_t> simple;
    for (const auto& a : atoms_) {
      const bool is_simple_boundary = !interior_kind(a.kind) && a.mult == 1;
      if (is_simple_boundary)
        append_roots(a, q_r);
      else {
        append_roots(a, s_r);
        keep.push_back(a);
      }
    }
    const RootMultiset q_roots = expand(q_r);
    const std::size_t m = q_roots.size();
    if (m < 2) return std::nullopt;
    CVector q_raw = expand_raw(q_roots), s_raw = expand_raw(expand(s_r));
    for (auto& v : q_raw) v = v.real();
    if (c_.geometry == Geometry::hurwitz)
      for (auto& v : s_raw) v = v.real();
    auto map = [&](std::span<const Complex> raw) { return frame_to_slice(c_, raw); };
    const auto kd = c_.geometry == Geometry::upper
                        ? kernel_direction_impl(c_.slice.L(), s_raw, m, KernelMode::real, {}, map)
                        : kernel_direction_impl(c_.slice.L(), s_raw, m, KernelMode::real, hurwitz_free_indices(m), map);
    if (!kd) return std::nullopt;
    const auto ep = endpoint(q_raw, kd->b, true);
    if (!ep) return std::nullopt;
    const auto [sigma, eps] = *ep;
    RootMultiset roots;
    try {
      roots = find_roots_raw(perturbed(q_raw, kd->b, sigma, eps));
    } catch (const NumericalError&) {
      return std::nullopt;
    }
    Candidate cand;
    cand.atoms = keep;
    if (c_.geometry == Geometry::upper) {
      RVector t;
      for (const auto& r : roots) t.push_back(r.real());
      std::sort(t.begin(), t.end());
      std::size_t j = 0;
      for (std::size_t i = 1; i + 1 < t.size(); ++i)
        if (t[i + 1] - t[i] < t[j + 1] - t[j]) j = i;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i == j) {
          cand.atoms.push_back({AtomKind::line, Complex(0.5 * (t[i] + t[i + 1]), 0.0), 2});
          ++i;
        } else {
          cand.atoms.push_back({AtomKind::line, Complex(t[i], 0.0), 1});
        }
      }
    } else {
      // Roots are +-i y (and 0 when m is odd).
      RVector ys;
      for (const auto& r : roots) ys.push_back(r.imag());
      std::sort(ys.begin(), ys.end());
      const std::size_t pairs = m / 2;
      RVector pos(ys.end() - static_cast<std::ptrdiff_t>(pairs), ys.end());
      for (auto& y : pos) y = std::abs(y);
      std::sort(pos.begin(), pos.end());
      const bool has_origin = m % 2 == 1;
      // Candidate collisions: adjacent positive values, or the smallest one reaching 0.
      double best = has_origin ? pos[0] : 2.0 * pos[0];
      int merge = -1;  // -1: smallest pair to the origin
      for (std::size_t i = 0; i + 1 < pos.size(); ++i)
        if (pos[i + 1] - pos[i] < best) best = pos[i + 1] - pos[i], merge = static_cast<int>(i);
      int origin_mult = has_origin ? 1 : 0;
      for (std::size_t i = 0; i < pos.size(); ++i) {
        if (merge < 0 && i == 0) {
          origin_mult += 2;
        } else if (merge >= 0 && static_cast<int>(i) == merge) {
          cand.atoms.push_back({AtomKind::axis_pair, Complex(0.5 * (pos[i] + pos[i + 1]), 0.0), 2});
          ++i;
        } else {
          cand.atoms.push_back({AtomKind::axis_pair, Complex(pos[i], 0.0), 1});
        }
      }
      if (origin_mult > 0) cand.atoms.push_back({AtomKind::origin, Complex{}, origin_mult});
    }
    cand.direction = kd->dz;
    for (auto& v : cand.direction) v *= sigma;
    cand.step = eps;
    cand.event = StepEvent::real_roots_merged;
    cand.method = "boundary-kernel";
    return cand;
  }

  // ---------------------------------------------------------------------------------------------
  // Stratum descent
  // ---------------------------------------------------------------------------------------------

  enum class SlackKind { to_boundary, gap, to_origin };

  struct Slack {
    SlackKind kind;
    std::size_t a = 0, b = 0;  // atom indices (gap: a below b)
  };

  static std::vector<std::size_t> offsets(const Atoms& atoms) {
    std::vector<std::size_t> off;
    std::size_t o = 0;
    for (const auto& a : atoms) {
      off.push_back(o);
      o += static_cast<std::size_t>(param_count(a.kind));
    }
    return off;
  }

  std::vector<Slack> slacks(const Atoms& atoms) const {
    std::vector<Slack> out;
    std::vector<std::size_t> bd;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto k = atoms[i].kind;
      if (interior_kind(k)) out.push_back({SlackKind::to_boundary, i, i});
      if (k == AtomKind::line || k == AtomKind::axis_pair) bd.push_back(i);
    }
    std::sort(bd.begin(), bd.end(), [&](std::size_t l, std::size_t r) { return atoms[l].w.real() < atoms[r].w.real(); });
    for (std::size_t j = 0; j + 1 < bd.size(); ++j) out.push_back({SlackKind::gap, bd[j], bd[j + 1]});
    if (c_.geometry == Geometry::hurwitz && !bd.empty()) out.push_back({SlackKind::to_origin, bd[0], bd[0]});
    return out;
  }

  static double slack_value(const Atoms& atoms, const Slack& s) {
    const Atom& a = atoms[s.a];
    switch (s.kind) {
      case SlackKind::to_boundary:
        if (a.kind == AtomKind::interior) return a.w.imag();
        return -a.w.real();  // neg_real, conj_pair
      case SlackKind::gap: return atoms[s.b].w.real() - a.w.real();
      case SlackKind::to_origin: return a.w.real();
    }
    return 0.0;
  }

  static RColumn slack_gradient(const Atoms& atoms, const Slack& s, std::size_t D) {
    const auto off = offsets(atoms);
    RColumn g = RColumn::Zero(static_cast<Eigen::Index>(D));
    const Atom& a = atoms[s.a];
    switch (s.kind) {
      case SlackKind::to_boundary:
        if (a.kind == AtomKind::interior)
          g(static_cast<Eigen::Index>(off[s.a] + 1)) = 1.0;
        else
          g(static_cast<Eigen::Index>(off[s.a])) = -1.0;
        break;
      case SlackKind::gap:
        g(static_cast<Eigen::Index>(off[s.b])) = 1.0;
        g(static_cast<Eigen::Index>(off[s.a])) = -1.0;
        break;
      case SlackKind::to_origin: g(static_cast<Eigen::Index>(off[s.a])) = 1.0; break;
    }
    return g;
  }

  // Atoms after the slack reached zero.
  Atoms apply_event(Atoms atoms, const Slack& s) const {
    Atom& a = atoms[s.a];
    switch (s.kind) {
      case SlackKind::to_boundary:
        if (a.kind == AtomKind::interior) {
          a = {AtomKind::line, Complex(a.w.real(), 0.0), 1};
        } else if (a.kind == AtomKind::neg_real) {
          a = {AtomKind::origin, Complex{}, 1};
        } else {
          a = {AtomKind::axis_pair, Complex(a.w.imag(), 0.0), 1};
        }
        break;
      case SlackKind::gap: {
        Atom& b = atoms[s.b];
        const double t = (a.w.real() * a.mult + b.w.real() * b.mult) / (a.mult + b.mult);
        a.w = Complex(t, 0.0);
        a.mult += b.mult;
        atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(s.b));
        break;
      }
      case SlackKind::to_origin: a = {AtomKind::origin, Complex{}, 2 * a.mult}; break;
    }
    return atoms;
  }

  static bool slack_decreases_measure(const Slack& s) { return s.kind != SlackKind::to_boundary || true; }

  std::optional<Candidate> stratum_descent(bool interior_first) {
    const auto all = slacks(atoms_);
    std::vector<Slack> order;
    for (int pass = 0; pass < 2; ++pass) {
      const bool want_interior = (pass == 0) == interior_first;
      std::vector<Slack> group;
      for (const auto& s : all)
        if ((s.kind == SlackKind::to_boundary) == want_interior) group.push_back(s);
      std::stable_sort(group.begin(), group.end(), [&](const Slack& l, const Slack& r) {
        return slack_value(atoms_, l) < slack_value(atoms_, r);
      });
      order.insert(order.end(), group.begin(), group.end());
    }
    const CVector z0 = z_of(c_, atoms_);
    for (const auto& s : order) {
      auto moved = descend(s);
      if (!moved) continue;
      Candidate cand;
      cand.atoms = std::move(*moved);
      cand.event = s.kind == SlackKind::to_boundary ? StepEvent::root_hit_boundary : StepEvent::real_roots_merged;
      cand.method = "stratum-descent";
      auto acc = accept(std::move(cand));
      if (!acc) continue;
      const CVector z1 = z_of(c_, acc->atoms);
      acc->direction.resize(z0.size());
      for (std::size_t i = 0; i < z0.size(); ++i) acc->direction[i] = z1[i] - z0[i];
      acc->step = 1.0;
      return acc;
    }
    return std::nullopt;
  }

  // Projected descent of one slack on the constraint manifold of the current stratum.
  std::optional<Atoms> descend(Slack target) const {
    Atoms atoms = atoms_;
    const double snap = 1e-9 * c_.scale;
    const double trust = 0.1 * c_.scale;
    for (int it = 0; it < 400; ++it) {
      const double s = slack_value(atoms, target);
      if (s <= snap) return finish(atoms, target);
      const RMatrix J = constraint_jacobian(c_, atoms);
      const std::size_t D = static_cast<std::size_t>(J.cols());
      const RColumn g = slack_gradient(atoms, target, D);
      RColumn pg = g;
      if (J.rows() > 0 && J.norm() > 0) pg = g - min_norm_solve(J, RColumn(J * g));
      const double pn2 = pg.squaredNorm();
      if (pn2 <= 1e-20 * g.squaredNorm()) return std::nullopt;
      RColumn d = -(s / pn2) * pg;
      double alpha = std::min(1.0, trust / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));
      const RVector th = get_params(atoms);
      bool moved = false;
      for (int half = 0; half < 30; ++half, alpha *= 0.5) {
        RVector t2 = th;
        for (std::size_t i = 0; i < D; ++i) t2[i] += alpha * d(static_cast<Eigen::Index>(i));
        Atoms trial = set_params(atoms, t2);
        if (!valid_atoms(trial)) continue;
        if (!restore_constraints(c_, trial, accept_tol())) continue;
        if (!(slack_value(trial, target) < s)) continue;
        // Another slack crossing zero first becomes the event.
        bool crossed = false;
        for (const auto& o : slacks(trial))
          if (slack_value(trial, o) < 0) crossed = true;
        if (crossed) continue;
        atoms = std::move(trial);
        moved = true;
        break;
      }
      if (!moved) return std::nullopt;
      for (const auto& o : slacks(atoms))
        if (slack_value(atoms, o) <= snap && slack_value(atoms, target) > snap) {
          target = o;
          break;
        }
    }
    return std::nullopt;
  }

  // Drive the slack to exactly zero together with the constraints, then change the stratum.
  std::optional<Atoms> finish(Atoms atoms, const Slack& target) const {
    for (int it = 0; it < 20; ++it) {
      const RMatrix J = constraint_jacobian(c_, atoms);
      const std::size_t D = static_cast<std::size_t>(J.cols());
      RMatrix A(J.rows() + 1, J.cols());
      A.topRows(J.rows()) = J;
      A.row(J.rows()) = slack_gradient(atoms, target, D).transpose();
      RColumn F(J.rows() + 1);
      F.head(J.rows()) = constraint_residual(c_, atoms);
      F(J.rows()) = slack_value(atoms, target);
      if (F.lpNorm<Eigen::Infinity>() <= 1e-15 * c_.scale * (1.0 + max_abs(c_.slice.a()))) break;
      const RColumn step = min_norm_solve(A, RColumn(-F));
      RVector th = get_params(atoms);
      for (std::size_t i = 0; i < D; ++i) th[i] += step(static_cast<Eigen::Index>(i));
      Atoms next = set_params(atoms, th);
      if (!is_finite(Complex(step.norm(), 0.0))) return std::nullopt;
      atoms = std::move(next);
    }
    return apply_event(atoms, target);
  }

  Context c_;
  Atoms atoms_;
  std::pair<int, int> target_;
  CompressOptions opts_;
};

// Atoms of a stable start point from its numerical roots.
inline Atoms initial_atoms(const Context& c, const Poly& z) {
  const RootMultiset x = find_roots(z);
  const auto prof = cluster_poly_roots(z, x, c.region, c.tol);
  if (prof.outside_total() > 0) throw ValidationError("compress: start point is not stable");
  Atoms atoms;
  RootMultiset interior;
  const double btol = c.tol.boundary_for(max_abs(x));
  int count = 0;
  for (const auto& cl : prof.clusters) {
    if (c.geometry == Geometry::upper) {
      const Complex u = c.frame.to_upper(cl.center);
      if (cl.location == Location::interior) {
        for (int j = 0; j < cl.multiplicity; ++j) atoms.push_back({AtomKind::interior, u, 1});
      } else {
        atoms.push_back({AtomKind::line, Complex(u.real(), 0.0), cl.multiplicity});
      }
      count += cl.multiplicity;
      continue;
    }
    const Complex w = cl.center;
    if (cl.location == Location::interior) {
      for (int j = 0; j < cl.multiplicity; ++j) interior.push_back(w);
    } else {
      if (std::abs(w) <= btol) {
        atoms.push_back({AtomKind::origin, Complex{}, cl.multiplicity});
        count += cl.multiplicity;
      } else if (w.imag() > 0) {
        atoms.push_back({AtomKind::axis_pair, Complex(w.imag(), 0.0), cl.multiplicity});
        count += 2 * cl.multiplicity;
      }
    }
  }
  if (!interior.empty()) {
    const auto split = pair_conjugates(interior, btol);
    if (!split) throw NonConvergence("compress: interior roots of the start point are not conjugate-symmetric");
    for (double t : split->first) atoms.push_back({AtomKind::neg_real, Complex(std::min(t, -btol), 0.0), 1});
    for (const auto& p : split->second) atoms.push_back({AtomKind::conj_pair, p, 1});
    count += static_cast<int>(split->first.size() + 2 * split->second.size());
  }
  if (count != static_cast<int>(z.degree())) throw NonConvergence("compress: root structure of the start point is inconsistent");
  return atoms;
}

inline CompressionReport run_compression(const Poly& z, const Slice& s, Geometry geometry, const HalfPlane& frame,
                                         const HalfPlane& region, const CompressOptions& opts) {
  if (z.degree() != s.n()) throw DimensionMismatch("compress: polynomial degree does not match the slice");
  const SliceCheck chk = check_slice(s, z, region, opts.tol);
  if (!chk.member) throw ValidationError("compress: start point is not a slice member");

  const Slice aug = opts.augment ? augment(s, z, opts.tol) : s;
  Context ctx{aug, geometry, frame, region, opts.tol, 1.0 + max_abs(chk.verdict.witness)};

  CompressionReport rep;
  rep.rank = aug.rank();
  const int proj = aug.leading_projection_rank();
  rep.sharpened = proj >= 2;
  rep.target_interior = rep.rank;
  rep.target_boundary = rep.sharpened ? rep.rank : 2 * rep.rank;
  rep.initial_profile = chk.verdict.profile;

  Atoms atoms = initial_atoms(ctx, z);
  const auto start = measure(atoms);
  const int cap = opts.max_iterations > 0 ? opts.max_iterations : 4 * static_cast<int>(z.degree());
  if (start.first <= rep.target_interior && start.second <= rep.target_boundary) {
    rep.final_z = z;
    rep.final_roots = chk.verdict.witness;
    rep.final_profile = chk.verdict.profile;
    rep.status = CompressionStatus::converged;
    for (const auto& a : atoms)
      if (a.kind == AtomKind::origin) rep.origin_multiplicity = a.mult;
    return rep;
  }
  if (!restore_constraints(ctx, atoms, ctx.slice.linear_tolerance(1e-11)))
    throw NonConvergence("compress: could not place the start point on its stratum");

  Engine eng(ctx, atoms, {rep.target_interior, rep.target_boundary}, opts);
  rep.status = CompressionStatus::stalled;
  while (true) {
    if (eng.done()) {
      rep.status = CompressionStatus::converged;
      break;
    }
    if (rep.iterations >= cap) {
      rep.status = CompressionStatus::cap_reached;
      break;
    }
    auto cand = eng.step();
    if (!cand) break;
    eng.commit(*cand);
    ++rep.iterations;
    CompressionStep st;
    st.direction = cand->direction;
    st.step_size = cand->step;
    st.event = cand->event;
    st.method = cand->method;
    st.z = Poly(z_of(ctx, eng.atoms()));
    st.profile = structural_profile(ctx, eng.atoms());
    rep.steps.push_back(std::move(st));
  }
  if (!rep.steps.empty()) {
    rep.final_z = rep.steps.back().z;
  } else {
    rep.final_z = Poly(z_of(ctx, eng.atoms()));
  }
  if (rep.status == CompressionStatus::cap_reached) {
    CompressionStep st;
    st.direction.assign(z.degree(), Complex{});
    st.event = StepEvent::cap_reached;
    st.method = "cap";
    st.z = rep.final_z;
    st.profile = structural_profile(ctx, eng.atoms());
    rep.steps.push_back(std::move(st));
  }
  rep.final_roots = original_roots(ctx, eng.atoms());
  rep.final_profile = structural_profile(ctx, eng.atoms());
  for (const auto& a : eng.atoms())
    if (a.kind == AtomKind::origin) rep.origin_multiplicity = a.mult;
  return rep;
}

}  // namespace detail

/**
 * Compress a member z of the slice, stable with respect to h, towards a point with at most r
 * roots in the interior of h and at most 2r distinct roots on its boundary line, r the rank of
 * the constraints after pinning z_1 and z_2. When the constraints fix exactly the leading
 * coordinates the boundary target is r.
 */
inline CompressionReport compress(const Poly& z, const Slice& s, const HalfPlane& h = HalfPlane::upper(),
                                  const CompressOptions& opts = {}) {
  const Slice cs = s.field() == Field::complex ? s : Slice(s.L(), s.a(), Field::complex);
  return detail::run_compression(z, cs, detail::Geometry::upper, h, h, opts);
}

/**
 * Compression inside a real Hurwitz slice: weakly Hurwitz real members, real constraints. Targets
 * are r roots with negative real part and 2r distinct roots on the imaginary axis; the report
 * records the multiplicity of a root at the origin separately.
 */
inline CompressionReport compress_hurwitz(const Poly& z, const Slice& s, const CompressOptions& opts = {}) {
  if (s.field() != Field::real) throw ValidationError("compress_hurwitz needs a real slice");
  if (!z.is_real()) throw NonRealInput("compress_hurwitz needs a real polynomial");
  return detail::run_compression(z, s, detail::Geometry::hurwitz, HalfPlane::upper(), HalfPlane::left(), opts);
}

}  // namespace stable_slices
