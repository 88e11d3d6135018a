#pragma once

/**
 * @file symmetric.hpp
 * @brief Symmetric polynomials written in the elementary symmetric basis, Grace-Walsh-Szego
 *        coincidence points, coincidence through slice compression and Young-block recursion.
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "compress.hpp"
#include "halfplane.hpp"
#include "poly_core.hpp"
#include "slices.hpp"

namespace stable_slices {

/// Exponent vector of a monomial.
using Exponents = std::vector<int>;

/// Sparse polynomial in a fixed number of variables.
class SparsePoly {
 public:
  SparsePoly() = default;
  explicit SparsePoly(std::size_t vars) : vars_(vars) {}

  std::size_t vars() const { return vars_; }
  const std::map<Exponents, Complex>& terms() const { return terms_; }

  /// Adds c to the coefficient of the monomial; zero results are dropped.
  SparsePoly& add(Exponents e, Complex c) {
    if (e.size() != vars_) throw DimensionMismatch("monomial has " + std::to_string(e.size()) + " exponents, expected " + std::to_string(vars_));
    for (int v : e)
      if (v < 0) throw ValidationError("negative exponent");
    if (!is_finite(c)) throw ValidationError("coefficient must be finite");
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (c != Complex{}) terms_.emplace(std::move(e), c);
    } else {
      it->second += c;
      if (it->second == Complex{}) terms_.erase(it);
    }
    return *this;
  }

  static SparsePoly constant(std::size_t vars, Complex c) { return SparsePoly(vars).add(Exponents(vars, 0), c); }

  /// The variable with 0-based index i.
  static SparsePoly variable(std::size_t vars, std::size_t i) {
    Exponents e(vars, 0);
    e.at(i) = 1;
    return SparsePoly(vars).add(std::move(e), 1.0);
  }

  Complex eval(std::span<const Complex> w) const {
    if (w.size() != vars_) throw DimensionMismatch("evaluation point has the wrong number of variables");
    Complex sum{};
    for (const auto& [e, c] : terms_) {
      Complex t = c;
      for (std::size_t i = 0; i < vars_; ++i)
        if (e[i]) t *= std::pow(w[i], e[i]);
      sum += t;
    }
    return sum;
  }

  /// Sum of |c| * prod |w_i|^{e_i}; the size of the terms that cancel in eval.
  double magnitude(std::span<const Complex> w) const {
    double sum = 0.0;
    for (const auto& [e, c] : terms_) {
      double t = std::abs(c);
      for (std::size_t i = 0; i < vars_; ++i)
        if (e[i]) t *= std::pow(std::abs(w[i]), e[i]);
      sum += t;
    }
    return sum;
  }

  /// Partial derivatives at w.
  CVector gradient(std::span<const Complex> w) const {
    CVector g(vars_, Complex{});
    for (const auto& [e, c] : terms_)
      for (std::size_t j = 0; j < vars_; ++j) {
        if (!e[j]) continue;
        Complex t = c * static_cast<double>(e[j]);
        for (std::size_t i = 0; i < vars_; ++i) {
          const int p = i == j ? e[i] - 1 : e[i];
          if (p) t *= std::pow(w[i], p);
        }
        g[j] += t;
      }
    return g;
  }

  int total_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int v : e) s += v;
      d = std::max(d, s);
    }
    return d;
  }

  /// max over monomials of sum_i (i+1) e_i
  int weighted_degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (std::size_t i = 0; i < e.size(); ++i) s += static_cast<int>(i + 1) * e[i];
      d = std::max(d, s);
    }
    return d;
  }

  /// Coefficient of the monomial (zero when absent).
  Complex coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Complex{} : it->second;
  }

 private:
  std::size_t vars_ = 0;
  std::map<Exponents, Complex> terms_;
};

/**
 * f(X) = g(e_1(X), ..., e_n(X)) for a declared degree d in X. Only Z_1..Z_d may occur and every
 * monomial has weighted degree sum i * e_i <= d.
 */
class SymmetricPoly {
 public:
  SymmetricPoly(std::size_t n, SparsePoly g, int declared_degree) : n_(n), g_(std::move(g)), d_(declared_degree) {
    if (n_ < 1) throw ValidationError("symmetric polynomial needs n >= 1");
    if (g_.vars() != n_) throw DimensionMismatch("g must be a polynomial in Z_1..Z_n");
    if (d_ < 0 || d_ > static_cast<int>(n_)) throw ValidationError("declared degree must lie in [0, n]");
    for (const auto& [e, c] : g_.terms()) {
      int w = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (e[i] && static_cast<int>(i + 1) > d_) throw ValidationError("Z_" + std::to_string(i + 1) + " exceeds the declared degree");
        w += static_cast<int>(i + 1) * e[i];
      }
      if (w > d_) throw ValidationError("monomial of weighted degree " + std::to_string(w) + " exceeds the declared degree " + std::to_string(d_));
    }
  }

  /// c_0 + sum_i c_i e_i. coeffs = (c_0, c_1, ..., c_n); the declared degree is the largest i with c_i != 0.
  static SymmetricPoly affine(const CVector& coeffs) {
    if (coeffs.size() < 2) throw ValidationError("affine symmetric polynomial needs n >= 1");
    const std::size_t n = coeffs.size() - 1;
    SparsePoly g(n);
    g.add(Exponents(n, 0), coeffs[0]);
    int d = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      if (coeffs[i] == Complex{}) continue;
      g.add([&] { Exponents e(n, 0); e[i - 1] = 1; return e; }(), coeffs[i]);
      d = static_cast<int>(i);
    }
    return SymmetricPoly(n, std::move(g), d);
  }

  std::size_t n() const { return n_; }
  const SparsePoly& g() const { return g_; }
  int degree() const { return d_; }

  /// g affine-linear in Z, equivalently f multiaffine.
  bool is_multiaffine() const { return g_.total_degree() <= 1; }

 private:
  std::size_t n_;
  SparsePoly g_;
  int d_;
};

/// gk(l_1(e(X)), ..., l_k(e(X))) with l_j(Z) = sum_i A_{ji} Z_i.
struct SufficientForm {
  CMatrix A;
  SparsePoly gk;

  SufficientForm(CMatrix a, SparsePoly g) : A(std::move(a)), gk(std::move(g)) {
    if (static_cast<std::size_t>(A.rows()) != gk.vars()) throw DimensionMismatch("sufficient form: gk needs one variable per linear form");
    if (A.cols() < 1) throw ValidationError("sufficient form needs n >= 1");
  }

  std::size_t n() const { return static_cast<std::size_t>(A.cols()); }
  std::size_t k() const { return static_cast<std::size_t>(A.rows()); }

  CVector forms(std::span<const Complex> z) const {
    CVector w(k(), Complex{});
    for (std::size_t j = 0; j < k(); ++j)
      for (std::size_t i = 0; i < n(); ++i) w[j] += A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * z[i];
    return w;
  }
};

inline CVector elementary_symmetrics(std::span<const Complex> x) { return elementary_symmetric_values(x); }

inline Complex eval_symmetric(const SymmetricPoly& f, std::span<const Complex> x) {
  if (x.size() != f.n()) throw DimensionMismatch("eval_symmetric: expected " + std::to_string(f.n()) + " coordinates, got " + std::to_string(x.size()));
  return f.g().eval(elementary_symmetric_values(x));
}

inline Complex eval_symmetric(const SufficientForm& f, std::span<const Complex> x) {
  if (x.size() != f.n()) throw DimensionMismatch("eval_symmetric: expected " + std::to_string(f.n()) + " coordinates, got " + std::to_string(x.size()));
  return f.gk.eval(f.forms(elementary_symmetric_values(x)));
}

struct CoordinateProfile {
  int boundary_distinct = 0;
  int interior_count = 0;
  int outside_count = 0;

  /// Membership in H_{k,m}.
  bool within(int k, int m) const { return outside_count == 0 && boundary_distinct <= k && interior_count <= m; }
};

/// Boundary coordinates deduplicated at the cluster radius, interior coordinates counted per index.
inline CoordinateProfile coordinate_profile(std::span<const Complex> x, const HalfPlane& h, const Tolerances& tol = {}) {
  const double scale = max_abs(CVector(x.begin(), x.end()));
  auto loc = [&](Complex v) { return halfplane_contains(h, v, tol.boundary_for(scale)); };
  CoordinateProfile p;
  RootMultiset boundary;
  for (const auto& v : x) {
    switch (loc(v)) {
      case Location::interior: ++p.interior_count; break;
      case Location::outside: ++p.outside_count; break;
      case Location::boundary: boundary.push_back(v); break;
    }
  }
  if (!boundary.empty()) {
    const double r = tol.cluster_radius_for(scale);
    p.boundary_distinct = static_cast<int>(detail::link_clusters(boundary, r, [&](std::size_t i, std::size_t j) {
                                             return std::abs(boundary[i] - boundary[j]) <= r;
                                           }).size());
  }
  return p;
}

// ------------------------------------------------------------------------------------------------
// Grace-Walsh-Szego
// ------------------------------------------------------------------------------------------------

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

inline bool lex_smaller(Complex a, Complex b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); }

// y in h with c_0 + sum c_i binom(n, i) y^i = target, smallest modulus first. `fallback` when every c_i vanishes.
inline Complex gws_root(const CVector& c, Complex target, const HalfPlane& h, Complex fallback, const Tolerances& tol) {
  const std::size_t n = c.size() - 1;
  std::size_t deg = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (c[i] != Complex{}) deg = i;
  if (deg == 0) return fallback;
  CVector raw(deg + 1);
  for (std::size_t i = 0; i <= deg; ++i) raw[deg - i] = c[i] * binomial(n, i);
  raw[deg] -= target;
  const RootMultiset ys = find_roots_raw(raw);
  const double btol = tol.boundary_for(max_abs(ys));
  std::optional<Complex> best;
  for (const auto& y : ys) {
    if (halfplane_contains(h, y, btol) == Location::outside) continue;
    if (!best) {
      best = y;
      continue;
    }
    const double dm = std::abs(y) - std::abs(*best);
    if (dm < -1e-12 * (1.0 + std::abs(y)) || (std::abs(dm) <= 1e-12 * (1.0 + std::abs(y)) && lex_smaller(y, *best))) best = y;
  }
  if (!best) {
    std::string msg = "no root of the coincidence polynomial lies in the half-plane; signed distances:";
    for (const auto& y : ys) msg += " " + std::to_string(h.signed_distance(y));
    throw NoRootInRegion(msg);
  }
  return *best;
}

// Coefficients (c_0, ..., c_n) of an affine g.
inline CVector affine_coefficients(const SymmetricPoly& f) {
  CVector c(f.n() + 1, Complex{});
  c[0] = f.g().coefficient(Exponents(f.n(), 0));
  for (std::size_t i = 0; i < f.n(); ++i) {
    Exponents e(f.n(), 0);
    e[i] = 1;
    c[i + 1] = f.g().coefficient(e);
  }
  return c;
}

}  // namespace detail

/**
 * y in h with f(y, ..., y) = f(x) for multiaffine symmetric f and x in h^n. The root of smallest
 * modulus is returned, ties broken by (Re, Im); constant f returns x_1.
 */
inline Complex gws_solve(const SymmetricPoly& f, std::span<const Complex> x, const HalfPlane& h, const Tolerances& tol = {}) {
  if (!f.is_multiaffine()) throw ValidationError("gws_solve needs a multiaffine polynomial (g affine in Z)");
  if (x.size() != f.n()) throw DimensionMismatch("gws_solve: expected " + std::to_string(f.n()) + " coordinates");
  const double btol = tol.boundary_for(max_abs(CVector(x.begin(), x.end())));
  for (const auto& v : x)
    if (halfplane_contains(h, v, btol) == Location::outside) throw ValidationError("gws_solve: x is not in the half-plane");
  return detail::gws_root(detail::affine_coefficients(f), eval_symmetric(f, x), h, x[0], tol);
}

// ------------------------------------------------------------------------------------------------
// Coincidence through compression
// ------------------------------------------------------------------------------------------------

struct CoincidenceResult {
  RootMultiset x;             ///< the coincidence point
  CompressionReport report;
  Complex value_before, value_after;
  int boundary_bound = 0;     ///< guaranteed bound on distinct boundary coordinates
  int interior_bound = 0;     ///< guaranteed bound on interior coordinates
  bool sharpened = false;     ///< linear forms span exactly e_1..e_k, k >= 2
};

/**
 * A point with few distinct boundary and few interior coordinates and the same value of f,
 * obtained by compressing e(x) inside the slice { l(z) = l(e(x)) }.
 */
inline CoincidenceResult coincide(const SufficientForm& f, std::span<const Complex> x, const HalfPlane& h,
                                  const CompressOptions& opts = {}) {
  if (x.size() != f.n()) throw DimensionMismatch("coincide: expected " + std::to_string(f.n()) + " coordinates");
  const CVector z = elementary_symmetric_values(x);
  const Slice s(f.A, f.forms(z));
  CoincidenceResult out;
  out.value_before = eval_symmetric(f, x);
  out.report = compress(Poly(z), s, h, opts);
  out.x = out.report.iterations == 0 ? RootMultiset(x.begin(), x.end()) : out.report.final_roots;
  out.value_after = eval_symmetric(f, out.x);
  const int k = s.rank();
  out.sharpened = s.leading_projection_rank() >= 2;
  out.boundary_bound = out.sharpened ? k : 2 * (k + 2);
  out.interior_bound = out.sharpened ? k : k + 2;
  return out;
}

// ------------------------------------------------------------------------------------------------
// Young blocks
// ------------------------------------------------------------------------------------------------

/**
 * Multiaffine polynomial invariant under a Young subgroup, written as
 * sum_alpha c_alpha prod_j e_{alpha_j}(block j), with 0 <= alpha_j <= block size.
 */
class BlockForm {
 public:
  BlockForm(std::vector<std::size_t> blocks, std::map<std::vector<int>, Complex> coeffs)
      : blocks_(std::move(blocks)), coeffs_(std::move(coeffs)) {
    if (blocks_.empty()) throw ValidationError("block form needs at least one block");
    for (auto b : blocks_)
      if (b == 0) throw ValidationError("block sizes must be positive");
    for (const auto& [a, c] : coeffs_) {
      if (a.size() != blocks_.size()) throw DimensionMismatch("block exponent has the wrong length");
      for (std::size_t j = 0; j < a.size(); ++j)
        if (a[j] < 0 || a[j] > static_cast<int>(blocks_[j])) throw ValidationError("block exponent out of range");
    }
  }

  /**
   * From a multiaffine polynomial in X given as (sorted variable subset -> coefficient). Throws
   * when the coefficients are not invariant under permutations inside each block.
   */
  static BlockForm from_multiaffine(std::vector<std::size_t> blocks, const std::map<std::vector<std::size_t>, Complex>& terms) {
    std::size_t n = 0;
    std::vector<std::size_t> block_of;
    for (std::size_t j = 0; j < blocks.size(); ++j)
      for (std::size_t i = 0; i < blocks[j]; ++i) block_of.push_back(j);
    n = block_of.size();
    std::map<std::vector<int>, Complex> coeffs;
    std::map<std::vector<int>, std::size_t> seen;
    for (const auto& [subset, c] : terms) {
      std::vector<int> alpha(blocks.size(), 0);
      for (std::size_t i = 0; i < subset.size(); ++i) {
        if (subset[i] >= n) throw DimensionMismatch("variable index out of range");
        if (i > 0 && subset[i] <= subset[i - 1]) throw ValidationError("variable subsets must be strictly increasing");
        ++alpha[block_of[subset[i]]];
      }
      auto it = coeffs.find(alpha);
      if (it == coeffs.end()) {
        coeffs.emplace(alpha, c);
        seen[alpha] = 1;
      } else {
        if (std::abs(it->second - c) > 1e-12 * (1.0 + std::abs(c))) throw ValidationError("polynomial is not invariant under the block permutations");
        ++seen[alpha];
      }
    }
    for (const auto& [alpha, count] : seen) {
      double expected = 1.0;
      for (std::size_t j = 0; j < blocks.size(); ++j) expected *= detail::binomial(blocks[j], static_cast<std::size_t>(alpha[j]));
      if (static_cast<double>(count) != expected) throw ValidationError("polynomial is not invariant under the block permutations");
    }
    return BlockForm(std::move(blocks), std::move(coeffs));
  }

  const std::vector<std::size_t>& blocks() const { return blocks_; }
  const std::map<std::vector<int>, Complex>& coefficients() const { return coeffs_; }
  std::size_t n() const {
    std::size_t n = 0;
    for (auto b : blocks_) n += b;
    return n;
  }

  /// Per-block (1, e_1, ..., e_{i_j}).
  std::vector<CVector> block_symmetrics(std::span<const Complex> x) const {
    if (x.size() != n()) throw DimensionMismatch("block form: expected " + std::to_string(n()) + " coordinates");
    std::vector<CVector> e;
    std::size_t o = 0;
    for (auto b : blocks_) {
      CVector v{1.0};
      const CVector s = elementary_symmetric_values(x.subspan(o, b));
      v.insert(v.end(), s.begin(), s.end());
      e.push_back(std::move(v));
      o += b;
    }
    return e;
  }

  Complex eval(std::span<const Complex> x) const {
    const auto e = block_symmetrics(x);
    Complex sum{};
    for (const auto& [a, c] : coeffs_) {
      Complex t = c;
      for (std::size_t j = 0; j < a.size(); ++j) t *= e[j][static_cast<std::size_t>(a[j])];
      sum += t;
    }
    return sum;
  }

 private:
  std::vector<std::size_t> blocks_;
  std::map<std::vector<int>, Complex> coeffs_;
};

/**
 * One value y_j per block with f(y_1 1_{i_1}, ..., y_kappa 1_{i_kappa}) = f(x). Blocks are
 * processed in order; block j is solved with earlier blocks at their coincidence values and later
 * blocks at x.
 */
inline CVector young_gws(const BlockForm& f, std::span<const Complex> x, const HalfPlane& h, const Tolerances& tol = {}) {
  const std::size_t n = f.n();
  if (x.size() != n) throw DimensionMismatch("young_gws: expected " + std::to_string(n) + " coordinates");
  const double btol = tol.boundary_for(max_abs(CVector(x.begin(), x.end())));
  for (const auto& v : x)
    if (halfplane_contains(h, v, btol) == Location::outside) throw ValidationError("young_gws: x is not in the half-plane");
  RootMultiset cur(x.begin(), x.end());
  const auto& blocks = f.blocks();
  CVector ys;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto e = f.block_symmetrics(cur);
    // f restricted to block j: sum_a C_a e_a(block j).
    CVector c(blocks[j] + 1, Complex{});
    for (const auto& [a, coef] : f.coefficients()) {
      Complex t = coef;
      for (std::size_t l = 0; l < blocks.size(); ++l)
        if (l != j) t *= e[l][static_cast<std::size_t>(a[l])];
      c[static_cast<std::size_t>(a[j])] += t;
    }
    Complex target{};
    for (std::size_t a = 0; a <= blocks[j]; ++a) target += c[a] * e[j][a];
    const Complex y = detail::gws_root(c, target, h, cur[offset], tol);
    for (std::size_t i = 0; i < blocks[j]; ++i) cur[offset + i] = y;
    ys.push_back(y);
    offset += blocks[j];
  }
  return ys;
}

}  // namespace stable_slices
