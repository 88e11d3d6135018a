#pragma once

/**
 * @file degree_principles.hpp
 * @brief Multistart searches on few-distinct-coordinate strata: points of symmetric varieties in
 *        H^n, and infima of real-linear functionals of a symmetric polynomial over the closed
 *        upper half-plane.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "parallel.hpp"
#include "slices.hpp"
#include "symmetric.hpp"

namespace stable_slices {

/// A group of equal coordinates.
struct CoordinateGroup {
  int multiplicity = 1;
  bool boundary = false;  ///< on the boundary line, else anywhere in the closed half-plane
};

/// Coordinate pattern: the groups are the distinct values.
struct Pattern {
  std::vector<CoordinateGroup> groups;

  int parameters() const {
    int p = 0;
    for (const auto& g : groups) p += g.boundary ? 1 : 2;
    return p;
  }

  /// e.g. "2b+1+1": multiplicity, b for a boundary group.
  std::string describe() const {
    std::string s;
    for (const auto& g : groups) {
      if (!s.empty()) s += "+";
      s += std::to_string(g.multiplicity);
      if (g.boundary) s += "b";
    }
    return s;
  }
};

/// At most `values` distinct coordinates anywhere in H.
struct DistinctBudget {
  int values = 1;
};

/// At most k_boundary distinct boundary values and m_interior further coordinates.
struct StratumBound {
  int k_boundary = 0;
  int m_interior = 0;
};

using PatternSpec = std::variant<DistinctBudget, StratumBound>;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Generator of substream `index` of `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(stream)) + index));
}

// Partitions of n into at most `parts` positive parts, non-increasing.
inline void partitions(int n, int parts, int max_part, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (n == 0) {
    out.push_back(cur);
    return;
  }
  if (parts == 0) return;
  for (int p = std::min(n, max_part); p >= 1; --p) {
    cur.push_back(p);
    partitions(n - p, parts - 1, p, cur, out);
    cur.pop_back();
  }
}

inline std::vector<std::vector<int>> partitions(int n, int parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  partitions(n, parts, n, cur, out);
  return out;
}

// Fewer distinct values first, then the more concentrated multiplicities.
inline void order_patterns(std::vector<Pattern>& ps) {
  std::stable_sort(ps.begin(), ps.end(), [](const Pattern& a, const Pattern& b) {
    if (a.groups.size() != b.groups.size()) return a.groups.size() < b.groups.size();
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
      if (a.groups[i].multiplicity != b.groups[i].multiplicity) return a.groups[i].multiplicity > b.groups[i].multiplicity;
      if (a.groups[i].boundary != b.groups[i].boundary) return a.groups[i].boundary;
    }
    return false;
  });
}

// t free singletons followed by boundary groups partitioning n - t, for t <= m.
inline std::vector<Pattern> stratum_patterns(int n, int k, int m) {
  std::vector<Pattern> ps;
  for (int t = 0; t <= std::min(m, n); ++t) {
    const int rest = n - t;
    if (rest > 0 && k == 0) continue;
    for (const auto& part : partitions(rest, k)) {
      Pattern p;
      for (int v : part) p.groups.push_back({v, true});
      for (int i = 0; i < t; ++i) p.groups.push_back({1, false});
      ps.push_back(std::move(p));
    }
  }
  order_patterns(ps);
  return ps;
}

inline std::vector<Pattern> budget_patterns(int n, int r) {
  std::vector<Pattern> ps;
  for (const auto& part : partitions(n, r)) {
    Pattern p;
    for (int v : part) p.groups.push_back({v, false});
    ps.push_back(std::move(p));
  }
  order_patterns(ps);
  return ps;
}

// Group values in the upper frame: boundary groups u = s, free groups u = a + i b^2.
inline std::vector<Complex> pattern_values(const Pattern& p, const std::vector<double>& q) {
  std::vector<Complex> u;
  std::size_t o = 0;
  for (const auto& g : p.groups) {
    if (g.boundary) {
      u.emplace_back(q[o], 0.0);
      o += 1;
    } else {
      u.emplace_back(q[o], q[o + 1] * q[o + 1]);
      o += 2;
    }
  }
  return u;
}

inline RootMultiset expand_pattern(const Pattern& p, const std::vector<Complex>& values) {
  RootMultiset x;
  for (std::size_t i = 0; i < p.groups.size(); ++i)
    for (int j = 0; j < p.groups[i].multiplicity; ++j) x.push_back(values[i]);
  return x;
}

// f(x) and d f / d v_G, where v_G is the common value of group G.
inline void symmetric_jet(const SymmetricPoly& f, const Pattern& p, const std::vector<Complex>& values,
                          Complex& value, std::vector<Complex>& dgroup) {
  const RootMultiset x = expand_pattern(p, values);
  const CVector e = elementary_symmetric_values(x);
  value = f.g().eval(e);
  const CVector dg = f.g().gradient(e);
  dgroup.assign(p.groups.size(), Complex{});
  for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
    RootMultiset rest;
    bool skipped = false;
    for (std::size_t i = 0; i < p.groups.size(); ++i)
      for (int j = 0; j < p.groups[i].multiplicity; ++j) {
        if (i == gi && !skipped) {
          skipped = true;
          continue;
        }
        rest.push_back(values[i]);
      }
    const CVector er = elementary_symmetric_values(rest);
    Complex d = dg[0];
    for (std::size_t k = 1; k < dg.size(); ++k)
      if (dg[k] != Complex{} && k - 1 < er.size()) d += dg[k] * er[k - 1];
    dgroup[gi] = static_cast<double>(p.groups[gi].multiplicity) * d;
  }
}

}  // namespace detail

// ------------------------------------------------------------------------------------------------
// Variety search
// ------------------------------------------------------------------------------------------------

struct VarietySearchOptions {
  std::size_t starts = 256;      ///< multistarts per pattern
  std::uint64_t seed = 0;
  double box_re = 10.0;          ///< |Re u| <= box_re in the upper frame when no bounds are pinned
  double box_im = 10.0;          ///< 0 <= Im u <= box_im
  int max_iterations = 200;      ///< damped Newton iterations per start
  std::size_t batch = 64;
  Tolerances tol{};
};

struct PatternStats {
  Pattern pattern;
  std::size_t starts = 0;
  double best_residual = std::numeric_limits<double>::infinity();
};

struct VarietySearchResult {
  bool found = false;
  RootMultiset x;                  ///< the point when found
  CVector residuals;               ///< f_j(x) recomputed through eval_symmetric
  std::optional<Pattern> pattern;  ///< the pattern that produced x
  std::vector<PatternStats> stats;
  std::size_t total_starts = 0;
  bool empty_by_bounds = false;    ///< the pinned e_1, e_2 admit no stable polynomial
  bool box_from_bounds = false;
  std::string note;
};

namespace detail {

// e_j pinned by a poly of the form alpha Z_j + beta.
inline std::optional<Complex> pinned_value(const SymmetricPoly& f, std::size_t j) {
  const std::size_t n = f.n();
  if (j >= n) return std::nullopt;
  Complex alpha{}, beta{};
  for (const auto& [e, c] : f.g().terms()) {
    int total = 0;
    for (int v : e) total += v;
    if (total == 0)
      beta = c;
    else if (total == 1 && e[j] == 1)
      alpha = c;
    else
      return std::nullopt;
  }
  if (alpha == Complex{}) return std::nullopt;
  return -beta / alpha;
}

struct SearchBox {
  double re_lo, re_hi, im_hi;
};

struct StartOutcome {
  bool valid = false;
  double residual = std::numeric_limits<double>::infinity();
  RootMultiset x;
  CVector values;
};

inline double residual_scale(const SymmetricPoly& f, const RootMultiset& x) {
  return 1.0 + f.g().magnitude(elementary_symmetric_values(x));
}

inline StartOutcome verify_point(const std::vector<SymmetricPoly>& polys, const HalfPlane& h, RootMultiset x, const Tolerances& tol) {
  StartOutcome out;
  out.valid = true;
  out.residual = 0.0;
  for (const auto& f : polys) {
    const Complex v = eval_symmetric(f, x);
    out.values.push_back(v);
    const double r = std::abs(v);
    out.residual = std::max(out.residual, r);
    if (!(r <= 1e-8 * residual_scale(f, x))) out.valid = false;
  }
  const double btol = tol.boundary_for(max_abs(x));
  for (const auto& v : x)
    if (!is_finite(v) || halfplane_contains(h, v, btol) == Location::outside) out.valid = false;
  if (!std::isfinite(out.residual)) out.residual = std::numeric_limits<double>::infinity();
  out.x = std::move(x);
  return out;
}

// Levenberg-Marquardt on the stacked real and imaginary parts of f_j over the pattern parameters.
inline StartOutcome solve_pattern(const std::vector<SymmetricPoly>& polys, const HalfPlane& h, const Pattern& p,
                                  std::vector<double> q, const VarietySearchOptions& opts) {
  const Complex rot = h.rotation();
  const Eigen::Index P = p.parameters();
  const Eigen::Index M = static_cast<Eigen::Index>(2 * polys.size());
  auto to_x = [&](const std::vector<double>& qq) {
    std::vector<Complex> v = pattern_values(p, qq);
    for (auto& w : v) w = h.from_upper(w);
    return v;
  };
  auto evaluate = [&](const std::vector<double>& qq, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    const std::vector<Complex> values = to_x(qq);
    r.resize(M);
    if (J) J->setZero(M, P);
    std::vector<Complex> dgroup;
    for (std::size_t j = 0; j < polys.size(); ++j) {
      Complex v;
      detail::symmetric_jet(polys[j], p, values, v, dgroup);
      r(static_cast<Eigen::Index>(2 * j)) = v.real();
      r(static_cast<Eigen::Index>(2 * j + 1)) = v.imag();
      if (!J) continue;
      Eigen::Index o = 0;
      for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
        const Complex d = dgroup[gi] * rot;
        auto put = [&](Eigen::Index col, Complex du) {
          const Complex c = d * du;
          (*J)(static_cast<Eigen::Index>(2 * j), col) = c.real();
          (*J)(static_cast<Eigen::Index>(2 * j + 1), col) = c.imag();
        };
        if (p.groups[gi].boundary) {
          put(o, 1.0);
          o += 1;
        } else {
          put(o, 1.0);
          put(o + 1, Complex(0.0, 2.0 * qq[static_cast<std::size_t>(o + 1)]));
          o += 2;
        }
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  evaluate(q, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const double limit = 1e8 * (1.0 + opts.box_re + opts.box_im);
  for (int it = 0; it < opts.max_iterations && std::isfinite(cost) && cost > 0.0; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    bool improved = false;
    while (lambda < 1e14) {
      Eigen::MatrixXd A = JtJ;
      for (Eigen::Index i = 0; i < P; ++i) A(i, i) += lambda * (JtJ(i, i) + 1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      std::vector<double> trial = q;
      for (Eigen::Index i = 0; i < P; ++i) trial[static_cast<std::size_t>(i)] += step(i);
      Eigen::VectorXd rt;
      evaluate(trial, rt, nullptr);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        const double rel = (cost - ct) / cost;
        q = std::move(trial);
        cost = ct;
        lambda = std::max(lambda / 3.0, 1e-15);
        improved = rel > 1e-15;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
    double big = 0.0;
    for (double v : q) big = std::max(big, std::abs(v));
    if (!(big < limit)) break;
    evaluate(q, r, &J);
  }
  return verify_point(polys, h, expand_pattern(p, to_x(q)), opts.tol);
}

}  // namespace detail

/**
 * Searches for a point of V(f_1, ..., f_m) in H^n on each coordinate pattern allowed by `spec`,
 * most degenerate patterns first, stopping at the first pattern that yields a point. A negative
 * result only means no start converged; it is not a proof that the intersection is empty.
 */
inline VarietySearchResult variety_search(const std::vector<SymmetricPoly>& polys, const HalfPlane& h, const PatternSpec& spec,
                                          const VarietySearchOptions& opts = {}) {
  if (polys.empty()) throw ValidationError("variety_search needs at least one polynomial");
  const std::size_t n = polys.front().n();
  for (const auto& f : polys)
    if (f.n() != n) throw DimensionMismatch("variety_search: all polynomials must share n");
  if (opts.starts == 0 || opts.batch == 0) throw ValidationError("variety_search needs a positive start budget");
  const int ni = static_cast<int>(n);
  std::vector<Pattern> patterns;
  if (const auto* b = std::get_if<DistinctBudget>(&spec)) {
    if (b->values < 1 || b->values > ni) throw ValidationError("distinct-value budget must lie in [1, n]");
    patterns = detail::budget_patterns(ni, b->values);
  } else {
    const auto& s = std::get<StratumBound>(spec);
    if (s.k_boundary < 0 || s.m_interior < 0 || s.k_boundary > ni || s.m_interior > ni) throw ValidationError("pattern bounds must lie in [0, n]");
    patterns = detail::stratum_patterns(ni, s.k_boundary, s.m_interior);
  }

  VarietySearchResult out;
  detail::SearchBox box{-opts.box_re, opts.box_re, opts.box_im};
  std::optional<Complex> a1, a2;
  for (const auto& f : polys) {
    if (!a1) a1 = detail::pinned_value(f, 0);
    if (!a2) a2 = detail::pinned_value(f, 1);
  }
  if (a1 && a2 && n >= 2) {
    // pinned values in the upper frame of h
    const Complex b = h.base(), c = std::conj(h.rotation());
    const double nn = static_cast<double>(n);
    const Complex u1 = c * (*a1 - nn * b);
    const Complex u2 = c * c * (*a2 - (nn - 1.0) * b * *a1 + 0.5 * nn * (nn - 1.0) * b * b);
    const auto bounds = compactness_bounds(u1, u2, ni);
    if (!bounds) {
      out.empty_by_bounds = true;
      out.note = "the pinned e_1, e_2 admit no polynomial stable for this half-plane";
      return out;
    }
    const double re = std::sqrt(bounds->re_sq_bound);
    box = {-re, re, bounds->im_hi};
    out.box_from_bounds = true;
  }

  for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
    const Pattern& p = patterns[pi];
    PatternStats st{p, 0, std::numeric_limits<double>::infinity()};
    std::optional<detail::StartOutcome> winner;
    for (std::size_t first = 0; first < opts.starts && !winner; first += opts.batch) {
      const std::size_t count = std::min(opts.batch, opts.starts - first);
      std::vector<detail::StartOutcome> results(count);
      parallel_for(count, [&](std::size_t i) {
        auto rng = detail::substream(opts.seed, pi, first + i);
        std::uniform_real_distribution<double> re(box.re_lo, box.re_hi), im(0.0, box.im_hi);
        std::vector<double> q;
        for (const auto& g : p.groups) {
          q.push_back(re(rng));
          if (!g.boundary) q.push_back(std::sqrt(im(rng)));
        }
        results[i] = detail::solve_pattern(polys, h, p, std::move(q), opts);
      });
      st.starts += count;
      for (auto& r : results) {
        st.best_residual = std::min(st.best_residual, r.residual);
        if (r.valid && (!winner || r.residual < winner->residual)) winner = r;
      }
    }
    out.total_starts += st.starts;
    out.stats.push_back(st);
    if (winner) {
      out.found = true;
      out.x = winner->x;
      out.residuals = winner->values;
      out.pattern = p;
      return out;
    }
  }
  out.note = "no start converged on any pattern; this is not a certificate of emptiness";
  return out;
}

// ------------------------------------------------------------------------------------------------
// Half-degree optimization
// ------------------------------------------------------------------------------------------------

struct HalfDegreeOptions {
  std::size_t starts = 24;   ///< multistarts per chart
  std::uint64_t seed = 0;
  double box = 3.0;          ///< starting coordinates in [-box, box] x [0, box]
  int max_iterations = 1000; ///< descent iterations per start
};

struct Infimum {
  bool unbounded = false;
  double value = std::numeric_limits<double>::infinity();
  RootMultiset witness;
};

struct HalfDegreeResult {
  Infimum full;
  Infimum restricted;
  int k = 2;  ///< size of the restricted stratum
};

namespace detail {

// A chart over the closed upper half-plane: real groups carry one parameter, interior groups
// carry (Re, Im) with Im projected to [0, inf).
struct Chart {
  std::vector<CoordinateGroup> groups;  // boundary == real

  std::size_t parameters() const {
    std::size_t p = 0;
    for (const auto& g : groups) p += g.boundary ? 1 : 2;
    return p;
  }

  void project(std::vector<double>& q) const {
    std::size_t o = 0;
    for (const auto& g : groups) {
      if (g.boundary) {
        o += 1;
      } else {
        q[o + 1] = std::max(q[o + 1], 0.0);
        o += 2;
      }
    }
  }

  RootMultiset point(const std::vector<double>& q) const {
    RootMultiset x;
    std::size_t o = 0;
    for (const auto& g : groups) {
      const Complex v = g.boundary ? Complex(q[o], 0.0) : Complex(q[o], q[o + 1]);
      o += g.boundary ? 1 : 2;
      for (int j = 0; j < g.multiplicity; ++j) x.push_back(v);
    }
    return x;
  }
};

struct DescentOutcome {
  bool unbounded = false;
  double value = std::numeric_limits<double>::infinity();
  RootMultiset x;
};

inline DescentOutcome descend(const Chart& chart, const std::function<double(const RootMultiset&)>& phi, std::vector<double> q,
                              int max_iterations) {
  const std::size_t P = q.size();
  chart.project(q);
  auto value = [&](const std::vector<double>& qq) {
    const double v = phi(chart.point(qq));
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  double cur = value(q);
  double t = 1e-2;
  int quiet = 0;
  DescentOutcome out;
  for (int it = 0; it < max_iterations; ++it) {
    if (cur < -1e12) {
      std::vector<double> q2 = q;
      for (auto& v : q2) v *= 2.0;
      chart.project(q2);
      if (value(q2) <= 2.0 * cur) {
        out.unbounded = true;
        out.value = -std::numeric_limits<double>::infinity();
        out.x = chart.point(q);
        return out;
      }
    }
    double scale = 1.0;
    for (double v : q) scale = std::max(scale, 1.0 + std::abs(v));
    const double hstep = 1e-6 * scale;
    std::vector<double> g(P);
    for (std::size_t i = 0; i < P; ++i) {
      std::vector<double> a = q, b = q;
      a[i] += hstep;
      b[i] -= hstep;
      g[i] = (phi(chart.point(a)) - phi(chart.point(b))) / (2.0 * hstep);
    }
    bool accepted = false;
    while (t > 1e-18 * scale) {
      std::vector<double> trial(P);
      for (std::size_t i = 0; i < P; ++i) trial[i] = q[i] - t * g[i];
      chart.project(trial);
      double model = 0.0;
      for (std::size_t i = 0; i < P; ++i) model += g[i] * (q[i] - trial[i]);
      const double vt = value(trial);
      if (vt < cur && cur - vt >= 1e-4 * model) {
        const double dec = cur - vt;
        q = std::move(trial);
        quiet = dec <= 1e-13 * (1.0 + std::abs(vt)) ? quiet + 1 : 0;
        cur = vt;
        t *= 2.0;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || quiet >= 5) break;
  }
  out.value = cur;
  out.x = chart.point(q);
  return out;
}

inline Infimum minimize_over(const std::vector<Chart>& charts, const std::function<double(const RootMultiset&)>& phi,
                             const HalfDegreeOptions& opts, std::uint64_t stream) {
  Infimum best;
  for (std::size_t ci = 0; ci < charts.size(); ++ci) {
    const Chart& chart = charts[ci];
    std::vector<DescentOutcome> results(opts.starts);
    parallel_for(opts.starts, [&](std::size_t i) {
      auto rng = substream(opts.seed, stream * 1000003u + ci, i);
      std::uniform_real_distribution<double> re(-opts.box, opts.box), im(0.0, opts.box);
      std::vector<double> q;
      for (const auto& g : chart.groups) {
        q.push_back(re(rng));
        if (!g.boundary) q.push_back(im(rng));
      }
      results[i] = descend(chart, phi, std::move(q), opts.max_iterations);
    });
    for (const auto& r : results) {
      const bool better = best.witness.empty() || (r.unbounded && !best.unbounded) ||
                          (!r.unbounded && !best.unbounded && r.value < best.value);
      if (better) best = {r.unbounded, r.value, r.x};
    }
  }
  return best;
}

}  // namespace detail

/**
 * Estimates inf lambda Re f + mu Im f over the closed upper half-plane H^n and over the stratum
 * of points with at most k distinct real values and k further coordinates, k = max(floor(d/2), 2).
 * Unbounded is reported when descent passes -1e12 and the value at twice the point at least
 * doubles in magnitude.
 */
inline HalfDegreeResult halfdeg_optimize(const SymmetricPoly& f, double lambda, double mu, const HalfDegreeOptions& opts = {}) {
  if (!std::isfinite(lambda) || !std::isfinite(mu)) throw ValidationError("lambda and mu must be finite");
  if (opts.starts == 0) throw ValidationError("halfdeg_optimize needs a positive start budget");
  const int n = static_cast<int>(f.n());
  HalfDegreeResult out;
  out.k = std::max(f.degree() / 2, 2);
  const std::function<double(const RootMultiset&)> phi = [&](const RootMultiset& x) {
    const Complex v = eval_symmetric(f, x);
    return lambda * v.real() + mu * v.imag();
  };

  detail::Chart full;
  for (int i = 0; i < n; ++i) full.groups.push_back({1, false});
  out.full = detail::minimize_over({full}, phi, opts, 0);

  std::vector<detail::Chart> restricted;
  for (const auto& p : detail::stratum_patterns(n, out.k, out.k)) restricted.push_back({p.groups});
  out.restricted = detail::minimize_over(restricted, phi, opts, 1);
  return out;
}

}  // namespace stable_slices
