#pragma once

/**
 * @file job.hpp
 * @brief JSON job dispatch for the command-line tool: one job document in, one result document
 *        (or CSV for slice sections) out.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "compress.hpp"
#include "degree_principles.hpp"
#include "regions.hpp"
#include "slices.hpp"
#include "stability.hpp"
#include "symmetric.hpp"

namespace stable_slices {

using json = nlohmann::ordered_json;

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_internal = 4 };

/// Command-line overrides applied on top of the job document.
struct JobOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_boundary;
  std::optional<double> tol_cluster;
  std::optional<int> max_iters;
};

inline const std::vector<std::string>& job_commands() {
  static const std::vector<std::string> c{"roots",    "vieta",     "stable-check", "hurwitz-check", "embed",
                                          "unembed",  "bounds",    "compress",     "gws",           "coincide",
                                          "young-gws", "variety-search", "halfdeg-opt", "slice-sample", "moebius"};
  return c;
}

/// "%.9g", with ".0" appended to integral renderings.
inline std::string format_csv_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  std::string s = buf;
  if (s.find_first_of(".eEni") == std::string::npos) s += ".0";
  return s;
}

/// CSV with header x,y,member, rows in row-major order (y outer, x inner).
inline void emit_section_csv(const SliceGrid& g, std::ostream& out) {
  if (g.member.size() != g.ys.size()) throw InvariantViolation("section grid is not rectangular");
  for (const auto& row : g.member)
    if (row.size() != g.xs.size()) throw InvariantViolation("section grid is not rectangular");
  std::string buf = "x,y,member\n";
  for (std::size_t j = 0; j < g.ys.size(); ++j)
    for (std::size_t i = 0; i < g.xs.size(); ++i) {
      buf += format_csv_number(g.xs[i]);
      buf += ',';
      buf += format_csv_number(g.ys[j]);
      buf += g.member[j][i] ? ",1\n" : ",0\n";
    }
  out << buf;
  if (!out) throw InvariantViolation("failed to write the CSV output");
}

namespace job {

// ------------------------------------------------------------------------------------------------
// Parsing
// ------------------------------------------------------------------------------------------------

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed,
                       std::initializer_list<const char*> required = {}) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ValidationError(where + ": unknown field '" + k + "'");
  for (const char* r : required)
    if (!j.contains(r)) throw ValidationError(where + ": missing field '" + std::string(r) + "'");
}

inline double get_real(const json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + ": expected a finite number");
  return v;
}

inline long long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<long long>();
}

inline std::size_t get_size(const json& j, const std::string& where) {
  const long long v = get_int(j, where);
  if (v < 0) throw ValidationError(where + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ValidationError(where + ": expected a boolean");
  return j.get<bool>();
}

inline Complex get_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {get_real(j, where), 0.0};
  if (j.is_array() && j.size() == 2) return {get_real(j[0], where + "[0]"), get_real(j[1], where + "[1]")};
  throw ValidationError(where + ": expected a number or a [re, im] pair");
}

inline CVector get_cvector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array");
  CVector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_complex(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

inline Poly get_poly(const json& j, const std::string& where) {
  check_keys(j, where, {"z", "coeffs", "roots", "convention"});
  const int forms = static_cast<int>(j.contains("z")) + static_cast<int>(j.contains("coeffs")) + static_cast<int>(j.contains("roots"));
  if (forms != 1) throw ValidationError(where + ": give exactly one of z, coeffs, roots");
  if (j.contains("convention")) {
    if (!j.contains("z")) throw ValidationError(where + ": convention applies to z only");
    if (j["convention"] != "vieta-alternating") throw ValidationError(where + ": unsupported convention");
  }
  if (j.contains("z")) return Poly(get_cvector(j["z"], where + ".z"));
  if (j.contains("roots")) return vieta_from_roots(get_cvector(j["roots"], where + ".roots"));
  // monic T^n + c_1 T^{n-1} + ... + c_n
  CVector raw{1.0};
  const CVector c = get_cvector(j["coeffs"], where + ".coeffs");
  raw.insert(raw.end(), c.begin(), c.end());
  return Poly::from_raw(raw);
}

inline HalfPlane get_halfplane(const json& p, const std::string& where) {
  if (!p.contains("halfplane")) return HalfPlane::upper();
  const json& j = p["halfplane"];
  if (j.is_string()) {
    if (j == "upper") return HalfPlane::upper();
    if (j == "left") return HalfPlane::left();
    throw ValidationError(where + ".halfplane: expected \"upper\", \"left\" or {theta, base}");
  }
  check_keys(j, where + ".halfplane", {"theta", "base"});
  const double theta = j.contains("theta") ? get_real(j["theta"], where + ".halfplane.theta") : 0.0;
  const Complex base = j.contains("base") ? get_complex(j["base"], where + ".halfplane.base") : Complex{};
  return HalfPlane(theta, base);
}

inline CMatrix get_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ValidationError(where + ": expected a non-empty array of rows");
  const CVector first = get_cvector(j[0], where + "[0]");
  CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const CVector row = get_cvector(j[r], where + "[" + std::to_string(r) + "]");
    if (row.size() != first.size()) throw DimensionMismatch(where + ": rows have different lengths");
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

inline Slice get_slice(const json& j, const std::string& where) {
  check_keys(j, where, {"L", "a", "field"}, {"L", "a"});
  Field field = Field::complex;
  if (j.contains("field")) {
    if (j["field"] == "real")
      field = Field::real;
    else if (j["field"] != "complex")
      throw ValidationError(where + ".field: expected \"complex\" or \"real\"");
  }
  return Slice(get_matrix(j["L"], where + ".L"), get_cvector(j["a"], where + ".a"), field);
}

inline SparsePoly get_sparse(const json& terms, std::size_t vars, const std::string& where) {
  if (!terms.is_array()) throw ValidationError(where + ": expected an array of terms");
  SparsePoly g(vars);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string w = where + "[" + std::to_string(t) + "]";
    check_keys(terms[t], w, {"exponents", "coeff"}, {"exponents", "coeff"});
    const json& e = terms[t]["exponents"];
    if (!e.is_array()) throw ValidationError(w + ".exponents: expected an array");
    Exponents ex;
    for (std::size_t i = 0; i < e.size(); ++i) ex.push_back(static_cast<int>(get_int(e[i], w + ".exponents")));
    g.add(ex, get_complex(terms[t]["coeff"], w + ".coeff"));
  }
  return g;
}

/// {n, degree, terms} or {affine: [c_0, ..., c_n]}.
inline SymmetricPoly get_symmetric(const json& j, const std::string& where) {
  check_keys(j, where, {"n", "degree", "terms", "affine"});
  if (j.contains("affine")) {
    if (j.contains("terms") || j.contains("degree")) throw ValidationError(where + ": affine excludes terms and degree");
    SymmetricPoly f = SymmetricPoly::affine(get_cvector(j["affine"], where + ".affine"));
    if (j.contains("n") && get_size(j["n"], where + ".n") != f.n()) throw DimensionMismatch(where + ": n disagrees with the affine coefficients");
    return f;
  }
  check_keys(j, where, {"n", "degree", "terms"}, {"n", "degree", "terms"});
  const std::size_t n = get_size(j["n"], where + ".n");
  return SymmetricPoly(n, get_sparse(j["terms"], n, where + ".terms"), static_cast<int>(get_int(j["degree"], where + ".degree")));
}

inline SufficientForm get_sufficient(const json& j, const std::string& where) {
  check_keys(j, where, {"A", "terms"}, {"A", "terms"});
  CMatrix A = get_matrix(j["A"], where + ".A");
  SparsePoly g = get_sparse(j["terms"], static_cast<std::size_t>(A.rows()), where + ".terms");
  return SufficientForm(std::move(A), std::move(g));
}

inline Tolerances get_tolerances(const json& doc) {
  Tolerances t;
  if (!doc.contains("tolerances")) return t;
  const json& j = doc["tolerances"];
  check_keys(j, "tolerances", {"boundary", "cluster_radius", "residual", "slice"});
  auto positive = [](const json& v, const char* name) {
    const double x = get_real(v, std::string("tolerances.") + name);
    if (!(x > 0)) throw ValidationError(std::string("tolerances.") + name + ": must be positive");
    return x;
  };
  if (j.contains("boundary")) t.boundary = positive(j["boundary"], "boundary");
  if (j.contains("cluster_radius")) t.cluster_radius = positive(j["cluster_radius"], "cluster_radius");
  if (j.contains("residual")) t.residual = positive(j["residual"], "residual");
  if (j.contains("slice")) t.slice = positive(j["slice"], "slice");
  return t;
}

// ------------------------------------------------------------------------------------------------
// Output
// ------------------------------------------------------------------------------------------------

inline json cjson(Complex c) {
  // no negative zeros in the output
  return json::array({c.real() == 0.0 ? 0.0 : c.real(), c.imag() == 0.0 ? 0.0 : c.imag()});
}

inline json cvec_json(const CVector& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back(cjson(c));
  return a;
}

inline CVector sorted_roots(RootMultiset r) {
  std::sort(r.begin(), r.end(), [](Complex a, Complex b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  return r;
}

inline json poly_json(const Poly& p) { return {{"convention", "vieta-alternating"}, {"z", cvec_json(p.z())}}; }

inline json profile_json(const RootProfile& p) {
  std::vector<RootCluster> cl = p.clusters;
  std::sort(cl.begin(), cl.end(), [](const RootCluster& a, const RootCluster& b) {
    return a.center.real() < b.center.real() || (a.center.real() == b.center.real() && a.center.imag() < b.center.imag());
  });
  json clusters = json::array();
  for (const auto& c : cl)
    clusters.push_back({{"center", cjson(c.center)}, {"multiplicity", c.multiplicity}, {"location", to_string(c.location)}});
  return {{"clusters", clusters},
          {"interior_total", p.interior_total()},
          {"boundary_distinct", p.boundary_distinct()},
          {"outside_total", p.outside_total()}};
}

inline json verdict_json(const StabilityVerdict& v) {
  return {{"stable", v.stable}, {"strict", v.strict()}, {"profile", profile_json(v.profile)}, {"roots", cvec_json(sorted_roots(v.witness))}};
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json report_json(const CompressionReport& r, bool hurwitz) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"method", s.method},
                     {"event", to_string(s.event)},
                     {"step_size", number_or_null(s.step_size)},
                     {"interior_total", s.profile.interior_total()},
                     {"boundary_distinct", s.profile.boundary_distinct()},
                     {"z", cvec_json(s.z.z())}});
  json out = {{"status", to_string(r.status)},
              {"iterations", r.iterations},
              {"rank", r.rank},
              {"target_interior", r.target_interior},
              {"target_boundary", r.target_boundary},
              {"sharpened", r.sharpened},
              {"initial_profile", profile_json(r.initial_profile)},
              {"final_profile", profile_json(r.final_profile)},
              {"final_poly", poly_json(r.final_z)},
              {"final_roots", cvec_json(sorted_roots(r.final_roots))},
              {"steps", steps}};
  if (hurwitz) out["origin_multiplicity"] = r.origin_multiplicity;
  return out;
}

inline json tolerances_json(const Tolerances& t) {
  return {{"boundary", t.boundary ? json(*t.boundary) : json(nullptr)},
          {"boundary_default", "1e-8*(1+max|root|)"},
          {"cluster_radius", t.cluster_radius ? json(*t.cluster_radius) : json(nullptr)},
          {"cluster_radius_default", "1e-6*(1+max|root|)"},
          {"residual", t.residual},
          {"slice", t.slice}};
}

inline json pattern_json(const Pattern& p) {
  json groups = json::array();
  for (const auto& g : p.groups) groups.push_back({{"multiplicity", g.multiplicity}, {"boundary", g.boundary}});
  return {{"label", p.describe()}, {"groups", groups}};
}

inline json infimum_json(const Infimum& m) {
  return {{"unbounded", m.unbounded}, {"value", m.unbounded ? json(nullptr) : number_or_null(m.value)}, {"witness", cvec_json(m.witness)}};
}

// ------------------------------------------------------------------------------------------------
// Commands
// ------------------------------------------------------------------------------------------------

struct Context {
  Tolerances tol;
  std::uint64_t seed = 0;
  std::optional<int> max_iters;
};

struct Outcome {
  json result;
  std::optional<SliceGrid> csv;  ///< slice sections in CSV form bypass the JSON document
};

inline CompressOptions compress_options(const json& p, const Context& ctx) {
  CompressOptions o;
  o.tol = ctx.tol;
  if (p.contains("options")) {
    const json& j = p["options"];
    check_keys(j, "payload.options", {"augment", "stratum_descent", "max_iterations", "step_cap"});
    if (j.contains("augment")) o.augment = get_bool(j["augment"], "payload.options.augment");
    if (j.contains("stratum_descent")) o.stratum_descent = get_bool(j["stratum_descent"], "payload.options.stratum_descent");
    if (j.contains("max_iterations")) o.max_iterations = static_cast<int>(get_size(j["max_iterations"], "payload.options.max_iterations"));
    if (j.contains("step_cap")) o.step_cap = get_real(j["step_cap"], "payload.options.step_cap");
  }
  if (ctx.max_iters) o.max_iterations = *ctx.max_iters;
  return o;
}

inline Outcome run_command(const std::string& cmd, const json& p, const Context& ctx) {
  const Tolerances& tol = ctx.tol;
  if (cmd == "roots") {
    check_keys(p, "payload", {"poly"}, {"poly"});
    const Poly f = get_poly(p["poly"], "payload.poly");
    RootFinderOptions ro;
    ro.residual = tol.residual;
    const RootMultiset r = find_roots(f, ro);
    return {{{"roots", cvec_json(sorted_roots(r))}, {"profile", profile_json(cluster_poly_roots(f, r, HalfPlane::upper(), tol))}}, {}};
  }
  if (cmd == "vieta") {
    check_keys(p, "payload", {"roots"}, {"roots"});
    return {{{"poly", poly_json(vieta_from_roots(get_cvector(p["roots"], "payload.roots")))}}, {}};
  }
  if (cmd == "stable-check") {
    check_keys(p, "payload", {"poly", "halfplane"}, {"poly"});
    return {verdict_json(is_stable(get_poly(p["poly"], "payload.poly"), get_halfplane(p, "payload"), tol)), {}};
  }
  if (cmd == "hurwitz-check") {
    check_keys(p, "payload", {"poly"}, {"poly"});
    return {verdict_json(is_weakly_hurwitz(get_poly(p["poly"], "payload.poly"), tol)), {}};
  }
  if (cmd == "embed" || cmd == "unembed") {
    check_keys(p, "payload", {"poly"}, {"poly"});
    const Poly f = get_poly(p["poly"], "payload.poly");
    return {{{"poly", poly_json(cmd == "embed" ? hurwitz_embed(f) : hurwitz_unembed(f))}}, {}};
  }
  if (cmd == "bounds") {
    check_keys(p, "payload", {"a1", "a2", "n"}, {"a1", "a2", "n"});
    const auto b = compactness_bounds(get_complex(p["a1"], "payload.a1"), get_complex(p["a2"], "payload.a2"),
                                      static_cast<int>(get_size(p["n"], "payload.n")));
    if (!b) return {{{"empty", true}}, {}};
    return {{{"empty", false}, {"im", json::array({b->im_lo, b->im_hi})}, {"re_sq_bound", b->re_sq_bound}}, {}};
  }
  if (cmd == "compress") {
    check_keys(p, "payload", {"poly", "slice", "halfplane", "hurwitz", "options"}, {"poly", "slice"});
    const Poly z = get_poly(p["poly"], "payload.poly");
    const Slice s = get_slice(p["slice"], "payload.slice");
    const bool hurwitz = p.contains("hurwitz") && get_bool(p["hurwitz"], "payload.hurwitz");
    if (hurwitz && p.contains("halfplane")) throw ValidationError("payload: hurwitz compression fixes the half-plane");
    const CompressOptions o = compress_options(p, ctx);
    const CompressionReport r = hurwitz ? compress_hurwitz(z, s, o) : compress(z, s, get_halfplane(p, "payload"), o);
    return {report_json(r, hurwitz), {}};
  }
  if (cmd == "gws") {
    check_keys(p, "payload", {"f", "x", "halfplane"}, {"f", "x"});
    const SymmetricPoly f = get_symmetric(p["f"], "payload.f");
    const CVector x = get_cvector(p["x"], "payload.x");
    const Complex y = gws_solve(f, x, get_halfplane(p, "payload"), tol);
    const Complex fx = eval_symmetric(f, x), fy = eval_symmetric(f, CVector(x.size(), y));
    return {{{"y", cjson(y)}, {"value", cjson(fx)}, {"value_at_y", cjson(fy)}, {"residual", std::abs(fy - fx)}}, {}};
  }
  if (cmd == "coincide") {
    check_keys(p, "payload", {"f", "x", "halfplane", "options"}, {"f", "x"});
    const SufficientForm f = get_sufficient(p["f"], "payload.f");
    const HalfPlane h = get_halfplane(p, "payload");
    const CoincidenceResult r = coincide(f, get_cvector(p["x"], "payload.x"), h, compress_options(p, ctx));
    const CoordinateProfile prof = coordinate_profile(r.x, h, tol);
    return {{{"x", cvec_json(sorted_roots(r.x))},
             {"value_before", cjson(r.value_before)},
             {"value_after", cjson(r.value_after)},
             {"profile", {{"boundary_distinct", prof.boundary_distinct}, {"interior_count", prof.interior_count}}},
             {"bounds", {{"boundary", r.boundary_bound}, {"interior", r.interior_bound}, {"sharpened", r.sharpened}}},
             {"report", report_json(r.report, false)}},
            {}};
  }
  if (cmd == "young-gws") {
    check_keys(p, "payload", {"blocks", "terms", "block_terms", "x", "halfplane"}, {"blocks", "x"});
    if (p.contains("terms") == p.contains("block_terms")) throw ValidationError("payload: give exactly one of terms, block_terms");
    std::vector<std::size_t> blocks;
    if (!p["blocks"].is_array()) throw ValidationError("payload.blocks: expected an array");
    for (const auto& b : p["blocks"]) blocks.push_back(get_size(b, "payload.blocks"));
    std::optional<BlockForm> f;
    if (p.contains("terms")) {
      std::map<std::vector<std::size_t>, Complex> terms;
      if (!p["terms"].is_array()) throw ValidationError("payload.terms: expected an array");
      for (const auto& t : p["terms"]) {
        check_keys(t, "payload.terms[]", {"subset", "coeff"}, {"subset", "coeff"});
        std::vector<std::size_t> subset;
        if (!t["subset"].is_array()) throw ValidationError("payload.terms[].subset: expected an array");
        for (const auto& i : t["subset"]) subset.push_back(get_size(i, "payload.terms[].subset"));
        std::sort(subset.begin(), subset.end());
        terms[subset] += get_complex(t["coeff"], "payload.terms[].coeff");
      }
      f = BlockForm::from_multiaffine(blocks, terms);
    } else {
      std::map<std::vector<int>, Complex> coeffs;
      if (!p["block_terms"].is_array()) throw ValidationError("payload.block_terms: expected an array");
      for (const auto& t : p["block_terms"]) {
        check_keys(t, "payload.block_terms[]", {"alpha", "coeff"}, {"alpha", "coeff"});
        std::vector<int> alpha;
        if (!t["alpha"].is_array()) throw ValidationError("payload.block_terms[].alpha: expected an array");
        for (const auto& a : t["alpha"]) alpha.push_back(static_cast<int>(get_int(a, "payload.block_terms[].alpha")));
        coeffs[alpha] += get_complex(t["coeff"], "payload.block_terms[].coeff");
      }
      f = BlockForm(blocks, coeffs);
    }
    const CVector x = get_cvector(p["x"], "payload.x");
    const CVector y = young_gws(*f, x, get_halfplane(p, "payload"), tol);
    CVector expanded;
    for (std::size_t j = 0; j < blocks.size(); ++j) expanded.insert(expanded.end(), blocks[j], y[j]);
    const Complex fx = f->eval(x), fy = f->eval(expanded);
    return {{{"y", cvec_json(y)}, {"value", cjson(fx)}, {"value_at_y", cjson(fy)}, {"residual", std::abs(fy - fx)}}, {}};
  }
  if (cmd == "variety-search") {
    check_keys(p, "payload", {"polys", "halfplane", "budget", "pattern", "starts", "box", "max_iterations"}, {"polys"});
    if (p.contains("budget") == p.contains("pattern")) throw ValidationError("payload: give exactly one of budget, pattern");
    std::vector<SymmetricPoly> polys;
    if (!p["polys"].is_array()) throw ValidationError("payload.polys: expected an array");
    for (std::size_t i = 0; i < p["polys"].size(); ++i) polys.push_back(get_symmetric(p["polys"][i], "payload.polys[" + std::to_string(i) + "]"));
    PatternSpec spec;
    if (p.contains("budget")) {
      spec = DistinctBudget{static_cast<int>(get_size(p["budget"], "payload.budget"))};
    } else {
      check_keys(p["pattern"], "payload.pattern", {"k_boundary", "m_interior"}, {"k_boundary", "m_interior"});
      spec = StratumBound{static_cast<int>(get_size(p["pattern"]["k_boundary"], "payload.pattern.k_boundary")),
                          static_cast<int>(get_size(p["pattern"]["m_interior"], "payload.pattern.m_interior"))};
    }
    VarietySearchOptions o;
    o.seed = ctx.seed;
    o.tol = tol;
    if (p.contains("starts")) o.starts = get_size(p["starts"], "payload.starts");
    if (p.contains("max_iterations")) o.max_iterations = static_cast<int>(get_size(p["max_iterations"], "payload.max_iterations"));
    if (ctx.max_iters) o.max_iterations = *ctx.max_iters;
    if (p.contains("box")) {
      check_keys(p["box"], "payload.box", {"re", "im"});
      if (p["box"].contains("re")) o.box_re = get_real(p["box"]["re"], "payload.box.re");
      if (p["box"].contains("im")) o.box_im = get_real(p["box"]["im"], "payload.box.im");
    }
    const auto r = variety_search(polys, get_halfplane(p, "payload"), spec, o);
    json stats = json::array();
    for (const auto& s : r.stats)
      stats.push_back({{"pattern", pattern_json(s.pattern)}, {"starts", s.starts}, {"best_residual", number_or_null(s.best_residual)}});
    json out = {{"found", r.found}};
    if (r.found) {
      out["x"] = cvec_json(r.x);
      out["residuals"] = cvec_json(r.residuals);
      out["pattern"] = pattern_json(*r.pattern);
    }
    out["statistics"] = {{"patterns", stats},
                         {"total_starts", r.total_starts},
                         {"box_from_bounds", r.box_from_bounds},
                         {"empty_by_bounds", r.empty_by_bounds}};
    if (!r.note.empty()) out["note"] = r.note;
    return {out, {}};
  }
  if (cmd == "halfdeg-opt") {
    check_keys(p, "payload", {"f", "lambda", "mu", "starts", "box", "max_iterations"}, {"f", "lambda", "mu"});
    HalfDegreeOptions o;
    o.seed = ctx.seed;
    if (p.contains("starts")) o.starts = get_size(p["starts"], "payload.starts");
    if (p.contains("box")) o.box = get_real(p["box"], "payload.box");
    if (p.contains("max_iterations")) o.max_iterations = static_cast<int>(get_size(p["max_iterations"], "payload.max_iterations"));
    if (ctx.max_iters) o.max_iterations = *ctx.max_iters;
    const auto r = halfdeg_optimize(get_symmetric(p["f"], "payload.f"), get_real(p["lambda"], "payload.lambda"),
                                    get_real(p["mu"], "payload.mu"), o);
    return {{{"k", r.k}, {"inf_full", infimum_json(r.full)}, {"inf_restricted", infimum_json(r.restricted)}}, {}};
  }
  if (cmd == "slice-sample") {
    check_keys(p, "payload", {"slice", "halfplane", "axes", "window", "resolution", "base", "format"}, {"slice", "axes", "window", "resolution"});
    const Slice s = get_slice(p["slice"], "payload.slice");
    if (!p["axes"].is_array() || p["axes"].size() != 2) throw ValidationError("payload.axes: expected two chart axes");
    if (!p["resolution"].is_array() || p["resolution"].size() != 2) throw ValidationError("payload.resolution: expected [w, h]");
    const json& wj = p["window"];
    check_keys(wj, "payload.window", {"x_min", "x_max", "y_min", "y_max"}, {"x_min", "x_max", "y_min", "y_max"});
    const Window w{get_real(wj["x_min"], "payload.window.x_min"), get_real(wj["x_max"], "payload.window.x_max"),
                   get_real(wj["y_min"], "payload.window.y_min"), get_real(wj["y_max"], "payload.window.y_max")};
    std::optional<CVector> base;
    if (p.contains("base")) base = get_cvector(p["base"], "payload.base");
    std::string format = "csv";
    if (p.contains("format")) {
      if (!p["format"].is_string() || (p["format"] != "csv" && p["format"] != "json")) throw ValidationError("payload.format: expected \"csv\" or \"json\"");
      format = p["format"].get<std::string>();
    }
    const SliceGrid g = sample_slice_section(s, get_halfplane(p, "payload"),
                                             {get_size(p["axes"][0], "payload.axes"), get_size(p["axes"][1], "payload.axes")}, w,
                                             {get_size(p["resolution"][0], "payload.resolution"), get_size(p["resolution"][1], "payload.resolution")},
                                             tol, base);
    if (format == "csv") return {json::object(), g};
    json rows = json::array();
    std::size_t members = 0;
    for (const auto& row : g.member) {
      json r = json::array();
      for (char c : row) {
        r.push_back(c ? 1 : 0);
        members += c ? 1 : 0;
      }
      rows.push_back(r);
    }
    return {{{"xs", g.xs}, {"ys", g.ys}, {"member", rows}, {"member_count", members}}, {}};
  }
  if (cmd == "moebius") {
    check_keys(p, "payload", {"map", "poly", "deg_hint"}, {"map", "poly"});
    const json& m = p["map"];
    check_keys(m, "payload.map", {"a", "b", "c", "d"}, {"a", "b", "c", "d"});
    const Moebius mob(get_complex(m["a"], "payload.map.a"), get_complex(m["b"], "payload.map.b"), get_complex(m["c"], "payload.map.c"),
                      get_complex(m["d"], "payload.map.d"));
    const Poly f = get_poly(p["poly"], "payload.poly");
    const std::size_t hint = p.contains("deg_hint") ? get_size(p["deg_hint"], "payload.deg_hint") : f.degree();
    const MoebiusImage img = moebius_transform_poly(mob, f, hint);
    json out = {{"raw", {{"convention", "raw-descending"}, {"coeffs", cvec_json(img.raw)}}}, {"degree_drop", img.degree_drop}};
    if (img.raw.size() >= 2) out["poly"] = poly_json(Poly::from_raw(img.raw));
    return {out, {}};
  }
  throw ValidationError("unknown command '" + cmd + "'");
}

inline const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const DimensionMismatch*>(&e)) return "DimensionMismatch";
  if (dynamic_cast<const NonRealInput*>(&e)) return "NonRealInput";
  if (dynamic_cast<const NotInImage*>(&e)) return "NotInImage";
  if (dynamic_cast<const DegenerateMap*>(&e)) return "DegenerateMap";
  if (dynamic_cast<const ValidationError*>(&e)) return "ValidationError";
  if (dynamic_cast<const NonConvergence*>(&e)) return "NonConvergence";
  if (dynamic_cast<const NoRootInRegion*>(&e)) return "NoRootInRegion";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  if (dynamic_cast<const InvariantViolation*>(&e)) return "InvariantViolation";
  return "InternalError";
}

}  // namespace job

/**
 * Runs one job document. The result document (or CSV) goes to `out`, diagnostics to `err`.
 * Returns the process exit code.
 */
inline int run(std::istream& in, std::ostream& out, std::ostream& err, const JobOverrides& over = {}) {
  json doc = {{"status", "error"}};
  int code = exit_internal;
  std::optional<SliceGrid> csv;
  try {
    json jobdoc;
    try {
      jobdoc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("job is not valid JSON: ") + e.what());
    }
    job::check_keys(jobdoc, "job", {"command", "payload", "tolerances", "seed"}, {"command", "payload"});
    if (!jobdoc["command"].is_string()) throw ValidationError("job.command: expected a string");
    const std::string cmd = jobdoc["command"].get<std::string>();
    const auto& cmds = job_commands();
    if (std::find(cmds.begin(), cmds.end(), cmd) == cmds.end()) throw ValidationError("unknown command '" + cmd + "'");
    doc["command"] = cmd;
    job::Context ctx;
    ctx.tol = job::get_tolerances(jobdoc);
    if (jobdoc.contains("seed")) {
      if (!jobdoc["seed"].is_number_unsigned()) throw ValidationError("job.seed: expected an unsigned integer");
      ctx.seed = jobdoc["seed"].get<std::uint64_t>();
    }
    if (over.seed) ctx.seed = *over.seed;
    if (over.tol_boundary) ctx.tol.boundary = *over.tol_boundary;
    if (over.tol_cluster) ctx.tol.cluster_radius = *over.tol_cluster;
    if (over.max_iters) {
      if (*over.max_iters < 0) throw ValidationError("--max-iters must be non-negative");
      ctx.max_iters = *over.max_iters;
    }
    doc["tolerances"] = job::tolerances_json(ctx.tol);
    doc["seed"] = ctx.seed;
    if (!jobdoc["payload"].is_object()) throw ValidationError("job.payload: expected an object");
    job::Outcome r = job::run_command(cmd, jobdoc["payload"], ctx);
    doc["status"] = "ok";
    doc["result"] = std::move(r.result);
    csv = std::move(r.csv);
    code = exit_ok;
  } catch (const std::exception& e) {
    code = dynamic_cast<const ValidationError*>(&e) ? exit_validation
           : dynamic_cast<const NumericalError*>(&e) ? exit_numerical
                                                      : exit_internal;
    doc["status"] = "error";
    doc["error"] = {{"kind", job::error_kind(e)}, {"message", e.what()}};
    err << "stable-slice: " << job::error_kind(e) << ": " << e.what() << "\n";
  }
  try {
    if (csv)
      emit_section_csv(*csv, out);
    else
      out << doc.dump(2) << "\n";
    out.flush();
    if (!out) throw InvariantViolation("failed to write the output");
  } catch (const std::exception& e) {
    err << "stable-slice: " << e.what() << "\n";
    return exit_internal;
  }
  return code;
}

}  // namespace stable_slices
