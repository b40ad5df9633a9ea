#pragma once

// parse -> validate -> polygon -> solve -> analyze, with report.json and
// the SVG/CSV figure files.

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dsl.hpp"
#include "fractional.hpp"
#include "summability.hpp"

namespace msl {

inline constexpr const char* report_schema = "msl-report/1";

enum exit_code : int { exit_ok = 0, exit_validation = 2, exit_warnings = 3, exit_internal = 4 };

struct run_config {
  std::string subcommand = "analyze";
  std::string spec_path;
  std::filesystem::path out_dir = ".";
  std::optional<unsigned> precision;
  std::optional<std::size_t> nt, nz, pmax;
  std::optional<double> fit_tolerance;
  bool plots = true;
  rational kernel_k = 1;  ///< `kernels` only
};

/// --precision, then MSL_PRECISION_BITS, then the spec file.
inline unsigned resolve_precision(const run_config& cfg, unsigned from_spec) {
  if (cfg.precision) return *cfg.precision;
  if (const char* env = std::getenv("MSL_PRECISION_BITS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v >= 64) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw error(errc::invalid_argument, std::string("MSL_PRECISION_BITS must be an integer >= 64, got '") + env + "'");
  }
  return from_spec;
}

namespace detail {

using json = nlohmann::json;

inline double num(const real& x) { return x.convert_to<double>(); }

inline json rat(const rational& q) { return {{"exact", to_string(q)}, {"value", q.convert_to<double>()}}; }

inline json point_json(const point2& p) { return json::array({to_string(p.x), to_string(p.y)}); }

inline json findings_json(const std::vector<finding>& fs) {
  json out = json::array();
  for (const auto& f : fs)
    out.push_back({{"level", f.level == severity::error ? "error" : "warning"}, {"code", f.code}, {"message", f.message}});
  return out;
}

inline finding finding_of(const error& e) {
  return {severity::error, std::string(to_string(e.code())), e.what()};
}

inline json polygon_json(const newton_polygon& poly) {
  json j;
  j["points"] = json::array();
  for (std::size_t a = 0; a < poly.points.size(); ++a)
    j["points"].push_back({{"at", point_json(poly.points[a])}, {"dominated", static_cast<bool>(poly.dominated[a])}});
  j["boundary"] = json::array();
  for (const auto& p : poly.boundary) j["boundary"].push_back(point_json(p));
  j["segments"] = json::array();
  for (const auto& s : poly.segments)
    j["segments"].push_back({{"from", point_json(s.from)}, {"to", point_json(s.to)}, {"slope", to_string(s.slope)}});
  j["k"] = poly.k ? json(to_string(*poly.k)) : json(nullptr);
  return j;
}

inline json fit_json(const growth_fit_result& f) {
  return {{"s_hat", num(f.s_hat)},
          {"logC", num(f.logC)},
          {"logA", num(f.logA)},
          {"rms", num(f.rms)},
          {"window", {f.p_min, f.p_max}},
          {"points", f.p.size()}};
}

inline json constants_json(const bound_constants& c) {
  json fd = json::array();
  for (const auto& x : c.F_by_depth) fd.push_back(num(x));
  json rt = json::array();
  for (const auto& x : c.rtilde) rt.push_back(num(x));
  return {{"F", num(c.F)},           {"F_by_depth", fd},
          {"B", num(c.B)},           {"C", num(c.C)},
          {"K", num(c.K)},           {"depth_n", c.depth_n},
          {"depth_p", c.depth_p},    {"rtilde", rt},
          {"search_ok", c.search_ok}, {"verified", c.verified},
          {"checked", c.checked},    {"drift_tolerance", 0.1}};
}

inline json report_json(const summability_report& r) {
  json j;
  j["k"] = r.k ? rat(*r.k) : json(nullptr);
  j["kernel_k"] = r.kernel_k ? rat(*r.kernel_k) : json(nullptr);
  j["omega"] = r.omega ? json(num(*r.omega)) : json(nullptr);
  j["expected_s"] = num(r.expected_s);
  j["fits"] = json::array();
  for (const auto& f : r.fits) {
    json e = {{"z_index", f.m}, {"gating", f.gating}, {"pass", f.pass}, {"tolerance", r.tolerance}};
    if (f.fit) e["fit"] = fit_json(*f.fit);
    if (!f.error.empty()) e["error"] = f.error;
    j["fits"].push_back(e);
  }
  if (r.borel_radius) {
    const auto& b = *r.borel_radius;
    j["borel"] = {{"radius", b.infinite ? json(nullptr) : json(num(b.radius))},
                  {"infinite", b.infinite},
                  {"growth_curvature", num(b.growth_curvature)},
                  {"window", {b.p_min, b.p_max}}};
  } else {
    j["borel"] = {{"error", r.borel_error}};
  }
  j["laplace"] = json::array();
  for (const auto& l : r.laplace) {
    json e = {{"phi", "u^" + std::to_string(l.p)},
              {"z", {l.z.real(), l.z.imag()}},
              {"expected", {l.expected.real(), l.expected.imag()}},
              {"tolerance", 1e-6}};
    if (l.error.empty()) {
      e["value"] = {l.value.real(), l.value.imag()};
      e["rel_error"] = l.rel_error;
    } else {
      e["error"] = l.error;
    }
    j["laplace"].push_back(e);
  }
  if (r.constants) j["constants"] = constants_json(*r.constants);
  else if (!r.constants_error.empty()) j["constants"] = {{"error", r.constants_error}};
  if (r.reconstruction)
    j["reconstruction"] = {{"max_abs", num(r.reconstruction->max_abs)},
                           {"max_rel", num(r.reconstruction->max_rel)},
                           {"checked", r.reconstruction->checked},
                           {"max_t", r.reconstruction->max_t},
                           {"depth_p", r.majorant_depth}};
  return j;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw error(errc::io_error, "cannot write " + p.string());
  os << text;
  if (!os) throw error(errc::io_error, "write failed for " + p.string());
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace detail

/// Newton polygon figure: generating points (dominated ones gray), the
/// boundary chain with its horizontal and vertical rays, and the k label.
inline std::string polygon_svg(const newton_polygon& poly) {
  const double W = 480, H = 360, pad = 48;
  double xmin = 0, xmax = 1, ymin = -1, ymax = 0;
  for (const auto& p : poly.points) {
    xmin = std::min(xmin, p.x.convert_to<double>());
    xmax = std::max(xmax, p.x.convert_to<double>());
    ymin = std::min(ymin, p.y.convert_to<double>());
    ymax = std::max(ymax, p.y.convert_to<double>());
  }
  xmin -= 1;
  xmax += 1;
  ymin -= 1;
  ymax += 1;
  auto sx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (W - 2 * pad); };
  auto sy = [&](double y) { return H - pad - (y - ymin) / (ymax - ymin) * (H - 2 * pad); };
  using detail::fmt;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line class=\"axis\" x1=\"" << fmt(sx(xmin)) << "\" y1=\"" << fmt(sy(0)) << "\" x2=\"" << fmt(sx(xmax))
     << "\" y2=\"" << fmt(sy(0)) << "\" stroke=\"#888\"/>\n";
  os << "<line class=\"axis\" x1=\"" << fmt(sx(0)) << "\" y1=\"" << fmt(sy(ymin)) << "\" x2=\"" << fmt(sx(0))
     << "\" y2=\"" << fmt(sy(ymax)) << "\" stroke=\"#888\"/>\n";
  if (!poly.boundary.empty()) {
    const auto& first = poly.boundary.front();
    const auto& last = poly.boundary.back();
    std::ostringstream pts, data;
    pts << fmt(sx(xmin)) << "," << fmt(sy(first.y.convert_to<double>()));
    for (std::size_t j = 0; j < poly.boundary.size(); ++j) {
      const auto& p = poly.boundary[j];
      pts << " " << fmt(sx(p.x.convert_to<double>())) << "," << fmt(sy(p.y.convert_to<double>()));
      data << (j ? " " : "") << to_string(p.x) << "," << to_string(p.y);
    }
    pts << " " << fmt(sx(last.x.convert_to<double>())) << "," << fmt(sy(ymax));
    os << "<polyline class=\"boundary\" data-points=\"" << data.str() << "\" points=\"" << pts.str()
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  for (std::size_t a = 0; a < poly.points.size(); ++a) {
    const auto& p = poly.points[a];
    os << "<circle class=\"" << (poly.dominated[a] ? "dominated" : "point") << "\" data-at=\"" << to_string(p.x)
       << "," << to_string(p.y) << "\" cx=\"" << fmt(sx(p.x.convert_to<double>())) << "\" cy=\""
       << fmt(sy(p.y.convert_to<double>())) << "\" r=\"5\" fill=\"" << (poly.dominated[a] ? "#bbb" : "#1f4e9c")
       << "\"/>\n";
  }
  if (poly.k) {
    for (const auto& s : poly.segments) {
      if (s.slope <= 0) continue;
      const double mx = (s.from.x + s.to.x).convert_to<double>() / 2, my = (s.from.y + s.to.y).convert_to<double>() / 2;
      os << "<text class=\"slope\" x=\"" << fmt(sx(mx) + 8) << "\" y=\"" << fmt(sy(my)) << "\" font-size=\"14\">k = "
         << to_string(*poly.k) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string growth_fit_csv(const growth_fit_result* fit) {
  std::ostringstream os;
  os << "p,log_norm,fitted\n";
  if (fit)
    for (std::size_t j = 0; j < fit->p.size(); ++j)
      os << fit->p[j] << "," << to_string(fit->log_norm[j], 20) << "," << to_string(fit->fitted[j], 20) << "\n";
  return os.str();
}

inline std::string borel_csv(const std::vector<real>& c) {
  std::ostringstream os;
  os << "p,abs_coefficient\n";
  for (std::size_t p = 0; p < c.size(); ++p) os << p << "," << to_string(c[p], 20) << "\n";
  return os.str();
}

struct pipeline_result {
  int code = exit_ok;
  nlohmann::json report;
};

namespace detail {

inline bool polygon_only(const std::string& code) {
  return code == "NoPositiveSlope" || code == "MultiplePositiveSlopes" || code == "SlopeOrdering" ||
         code == "SlopeMismatch";
}

inline int code_for(const std::vector<finding>& fs) {
  if (has_errors(fs)) return exit_validation;
  for (const auto& f : fs)
    if (f.level == severity::warning) return exit_warnings;
  return exit_ok;
}

template <Field F>
json solve_section(const problem_spec& spec, std::vector<finding>& findings, t_series<real>* real_u,
                   std::optional<problem_data<real>>* real_pd) {
  const auto pd = instantiate_problem<F>(spec);
  const auto u = solve_fixed_point(pd);
  const real rt = to_real(spec.r) / 2;
  const auto res = residual(pd, u, rt);
  const real tol = field_traits<F>::exact ? real(0) : 10 * epsilon();
  const bool ok = field_traits<F>::exact ? res.norm == 0 : res.relative <= tol;
  if (!ok) findings.push_back({severity::warning, "ResidualTooLarge", "relative residual " + to_string(res.relative, 6)});
  json j = {{"field", std::string(field_traits<F>::name)},
            {"nt", pd.nt},
            {"nz", pd.nz},
            {"nz_padded", pd.nz_pad},
            {"residual",
             {{"norm", to_string(res.norm, 6)},
              {"relative", to_string(res.relative, 6)},
              {"rtilde", num(rt)},
              {"tolerance", to_string(tol, 6)},
              {"pass", ok}}}};
  json z0 = json::array();
  for (std::size_t n = 0; n < u.length(); ++n) {
    if constexpr (field_traits<F>::exact) z0.push_back(to_string(u.at(n, 0)));
    else z0.push_back(to_string(u.at(n, 0), 30));
  }
  j["z0_coefficients"] = z0;
  if constexpr (std::is_same_v<F, real>) {
    if (real_u) *real_u = u;
    if (real_pd) real_pd->emplace(pd);
  }
  return j;
}

}  // namespace detail

/// Runs one subcommand on a spec file; never throws.
inline pipeline_result run_pipeline(const run_config& cfg) {
  using detail::json;
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  json timings = json::object();
  auto lap = [&](const char* name, clock::time_point since) {
    timings[name] = std::chrono::duration<double, std::milli>(clock::now() - since).count();
  };

  pipeline_result out;
  json& rep = out.report;
  rep["schema"] = report_schema;
  std::vector<finding> findings;
  auto finish = [&](int code) {
    rep["findings"] = detail::findings_json(findings);
    rep["exit_code"] = code;
    rep["status"] = code == exit_ok ? "ok" : code == exit_validation ? "validation_error"
                                         : code == exit_warnings ? "warnings" : "internal_error";
    lap("total_ms", t0);
    rep["timings"] = timings;
    out.code = code;
    try {
      std::filesystem::create_directories(cfg.out_dir);
      detail::write_text(cfg.out_dir / "report.json", rep.dump(2) + "\n");
    } catch (const std::exception& e) {
      std::cerr << "msl: " << e.what() << "\n";
      out.code = exit_internal;
    }
    return out;
  };

  problem_spec spec;
  try {
    std::filesystem::create_directories(cfg.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "msl: " << e.what() << "\n";
    out.code = exit_internal;
    return out;
  }
  try {
    const auto tp = clock::now();
    spec = load_problem(cfg.spec_path);
    lap("parse_ms", tp);
  } catch (const error& e) {
    findings.push_back(detail::finding_of(e));
    if (e.pos()) rep["error_position"] = {{"line", e.pos()->line}, {"col", e.pos()->col}};
    return finish(exit_validation);
  } catch (const std::exception& e) {
    findings.push_back({severity::error, "InternalError", e.what()});
    return finish(exit_internal);
  }

  try {
    if (cfg.nt) spec.nt = *cfg.nt;
    if (cfg.nz) spec.nz = *cfg.nz;
    if (cfg.pmax) spec.pmax = *cfg.pmax;
    if (cfg.fit_tolerance) spec.fit_tolerance = *cfg.fit_tolerance;
    spec.precision = resolve_precision(cfg, spec.precision);
    precision_scope scope(spec.precision);

    rep["config"] = {{"subcommand", cfg.subcommand},
                     {"spec", cfg.spec_path},
                     {"precision_bits", spec.precision},
                     {"nt", spec.nt},
                     {"nz", spec.nz},
                     {"pmax", spec.pmax},
                     {"fit_tolerance", spec.fit_tolerance},
                     {"exact", spec.exact},
                     {"plots", cfg.plots}};
    rep["spec"] = format_problem(spec);

    const auto tv = clock::now();
    for (auto& f : validate_spec(spec)) {
      if (cfg.subcommand == "solve" && detail::polygon_only(f.code)) continue;
      findings.push_back(std::move(f));
    }
    lap("validate_ms", tv);

    const auto poly = compute_newton_polygon(spec);
    rep["polygon"] = detail::polygon_json(poly);
    if (cfg.plots && (cfg.subcommand == "polygon" || cfg.subcommand == "analyze"))
      detail::write_text(cfg.out_dir / "polygon.svg", polygon_svg(poly));
    if (cfg.subcommand == "polygon") {
      if (!findings.empty() || !poly.k) return finish(detail::code_for(findings));
      try {
        rep["k"] = detail::rat(slope_k(poly, spec));
      } catch (const error& e) {
        findings.push_back(detail::finding_of(e));
      }
      return finish(detail::code_for(findings));
    }

    if (cfg.subcommand == "solve") {
      if (has_errors(findings)) return finish(exit_validation);
      const auto ts = clock::now();
      rep["solve"] = spec.exact ? detail::solve_section<rational>(spec, findings, nullptr, nullptr)
                                : detail::solve_section<real>(spec, findings, nullptr, nullptr);
      lap("solve_ms", ts);
      return finish(detail::code_for(findings));
    }

    if (cfg.subcommand != "analyze")
      throw error(errc::invalid_argument, "unknown subcommand '" + cfg.subcommand + "'");

    // analyze: validation errors (other than the missing slope, which means
    // a convergent regime) stop here.
    std::vector<finding> blocking;
    for (const auto& f : findings)
      if (f.level == severity::error && f.code != "NoPositiveSlope") blocking.push_back(f);
    if (!blocking.empty()) return finish(exit_validation);
    findings.clear();

    const auto ts = clock::now();
    t_series<real> u;
    std::optional<problem_data<real>> pd;
    if (spec.exact) rep["solve_exact"] = detail::solve_section<rational>(spec, findings, nullptr, nullptr);
    rep["solve"] = detail::solve_section<real>(spec, findings, &u, &pd);
    lap("solve_ms", ts);

    const auto ta = clock::now();
    const auto sr = make_summability_report(spec, *pd, u);
    lap("analyze_ms", ta);
    for (const auto& f : sr.findings) findings.push_back(f);
    if (has_errors(sr.findings)) return finish(exit_validation);
    rep["analysis"] = detail::report_json(sr);
    if (sr.k) rep["k"] = detail::rat(*sr.k);

    if (cfg.plots) {
      const growth_fit_result* gate = nullptr;
      for (const auto& f : sr.fits)
        if (f.gating && f.fit) gate = &*f.fit;
      detail::write_text(cfg.out_dir / "growth_fit.csv", growth_fit_csv(gate));
      detail::write_text(cfg.out_dir / "borel_coeffs.csv", borel_csv(sr.borel_z0));
    }
    return finish(detail::code_for(findings));
  } catch (const error& e) {
    findings.push_back(detail::finding_of(e));
    const bool user = e.code() == errc::invalid_argument || e.code() == errc::semantic_error ||
                      e.code() == errc::syntax_error || e.code() == errc::not_exact;
    return finish(user ? exit_validation : exit_internal);
  } catch (const std::exception& e) {
    findings.push_back({severity::error, "InternalError", e.what()});
    return finish(exit_internal);
  }
}

}  // namespace msl
