#include <CLI11.hpp>

#include <msl/msl.hpp>

#include <iomanip>
#include <sstream>

using namespace msl;
using nlohmann::json;

namespace {

int run_kernels(const run_config& cfg) {
  precision_scope scope(resolve_precision(cfg, 128));
  const kernel ker(cfg.kernel_k);
  std::filesystem::create_directories(cfg.out_dir);

  std::ostringstream grid;
  grid << "x,e,E\n";
  for (int j = 0; j <= 32; ++j) {
    const double x = j / 8.0;
    grid << x << "," << std::setprecision(17) << ker.e(x).real() << ","
         << to_string(ker.E(mp_complex(real(x))).re, 25) << "\n";
  }
  detail::write_text(cfg.out_dir / "kernel_grid.csv", grid.str());

  std::ostringstream mom;
  mom << "p,m_e,quadrature,rel_error\n";
  bool ok = true;
  for (int p = 0; p <= 8; ++p) {
    const real exact = ker.m_e(real(p));
    const auto [q, err] = ker.quadrature_moment(p);
    const double rel = std::abs(q - exact.convert_to<double>()) / exact.convert_to<double>();
    ok = ok && rel <= 1e-10;
    mom << p << "," << to_string(exact, 25) << "," << std::setprecision(17) << q << "," << rel << "\n";
  }
  detail::write_text(cfg.out_dir / "kernel_moments.csv", mom.str());
  std::cout << "kernel k = " << to_string(cfg.kernel_k) << ": moments " << (ok ? "match" : "MISMATCH") << "\n";
  return ok ? exit_ok : exit_warnings;
}

int run_fractional(const run_config& cfg) {
  precision_scope scope(resolve_precision(cfg, 128));
  std::filesystem::create_directories(cfg.out_dir);
  json rep;
  rep["schema"] = report_schema;
  bool ok = true;

  // I^{1/2} z = 4/(3 sqrt(pi)) z^{3/2}
  const auto half = rl_integral(refine(z_series<real>::monomial(real(1), 1, 2), 2), rational(1, 2));
  const real expected = 4 / (3 * sqrt(pi()));
  const real rel = abs(half[3] - expected) / expected;
  ok = ok && rel <= real("1e-20");
  rep["half_integral_of_z"] = {{"coefficient", to_string(half[3], 30)},
                               {"expected", to_string(expected, 30)},
                               {"rel_error", to_string(rel, 6)},
                               {"tolerance", "1e-20"}};

  rep["correspondence"] = json::array();
  for (unsigned k : {1u, 2u, 3u}) {
    z_series<real> f(13);
    for (std::size_t p = 0; p <= 13; ++p) f.coeff(p) = real(1) / real(p + 1) - real(p % 3);
    const real d = frac_correspondence_check(k, f, 12);
    ok = ok && d <= real("1e-30");
    rep["correspondence"].push_back({{"k", k}, {"N", 12}, {"max_discrepancy", to_string(d, 6)}, {"tolerance", "1e-30"}});
  }
  rep["exit_code"] = ok ? exit_ok : exit_warnings;
  detail::write_text(cfg.out_dir / "fractional.json", rep.dump(2) + "\n");
  std::cout << "fractional identities " << (ok ? "hold" : "FAIL") << "\n";
  return ok ? exit_ok : exit_warnings;
}

int run_selftest(const run_config& cfg) {
  precision_scope scope(resolve_precision(cfg, 128));
  int failed = 0;
  auto line = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    failed += !ok;
  };
  problem_spec heat;
  heat.op = operator_spec({{1, 2, polynomial::constant(1)}});
  heat.f.k = rhs_literal::kind::geometric_z;
  heat.nt = 20;
  heat.nz = 8;
  const auto pd = instantiate_problem<rational>(heat);
  const auto u = solve_fixed_point(pd);
  bool coeffs = true;
  for (unsigned n = 0; n <= 20; ++n)
    coeffs = coeffs && u.at(n, 0) == rational(factorial_exact(2 * n), factorial_exact(n));
  line("heat coefficients (2p)!/p!", coeffs);
  line("exact residual", residual(pd, u, real(1) / 4).norm == 0);
  line("polygon slope", slope_k(compute_newton_polygon(heat), heat) == 1);
  const auto c = verify_srs(sequence_handle::make_gevrey(1), 30);
  line("Gevrey certificate", c.lc_ok && c.mg_constant <= 2 && c.snq_constant <= 2);
  line("Mittag-Leffler E_1(1) = e", abs(mittag_leffler(1, mp_complex(real(1))) - mp_complex(euler_e())) < 1e-12);
  const auto lp = laplace_sum([](std::complex<double> x) { return std::exp(x); }, kernel(1), 0, {0.3, 0});
  line("Laplace of e^u", std::abs(lp.value - 1 / 0.7) < 1e-6);
  return failed ? exit_warnings : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment summability toolkit"};
  app.require_subcommand(1);
  run_config cfg;
  std::string out = ".";
  std::string kernel_k = "1";

  auto common = [&](CLI::App* sub, bool needs_spec) {
    if (needs_spec) sub->add_option("--spec", cfg.spec_path, "problem file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--precision", cfg.precision, "working precision in bits")->check(CLI::Range(64u, 1u << 20));
  };
  for (const char* name : {"solve", "polygon", "analyze"}) {
    auto* sub = app.add_subcommand(name);
    common(sub, true);
    sub->add_option("--nt", cfg.nt, "t truncation order");
    sub->add_option("--nz", cfg.nz, "z truncation order");
    sub->add_option("--pmax", cfg.pmax, "depth of the w_p / P_p recursions");
    sub->add_option("--fit-tolerance", cfg.fit_tolerance, "allowed |s_hat - 1/k|");
    sub->add_flag("--plots,!--no-plots", cfg.plots, "write polygon.svg and CSV files");
  }
  auto* kern = app.add_subcommand("kernels", "kernel e, E and m_e on grids");
  common(kern, false);
  kern->add_option("--k", kernel_k, "kernel order (rational)");
  common(app.add_subcommand("fractional", "fractional integral and derivative identities"), false);
  common(app.add_subcommand("selftest", "quick internal checks"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_validation;
  }

  cfg.out_dir = out;
  cfg.subcommand = app.get_subcommands().front()->get_name();
  try {
    if (cfg.subcommand == "kernels") {
      cfg.kernel_k = parse_rational(kernel_k);
      return run_kernels(cfg);
    }
    if (cfg.subcommand == "fractional") return run_fractional(cfg);
    if (cfg.subcommand == "selftest") return run_selftest(cfg);
  } catch (const error& e) {
    std::cerr << "msl: " << e.what() << "\n";
    return e.code() == errc::invalid_argument || e.code() == errc::syntax_error ? exit_validation : exit_internal;
  } catch (const std::exception& e) {
    std::cerr << "msl: " << e.what() << "\n";
    return exit_internal;
  }

  const auto res = run_pipeline(cfg);
  for (const auto& f : res.report["findings"]) {
    std::cerr << f["level"].get<std::string>() << " " << f["code"].get<std::string>() << ": "
              << f["message"].get<std::string>() << "\n";
  }
  if (res.report.contains("k")) std::cout << "k = " << res.report["k"]["exact"].get<std::string>() << "\n";
  std::cout << "status: " << res.report["status"].get<std::string>() << " (exit " << res.code << ")\n";
  return res.code;
}
