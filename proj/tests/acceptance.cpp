// One line per acceptance criterion; exit status is the number of failures.

#include <msl/msl.hpp>

#include <chrono>
#include <cstdio>
#include <random>

using namespace msl;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %d. %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

std::string fmt(const real& x) { return to_string(x, 6); }
std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

polynomial one() { return polynomial::constant(1); }

problem_spec heat_spec() {
  problem_spec s;
  s.op = operator_spec({{1, 2, one()}});
  s.f.k = rhs_literal::kind::geometric_z;
  s.nt = 40;
  s.nz = 20;
  return s;
}

problem_spec exp_spec() {
  problem_spec s;
  s.op = operator_spec({{1, 0, polynomial::constant(rational(3, 2))}});
  s.f.k = rhs_literal::kind::constant;
  s.nt = 40;
  s.nz = 20;
  return s;
}

void polygon_criterion() {
  const auto t0 = clock_type::now();
  std::mt19937 rng(20240611);
  std::uniform_int_distribution<unsigned> kap(1, 6), pk(1, 10);
  std::uniform_int_distribution<int> sd(1, 5);
  int checked = 0, agree = 0;
  while (checked < 150) {
    const unsigned kappa = kap(rng), pkap = pk(rng);
    const rational s1(sd(rng), sd(rng)), s2(sd(rng), sd(rng));
    std::vector<operator_term> terms{{kappa, pkap, one()}};
    for (unsigned i = 1; i < kappa; ++i)
      if (rng() % 2) terms.push_back({i, std::uniform_int_distribution<unsigned>(0, i * pkap / kappa)(rng), one()});
    const operator_spec op(terms);
    const rational inv = inverse_k_closed_form(op, s1, s2);
    if (inv <= 0) continue;  // not a valid single-slope spec
    ++checked;
    try {
      if (slope_k(compute_newton_polygon(op, s1, s2), op, s1, s2) == 1 / inv) ++agree;
    } catch (const error&) {
    }
  }
  const double secs = seconds_since(t0);
  const operator_spec worked({{2, 3, one()}, {1, 1, one()}});
  const rational k2 = slope_k(compute_newton_polygon(worked, 1, 1), worked, 1, 1);
  report(1, "Newton polygon slope", agree == checked && secs < 1.0 && k2 == 2,
         std::to_string(agree) + "/" + std::to_string(checked) + " random specs agree with the closed form in " +
             fmt(secs) + " s; worked example k = " + to_string(k2));
}

void formal_solution_criterion() {
  const auto t0 = clock_type::now();
  bool ok = true;
  std::string detail;
  for (const auto& [name, spec] : {std::pair{"heat", heat_spec()}, std::pair{"exp(at)", exp_spec()}}) {
    const auto pd = instantiate_problem<real>(spec);
    const auto res = residual(pd, solve_fixed_point(pd), to_real(spec.r) / 2);
    const auto pq = instantiate_problem<rational>(spec);
    const auto exact = residual(pq, solve_fixed_point(pq), to_real(spec.r) / 2);
    ok = ok && res.relative <= 10 * epsilon() && exact.norm == 0;
    detail += std::string(name) + " residual " + fmt(res.relative) + " (exact " + fmt(exact.norm) + "); ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 10;
  report(2, "Formal solution residual", ok,
         detail + "bound 10 eps = " + fmt(10 * epsilon()) + ", " + fmt(secs) + " s");
}

void growth_criterion() {
  const auto spec = heat_spec();
  const auto pd = instantiate_problem<real>(spec);
  const auto u = truncate_z(solve_fixed_point(pd), spec.nz);
  const auto fit = growth_fit(z_coefficient_magnitudes(u, 0), spec.base);
  const real k = to_real(slope_k(compute_newton_polygon(spec), spec));
  report(3, "Growth order of the heat-type solution", abs(fit.s_hat - 1 / k) <= real("0.05") && fit.p_max == 40,
         "s_hat = " + fmt(fit.s_hat) + " on p in [" + std::to_string(fit.p_min) + ", " + std::to_string(fit.p_max) +
             "], 1/k = " + fmt(1 / k));
}

void borel_criterion() {
  const auto spec = heat_spec();
  const auto pq = instantiate_problem<rational>(spec);
  const auto b = moment_borel(truncate_z(solve_fixed_point(pq), spec.nz), sequence_handle::make_gevrey(1));
  bool binom = true;
  for (unsigned p = 0; p <= spec.nt; ++p)
    binom = binom && b.at(p, 0) == rational(factorial_exact(2 * p), factorial_exact(p) * factorial_exact(p));
  const auto r = radius_estimate(z_coefficient_magnitudes(b, 0));
  const bool ok = binom && !r.infinite && abs(r.radius - real("0.25")) <= real("0.0125");
  report(4, "Moment Borel transform", ok,
         std::string(binom ? "coefficients equal binom(2p,p)" : "coefficient mismatch") + "; radius " + fmt(r.radius));
}

void fractional_criterion() {
  precision_scope scope(128);
  const auto half = rl_integral(refine(z_series<real>::monomial(real(1), 1, 2), 2), rational(1, 2));
  const real expected = 4 / (3 * sqrt(pi()));
  const real rel = abs(half[3] - expected) / expected;
  real worst = 0;
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(-9, 9);
  for (unsigned k : {1u, 2u, 3u}) {
    z_series<real> f(13);
    for (std::size_t p = 0; p <= 13; ++p) f.coeff(p) = real(d(rng)) / real(p + 1);
    worst = max(worst, frac_correspondence_check(k, f, 12));
  }
  report(5, "Fractional identities", rel <= real("1e-20") && worst <= real("1e-30"),
         "I^{1/2} z relative error " + fmt(rel) + "; moment/Caputo discrepancy " + fmt(worst));
}

void kernel_criterion() {
  double worst = 0;
  for (int k : {1, 2, 3}) {
    const kernel ker{rational(k)};
    for (int p = 0; p <= 8; ++p) {
      const double exact = ker.m_e(real(p)).convert_to<double>();
      worst = std::max(worst, std::abs(ker.quadrature_moment(p).first - exact) / exact);
    }
  }
  const auto lp = laplace_sum([](std::complex<double> x) { return std::exp(x); }, kernel(1), 0, {0.3, 0});
  const double lerr = std::abs(lp.value - 1 / 0.7);
  const real e1 = abs(mittag_leffler(1, mp_complex(real(1))) - mp_complex(euler_e()));
  const real c2 = abs(mittag_leffler(2, mp_complex(real(1))) - mp_complex(cosh(real(1))));
  report(6, "Kernel, Laplace and Mittag-Leffler", worst <= 1e-10 && lerr <= 1e-6 && e1 <= 1e-12 && c2 <= 1e-12,
         "moment error " + fmt(worst) + "; Laplace error " + fmt(lerr) + "; E_1(1) error " + fmt(e1) +
             "; E_2(1) error " + fmt(c2));
}

void sequence_criterion() {
  const auto cert = verify_srs(sequence_handle::make_gevrey(1), 50);
  bool ok = cert.lc_ok && cert.mg_constant <= 2 && cert.snq_constant <= 2;
  bool dil = true;
  for (const rational alpha : {rational(1, 2), rational(1), rational(3, 2), rational(2), rational(3)}) {
    const auto c = verify_srs(sequence_handle::make_gevrey(alpha), 50);
    for (const auto& [d, c3] : c.dilation) dil = dil && c3 <= pow(real(d), to_real(alpha)) * (1 + 64 * epsilon());
  }
  bool witnesses = true;
  const auto g = sequence_handle::make_gevrey(1);
  for (unsigned p = 1; p <= 3; ++p)
    for (unsigned q = 1; q <= 3; ++q) {
      const auto w = floor_quotient_witness_for(g, p, q, 40);
      for (std::size_t n = 1; n <= 40; ++n) {
        const real mf = g(n * p / q), mp = exp(g.log_at(n) * real(p) / real(q));
        const real slack = 1 + pow(real(2), -static_cast<long>(precision_bits() / 2));
        witnesses = witnesses && isfinite(w.d1) && isfinite(w.d2) &&
                    mf <= w.c1 * pow(w.d1, static_cast<long>(n)) * mp * slack &&
                    mp <= w.c2 * pow(w.d2, static_cast<long>(n)) * mf * slack;
      }
    }
  ok = ok && dil && witnesses;
  report(7, "Sequence toolkit", ok,
         "Gevrey{1}: A1 = " + fmt(cert.mg_constant) + ", A2 = " + fmt(cert.snq_constant) + "; dilation " +
             (dil ? "within d^alpha" : "exceeds d^alpha") + "; floor-quotient witnesses " +
             (witnesses ? "found" : "missing"));
}

void majorant_criterion() {
  const auto spec = heat_spec();
  const auto Pp = majorant_Pp(majorant_shape_of(spec.op), spec.m2, spec.base, spec.s2, 12);
  const bool p1 = abs(Pp[1][2] - real(3) / 4) <= epsilon() && abs(Pp[1][1] - real(1) / 2) <= epsilon() &&
                  Pp[1][0] == 0 && Pp[1].degree() == 2;

  const auto pd = instantiate_problem<real>(spec);
  const auto u = solve_fixed_point(pd);
  const auto w = w_sequence(pd, build_g(pd, u), 12);
  const auto c12 = estimate_constants(w, Pp, spec.m1, spec.m2, spec.base, spec.s2, 1, 2, 12);
  const real drift = abs(c12.F_by_depth[11] - c12.F_by_depth[9]) / c12.F_by_depth[9];
  const bool f_ok = isfinite(c12.F) && drift <= real("0.1");

  const std::vector<t_series<real>> w8(w.begin(), w.begin() + 9);
  const std::vector<z_series<real>> P8(Pp.begin(), Pp.begin() + 9);
  const auto c8 = estimate_constants(w8, P8, spec.m1, spec.m2, spec.base, spec.s2, 1, 2, 12);
  const bool w_ok = c8.verified && c8.search_ok && isfinite(c8.C);
  report(8, "Majorant machinery", p1 && f_ok && w_ok,
         std::string(p1 ? "P_1 = 3/4 z^2 + z/2" : "P_1 mismatch") + "; F = " + fmt(c12.F) + " (drift " + fmt(drift) +
             "); w_p bound with B' = " + fmt(c8.B) + ", C' = " + fmt(c8.C) + ", K' = " + fmt(c8.K) + " over " +
             std::to_string(c8.checked) + " inequalities " + (c8.verified ? "holds" : "fails"));
}

void reconstruction_criterion() {
  const auto spec = heat_spec();
  const auto pq = instantiate_problem<rational>(spec);
  const auto uq = solve_fixed_point(pq);
  const auto exact = reconstruction_check(pq, uq, w_sequence(pq, build_g(pq, uq), 12));
  const auto pd = instantiate_problem<real>(spec);
  const auto ur = solve_fixed_point(pd);
  const auto approx = reconstruction_check(pd, ur, w_sequence(pd, build_g(pd, ur), 12));
  const bool ok = exact.max_abs == 0 && approx.max_rel <= 1e3 * epsilon() && exact.checked > 0;
  report(9, "Reconstruction identity", ok,
         std::to_string(exact.checked) + " coefficients up to t^" + std::to_string(exact.max_t) +
             ", exact difference " + fmt(exact.max_abs) + ", working-precision relative difference " +
             fmt(approx.max_rel));
}

}  // namespace

int main() {
  precision_scope scope(128);
  auto guarded = [](int id, const char* name, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, "Newton polygon slope", polygon_criterion);
  guarded(2, "Formal solution residual", formal_solution_criterion);
  guarded(3, "Growth order of the heat-type solution", growth_criterion);
  guarded(4, "Moment Borel transform", borel_criterion);
  guarded(5, "Fractional identities", fractional_criterion);
  guarded(6, "Kernel, Laplace and Mittag-Leffler", kernel_criterion);
  guarded(7, "Sequence toolkit", sequence_criterion);
  guarded(8, "Majorant machinery", majorant_criterion);
  guarded(9, "Reconstruction identity", reconstruction_criterion);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
