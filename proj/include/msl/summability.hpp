#pragma once

// Moment Borel transform, growth estimates on coefficient norms, the
// Gevrey-type kernel e(x) = k x^k exp(-x^k) with its Mittag-Leffler
// function, and numeric Laplace sums along a ray.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <complex>
#include <functional>

#include "solver.hpp"

namespace msl {

/// t-coefficient n divided by m_e(n).
template <Field F>
t_series<F> moment_borel(const t_series<F>& u, const sequence_handle& me) {
  std::vector<z_series<F>> out;
  out.reserve(u.length());
  for (std::size_t n = 0; n < u.length(); ++n) {
    if constexpr (field_traits<F>::exact) {
      auto e = me.exact(n);
      if (!e) throw error(errc::not_exact, "m_e = " + me.describe() + " is not exact");
      out.push_back(F(1 / *e) * u[n]);
    } else {
      out.push_back(field_traits<F>::from_real(1 / me(n)) * u[n]);
    }
  }
  return t_series<F>(std::move(out));
}

/// Coefficients of z^m as a function of the t-index.
template <Field F>
std::vector<real> z_coefficient_magnitudes(const t_series<F>& u, std::size_t m) {
  std::vector<real> out;
  for (std::size_t n = 0; n < u.length(); ++n)
    out.push_back(m <= u[n].valid_order() ? field_traits<F>::magnitude(u[n][m]) : real(0));
  return out;
}

namespace detail {

/// Least squares via modified Gram-Schmidt; nullopt when the columns are
/// numerically dependent.
inline std::optional<std::vector<real>> least_squares(std::vector<std::vector<real>> cols, const std::vector<real>& y) {
  const std::size_t k = cols.size(), n = y.size();
  std::vector<std::vector<real>> q(k);
  std::vector<std::vector<real>> r(k, std::vector<real>(k, real(0)));
  const real tol = pow(real(2), -static_cast<long>(precision_bits() / 3));
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<real> v = cols[j];
    real orig = 0;
    for (const auto& x : v) orig += x * x;
    orig = sqrt(orig);
    for (std::size_t i = 0; i < j; ++i) {
      real d = 0;
      for (std::size_t t = 0; t < n; ++t) d += q[i][t] * v[t];
      r[i][j] = d;
      for (std::size_t t = 0; t < n; ++t) v[t] -= d * q[i][t];
    }
    real nv = 0;
    for (const auto& x : v) nv += x * x;
    nv = sqrt(nv);
    if (orig == 0 || nv <= tol * orig) return std::nullopt;
    r[j][j] = nv;
    for (auto& x : v) x /= nv;
    q[j] = std::move(v);
  }
  std::vector<real> qy(k, real(0));
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t t = 0; t < n; ++t) qy[j] += q[j][t] * y[t];
  std::vector<real> beta(k, real(0));
  for (std::size_t j = k; j-- > 0;) {
    real s = qy[j];
    for (std::size_t i = j + 1; i < k; ++i) s -= r[j][i] * beta[i];
    beta[j] = s / r[j][j];
  }
  return beta;
}

}  // namespace detail

struct radius_result {
  real radius;            ///< meaningful when !infinite
  bool infinite = false;  ///< norms decay super-geometrically
  real growth_curvature;  ///< coefficient of p log p in the log-norm fit
  std::size_t p_min = 0, p_max = 0;
};

/// Cauchy-Hadamard estimate from log c_p / p extrapolated linearly in 1/p
/// over the upper half of the usable terms. Super-geometric behaviour is
/// read off the p log p coefficient of a fit of log c_p on
/// (1, p, p log p, log p) from p = 4 on; neighbouring terms are averaged
/// geometrically first so that parity oscillations do not leak into it.
inline radius_result radius_estimate(const std::vector<real>& norms) {
  std::size_t last = 0, usable = 0;
  for (std::size_t p = 1; p < norms.size(); ++p)
    if (norms[p] > 0) {
      ++usable;
      last = p;
    }
  if (usable < 12) throw error(errc::insufficient_terms, "radius estimate needs at least 12 nonzero coefficients");
  radius_result out;
  out.p_max = last;
  out.p_min = std::max<std::size_t>(1, last / 2);

  std::vector<real> one, p1, plogp, logp, ly;
  auto add = [&](const real& pr, const real& l) {
    one.emplace_back(1);
    p1.push_back(pr);
    plogp.push_back(pr * log(pr));
    logp.push_back(log(pr));
    ly.push_back(l);
  };
  for (std::size_t p = 4; p < last; ++p)
    if (norms[p] > 0 && norms[p + 1] > 0) add(real(p) + real(1) / 2, (log(norms[p]) + log(norms[p + 1])) / 2);
  if (ly.size() < 8) {
    one.clear(), p1.clear(), plogp.clear(), logp.clear(), ly.clear();
    for (std::size_t p = 1; p <= last; ++p)
      if (norms[p] > 0) add(real(p), log(norms[p]));
  }
  const auto curv = detail::least_squares({one, p1, plogp, logp}, ly);
  if (!curv) throw error(errc::degenerate_fit, "too few terms to judge the growth");
  out.growth_curvature = (*curv)[2];
  if (out.growth_curvature > real("0.1")) {
    out.radius = 0;
    return out;
  }
  if (out.growth_curvature < real("-0.1")) {
    out.infinite = true;
    out.radius = 0;
    return out;
  }

  std::vector<real> ones, inv, y;
  for (std::size_t p = out.p_min; p <= last; ++p) {
    if (norms[p] <= 0) continue;
    ones.emplace_back(1);
    inv.push_back(1 / real(p));
    y.push_back(log(norms[p]) / real(p));
  }
  const auto lin = detail::least_squares({ones, inv}, y);
  if (!lin) throw error(errc::degenerate_fit, "radius window too short");
  out.radius = exp(-(*lin)[0]);
  return out;
}

template <Field F>
radius_result radius_estimate(const t_series<F>& u, const real& rtilde) {
  return radius_estimate(norms_rtilde(u, rtilde));
}

struct growth_fit_result {
  real s_hat, logC, logA, rms;
  std::size_t p_min = 0, p_max = 0;
  std::vector<std::size_t> p;
  std::vector<real> log_norm, fitted;
};

/// log ||u_p|| ~ logC + p logA + s log M_p over p_min..p_max (zero norms skipped).
inline growth_fit_result growth_fit(const std::vector<real>& norms, const sequence_handle& M, std::size_t p_min = 4,
                                    std::optional<std::size_t> p_max = std::nullopt) {
  std::size_t usable = 0;
  for (const auto& x : norms) usable += x > 0;
  if (usable < 12) throw error(errc::insufficient_terms, "growth fit needs at least 12 nonzero norms");
  growth_fit_result out;
  out.p_min = p_min;
  out.p_max = std::min(p_max.value_or(norms.size() - 1), norms.size() - 1);
  std::vector<real> one, p1, lm;
  for (std::size_t p = p_min; p <= out.p_max; ++p) {
    if (norms[p] <= 0) continue;
    out.p.push_back(p);
    out.log_norm.push_back(log(norms[p]));
    one.emplace_back(1);
    p1.emplace_back(p);
    lm.push_back(M.log_at(p));
  }
  if (out.p.size() < 8) throw error(errc::degenerate_fit, "growth-fit window has fewer than 8 points");
  const auto beta = detail::least_squares({one, p1, lm}, out.log_norm);
  if (!beta) throw error(errc::degenerate_fit, "regressors 1, p, log M_p are dependent on the window");
  out.logC = (*beta)[0];
  out.logA = (*beta)[1];
  out.s_hat = (*beta)[2];
  real ss = 0;
  for (std::size_t j = 0; j < out.p.size(); ++j) {
    out.fitted.push_back(out.logC + out.logA * p1[j] + out.s_hat * lm[j]);
    ss += (out.fitted[j] - out.log_norm[j]) * (out.fitted[j] - out.log_norm[j]);
  }
  out.rms = sqrt(ss / real(out.p.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Kernel

/// E(z) = sum z^p / Gamma(1 + s p). Stops once a term drops below eps times
/// the partial sum; DomainGuard when the cap is hit or cancellation eats
/// half of the working digits.
inline mp_complex mittag_leffler(const rational& s, const mp_complex& z, std::size_t cap = 4000) {
  if (s <= 0) throw error(errc::invalid_argument, "Mittag-Leffler parameter must be positive");
  const real sr = to_real(s);
  const real eps = epsilon();
  mp_complex sum(0), zp(1);
  real biggest = 0;
  for (std::size_t p = 0; p < cap; ++p) {
    const mp_complex term = zp * mp_complex(1 / gamma_fn(1 + sr * real(p)));
    sum += term;
    const real mag = abs(term);
    biggest = max(biggest, mag);
    if (p > 0 && (mag <= eps * abs(sum) || (mag == 0 && abs(z) == 0))) {
      if (biggest > abs(sum) * pow(real(2), static_cast<long>(precision_bits() / 2)))
        throw error(errc::domain_guard, "cancellation in the Mittag-Leffler series; |z| too large");
      return sum;
    }
    zp *= z;
  }
  throw error(errc::domain_guard, "Mittag-Leffler series did not settle within " + std::to_string(cap) + " terms");
}

struct kernel {
  rational k;

  explicit kernel(rational k_) : k(std::move(k_)) {
    if (k <= 0) throw error(errc::invalid_argument, "kernel order must be positive");
  }

  [[nodiscard]] double kd() const { return k.convert_to<double>(); }

  /// e(x) = k x^k exp(-x^k)
  [[nodiscard]] std::complex<double> e(std::complex<double> x) const {
    const std::complex<double> xk = std::pow(x, kd());
    return kd() * xk * std::exp(-xk);
  }

  /// m_e(p) = Gamma(1 + p/k)
  [[nodiscard]] real m_e(const real& p) const { return gamma_fn(1 + p / to_real(k)); }
  [[nodiscard]] sequence_handle moments() const { return sequence_handle::make_gamma_moment(k); }

  [[nodiscard]] mp_complex E(const mp_complex& z) const { return mittag_leffler(1 / k, z); }

  /// int_0^inf t^{p-1} e(t) dt by quadrature, with its error estimate.
  [[nodiscard]] std::pair<double, double> quadrature_moment(double p) const {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double kk = kd();
    auto f = [&](double t) {
      if (t <= 0 || !std::isfinite(t)) return 0.0;
      return std::exp(std::log(kk) + (p + kk - 1) * std::log(t) - std::pow(t, kk));
    };
    double err = 0, l1 = 0;
    const double v = integrator.integrate(f, 1e-14, &err, &l1);
    return {v, err};
  }
};

/// Kernel order for the base sequence rescaled by 1/k: M_p^{1/k} ~ Gamma(1 + p alpha/k).
inline rational kernel_order(const rational& k, const rational& alpha) { return k / alpha; }

struct laplace_result {
  std::complex<double> value;
  double error_estimate = 0;
  double u_max = 0;
};

/// int_0^{inf e^{i tau}} e(u/z) phi(u) du/u by adaptive Gauss-Kronrod on
/// [0, U_max], U_max taken from the kernel decay (and extended while phi
/// keeps the integrand large).
inline laplace_result laplace_sum(const std::function<std::complex<double>(std::complex<double>)>& phi,
                                  const kernel& ker, double tau, std::complex<double> z, double tol = 1e-12) {
  const double k = ker.kd();
  const double pi_d = 3.14159265358979323846;
  if (std::abs(z) == 0) throw error(errc::invalid_argument, "laplace_sum at z = 0");
  double gap = std::arg(z) - tau;
  gap = std::remainder(gap, 2 * pi_d);
  if (std::abs(gap) >= pi_d / (2 * k))
    throw error(errc::direction_out_of_domain, "|arg z - tau| must be below pi/(2k)");
  const std::complex<double> dir = std::polar(1.0, tau);
  auto integrand = [&](double rho) -> std::complex<double> {
    if (rho <= 0) return 0;
    const std::complex<double> u = rho * dir;
    return ker.e(u / z) * phi(u) / rho;
  };
  const double c = std::cos(k * gap);
  double U = std::abs(z) * std::pow(60.0 / c, 1.0 / k);
  for (int grow = 0;; ++grow) {
    if (std::abs(integrand(U)) * U < 1e-18) break;
    if (grow == 20) throw error(errc::quadrature_budget, "integrand does not decay along the ray");
    U *= 1.5;
  }
  using boost::math::quadrature::gauss_kronrod;
  double er = 0, ei = 0;
  const double re = gauss_kronrod<double, 61>::integrate([&](double r) { return integrand(r).real(); }, 0.0, U, 20,
                                                          tol, &er);
  const double im = gauss_kronrod<double, 61>::integrate([&](double r) { return integrand(r).imag(); }, 0.0, U, 20,
                                                          tol, &ei);
  const double scale = std::max(1.0, std::abs(std::complex<double>(re, im)));
  if (er + ei > 1e3 * tol * scale)
    throw error(errc::quadrature_budget, "ray quadrature did not reach the requested tolerance");
  return {{re, im}, er + ei, U};
}

// ---------------------------------------------------------------------------
// Report

struct coefficient_fit {
  std::size_t m;
  bool gating;  ///< lowest nonzero z-coefficient; decides pass/fail
  std::optional<growth_fit_result> fit;
  std::string error;
  bool pass = false;
};

struct laplace_check {
  std::size_t p;  ///< phi = u^p, exact value m_e(p) z^p
  std::complex<double> z, value, expected;
  double rel_error = 0;
  std::string error;
};

struct summability_report {
  std::vector<finding> findings;
  std::optional<newton_polygon> polygon;
  std::optional<rational> k;
  std::optional<rational> kernel_k;  ///< k' with m_e(p) = Gamma(1 + p/k')
  std::optional<real> omega;         ///< alpha / k
  real expected_s;                   ///< 1/k, or 0 when no positive slope (convergent regime)
  double tolerance = 0.05;
  std::vector<coefficient_fit> fits;
  std::optional<radius_result> borel_radius;
  std::string borel_error;
  std::vector<real> borel_z0;  ///< |t^p z^0 coefficient| of the Borel transform
  std::vector<laplace_check> laplace;
  std::optional<bound_constants> constants;
  std::string constants_error;
  std::optional<reconstruction_result> reconstruction;
  std::size_t majorant_depth = 0;

  [[nodiscard]] bool has_warnings() const {
    for (const auto& f : findings)
      if (f.level == severity::warning) return true;
    return false;
  }
};

namespace detail {
inline void warn(summability_report& r, std::string code, std::string msg) {
  r.findings.push_back({severity::warning, std::move(code), std::move(msg)});
}
}  // namespace detail

/// Assembles polygon, growth fits, Borel radius, Laplace spot-checks and
/// majorant constants for a solved problem. Component failures become
/// findings; only validation errors stop the report early.
inline summability_report make_summability_report(const problem_spec& spec, const problem_data<real>& pd,
                                                  const t_series<real>& u_padded) {
  summability_report rep;
  rep.tolerance = spec.fit_tolerance;
  bool convergent = false;
  for (auto& f : validate_spec(spec)) {
    if (f.code == "NoPositiveSlope" && f.level == severity::error) {
      convergent = true;
      f.level = severity::warning;
    }
    rep.findings.push_back(std::move(f));
  }
  if (has_errors(rep.findings)) return rep;

  rep.polygon = compute_newton_polygon(spec);
  const std::optional<rational> alpha = spec.base.nominal_order();
  if (!convergent) {
    try {
      rep.k = slope_k(*rep.polygon, spec);
    } catch (const error& e) {
      rep.findings.push_back({severity::error, std::string(to_string(e.code())), e.what()});
      return rep;
    }
    rep.expected_s = 1 / to_real(*rep.k);
    if (alpha) {
      rep.kernel_k = kernel_order(*rep.k, *alpha);
      rep.omega = to_real(*alpha / *rep.k);
      if (*rep.omega >= 2) {
        rep.findings.push_back({severity::error, "KernelOrderTooLarge",
                                "omega = alpha/k >= 2 needs a ramified kernel; analysis refused"});
        return rep;
      }
    } else {
      detail::warn(rep, "BaseOrderUnknown", "base sequence has no nominal order; using k' = k");
      rep.kernel_k = *rep.k;
    }
  } else {
    rep.expected_s = 0;
  }

  const t_series<real> u = truncate_z(u_padded, pd.nz);

  // growth fits per z-coefficient; the first one that can be fitted decides
  std::optional<std::size_t> gate;
  for (std::size_t m = 0; m <= std::min<std::size_t>(pd.nz, 3); ++m) {
    coefficient_fit cf{m, false, std::nullopt, "", false};
    const auto mags = z_coefficient_magnitudes(u, m);
    try {
      cf.fit = growth_fit(mags, spec.base);
      cf.pass = convergent ? cf.fit->s_hat <= real(spec.fit_tolerance)
                           : abs(cf.fit->s_hat - rep.expected_s) <= real(spec.fit_tolerance);
      if (!gate) {
        gate = m;
        cf.gating = true;
        if (!cf.pass)
          detail::warn(rep, "GrowthFitOutOfTolerance",
                       "s_hat = " + to_string(cf.fit->s_hat, 6) + " at z^" + std::to_string(m));
      }
    } catch (const error& e) {
      cf.error = e.what();
    }
    rep.fits.push_back(std::move(cf));
  }
  if (!gate) detail::warn(rep, "InsufficientTerms", "no z-coefficient has enough nonzero terms for a growth fit");

  // Borel transform along t
  const rational kk = rep.kernel_k.value_or(1);
  const kernel ker(kk);
  try {
    const auto b = moment_borel(u, ker.moments());
    rep.borel_z0 = z_coefficient_magnitudes(b, gate.value_or(0));
    rep.borel_radius = radius_estimate(rep.borel_z0);
    if (!convergent && (rep.borel_radius->infinite || rep.borel_radius->radius <= 0))
      detail::warn(rep, "BorelRadiusNotPositiveFinite", "Borel transform does not look like a convergent series");
  } catch (const error& e) {
    rep.borel_error = std::string(e.what());
    detail::warn(rep, std::string(to_string(e.code())), e.what());
  }

  // Laplace spot-checks on monomials: T(u^p)(z) = m_e(p) z^p
  const std::complex<double> z0 = std::polar(0.3, spec.direction);
  for (std::size_t p = 0; p <= 3; ++p) {
    laplace_check lc{p, z0, {}, {}, 0, ""};
    lc.expected = ker.m_e(real(p)).convert_to<double>() * std::pow(z0, static_cast<double>(p));
    try {
      lc.value = laplace_sum([p](std::complex<double> x) { return std::pow(x, static_cast<double>(p)); }, ker,
                             spec.direction, z0)
                     .value;
      lc.rel_error = std::abs(lc.value - lc.expected) / std::abs(lc.expected);
      if (lc.rel_error > 1e-6) detail::warn(rep, "LaplaceMismatch", "T(u^" + std::to_string(p) + ") off");
    } catch (const error& e) {
      lc.error = std::string(e.what());
      detail::warn(rep, std::string(to_string(e.code())), e.what());
    }
    rep.laplace.push_back(std::move(lc));
  }

  // majorant constants and the reconstruction identity
  if (!convergent) {
    const unsigned kap = pd.op.kappa, pk = pd.op.p_kappa;
    const std::size_t N = std::min<std::size_t>(12, pd.nt / 2);
    const std::size_t room = pd.nt >= N + 1 ? (pd.nt - N) / kap : 0;
    const std::size_t P = std::min<std::size_t>(spec.pmax, room);
    rep.majorant_depth = P;
    try {
      if (P < 1) throw error(errc::order_exhausted, "t-order too small for any w_p iterate");
      const auto w = w_sequence(pd, build_g(pd, u_padded), P);
      rep.reconstruction = reconstruction_check(pd, u_padded, w);
      if (rep.reconstruction->max_rel > pow(real(2), -static_cast<long>(precision_bits() / 2)))
        detail::warn(rep, "ReconstructionMismatch", "w_p sum does not reproduce u");
      const auto Pp = majorant_Pp(majorant_shape_of(spec.op), spec.m2, spec.base, spec.s2, P);
      rep.constants = estimate_constants(w, Pp, spec.m1, spec.m2, spec.base, spec.s2, kap, pk, N);
      if (!rep.constants->search_ok) detail::warn(rep, "SearchBudgetExceeded", "constant search hit the grid edge");
      if (!rep.constants->verified) detail::warn(rep, "BoundNotVerified", "w_p bound fails a recheck");
      const auto& fd = rep.constants->F_by_depth;
      if (fd.size() >= 3) {
        const real drift = abs(fd.back() - fd[fd.size() * 3 / 4 - 1]) / fd[fd.size() * 3 / 4 - 1];
        if (drift > real("0.1")) detail::warn(rep, "MajorantDrift", "F drifts by more than 10% with depth");
      }
    } catch (const error& e) {
      rep.constants_error = std::string(e.what());
      detail::warn(rep, std::string(to_string(e.code())), e.what());
    }
  }
  return rep;
}

}  // namespace msl
