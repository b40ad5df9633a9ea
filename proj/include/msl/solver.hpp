#pragma once

// Formal solution of u - L u = f with L u = sum a_iq d_{m1,t}^{-i} d_{m2,z}^{q} u,
// its residual, and the g / w_p / P_p construction with the constant
// search for the bounds on the iterates.

#include <cmath>
#include <limits>

#include "operator.hpp"

namespace msl {

template <Field F>
struct operator_data {
  struct term {
    unsigned i, q;
    z_series<F> a;
  };
  std::vector<term> terms;
  unsigned kappa = 1, p_kappa = 0, q_max = 0;
  std::vector<unsigned> K;
  std::map<unsigned, unsigned> p;  ///< p_i

  [[nodiscard]] const z_series<F>* coefficient(unsigned i, unsigned q) const {
    for (const auto& t : terms)
      if (t.i == i && t.q == q) return &t.a;
    return nullptr;
  }
};

template <Field F>
operator_data<F> instantiate_operator(const operator_spec& op, std::size_t nz) {
  operator_data<F> d;
  for (const auto& t : op.terms()) d.terms.push_back({t.i, t.q, t.a.template to_series<F>(nz)});
  d.kappa = op.kappa();
  d.p_kappa = op.p_kappa();
  d.q_max = op.q_max();
  d.K = op.K();
  for (unsigned i : d.K) d.p[i] = op.p(i);
  return d;
}

/// Everything the solver needs at fixed truncation orders.
template <Field F>
struct problem_data {
  operator_data<F> op;
  sequence_handle m1, m2;
  t_series<F> f;
  std::size_t nt = 0, nz = 0, nz_pad = 0;
};

template <Field F>
problem_data<F> instantiate_problem(const problem_spec& spec, std::size_t nt, std::size_t nz) {
  problem_data<F> pd{.op = {}, .m1 = spec.m1, .m2 = spec.m2, .f = {}, .nt = nt, .nz = nz, .nz_pad = 0};
  pd.nz_pad = nz + nt * spec.op.q_max();
  pd.op = instantiate_operator<F>(spec.op, pd.nz_pad);
  pd.f = spec.f.template instantiate<F>(nt, pd.nz_pad);
  return pd;
}

template <Field F>
problem_data<F> instantiate_problem(const problem_spec& spec) {
  return instantiate_problem<F>(spec, spec.nt, spec.nz);
}

/// L u; t-integrals drop what falls beyond the t-order.
template <Field F>
t_series<F> apply_operator(const problem_data<F>& pd, const t_series<F>& u) {
  t_series<F> out = zero_like(u);
  for (const auto& t : pd.op.terms) {
    if (t.a.is_zero()) continue;
    const t_series<F> it = moment_integral(u, pd.m1, axis::t, t.i, false);
    out = out + t.a * moment_deriv(it, pd.m2, axis::z, t.q);
  }
  return out;
}

/// Neumann partial sums f + L f + L^2 f + ...; every application of L
/// raises the t-valuation, so N_t + 1 terms determine u through t^{N_t}.
/// Returned at the padded z-order.
template <Field F>
t_series<F> solve_fixed_point(const problem_data<F>& pd) {
  t_series<F> term = pd.f;
  t_series<F> u = term;
  for (std::size_t j = 1; j <= pd.nt; ++j) {
    term = apply_operator(pd, term);
    // t-coefficients below t^j of L^j f vanish identically.
    for (std::size_t n = 0; n < j && n < term.length(); ++n) {
      term.term(n) = z_series<F>(pd.nz_pad);
    }
    bool zero = true;
    for (std::size_t n = j; n < term.length() && zero; ++n) zero = term[n].is_zero();
    if (zero) break;
    u = u + term;
  }
  return u;
}

/// Same solution by direct recursion on the t-index:
/// u_n = f_n + sum a_iq (m1(n-i)/m1(n)) d_{m2,z}^q u_{n-i}.
template <Field F>
t_series<F> solve_triangular(const problem_data<F>& pd) {
  std::vector<z_series<F>> u;
  for (std::size_t n = 0; n <= pd.nt; ++n) {
    z_series<F> un = pd.f[n];
    for (const auto& t : pd.op.terms) {
      if (t.i > n || t.a.is_zero()) continue;
      const z_series<F>& prev = u[n - t.i];
      if (prev.is_zero()) {
        un.set_valid_order(std::min(un.valid_order(), prev.valid_order() >= t.q ? prev.valid_order() - t.q : 0));
        continue;
      }
      un = un + moment_ratio<F>(pd.m1, n - t.i, n) * (t.a * moment_deriv(prev, pd.m2, t.q));
    }
    u.push_back(std::move(un));
  }
  return t_series<F>(std::move(u));
}

template <Field F>
t_series<F> truncate_z(const t_series<F>& u, std::size_t nz) {
  std::vector<z_series<F>> out;
  for (const auto& s : u.terms()) out.push_back(s.resized(nz));
  return t_series<F>(std::move(out));
}

template <Field F>
struct residual_result {
  t_series<F> r;         ///< u - L u - f through (N_t, N_z)
  real norm;             ///< max_n ||r_n|| at r~
  real relative;         ///< max_n ||r_n|| / (||u_n|| + ||(Lu)_n|| + ||f_n||)
  real rtilde;
};

/// Residual of a padded solution, measured at r~ (default r/2).
template <Field F>
residual_result<F> residual(const problem_data<F>& pd, const t_series<F>& u, const real& rtilde) {
  const t_series<F> lu = apply_operator(pd, u);
  const t_series<F> r = u - lu - pd.f;
  residual_result<F> out{truncate_z(r, pd.nz), real(0), real(0), rtilde};
  for (std::size_t n = 0; n < r.length(); ++n) {
    const real rn = norm_rtilde(r[n].resized(pd.nz), rtilde);
    const real scale = norm_rtilde(u[n].resized(pd.nz), rtilde) + norm_rtilde(lu[n].resized(pd.nz), rtilde) +
                       norm_rtilde(pd.f[n].resized(pd.nz), rtilde);
    out.norm = max(out.norm, rn);
    if (rn > 0) out.relative = max(out.relative, rn / scale);
  }
  return out;
}

// ---------------------------------------------------------------------------
// g and the w_p iterates

/// sum_{n < p_kappa} u_n(t) z^n.
template <Field F>
t_series<F> low_part(const problem_data<F>& pd, const t_series<F>& u) {
  std::vector<z_series<F>> out;
  for (const auto& s : u.terms()) {
    z_series<F> low(pd.nz_pad);
    for (std::size_t n = 0; n < pd.op.p_kappa && n <= s.valid_order(); ++n) low.coeff(n) = s[n];
    out.push_back(std::move(low));
  }
  return t_series<F>(std::move(out));
}

/// g = (1/a_{kappa p_kappa}) (U_0 - L U_0 - f) with U_0 the low part of u.
template <Field F>
t_series<F> build_g(const problem_data<F>& pd, const t_series<F>& u) {
  const z_series<F>* lead = pd.op.coefficient(pd.op.kappa, pd.op.p_kappa);
  const z_series<F> inv = ps_invert_unit(*lead);
  const t_series<F> u0 = low_part(pd, u);
  return inv * (u0 - apply_operator(pd, u0) - pd.f);
}

/// w_0 = g; w_{p+1} = (b d_t^kappa d_z^{-p_kappa} - sum_{i,q in Q_i} b_iq d_t^{kappa-i} d_z^{q-p_kappa}) w_p.
template <Field F>
std::vector<t_series<F>> w_sequence(const problem_data<F>& pd, const t_series<F>& g, std::size_t P) {
  const auto& op = pd.op;
  const z_series<F> b = ps_invert_unit(*op.coefficient(op.kappa, op.p_kappa));
  struct scaled {
    unsigned dt, iz;
    z_series<F> b;
  };
  std::vector<scaled> rest;
  for (unsigned i : op.K) {
    const unsigned top = i == op.kappa ? op.p_kappa : op.p.at(i) + 1;
    for (unsigned q = 0; q < top; ++q)
      if (const auto* a = op.coefficient(i, q); a && !a->is_zero())
        rest.push_back({op.kappa - i, op.p_kappa - q, *a * b});
  }
  std::vector<t_series<F>> w{g};
  for (std::size_t p = 0; p < P; ++p) {
    const t_series<F>& cur = w.back();
    t_series<F> next = b * moment_integral(moment_deriv(cur, pd.m1, axis::t, op.kappa), pd.m2, axis::z,
                                           op.p_kappa, false);
    for (const auto& s : rest)
      next = next - s.b * moment_integral(moment_deriv(cur, pd.m1, axis::t, s.dt), pd.m2, axis::z, s.iz, false);
    w.push_back(std::move(next));
  }
  return w;
}

struct reconstruction_result {
  real max_abs;           ///< max |u_{n,m} - reconstructed_{n,m}|
  real max_rel;           ///< same, relative to max(1, |u_{n,m}|)
  std::size_t checked = 0;
  std::size_t max_t = 0;  ///< largest t-index inside the checked region
};

/// Compares u with U_0 + d_z^{-p_kappa} d_t^{kappa} sum_{p <= P} w_p on the
/// coefficients (n, m), m <= N_z, that the truncated sum already fixes:
/// m < p_kappa, or m - p_kappa <= P and n + kappa (1 + m - p_kappa) <= N_t.
template <Field F>
reconstruction_result reconstruction_check(const problem_data<F>& pd, const t_series<F>& u,
                                           const std::vector<t_series<F>>& w) {
  const auto& op = pd.op;
  const std::size_t P = w.size() - 1;
  const t_series<F> u0 = low_part(pd, u);
  std::vector<t_series<F>> d;
  for (const auto& wp : w) {
    if (wp.length() <= op.kappa) break;
    d.push_back(moment_integral(moment_deriv(wp, pd.m1, axis::t, op.kappa), pd.m2, axis::z, op.p_kappa, false));
  }
  reconstruction_result out{real(0), real(0), 0, 0};
  for (std::size_t m = 0; m <= pd.nz; ++m) {
    for (std::size_t n = 0; n <= pd.nt; ++n) {
      if (m >= op.p_kappa) {
        const std::size_t j = m - op.p_kappa;
        if (j > P || n + op.kappa * (1 + j) > pd.nt) continue;
      }
      F value = u0.at(n, m);
      for (const auto& dp : d)
        if (n < dp.length()) value += dp.at(n, m);
      const real diff = field_traits<F>::magnitude(value - u.at(n, m));
      out.max_abs = max(out.max_abs, diff);
      out.max_rel = max(out.max_rel, diff / max(real(1), field_traits<F>::magnitude(u.at(n, m))));
      ++out.checked;
      out.max_t = std::max(out.max_t, n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Majorant polynomials and constants

/// Data of the P_p recursion: p_kappa and, for every i in K' (p_i >= 1),
/// the pair (p_i, Q_i).
struct majorant_shape {
  unsigned p_kappa = 0;
  struct part {
    unsigned p_i;
    std::vector<unsigned> Q;
  };
  std::vector<part> parts;
};

inline majorant_shape majorant_shape_of(const operator_spec& op) {
  majorant_shape s;
  s.p_kappa = op.p_kappa();
  for (unsigned i : op.K()) {
    const unsigned pi = op.p(i);
    if (pi < 1) continue;
    majorant_shape::part part{pi, {}};
    const unsigned top = i == op.kappa() ? s.p_kappa : pi + 1;
    for (unsigned q = 0; q < top; ++q) part.Q.push_back(q);
    s.parts.push_back(std::move(part));
  }
  return s;
}

/// P_0 = 1, P_{p+1} = [d^{-p_kappa} + sum_{i in K'} (M_{p_kappa p}/M_{p_kappa p + p_i})^{s2}
/// sum_{q in Q_i} d^{q - p_kappa}] P_p, with moment integrals for m2.
inline std::vector<z_series<real>> majorant_Pp(const majorant_shape& shape, const sequence_handle& m2,
                                               const sequence_handle& M, const rational& s2, std::size_t P) {
  const std::size_t nominal = std::max<std::size_t>(1, shape.p_kappa * P);
  std::vector<z_series<real>> out{z_series<real>::constant(real(1), nominal)};
  const real s = to_real(s2);
  for (std::size_t p = 0; p < P; ++p) {
    const z_series<real>& cur = out.back();
    z_series<real> next = moment_integral(cur, m2, shape.p_kappa);
    for (const auto& part : shape.parts) {
      const std::size_t a = shape.p_kappa * p;
      const real c = exp(s * (M.log_at(a) - M.log_at(a + part.p_i)));
      for (unsigned q : part.Q) next = next + c * moment_integral(cur, m2, shape.p_kappa - q);
    }
    out.push_back(std::move(next));
  }
  return out;
}

struct bound_constants {
  real F;                        ///< P_p(r~) <= F^p r~^p / m2(p_kappa p)
  std::vector<real> F_by_depth;  ///< F restricted to p <= P' for P' = 1..P
  real B, C, K;                  ///< ||w_{p,n}|| bound constants
  std::size_t depth_n = 0, depth_p = 0;
  std::vector<real> rtilde;
  bool search_ok = false;        ///< false when the optimum sits on the search-grid edge
  bool verified = false;         ///< every inequality rechecked at working precision
  std::size_t checked = 0;
};

struct constant_search_config {
  std::vector<real> rtilde = {real(1) / 16, real(1) / 8, real(1) / 4};
  int grid_steps = 64;  ///< B', K' range over 2^{j/4}, j = 0..grid_steps
};

/// Empirical constants for the majorant bound and for
/// m1(n) ||w_{p,n}||_{r~} <= B^p C K^{n + kappa p} M_{floor(n p_kappa/kappa) + p_kappa p}^{s2} P_p(r~)
/// over n <= N, p <= P. ||w_{p,n}|| is the norm of the t^n coefficient of w_p.
template <Field F>
bound_constants estimate_constants(const std::vector<t_series<F>>& w, const std::vector<z_series<real>>& Pp,
                                   const sequence_handle& m1, const sequence_handle& m2, const sequence_handle& M,
                                   const rational& s2, unsigned kappa, unsigned p_kappa, std::size_t N,
                                   const constant_search_config& cfg = {}) {
  const std::size_t P = std::min(w.size(), Pp.size()) - 1;
  bound_constants out;
  out.depth_n = N;
  out.depth_p = P;
  out.rtilde = cfg.rtilde;
  const real s = to_real(s2);

  // Majorant constant F.
  real Fmax = 1;
  for (std::size_t p = 1; p <= P; ++p) {
    for (const real& rt : cfg.rtilde) {
      const real v = Pp[p].evaluate(rt) * m2(p_kappa * p) / pow(rt, static_cast<long>(p));
      Fmax = max(Fmax, exp(log(v) / real(p)));
    }
    out.F_by_depth.push_back(Fmax);
  }
  out.F = Fmax;

  // log of LHS / (M^{s2} P_p(r~)) for every (n, p, r~).
  struct sample {
    std::size_t n, p;
    double value;
  };
  std::vector<sample> samples;
  for (std::size_t p = 0; p <= P; ++p) {
    for (std::size_t n = 0; n <= N; ++n) {
      if (n >= w[p].length())
        throw error(errc::order_exhausted, "w_" + std::to_string(p) + " has no t^" + std::to_string(n) + " coefficient");
      for (const real& rt : cfg.rtilde) {
        const real lhs = m1(n) / m1(0) * norm_rtilde(w[p][n], rt);
        if (lhs == 0) continue;
        const std::size_t idx = n * p_kappa / kappa + p_kappa * p;
        const real v = log(lhs) - s * M.log_at(idx) - log(Pp[p].evaluate(rt));
        samples.push_back({n, p, v.template convert_to<double>()});
      }
    }
  }

  const double step = std::log(2.0) / 4;
  const int J = cfg.grid_steps;
  double best = std::numeric_limits<double>::infinity();
  int best_b = 0, best_k = 0;
  for (int jb = 0; jb <= J; ++jb) {
    for (int jk = 0; jk <= J; ++jk) {
      const double lb = jb * step, lk = jk * step;
      double c = -std::numeric_limits<double>::infinity();
      for (const auto& x : samples)
        c = std::max(c, x.value - x.p * lb - (static_cast<double>(x.n) + kappa * x.p) * lk);
      const double obj = c + P * lb + (static_cast<double>(N) + kappa * P) * lk;
      if (obj < best - 1e-12) {
        best = obj;
        best_b = jb;
        best_k = jk;
      }
    }
  }
  out.search_ok = std::isfinite(best) && best_b < J && best_k < J;
  out.B = pow(real(2), real(best_b) / 4);
  out.K = pow(real(2), real(best_k) / 4);

  // C' at working precision, then recheck every inequality.
  real C = 0;
  auto rhs_unit = [&](std::size_t n, std::size_t p, const real& rt) {
    const std::size_t idx = n * p_kappa / kappa + p_kappa * p;
    return pow(out.B, static_cast<long>(p)) * pow(out.K, static_cast<long>(n + kappa * p)) *
           exp(s * M.log_at(idx)) * Pp[p].evaluate(rt);
  };
  for (std::size_t p = 0; p <= P; ++p)
    for (std::size_t n = 0; n <= N; ++n)
      for (const real& rt : cfg.rtilde) C = max(C, m1(n) / m1(0) * norm_rtilde(w[p][n], rt) / rhs_unit(n, p, rt));
  out.C = C;
  bool ok = true;
  for (std::size_t p = 0; p <= P; ++p)
    for (std::size_t n = 0; n <= N; ++n)
      for (const real& rt : cfg.rtilde) {
        ++out.checked;
        if (m1(n) / m1(0) * norm_rtilde(w[p][n], rt) > C * rhs_unit(n, p, rt) * (1 + 64 * epsilon())) ok = false;
      }
  out.verified = ok;
  return out;
}

}  // namespace msl
