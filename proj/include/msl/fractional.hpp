#pragma once

// Series in z^alpha with alpha = 1/k, the Caputo-type derivative of order
// alpha, the Riemann-Liouville integral evaluated termwise, and the check
// that the Gamma-moment derivative matches the Caputo derivative after
// the substitution z -> z^{1/k}.

#include <algorithm>
#include <vector>

#include "series.hpp"

namespace msl {

/// sum_p b_p z^{p*step}, plain coefficients.
template <Field F>
class frac_series {
 public:
  frac_series(rational step, std::vector<F> coeffs) : step_(std::move(step)), b_(std::move(coeffs)) {
    if (step_ <= 0) throw error(errc::invalid_argument, "fractional grid step must be positive");
    if (b_.empty()) throw error(errc::invalid_argument, "fractional series needs at least one coefficient");
  }

  [[nodiscard]] const rational& step() const noexcept { return step_; }
  [[nodiscard]] std::size_t order() const noexcept { return b_.size() - 1; }
  [[nodiscard]] const F& operator[](std::size_t p) const { return b_.at(p); }
  [[nodiscard]] const std::vector<F>& coeffs() const noexcept { return b_; }
  /// Exponent of slot p.
  [[nodiscard]] rational exponent(std::size_t p) const { return step_ * p; }

  friend bool operator==(const frac_series& a, const frac_series& b) {
    return a.step_ == b.step_ && a.b_ == b.b_;
  }

 private:
  rational step_;
  std::vector<F> b_;
};

/// Reads a z-series as a series on the grid 1/k by substituting z -> z^{1/k}.
template <Field F>
frac_series<F> substitute_root(const z_series<F>& f, unsigned k) {
  if (k == 0) throw error(errc::invalid_argument, "k must be positive");
  std::vector<F> b(f.coeffs().begin(), f.coeffs().begin() + static_cast<long>(f.valid_order()) + 1);
  return frac_series<F>(rational(1, k), std::move(b));
}

/// Re-expresses a series on a finer grid step/j (slots between old ones are zero).
template <Field F>
frac_series<F> refine(const frac_series<F>& f, unsigned j) {
  if (j == 0) throw error(errc::invalid_argument, "refinement factor must be positive");
  std::vector<F> b(f.order() * j + 1, F(0));
  for (std::size_t p = 0; p <= f.order(); ++p) b[p * j] = f[p];
  return frac_series<F>(f.step() / j, std::move(b));
}

template <Field F>
frac_series<F> refine(const z_series<F>& f, unsigned j) {
  return refine(substitute_root(f, 1), j);
}

namespace detail {
inline real gamma_at(const rational& x) { return gamma_fn(to_real(x)); }
}  // namespace detail

/// Caputo derivative of order `step`: with f = sum a_p z^{ap}/Gamma(1+ap),
/// returns sum a_{p+1} z^{ap}/Gamma(1+ap).
template <Field F>
frac_series<F> caputo_frac_deriv(const frac_series<F>& f) {
  if (f.order() < 1) throw error(errc::order_exhausted, "Caputo derivative needs at least two slots");
  std::vector<F> out;
  out.reserve(f.order());
  for (std::size_t p = 0; p < f.order(); ++p) {
    const real ratio = detail::gamma_at(f.exponent(p + 1) + 1) / detail::gamma_at(f.exponent(p) + 1);
    out.push_back(field_traits<F>::from_real(ratio) * f[p + 1]);
  }
  return frac_series<F>(f.step(), std::move(out));
}

/// Riemann-Liouville integral of order alpha: z^b -> Gamma(1+b)/Gamma(1+alpha+b) z^{alpha+b}.
template <Field F>
frac_series<F> rl_integral(const frac_series<F>& f, const rational& alpha) {
  if (alpha <= 0) throw error(errc::invalid_argument, "integration order must be positive");
  const rational shift = alpha / f.step();
  if (!is_integer(shift))
    throw error(errc::grid_mismatch, "order " + to_string(alpha) + " is not a multiple of the grid step " +
                                         to_string(f.step()));
  const std::size_t j = numerator(shift).template convert_to<std::size_t>();
  std::vector<F> out(f.order() + j + 1, F(0));
  for (std::size_t p = 0; p <= f.order(); ++p) {
    if (field_traits<F>::is_zero(f[p])) continue;
    const rational beta = f.exponent(p);
    const real ratio = detail::gamma_at(beta + 1) / detail::gamma_at(beta + alpha + 1);
    out[p + j] = field_traits<F>::from_real(ratio) * f[p];
  }
  return frac_series<F>(f.step(), std::move(out));
}

/// On an integer grid the integral of integer order stays a z-series.
template <Field F>
z_series<F> rl_integral(const z_series<F>& f, const rational& alpha) {
  if (!is_integer(alpha)) throw error(errc::grid_mismatch, "order " + to_string(alpha) + " is not an integer");
  const frac_series<F> r = rl_integral(substitute_root(f, 1), alpha);
  z_series<F> out(std::max(f.nominal_order(), r.order()));
  for (std::size_t p = 0; p <= r.order(); ++p) out.coeff(p) = r[p];
  out.set_valid_order(std::min(out.nominal_order(), f.valid_order() + static_cast<std::size_t>(
                                                                          numerator(alpha).template convert_to<long>())));
  return out;
}

/// Largest coefficient discrepancy between (d_{m,z} f)(z^{1/k}) with
/// m(p) = Gamma(1+p/k) and the Caputo derivative of f(z^{1/k}), over the
/// first N slots.
template <Field F>
real frac_correspondence_check(unsigned k, const z_series<F>& f, std::size_t N) {
  if (f.valid_order() < N + 1)
    throw error(errc::order_exhausted, "series valid order must be at least N+1");
  const auto m = sequence_handle::make_gamma_moment(rational(k));
  const z_series<F> lhs_z = moment_deriv(f.resized(N + 1), m, 1);
  const frac_series<F> lhs = substitute_root(lhs_z, k);
  const frac_series<F> rhs = caputo_frac_deriv(substitute_root(f.resized(N + 1), k));
  real worst = 0;
  for (std::size_t p = 0; p < N; ++p) worst = max(worst, field_traits<F>::magnitude(lhs[p] - rhs[p]));
  return worst;
}

}  // namespace msl
