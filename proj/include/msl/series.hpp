#pragma once

// Truncated power series in z (z_series) and in t with z_series
// coefficients (t_series), moment derivatives/integrals along either axis
// and the weighted l1 norm ||f||_r~ = sum |f_n| r~^n.
//
// Coefficients are stored plainly: the t^n z^p coefficient is the number
// in front of t^n z^p, never divided by m(n) or m(p). Moment ratios are
// applied by the operators.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"
#include "sequences.hpp"

namespace msl {

enum class axis { t, z };

/// m(a)/m(b) as an element of F. Exact fields require an exact sequence.
template <Field F>
F moment_ratio(const sequence_handle& m, std::size_t a, std::size_t b) {
  if constexpr (field_traits<F>::exact) {
    auto ea = m.exact(a);
    if (!ea)
      throw error(errc::not_exact, "sequence " + m.describe() + " has irrational terms; exact mode unavailable");
    return *ea / *m.exact(b);
  } else {
    return field_traits<F>::from_real(seq_ratio(m, a, b));
  }
}

/// Truncated series c_0 + c_1 z + ... + c_N z^N. Indices above valid_order()
/// are unreliable after order-eroding operations and are kept at zero.
template <Field F>
class z_series {
 public:
  z_series() : c_(1, F(0)), valid_(0) {}
  explicit z_series(std::size_t nominal) : c_(nominal + 1, F(0)), valid_(nominal) {}
  z_series(std::vector<F> coeffs, std::size_t nominal) : c_(nominal + 1, F(0)), valid_(nominal) {
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (i <= nominal) c_[i] = std::move(coeffs[i]);
      else if (!field_traits<F>::is_zero(coeffs[i]))
        throw error(errc::truncation_overflow,
                    "coefficient z^" + std::to_string(i) + " exceeds nominal order " + std::to_string(nominal));
    }
  }

  static z_series constant(F c, std::size_t nominal) {
    z_series s(nominal);
    s.c_[0] = std::move(c);
    return s;
  }
  static z_series monomial(F c, std::size_t degree, std::size_t nominal) {
    z_series s(nominal);
    if (degree > nominal) throw error(errc::truncation_overflow, "monomial degree exceeds nominal order");
    s.c_[degree] = std::move(c);
    return s;
  }

  [[nodiscard]] std::size_t nominal_order() const noexcept { return c_.size() - 1; }
  [[nodiscard]] std::size_t valid_order() const noexcept { return valid_; }
  [[nodiscard]] const F& operator[](std::size_t i) const { return c_.at(i); }
  [[nodiscard]] F& coeff(std::size_t i) { return c_.at(i); }
  [[nodiscard]] const std::vector<F>& coeffs() const noexcept { return c_; }

  /// Lowers the valid order and zeroes everything above it.
  void set_valid_order(std::size_t v) {
    valid_ = std::min(v, nominal_order());
    for (std::size_t i = valid_ + 1; i < c_.size(); ++i) c_[i] = F(0);
  }

  /// Highest index <= valid order with a nonzero coefficient, or -1.
  [[nodiscard]] long degree() const {
    for (std::size_t i = valid_ + 1; i-- > 0;)
      if (!field_traits<F>::is_zero(c_[i])) return static_cast<long>(i);
    return -1;
  }

  [[nodiscard]] bool is_zero() const { return degree() < 0; }

  /// Same coefficients at another nominal order (padding with zeros or truncating).
  [[nodiscard]] z_series resized(std::size_t nominal) const {
    z_series out(nominal);
    const std::size_t n = std::min(nominal, valid_);
    for (std::size_t i = 0; i <= n; ++i) out.c_[i] = c_[i];
    out.valid_ = nominal <= valid_ ? nominal : valid_;
    return out;
  }

  /// Horner evaluation over the valid coefficients.
  template <class X>
  [[nodiscard]] X evaluate(const X& z) const {
    X acc(0);
    for (std::size_t i = valid_ + 1; i-- > 0;) acc = acc * z + X(c_[i]);
    return acc;
  }

  friend bool operator==(const z_series& a, const z_series& b) { return a.valid_ == b.valid_ && a.c_ == b.c_; }

 private:
  std::vector<F> c_;
  std::size_t valid_;
};

namespace detail {
template <Field F>
void check_profile(const z_series<F>& a, const z_series<F>& b) {
  if (a.nominal_order() != b.nominal_order())
    throw error(errc::profile_mismatch, "z-series of nominal orders " + std::to_string(a.nominal_order()) +
                                            " and " + std::to_string(b.nominal_order()));
}
}  // namespace detail

template <Field F>
z_series<F> operator+(const z_series<F>& a, const z_series<F>& b) {
  detail::check_profile(a, b);
  z_series<F> out(a.nominal_order());
  const std::size_t v = std::min(a.valid_order(), b.valid_order());
  for (std::size_t i = 0; i <= v; ++i) out.coeff(i) = a[i] + b[i];
  out.set_valid_order(v);
  return out;
}

template <Field F>
z_series<F> operator-(const z_series<F>& a, const z_series<F>& b) {
  detail::check_profile(a, b);
  z_series<F> out(a.nominal_order());
  const std::size_t v = std::min(a.valid_order(), b.valid_order());
  for (std::size_t i = 0; i <= v; ++i) out.coeff(i) = a[i] - b[i];
  out.set_valid_order(v);
  return out;
}

template <Field F>
z_series<F> operator*(const F& s, const z_series<F>& a) {
  z_series<F> out = a;
  for (std::size_t i = 0; i <= a.valid_order(); ++i) out.coeff(i) = s * a[i];
  return out;
}

/// Cauchy product truncated at the smaller valid order.
template <Field F>
z_series<F> operator*(const z_series<F>& a, const z_series<F>& b) {
  detail::check_profile(a, b);
  const std::size_t v = std::min(a.valid_order(), b.valid_order());
  z_series<F> out(a.nominal_order());
  const long da = std::min<long>(a.degree(), static_cast<long>(v));
  const long db = std::min<long>(b.degree(), static_cast<long>(v));
  if (da >= 0 && db >= 0) {
    // Iterate over the sparser factor's support first; each output
    // coefficient still sums in increasing index order.
    for (std::size_t n = 0; n <= v; ++n) {
      F acc(0);
      const std::size_t lo = n > static_cast<std::size_t>(db) ? n - static_cast<std::size_t>(db) : 0;
      const std::size_t hi = std::min<std::size_t>(n, static_cast<std::size_t>(da));
      for (std::size_t j = lo; j <= hi; ++j)
        if (!field_traits<F>::is_zero(a[j])) acc += a[j] * b[n - j];
      out.coeff(n) = std::move(acc);
    }
  }
  out.set_valid_order(v);
  return out;
}

/// Generic dispatcher used where the spec names a single add/mul operation.
enum class ps_op { add, mul };

template <Field F>
z_series<F> ps_add_mul(const z_series<F>& f, const z_series<F>& g, ps_op op) {
  return op == ps_op::add ? f + g : f * g;
}

/// Default magnitude threshold below which a constant term is not a unit.
inline real default_unit_threshold() { return real("1e-30"); }

/// Multiplicative inverse of a series with a nonzero constant term.
template <Field F>
z_series<F> ps_invert_unit(const z_series<F>& a, const real& threshold = default_unit_threshold()) {
  if (field_traits<F>::magnitude(a[0]) <= threshold)
    throw error(errc::not_a_unit, "constant term magnitude " + to_string(field_traits<F>::magnitude(a[0]), 6) +
                                      " is below the unit threshold");
  const std::size_t v = a.valid_order();
  z_series<F> b(a.nominal_order());
  const F inv0 = F(1) / a[0];
  b.coeff(0) = inv0;
  const long da = a.degree();
  for (std::size_t n = 1; n <= v; ++n) {
    F acc(0);
    const std::size_t hi = std::min<std::size_t>(n, static_cast<std::size_t>(std::max<long>(da, 0)));
    for (std::size_t j = 1; j <= hi; ++j)
      if (!field_traits<F>::is_zero(a[j])) acc += a[j] * b[n - j];
    b.coeff(n) = -(acc * inv0);
  }
  b.set_valid_order(v);
  return b;
}

/// q-fold moment derivative: coefficient p becomes (m(p+q)/m(p)) c_{p+q}.
template <Field F>
z_series<F> moment_deriv(const z_series<F>& f, const sequence_handle& m, std::size_t q) {
  if (q == 0) return f;
  if (q > f.valid_order())
    throw error(errc::order_exhausted, "derivative order " + std::to_string(q) + " exceeds valid order " +
                                           std::to_string(f.valid_order()));
  z_series<F> out(f.nominal_order());
  const std::size_t v = f.valid_order() - q;
  for (std::size_t p = 0; p <= v; ++p)
    if (!field_traits<F>::is_zero(f[p + q])) out.coeff(p) = moment_ratio<F>(m, p + q, p) * f[p + q];
  out.set_valid_order(v);
  return out;
}

/// i-fold moment integral: z^p -> (m(p)/m(p+i)) z^{p+i}. With `strict`
/// a nonzero valid coefficient pushed past the nominal order is an error;
/// otherwise it is truncated away.
template <Field F>
z_series<F> moment_integral(const z_series<F>& f, const sequence_handle& m, std::size_t i, bool strict = true) {
  if (i == 0) return f;
  const std::size_t n = f.nominal_order();
  z_series<F> out(n);
  for (std::size_t p = 0; p <= f.valid_order(); ++p) {
    if (field_traits<F>::is_zero(f[p])) continue;
    if (p + i > n) {
      if (strict)
        throw error(errc::truncation_overflow, "integrating z^" + std::to_string(p) + " " + std::to_string(i) +
                                                   " times exceeds nominal order " + std::to_string(n));
      continue;
    }
    out.coeff(p + i) = moment_ratio<F>(m, p, p + i) * f[p];
  }
  out.set_valid_order(std::min(f.valid_order() + i, n));
  return out;
}

/// Weighted l1 norm sum_{n <= V} |c_n| r~^n (a truncation of the full norm).
template <Field F>
real norm_rtilde(const z_series<F>& f, const real& rtilde, const real& disc_radius = real(1)) {
  if (rtilde < 0 || rtilde > disc_radius)
    throw error(errc::radius_out_of_range, "r~ = " + to_string(rtilde, 6) + " outside [0, " +
                                               to_string(disc_radius, 6) + "]");
  real acc = 0, pw = 1;
  for (std::size_t n = 0; n <= f.valid_order(); ++n) {
    acc += field_traits<F>::magnitude(f[n]) * pw;
    pw *= rtilde;
  }
  return acc;
}

// ---------------------------------------------------------------------------

/// Series sum_n u_n(z) t^n with z_series coefficients sharing one nominal
/// z-order. The t-length shrinks under t-derivatives (the top coefficients
/// are no longer determined).
template <Field F>
class t_series {
 public:
  t_series() = default;
  t_series(std::size_t nt, std::size_t nz) : u_(nt + 1, z_series<F>(nz)), nz_(nz) {}
  explicit t_series(std::vector<z_series<F>> terms) : u_(std::move(terms)) {
    if (u_.empty()) throw error(errc::invalid_argument, "t-series needs at least one coefficient");
    nz_ = u_.front().nominal_order();
    for (const auto& s : u_)
      if (s.nominal_order() != nz_) throw error(errc::profile_mismatch, "t-coefficients differ in nominal z-order");
  }

  [[nodiscard]] std::size_t t_order() const noexcept { return u_.empty() ? 0 : u_.size() - 1; }
  [[nodiscard]] std::size_t length() const noexcept { return u_.size(); }
  [[nodiscard]] std::size_t z_order() const noexcept { return nz_; }
  [[nodiscard]] const z_series<F>& operator[](std::size_t n) const { return u_.at(n); }
  [[nodiscard]] z_series<F>& term(std::size_t n) { return u_.at(n); }
  [[nodiscard]] const std::vector<z_series<F>>& terms() const noexcept { return u_; }

  /// Smallest z valid order over all t-coefficients.
  [[nodiscard]] std::size_t min_valid_z() const {
    std::size_t v = nz_;
    for (const auto& s : u_) v = std::min(v, s.valid_order());
    return v;
  }

  [[nodiscard]] t_series truncated(std::size_t length) const {
    t_series out = *this;
    out.u_.resize(std::min(length, u_.size()));
    return out;
  }

  /// Plain coefficient of t^n z^p.
  [[nodiscard]] const F& at(std::size_t n, std::size_t p) const { return u_.at(n)[p]; }

  friend bool operator==(const t_series& a, const t_series& b) { return a.u_ == b.u_; }

 private:
  std::vector<z_series<F>> u_;
  std::size_t nz_ = 0;
};

namespace detail {
template <Field F>
void check_profile(const t_series<F>& a, const t_series<F>& b) {
  if (a.z_order() != b.z_order())
    throw error(errc::profile_mismatch, "t-series with different nominal z-orders");
}
}  // namespace detail

template <Field F>
t_series<F> operator+(const t_series<F>& a, const t_series<F>& b) {
  detail::check_profile(a, b);
  const std::size_t len = std::min(a.length(), b.length());
  std::vector<z_series<F>> out;
  out.reserve(len);
  for (std::size_t n = 0; n < len; ++n) out.push_back(a[n] + b[n]);
  return t_series<F>(std::move(out));
}

template <Field F>
t_series<F> operator-(const t_series<F>& a, const t_series<F>& b) {
  detail::check_profile(a, b);
  const std::size_t len = std::min(a.length(), b.length());
  std::vector<z_series<F>> out;
  out.reserve(len);
  for (std::size_t n = 0; n < len; ++n) out.push_back(a[n] - b[n]);
  return t_series<F>(std::move(out));
}

/// Multiplication by a t-independent coefficient a(z).
template <Field F>
t_series<F> operator*(const z_series<F>& a, const t_series<F>& u) {
  std::vector<z_series<F>> out;
  out.reserve(u.length());
  for (std::size_t n = 0; n < u.length(); ++n) out.push_back(a * u[n]);
  return t_series<F>(std::move(out));
}

template <Field F>
t_series<F> operator*(const F& s, const t_series<F>& u) {
  std::vector<z_series<F>> out;
  out.reserve(u.length());
  for (std::size_t n = 0; n < u.length(); ++n) out.push_back(s * u[n]);
  return t_series<F>(std::move(out));
}

/// Cauchy product in t (and in z for each pair of coefficients).
template <Field F>
t_series<F> operator*(const t_series<F>& a, const t_series<F>& b) {
  detail::check_profile(a, b);
  const std::size_t len = std::min(a.length(), b.length());
  std::vector<z_series<F>> out;
  out.reserve(len);
  for (std::size_t n = 0; n < len; ++n) {
    z_series<F> acc = a[0] * b[n];
    for (std::size_t j = 1; j <= n; ++j) acc = acc + a[j] * b[n - j];
    out.push_back(std::move(acc));
  }
  return t_series<F>(std::move(out));
}

template <Field F>
t_series<F> ps_add_mul(const t_series<F>& f, const t_series<F>& g, ps_op op) {
  return op == ps_op::add ? f + g : f * g;
}

/// Zero t-series of the same profile.
template <Field F>
t_series<F> zero_like(const t_series<F>& u) {
  return t_series<F>(u.t_order(), u.z_order());
}

template <Field F>
t_series<F> moment_deriv(const t_series<F>& f, const sequence_handle& m, axis ax, std::size_t q) {
  if (q == 0) return f;
  std::vector<z_series<F>> out;
  if (ax == axis::z) {
    out.reserve(f.length());
    for (std::size_t n = 0; n < f.length(); ++n) out.push_back(moment_deriv(f[n], m, q));
  } else {
    if (q >= f.length())
      throw error(errc::order_exhausted, "t-derivative of order " + std::to_string(q) + " on a t-series of length " +
                                             std::to_string(f.length()));
    out.reserve(f.length() - q);
    for (std::size_t n = 0; n + q < f.length(); ++n) out.push_back(moment_ratio<F>(m, n + q, n) * f[n + q]);
  }
  return t_series<F>(std::move(out));
}

template <Field F>
t_series<F> moment_integral(const t_series<F>& f, const sequence_handle& m, axis ax, std::size_t i,
                            bool strict = true) {
  if (i == 0) return f;
  std::vector<z_series<F>> out;
  out.reserve(f.length());
  if (ax == axis::z) {
    for (std::size_t n = 0; n < f.length(); ++n) out.push_back(moment_integral(f[n], m, i, strict));
  } else {
    const std::size_t len = f.length();
    for (std::size_t n = 0; n < len; ++n) out.emplace_back(f.z_order());
    for (std::size_t n = 0; n < len; ++n) {
      if (f[n].is_zero()) {
        if (n + i < len) out[n + i].set_valid_order(f[n].valid_order());
        continue;
      }
      if (n + i >= len) {
        if (strict)
          throw error(errc::truncation_overflow, "integrating t^" + std::to_string(n) + " " + std::to_string(i) +
                                                     " times exceeds the t-order");
        continue;
      }
      out[n + i] = moment_ratio<F>(m, n, n + i) * f[n];
    }
  }
  return t_series<F>(std::move(out));
}

/// norm_rtilde of every t-coefficient.
template <Field F>
std::vector<real> norms_rtilde(const t_series<F>& u, const real& rtilde, const real& disc_radius = real(1)) {
  std::vector<real> out;
  out.reserve(u.length());
  for (std::size_t n = 0; n < u.length(); ++n) out.push_back(norm_rtilde(u[n], rtilde, disc_radius));
  return out;
}

/// Converts an exact series to the working-precision real field.
template <Field F>
z_series<real> to_real_series(const z_series<F>& s) {
  z_series<real> out(s.nominal_order());
  for (std::size_t i = 0; i <= s.valid_order(); ++i) out.coeff(i) = field_traits<F>::to_real(s[i]);
  out.set_valid_order(s.valid_order());
  return out;
}

template <Field F>
t_series<real> to_real_series(const t_series<F>& u) {
  std::vector<z_series<real>> out;
  for (const auto& s : u.terms()) out.push_back(to_real_series(s));
  return t_series<real>(std::move(out));
}

}  // namespace msl
