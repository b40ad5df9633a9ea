#pragma once

// Scalar types used across the library: an MPFR-backed real with a
// run-time precision, an exact GMP rational, and a small complex wrapper
// over either. Series and solver templates are written against the
// `field_traits` interface at the bottom of this header.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <string>
#include <string_view>

#include "error.hpp"

namespace msl {

using real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;
using rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

inline constexpr unsigned default_precision_bits = 128;
inline constexpr unsigned min_precision_bits = 64;

namespace detail {
inline unsigned digits10_for_bits(unsigned bits) {
  unsigned d10 = 1;
  while (boost::multiprecision::detail::digits10_2_2(d10) < bits) ++d10;
  return d10;
}
}  // namespace detail

/// Binary precision (significant bits) of newly created reals.
inline unsigned precision_bits() {
  return static_cast<unsigned>(
      boost::multiprecision::detail::digits10_2_2(real::default_precision()));
}

inline void set_precision_bits(unsigned bits) {
  if (bits < min_precision_bits)
    throw error(errc::invalid_argument,
                "precision must be at least " + std::to_string(min_precision_bits) + " bits");
  real::default_precision(detail::digits10_for_bits(bits));
}

/// Sets the working precision for its lifetime and restores the previous one.
class precision_scope {
 public:
  explicit precision_scope(unsigned bits) : saved_(real::default_precision()) {
    set_precision_bits(bits);
  }
  ~precision_scope() { real::default_precision(saved_); }
  precision_scope(const precision_scope&) = delete;
  precision_scope& operator=(const precision_scope&) = delete;

 private:
  unsigned saved_;
};

/// Precision bits from MSL_PRECISION_BITS, falling back to the default.
inline unsigned precision_from_env() {
  if (const char* v = std::getenv("MSL_PRECISION_BITS")) {
    char* end = nullptr;
    const long bits = std::strtol(v, &end, 10);
    if (end != v && *end == '\0' && bits >= static_cast<long>(min_precision_bits)) return static_cast<unsigned>(bits);
  }
  return default_precision_bits;
}

/// Unit roundoff 2^(1-bits) at the current precision.
inline real epsilon() {
  real e = 1;
  mpfr_mul_2si(e.backend().data(), e.backend().data(), 1 - static_cast<long>(precision_bits()),
               MPFR_RNDN);
  return e;
}

inline real max(const real& a, const real& b) { return a < b ? b : a; }
inline real min(const real& a, const real& b) { return b < a ? b : a; }

inline real to_real(const rational& q) {
  real r;
  mpfr_set_q(r.backend().data(), q.backend().data(), MPFR_RNDN);
  return r;
}

inline real to_real(double x) { return real(x); }

inline real pi() {
  real r;
  mpfr_const_pi(r.backend().data(), MPFR_RNDN);
  return r;
}

inline real euler_e() { return exp(real(1)); }

inline real gamma_fn(const real& x) { return tgamma(x); }
inline real log_gamma(const real& x) { return lgamma(x); }

inline rational factorial_exact(unsigned long n) {
  integer f;
  mpz_fac_ui(f.backend().data(), n);
  return rational(f);
}

inline bool is_integer(const rational& q) { return denominator(q) == 1; }

inline integer floor_div(const rational& q) {
  integer n = numerator(q), d = denominator(q), out;
  mpz_fdiv_q(out.backend().data(), n.backend().data(), d.backend().data());
  return out;
}

inline std::string to_string(const rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

inline std::string to_string(const real& r, int digits = 0) {
  return r.str(digits, std::ios_base::scientific);
}

/// Parses "3", "-2/5", "0.125", "1e-3", "2.5E2" into an exact rational.
inline rational parse_rational(std::string_view text) {
  auto fail = [&] {
    throw error(errc::invalid_argument, "not a rational literal: '" + std::string(text) + "'");
  };
  if (text.empty()) fail();
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    rational num = parse_rational(text.substr(0, slash));
    rational den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw error(errc::invalid_argument, "zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  std::size_t i = 0;
  bool neg = false;
  if (text[i] == '+' || text[i] == '-') neg = text[i++] == '-';
  integer mant = 0;
  long scale = 0;
  bool digits = false, dot = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= '0' && c <= '9') {
      mant = mant * 10 + (c - '0');
      if (dot) --scale;
      digits = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!digits) fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') fail();
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
    long ex = 0;
    bool edigits = false;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i) {
      ex = ex * 10 + (text[i] - '0');
      edigits = true;
      if (ex > 100000) fail();
    }
    if (!edigits || i != text.size()) fail();
    scale += eneg ? -ex : ex;
  }
  rational q(mant);
  integer ten = 10;
  integer p;
  mpz_pow_ui(p.backend().data(), ten.backend().data(), static_cast<unsigned long>(scale < 0 ? -scale : scale));
  q = scale < 0 ? q / rational(p) : q * rational(p);
  return neg ? rational(-q) : q;
}

/// Minimal complex number over an arbitrary ordered field.
template <class R>
struct complex {
  R re{0};
  R im{0};

  complex() = default;
  complex(R r) : re(std::move(r)), im(0) {}  // NOLINT: implicit widening from reals
  complex(R r, R i) : re(std::move(r)), im(std::move(i)) {}

  complex& operator+=(const complex& o) { re += o.re; im += o.im; return *this; }
  complex& operator-=(const complex& o) { re -= o.re; im -= o.im; return *this; }
  complex& operator*=(const complex& o) { *this = *this * o; return *this; }
  complex& operator/=(const complex& o) { *this = *this / o; return *this; }

  friend complex operator+(complex a, const complex& b) { return a += b; }
  friend complex operator-(complex a, const complex& b) { return a -= b; }
  friend complex operator-(const complex& a) { return {-a.re, -a.im}; }
  friend complex operator*(const complex& a, const complex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend complex operator/(const complex& a, const complex& b) {
    const R d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
  }
  friend bool operator==(const complex& a, const complex& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const complex& a, const complex& b) { return !(a == b); }
};

using mp_complex = complex<real>;

inline real abs(const mp_complex& z) { return hypot(z.re, z.im); }

/// Interface the series templates rely on for a coefficient field.
template <class F>
struct field_traits;

template <>
struct field_traits<real> {
  static constexpr bool exact = false;
  static constexpr std::string_view name = "real";
  static real magnitude(const real& x) { return abs(x); }
  static real from_rational(const rational& q) { return to_real(q); }
  static real from_real(const real& x) { return x; }
  static bool is_zero(const real& x) { return x == 0; }
  static real to_real(const real& x) { return x; }
};

template <>
struct field_traits<mp_complex> {
  static constexpr bool exact = false;
  static constexpr std::string_view name = "complex";
  static real magnitude(const mp_complex& z) { return abs(z); }
  static mp_complex from_rational(const rational& q) { return mp_complex(msl::to_real(q)); }
  static mp_complex from_real(const real& x) { return mp_complex(x); }
  static bool is_zero(const mp_complex& z) { return z.re == 0 && z.im == 0; }
  static real to_real(const mp_complex& z) { return z.re; }
};

template <>
struct field_traits<rational> {
  static constexpr bool exact = true;
  static constexpr std::string_view name = "rational";
  static real magnitude(const rational& q) { return msl::to_real(abs(q)); }
  static rational from_rational(const rational& q) { return q; }
  static rational from_real(const real&) {
    throw error(errc::not_exact, "an inexact real value cannot enter exact-rational arithmetic");
  }
  static bool is_zero(const rational& q) { return q == 0; }
  static real to_real(const rational& q) { return msl::to_real(q); }
};

template <class F>
concept Field = requires { field_traits<F>::exact; };

}  // namespace msl
