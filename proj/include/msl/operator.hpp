#pragma once

// Operator and problem descriptions, structural validation and the Newton
// polygon of
//   u - sum_{i,q} a_iq(z) d_{m1,t}^{-i} d_{m2,z}^{q} u = f.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sequences.hpp"
#include "series.hpp"

namespace msl {

/// Exact polynomial in z, coefficients in increasing degree.
class polynomial {
 public:
  polynomial() = default;
  explicit polynomial(std::vector<rational> c) : c_(std::move(c)) { trim(); }
  static polynomial constant(rational v) { return polynomial({std::move(v)}); }
  static polynomial z() { return polynomial({rational(0), rational(1)}); }

  [[nodiscard]] long degree() const { return static_cast<long>(c_.size()) - 1; }
  [[nodiscard]] bool is_zero() const { return c_.empty(); }
  [[nodiscard]] const std::vector<rational>& coeffs() const noexcept { return c_; }
  [[nodiscard]] rational operator[](std::size_t i) const { return i < c_.size() ? c_[i] : rational(0); }

  [[nodiscard]] rational evaluate(const rational& z) const {
    rational acc = 0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * z + c_[i];
    return acc;
  }

  template <Field F>
  [[nodiscard]] z_series<F> to_series(std::size_t nominal) const {
    if (degree() > static_cast<long>(nominal))
      throw error(errc::truncation_overflow, "coefficient degree exceeds the z-order");
    z_series<F> s(nominal);
    for (std::size_t i = 0; i < c_.size(); ++i) s.coeff(i) = field_traits<F>::from_rational(c_[i]);
    return s;
  }

  friend polynomial operator+(const polynomial& a, const polynomial& b) {
    std::vector<rational> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return polynomial(std::move(c));
  }
  friend polynomial operator-(const polynomial& a) {
    std::vector<rational> c = a.c_;
    for (auto& x : c) x = -x;
    return polynomial(std::move(c));
  }
  friend polynomial operator-(const polynomial& a, const polynomial& b) { return a + (-b); }
  friend polynomial operator*(const polynomial& a, const polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<rational> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return polynomial(std::move(c));
  }
  friend bool operator==(const polynomial& a, const polynomial& b) { return a.c_ == b.c_; }

  /// Canonical text, e.g. "2 + 3/4*z - z^3".
  [[nodiscard]] std::string str() const {
    if (c_.empty()) return "0";
    std::string out;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == 0) continue;
      const rational mag = abs(c_[i]);
      if (out.empty()) {
        if (c_[i] < 0) out += "-";
      } else {
        out += c_[i] < 0 ? " - " : " + ";
      }
      const std::string num = to_string(mag);
      if (i == 0) {
        out += num;
      } else {
        if (mag != 1) out += num + "*";
        out += "z";
        if (i > 1) out += "^" + std::to_string(i);
      }
    }
    return out;
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<rational> c_;
};

struct operator_term {
  unsigned i = 1;  ///< order of the t-integral
  unsigned q = 0;  ///< order of the z-derivative
  polynomial a;
  friend bool operator==(const operator_term&, const operator_term&) = default;
};

/// The integro-differential part of the equation, terms sorted by (i, q).
class operator_spec {
 public:
  operator_spec() = default;
  explicit operator_spec(std::vector<operator_term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw error(errc::semantic_error, "the operator needs at least one term");
    std::sort(terms_.begin(), terms_.end(),
              [](const auto& a, const auto& b) { return std::pair(a.i, a.q) < std::pair(b.i, b.q); });
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      if (terms_[j].i < 1)
        throw error(errc::semantic_error, "integral order i must be at least 1 (got " +
                                              std::to_string(terms_[j].i) + ")");
      if (j > 0 && terms_[j].i == terms_[j - 1].i && terms_[j].q == terms_[j - 1].q)
        throw error(errc::semantic_error, "duplicate term (i=" + std::to_string(terms_[j].i) +
                                              ", q=" + std::to_string(terms_[j].q) + ")");
    }
  }

  [[nodiscard]] const std::vector<operator_term>& terms() const noexcept { return terms_; }
  [[nodiscard]] unsigned kappa() const { return terms_.back().i; }

  /// The index set K.
  [[nodiscard]] std::vector<unsigned> K() const {
    std::vector<unsigned> out;
    for (const auto& t : terms_)
      if (out.empty() || out.back() != t.i) out.push_back(t.i);
    return out;
  }

  /// p_i, the largest z-derivative order attached to i.
  [[nodiscard]] unsigned p(unsigned i) const {
    std::optional<unsigned> best;
    for (const auto& t : terms_)
      if (t.i == i) best = std::max(best.value_or(0), t.q);
    if (!best) throw error(errc::invalid_argument, "index " + std::to_string(i) + " is not in K");
    return *best;
  }
  [[nodiscard]] unsigned p_kappa() const { return p(kappa()); }

  [[nodiscard]] unsigned q_max() const {
    unsigned m = 0;
    for (const auto& t : terms_) m = std::max(m, t.q);
    return m;
  }

  [[nodiscard]] const polynomial* coefficient(unsigned i, unsigned q) const {
    for (const auto& t : terms_)
      if (t.i == i && t.q == q) return &t.a;
    return nullptr;
  }
  [[nodiscard]] const polynomial& leading() const { return *coefficient(kappa(), p_kappa()); }

  friend bool operator==(const operator_spec&, const operator_spec&) = default;

 private:
  std::vector<operator_term> terms_;
};

/// Right-hand side literal.
struct rhs_literal {
  enum class kind { t_poly, geometric_z, constant };
  kind k = kind::constant;
  std::vector<std::vector<rational>> rows;  ///< t_poly: outer t-index, inner z-coefficients
  rational value = 1;                       ///< constant

  friend bool operator==(const rhs_literal&, const rhs_literal&) = default;

  template <Field F>
  [[nodiscard]] t_series<F> instantiate(std::size_t nt, std::size_t nz) const {
    t_series<F> f(nt, nz);
    switch (k) {
      case kind::constant:
        f.term(0).coeff(0) = field_traits<F>::from_rational(value);
        break;
      case kind::geometric_z:
        for (std::size_t p = 0; p <= nz; ++p) f.term(0).coeff(p) = F(1);
        break;
      case kind::t_poly:
        for (std::size_t n = 0; n < rows.size() && n <= nt; ++n)
          for (std::size_t p = 0; p < rows[n].size() && p <= nz; ++p)
            f.term(n).coeff(p) = field_traits<F>::from_rational(rows[n][p]);
        break;
    }
    return f;
  }
};

/// Complete problem description.
struct problem_spec {
  std::string equation;
  operator_spec op;
  sequence_handle m1 = sequence_handle::make_gevrey(1);
  sequence_handle m2 = sequence_handle::make_gevrey(1);
  sequence_handle base = sequence_handle::make_gevrey(1);
  rational s1 = 1, s2 = 1;
  rational r{1, 2};
  rhs_literal f;
  std::size_t nt = 40, nz = 20;
  double direction = 0;
  unsigned precision = default_precision_bits;
  std::size_t pmax = 12;
  bool exact = false;
  double fit_tolerance = 0.05;
};

// ---------------------------------------------------------------------------
// Validation

enum class severity { warning, error };

struct finding {
  severity level = severity::error;
  std::string code;
  std::string message;
};

inline bool has_errors(const std::vector<finding>& fs) {
  return std::any_of(fs.begin(), fs.end(), [](const finding& f) { return f.level == severity::error; });
}

namespace detail {

// Min modulus and winding number of a polynomial along |z| = r.
inline std::pair<double, int> circle_profile(const polynomial& a, double r, int samples = 720) {
  double min_mod = std::numeric_limits<double>::infinity();
  double total = 0, prev = 0;
  for (int s = 0; s <= samples; ++s) {
    const double th = 2 * 3.14159265358979323846 * s / samples;
    double re = 0, im = 0;
    for (std::size_t j = a.coeffs().size(); j-- > 0;) {
      const double c = a.coeffs()[j].convert_to<double>();
      const double nr = re * r * std::cos(th) - im * r * std::sin(th) + c;
      const double ni = re * r * std::sin(th) + im * r * std::cos(th);
      re = nr;
      im = ni;
    }
    min_mod = std::min(min_mod, std::hypot(re, im));
    const double ang = std::atan2(im, re);
    if (s > 0) {
      double d = ang - prev;
      while (d > 3.14159265358979323846) d -= 2 * 3.14159265358979323846;
      while (d < -3.14159265358979323846) d += 2 * 3.14159265358979323846;
      total += d;
    }
    prev = ang;
  }
  return {min_mod, static_cast<int>(std::lround(total / (2 * 3.14159265358979323846)))};
}

inline void check_order(std::vector<finding>& out, const char* name, const sequence_handle& m,
                        const sequence_handle& base, const rational& s) {
  try {
    const auto fit = regular_order_fit(m, base, 60);
    const double dev = std::abs(fit.s_hat.convert_to<double>() - s.convert_to<double>());
    const std::string msg = std::string(name) + " fitted order " + to_string(fit.s_hat, 6) + " against declared " +
                            to_string(s);
    if (dev > 0.25) out.push_back({severity::error, "OrderMismatch", msg});
    else if (dev > 0.05) out.push_back({severity::warning, "OrderMismatch", msg});
  } catch (const error& e) {
    out.push_back({severity::warning, std::string(to_string(e.code())), std::string(name) + ": " + e.what()});
  }
}

}  // namespace detail

/// Structural hypotheses on the problem; never throws for a parsed spec.
inline std::vector<finding> validate_spec(const problem_spec& spec,
                                          const real& unit_threshold = default_unit_threshold()) {
  std::vector<finding> out;
  const auto& op = spec.op;
  const unsigned kappa = op.kappa(), pk = op.p_kappa();

  if (spec.r <= 0 || spec.r >= 1)
    out.push_back({severity::error, "RadiusOutOfRange", "disc radius r must lie in (0, 1), got " + to_string(spec.r)});
  if (spec.s1 <= 0 || spec.s2 <= 0)
    out.push_back({severity::error, "InvalidArgument", "orders s1, s2 must be positive"});

  const rational a0 = op.leading()[0];
  if (to_real(abs(a0)) <= unit_threshold)
    out.push_back({severity::error, "NotAUnit",
                   "leading coefficient a_{" + std::to_string(kappa) + "," + std::to_string(pk) +
                       "} vanishes at z = 0"});

  bool any_steep = false;
  for (unsigned i : op.K()) {
    if (spec.s2 > 0 && rational(op.p(i), i) > spec.s1 / spec.s2) any_steep = true;
    if (rational(op.p(i), i) > rational(pk, kappa))
      out.push_back({severity::error, "SlopeOrdering",
                     "p_" + std::to_string(i) + "/" + std::to_string(i) + " exceeds p_kappa/kappa = " +
                         to_string(rational(pk, kappa))});
  }
  if (!any_steep)
    out.push_back({severity::error, "NoPositiveSlope", "no index i with p_i/i > s1/s2"});

  if (a0 != 0 && spec.r > 0 && spec.r < 1) {
    const auto [min_mod, winding] = detail::circle_profile(op.leading(), spec.r.convert_to<double>());
    if (winding != 0)
      out.push_back({severity::warning, "LeadingCoefficientZeroInDisc",
                     "leading coefficient has " + std::to_string(winding) + " zero(s) in |z| < r"});
    else if (min_mod < 1e-6 * std::abs(a0.convert_to<double>()))
      out.push_back({severity::warning, "LeadingCoefficientSmall",
                     "leading coefficient nearly vanishes on |z| = r"});
  }

  try {
    verify_srs(spec.base, spec.base.length() ? std::min<std::size_t>(*spec.base.length() - 2, 40) : 40);
  } catch (const error& e) {
    out.push_back({severity::error, std::string(to_string(e.code())), std::string("base sequence: ") + e.what()});
  }
  detail::check_order(out, "m1", spec.m1, spec.base, spec.s1);
  detail::check_order(out, "m2", spec.m2, spec.base, spec.s2);

  if (spec.exact && !(spec.m1.exact_capable() && spec.m2.exact_capable()))
    out.push_back({severity::error, "NotExact", "exact mode needs rational moment sequences m1 and m2"});
  if (spec.nt < 1 || spec.nz < 1)
    out.push_back({severity::error, "InvalidArgument", "truncation orders must be positive"});
  return out;
}

// ---------------------------------------------------------------------------
// Newton polygon

struct point2 {
  rational x, y;
  friend bool operator==(const point2&, const point2&) = default;
};

struct polygon_segment {
  point2 from, to;
  rational slope;
};

struct newton_polygon {
  std::vector<point2> points;   ///< generating points
  std::vector<bool> dominated;  ///< parallel to points
  std::vector<point2> boundary; ///< vertices, increasing in x and y
  std::vector<polygon_segment> segments;
  std::optional<rational> k;    ///< present iff exactly one positive slope
};

/// Boundary of conv(union of {x <= a, y >= b}) for the given corner points.
inline newton_polygon polygon_from_points(std::vector<point2> pts) {
  newton_polygon out;
  out.points = pts;
  out.dominated.assign(pts.size(), false);
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (a == b || pts[a] == pts[b]) continue;
      if (pts[a].x <= pts[b].x && pts[a].y >= pts[b].y) out.dominated[a] = true;
    }
  std::vector<point2> live;
  for (std::size_t a = 0; a < pts.size(); ++a)
    if (!out.dominated[a] && std::find(live.begin(), live.end(), pts[a]) == live.end()) live.push_back(pts[a]);
  std::sort(live.begin(), live.end(), [](const auto& a, const auto& b) { return a.x < b.x; });

  // Lower chain: slopes strictly increase; collinear middle points are dropped.
  auto cross = [](const point2& o, const point2& a, const point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<point2> chain;
  for (const auto& p : live) {
    while (chain.size() >= 2 && cross(chain[chain.size() - 2], chain.back(), p) <= 0) chain.pop_back();
    chain.push_back(p);
  }
  out.boundary = chain;
  for (std::size_t j = 0; j + 1 < chain.size(); ++j)
    out.segments.push_back({chain[j], chain[j + 1], (chain[j + 1].y - chain[j].y) / (chain[j + 1].x - chain[j].x)});
  std::size_t positive = 0;
  for (const auto& s : out.segments)
    if (s.slope > 0) ++positive;
  if (positive == 1)
    for (const auto& s : out.segments)
      if (s.slope > 0) out.k = s.slope;
  return out;
}

/// Generating points (kappa s1, -kappa) and ((kappa-i) s1 + p_i s2, i - kappa).
inline newton_polygon compute_newton_polygon(const operator_spec& op, const rational& s1, const rational& s2) {
  const unsigned kappa = op.kappa();
  std::vector<point2> pts{{s1 * kappa, rational(-static_cast<long>(kappa))}};
  for (unsigned i : op.K())
    pts.push_back({s1 * (kappa - i) + s2 * op.p(i), rational(static_cast<long>(i) - static_cast<long>(kappa))});
  return polygon_from_points(std::move(pts));
}

inline newton_polygon compute_newton_polygon(const problem_spec& spec) {
  return compute_newton_polygon(spec.op, spec.s1, spec.s2);
}

/// Closed form 1/k = (s2 p_kappa - s1 kappa)/kappa.
inline rational inverse_k_closed_form(const operator_spec& op, const rational& s1, const rational& s2) {
  return (s2 * op.p_kappa() - s1 * op.kappa()) / op.kappa();
}

/// The distinguished slope k, cross-checked against the closed form.
inline rational slope_k(const newton_polygon& poly, const operator_spec& op, const rational& s1, const rational& s2) {
  std::size_t positive = 0;
  for (const auto& s : poly.segments)
    if (s.slope > 0) ++positive;
  if (positive == 0) throw error(errc::no_positive_slope, "the Newton polygon has no segment of positive slope");
  if (positive > 1)
    throw error(errc::multiple_positive_slopes,
                std::to_string(positive) + " segments of positive slope; only one is supported");
  const rational inv = inverse_k_closed_form(op, s1, s2);
  const polygon_segment& seg = poly.segments.front();
  const point2 lo{s1 * op.kappa(), rational(-static_cast<long>(op.kappa()))};
  const point2 hi{s2 * op.p_kappa(), rational(0)};
  if (inv <= 0 || *poly.k != 1 / inv || !(seg.from == lo) || !(seg.to == hi))
    throw error(errc::slope_mismatch, "hull slope " + to_string(*poly.k) + " disagrees with the closed form 1/k = " +
                                          to_string(inv));
  return *poly.k;
}

inline rational slope_k(const newton_polygon& poly, const problem_spec& spec) {
  return slope_k(poly, spec.op, spec.s1, spec.s2);
}

}  // namespace msl
