#pragma once

// Strongly regular sequences M = (M_p) and moment sequences m(p):
// evaluation, (lc)/(mg)/(snq) certificates, regular-order fits, the
// floor-quotient witnesses and the associated function M(t).

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "numeric.hpp"

namespace msl {

class sequence_handle;

struct gevrey {
  rational alpha;  ///< M_p = (p!)^alpha
};
struct gevrey_log {
  rational alpha;  ///< M_p = (p!)^alpha * prod_{m=0}^{p} log(e+m)^beta
  rational beta;
};
struct gamma_moment {
  rational k;  ///< m(p) = Gamma(1 + p/k)
};
struct power_of {
  std::shared_ptr<const sequence_handle> base;  ///< M_p = base_p^s
  rational s;
};
struct table {
  std::vector<rational> values;
};

/// Immutable sequence description with an internal, lazily filled cache.
/// Copies share the cache; filling is serialized by a mutex so concurrent
/// readers observe the same values a serial evaluation would produce.
class sequence_handle {
 public:
  using variant_type = std::variant<gevrey, gevrey_log, gamma_moment, power_of, table>;

  explicit sequence_handle(variant_type v) : v_(std::move(v)), cache_(std::make_shared<cache>()) {
    check();
  }

  static sequence_handle make_gevrey(rational alpha) { return sequence_handle(gevrey{std::move(alpha)}); }
  static sequence_handle make_gevrey_log(rational alpha, rational beta) {
    return sequence_handle(gevrey_log{std::move(alpha), std::move(beta)});
  }
  static sequence_handle make_gamma_moment(rational k) { return sequence_handle(gamma_moment{std::move(k)}); }
  static sequence_handle make_power_of(const sequence_handle& base, rational s) {
    return sequence_handle(power_of{std::make_shared<const sequence_handle>(base), std::move(s)});
  }
  static sequence_handle make_table(std::vector<rational> values) {
    return sequence_handle(table{std::move(values)});
  }

  [[nodiscard]] const variant_type& variant() const noexcept { return v_; }

  /// M_p at the current working precision.
  [[nodiscard]] real operator()(std::size_t p) const {
    check_index(p);
    std::lock_guard lock(cache_->mu);
    sync_precision();
    while (cache_->values.size() <= p) cache_->values.push_back(compute(cache_->values.size()));
    return cache_->values[p];
  }

  /// log M_p; cheaper than log((*this)(p)) for Gamma-type variants.
  [[nodiscard]] real log_at(std::size_t p) const {
    check_index(p);
    std::lock_guard lock(cache_->mu);
    sync_precision();
    while (cache_->logs.size() <= p) cache_->logs.push_back(compute_log(cache_->logs.size()));
    return cache_->logs[p];
  }

  /// Exact value when every term of this sequence is rational.
  [[nodiscard]] std::optional<rational> exact(std::size_t p) const {
    if (!exact_capable()) return std::nullopt;
    check_index(p);
    std::lock_guard lock(cache_->mu);
    while (cache_->exact.size() <= p) cache_->exact.push_back(compute_exact(cache_->exact.size()));
    return cache_->exact[p];
  }

  [[nodiscard]] bool exact_capable() const {
    return std::visit(
        [](const auto& v) -> bool {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) return is_integer(v.alpha);
          else if constexpr (std::is_same_v<T, gevrey_log>) return v.beta == 0 && is_integer(v.alpha);
          else if constexpr (std::is_same_v<T, gamma_moment>) return numerator(v.k) == 1;
          else if constexpr (std::is_same_v<T, power_of>) return is_integer(v.s) && v.s >= 0 && v.base->exact_capable();
          else return true;
        },
        v_);
  }

  /// Number of available terms (only tables are finite).
  [[nodiscard]] std::optional<std::size_t> length() const {
    if (auto* t = std::get_if<table>(&v_)) return t->values.size();
    if (auto* po = std::get_if<power_of>(&v_)) return po->base->length();
    return std::nullopt;
  }

  /// Gevrey-type order: M_p behaves like (p!)^order up to subexponential factors.
  [[nodiscard]] std::optional<rational> nominal_order() const {
    return std::visit(
        [](const auto& v) -> std::optional<rational> {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) return v.alpha;
          else if constexpr (std::is_same_v<T, gevrey_log>) return v.alpha;
          else if constexpr (std::is_same_v<T, gamma_moment>) return rational(1) / v.k;
          else if constexpr (std::is_same_v<T, power_of>) {
            auto b = v.base->nominal_order();
            if (!b) return std::nullopt;
            return *b * v.s;
          } else return std::nullopt;
        },
        v_);
  }

  [[nodiscard]] std::string describe() const {
    return std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) return "gevrey(" + to_string(v.alpha) + ")";
          else if constexpr (std::is_same_v<T, gevrey_log>)
            return "gevrey_log(" + to_string(v.alpha) + ", " + to_string(v.beta) + ")";
          else if constexpr (std::is_same_v<T, gamma_moment>) return "gamma_moment(" + to_string(v.k) + ")";
          else if constexpr (std::is_same_v<T, power_of>)
            return "power_of(" + v.base->describe() + ", " + to_string(v.s) + ")";
          else {
            std::string s = "table(";
            for (std::size_t i = 0; i < v.values.size(); ++i) s += (i ? ", " : "") + to_string(v.values[i]);
            return s + ")";
          }
        },
        v_);
  }

 private:
  struct cache {
    std::mutex mu;
    unsigned bits = 0;
    std::vector<real> values;
    std::vector<real> logs;
    std::vector<rational> exact;
  };

  void check() const {
    std::visit(
        [](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) {
            if (v.alpha <= 0) throw error(errc::invalid_argument, "Gevrey order must be positive");
          } else if constexpr (std::is_same_v<T, gevrey_log>) {
            if (v.alpha <= 0) throw error(errc::invalid_argument, "Gevrey-log order must be positive");
          } else if constexpr (std::is_same_v<T, gamma_moment>) {
            if (v.k <= 0) throw error(errc::invalid_argument, "Gamma-moment k must be positive");
          } else if constexpr (std::is_same_v<T, power_of>) {
            if (!v.base) throw error(errc::invalid_argument, "power_of needs a base sequence");
            if (v.s <= 0) throw error(errc::invalid_argument, "power_of exponent must be positive");
          } else {
            if (v.values.empty()) throw error(errc::invalid_argument, "table sequence is empty");
            for (const auto& x : v.values)
              if (x <= 0) throw error(errc::invalid_argument, "table terms must be strictly positive");
          }
        },
        v_);
  }

  void check_index(std::size_t p) const {
    if (auto n = length(); n && p >= *n)
      throw error(errc::table_exhausted,
                  "term " + std::to_string(p) + " requested from a table of " + std::to_string(*n) + " terms", p);
  }

  void sync_precision() const {
    const unsigned bits = precision_bits();
    if (cache_->bits != bits) {
      cache_->values.clear();
      cache_->logs.clear();
      cache_->bits = bits;
    }
  }

  // Called with the cache lock held; `values` holds every term below p.
  real compute(std::size_t p) const {
    return std::visit(
        [&](const auto& v) -> real {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) {
            if (p == 0) return real(1);
            if (is_integer(v.alpha))
              return cache_->values[p - 1] * pow(real(p), static_cast<long>(numerator(v.alpha)));
            return cache_->values[p - 1] * pow(real(p), to_real(v.alpha));
          } else if constexpr (std::is_same_v<T, gevrey_log>) {
            // M_0 = log(e)^beta = 1
            if (p == 0) return real(1);
            real f = pow(real(p), to_real(v.alpha));
            if (v.beta != 0) f *= pow(log(euler_e() + real(p)), to_real(v.beta));
            return cache_->values[p - 1] * f;
          } else if constexpr (std::is_same_v<T, gamma_moment>) {
            return gamma_fn(real(1) + real(p) / to_real(v.k));
          } else if constexpr (std::is_same_v<T, power_of>) {
            const real b = (*v.base)(p);
            if (is_integer(v.s)) return pow(b, static_cast<long>(numerator(v.s)));
            return pow(b, to_real(v.s));
          } else {
            return to_real(v.values[p]);
          }
        },
        v_);
  }

  real compute_log(std::size_t p) const {
    return std::visit(
        [&](const auto& v) -> real {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, gevrey>) {
            return to_real(v.alpha) * log_gamma(real(p + 1));
          } else if constexpr (std::is_same_v<T, gevrey_log>) {
            if (p == 0) return real(0);
            real l = to_real(v.alpha) * log(real(p));
            if (v.beta != 0) l += to_real(v.beta) * log(log(euler_e() + real(p)));
            return cache_->logs[p - 1] + l;
          } else if constexpr (std::is_same_v<T, gamma_moment>) {
            return log_gamma(real(1) + real(p) / to_real(v.k));
          } else if constexpr (std::is_same_v<T, power_of>) {
            return to_real(v.s) * v.base->log_at(p);
          } else {
            return log(to_real(v.values[p]));
          }
        },
        v_);
  }

  rational compute_exact(std::size_t p) const {
    return std::visit(
        [&](const auto& v) -> rational {
          using T = std::decay_t<decltype(v)>;
          auto ipow = [](const rational& b, unsigned long e) {
            rational r = 1;
            for (unsigned long i = 0; i < e; ++i) r *= b;
            return r;
          };
          if constexpr (std::is_same_v<T, gevrey> || std::is_same_v<T, gevrey_log>) {
            return ipow(factorial_exact(p), numerator(v.alpha).template convert_to<unsigned long>());
          } else if constexpr (std::is_same_v<T, gamma_moment>) {
            // k = 1/j: Gamma(1 + j p) = (j p)!
            return factorial_exact(denominator(v.k).template convert_to<unsigned long>() * p);
          } else if constexpr (std::is_same_v<T, power_of>) {
            return ipow(*v.base->exact(p), numerator(v.s).template convert_to<unsigned long>());
          } else {
            return v.values[p];
          }
        },
        v_);
  }

  variant_type v_;
  std::shared_ptr<cache> cache_;
};

/// M_p (or m(p)) at the working precision.
inline real seq_eval(const sequence_handle& seq, std::size_t p) { return seq(p); }

/// M_a / M_b, exactly when the sequence allows it.
inline real seq_ratio(const sequence_handle& seq, std::size_t a, std::size_t b) {
  if (auto ea = seq.exact(a)) return to_real(*ea / *seq.exact(b));
  return seq(a) / seq(b);
}

// ---------------------------------------------------------------------------
// Strong regularity certificate

struct srs_certificate {
  bool lc_ok = false;
  real mg_constant;                     ///< A1
  real snq_constant;                    ///< A2, finite-depth estimate (a lower bound of the true constant)
  std::map<unsigned, real> dilation;    ///< C3(d)
  std::size_t depth = 0;                ///< N
  rational rescale = 1;                 ///< factor c applied as M_p * c^p before checking
  bool proximate_order_assumed = true;  ///< never verified computationally
};

/// Tables with M_1 < 1 are rescaled to M_p c^p with c = 1/M_1, which keeps
/// (lc), (mg), (snq) and the growth index. Other variants are returned as is.
inline std::pair<sequence_handle, rational> normalized(const sequence_handle& seq) {
  if (auto* t = std::get_if<table>(&seq.variant()); t && t->values.size() > 1 && t->values[1] < 1) {
    const rational c = rational(1) / t->values[1];
    std::vector<rational> v = t->values;
    rational f = 1;
    for (auto& x : v) {
      x *= f;
      f *= c;
    }
    return {sequence_handle::make_table(std::move(v)), c};
  }
  return {seq, rational(1)};
}

namespace detail {

// Ratio M_a / (M_b M_c) computed exactly when possible.
inline real ratio3(const sequence_handle& s, std::size_t a, std::size_t b, std::size_t c) {
  if (auto ea = s.exact(a)) return to_real(*ea / (*s.exact(b) * *s.exact(c)));
  return s(a) / (s(b) * s(c));
}

inline real nth_root(const real& x, std::size_t n) {
  if (n == 1) return x;
  return exp(log(x) / real(n));
}

}  // namespace detail

/// Checks (lc) termwise through N and estimates the (mg), (snq) and
/// dilation constants. Throws lc_violation carrying the first index p at
/// which the ratio M_p/M_{p-1} drops below its predecessor.
inline srs_certificate verify_srs(const sequence_handle& input, std::size_t N,
                                  const std::vector<unsigned>& dilations = {2, 3, 4}) {
  if (N < 4) throw error(errc::invalid_argument, "verify_srs needs depth N >= 4");
  auto [seq, factor] = normalized(input);
  srs_certificate cert;
  cert.depth = N;
  cert.rescale = factor;

  if (seq(0) != 1) throw error(errc::invalid_argument, "sequence must satisfy M_0 = 1");

  // (lc): M_p^2 <= M_{p-1} M_{p+1}, with a roundoff allowance for inexact sequences.
  const real slack = seq.exact_capable() ? real(0) : real(64) * epsilon();
  for (std::size_t p = 1; p + 1 <= N; ++p) {
    bool bad;
    if (auto e = seq.exact(p)) bad = (*e) * (*e) > *seq.exact(p - 1) * *seq.exact(p + 1);
    else bad = seq(p) * seq(p) > seq(p - 1) * seq(p + 1) * (1 + slack);
    if (bad)
      throw error(errc::lc_violation,
                  "log-convexity fails: M_" + std::to_string(p) + "^2 > M_" + std::to_string(p - 1) + " M_" +
                      std::to_string(p + 1) + " (ratio decreases at p=" + std::to_string(p + 1) + ")",
                  p + 1);
  }
  cert.lc_ok = true;

  // (mg): smallest A1 with M_{p+q} <= A1^{p+q} M_p M_q for p+q <= N.
  real a1 = 1;
  for (std::size_t n = 2; n <= N; ++n)
    for (std::size_t p = 1; p < n; ++p) a1 = max(a1, detail::nth_root(detail::ratio3(seq, n, p, n - p), n));
  cert.mg_constant = a1;

  // (snq): sup_p (M_{p+1}/M_p) * sum_{q=p}^{N} M_q / ((q+1) M_{q+1}).
  std::vector<real> tail(N + 2, real(0));
  for (std::size_t q = N + 1; q-- > 0;) tail[q] = tail[q + 1] + seq_ratio(seq, q, q + 1) / real(q + 1);
  real a2 = 1;
  for (std::size_t p = 0; p <= N; ++p) a2 = max(a2, seq_ratio(seq, p + 1, p) * tail[p]);
  cert.snq_constant = a2;

  // Dilation property: M_{dn}/M_{dn-1} <= C3(d) M_n/M_{n-1}.
  for (unsigned d : dilations) {
    if (d == 0) throw error(errc::invalid_argument, "dilation factor must be positive");
    real c3 = 1;
    for (std::size_t n = 1; n * d <= N; ++n) {
      real v;
      if (auto e = seq.exact(d * n))
        v = to_real((*e / *seq.exact(d * n - 1)) * (*seq.exact(n - 1) / *seq.exact(n)));
      else
        v = seq_ratio(seq, d * n, d * n - 1) * seq_ratio(seq, n - 1, n);
      c3 = max(c3, v);
    }
    cert.dilation[d] = c3;
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Regular M_p-sequence order fit

struct order_fit {
  real s_hat;
  real lower;  ///< a
  real upper;  ///< b
  std::size_t depth = 0;
};

/// Least-squares order s with a (M_n/M_{n-1})^s <= m(n)/m(n-1) <= b (M_n/M_{n-1})^s.
inline order_fit regular_order_fit(const sequence_handle& m, const sequence_handle& M, std::size_t N) {
  if (N < 8) throw error(errc::invalid_argument, "regular_order_fit needs depth N >= 8");
  std::size_t n_max = N;
  if (auto l = m.length()) n_max = std::min(n_max, *l - 1);
  if (auto l = M.length()) n_max = std::min(n_max, *l - 1);
  if (n_max < 2) throw error(errc::degenerate_fit, "fewer than two ratio points available");

  std::vector<real> xs, ys;
  for (std::size_t n = 1; n <= n_max; ++n) {
    xs.push_back(log(seq_ratio(M, n, n - 1)));
    ys.push_back(log(seq_ratio(m, n, n - 1)));
  }
  const real cnt = real(xs.size());
  real mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= cnt;
  my /= cnt;
  real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= real(1e-20) * cnt) throw error(errc::degenerate_fit, "regressor log(M_n/M_{n-1}) is constant");

  order_fit fit;
  fit.s_hat = sxy / sxx;
  fit.depth = n_max;
  // Snap to the nearest rational with small denominator when it is within roundoff.
  for (long den = 1; den <= 12; ++den) {
    const real cand = round(fit.s_hat * den) / den;
    if (abs(cand - fit.s_hat) < real(1e-25)) {
      fit.s_hat = cand;
      break;
    }
  }
  real lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const real q = exp(ys[i] - fit.s_hat * xs[i]);
    lo = min(lo, q);
    hi = max(hi, q);
  }
  fit.lower = lo;
  fit.upper = hi;
  return fit;
}

// ---------------------------------------------------------------------------
// Floor-quotient witnesses

struct floor_quotient_witness {
  unsigned p = 1, q = 1;
  real c1 = 1, d1 = 1, c2 = 1, d2 = 1;
  std::size_t depth = 0;
};

namespace detail {
inline real pow_ratio(const sequence_handle& seq, std::size_t n, unsigned p, unsigned q) {
  if (p == q) return seq(n);
  return exp(log(seq(n)) * real(p) / real(q));
}
}  // namespace detail

/// Constants with M_{floor(np/q)} <= C1 D1^n M_n^{p/q} and
/// M_n^{p/q} <= C2 D2^n M_{floor(np/q)} for n <= N; C1 = C2 = 1 and the
/// smallest D's (at least 1) that make every inequality hold.
inline floor_quotient_witness floor_quotient_witness_for(const sequence_handle& seq, unsigned p, unsigned q,
                                                         std::size_t N) {
  if (p == 0 || q == 0) throw error(errc::invalid_argument, "p and q must be positive");
  if (N < q) throw error(errc::invalid_argument, "depth N must be at least q");
  floor_quotient_witness w;
  w.p = p;
  w.q = q;
  w.depth = N;
  if (p == q) return w;
  for (std::size_t n = 1; n <= N; ++n) {
    const std::size_t idx = n * p / q;
    const real lhs = seq(idx);
    const real pw = detail::pow_ratio(seq, n, p, q);
    w.d1 = max(w.d1, detail::nth_root(lhs / pw, n));
    w.d2 = max(w.d2, detail::nth_root(pw / lhs, n));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Associated function M(t) and growth index

struct assoc_function_result {
  std::vector<real> values;  ///< M(t) on the input grid
  std::vector<std::size_t> argmax;
  real omega;                ///< regression estimate of omega(M)
  real slope;                ///< slope of log M(r) against log r
};

/// M(t) = max_{p <= P_max} log(t^p / M_p), M(0) = 0, and omega(M) from a
/// least-squares fit of log M(r) against log r over the upper part of the grid.
inline assoc_function_result assoc_M_and_omega(const sequence_handle& seq, const std::vector<real>& t_grid,
                                               std::size_t p_max, double window_fraction = 0.5) {
  if (t_grid.empty()) throw error(errc::invalid_argument, "empty t grid");
  if (window_fraction <= 0 || window_fraction > 1)
    throw error(errc::invalid_argument, "window fraction must lie in (0, 1]");
  assoc_function_result out;
  for (const real& t : t_grid) {
    if (t < 0) throw error(errc::invalid_argument, "t grid must be nonnegative");
    if (t == 0) {
      out.values.emplace_back(0);
      out.argmax.push_back(0);
      continue;
    }
    const real lt = log(t);
    real best = 0;  // p = 0 term: log(1/M_0) = 0
    std::size_t arg = 0;
    for (std::size_t p = 1; p <= p_max; ++p) {
      const real v = real(p) * lt - seq.log_at(p);
      if (v > best) {
        best = v;
        arg = p;
      }
    }
    if (arg == p_max)
      throw error(errc::grid_too_small,
                  "supremum at t=" + to_string(t, 6) + " is attained at P_max=" + std::to_string(p_max), arg);
    out.values.push_back(best);
    out.argmax.push_back(arg);
  }
  const std::size_t start =
      t_grid.size() - std::max<std::size_t>(2, static_cast<std::size_t>(t_grid.size() * window_fraction));
  std::vector<real> xs, ys;
  for (std::size_t i = start; i < t_grid.size(); ++i) {
    if (t_grid[i] > 1 && out.values[i] > 0) {
      xs.push_back(log(t_grid[i]));
      ys.push_back(log(out.values[i]));
    }
  }
  if (xs.size() < 2) throw error(errc::grid_too_small, "fewer than two usable grid points for omega");
  real mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= real(xs.size());
  my /= real(xs.size());
  real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  out.slope = sxy / sxx;
  out.omega = real(1) / out.slope;
  return out;
}

}  // namespace msl
