#pragma once

// Text formats: the equation grammar
//   equation := "u" { "-" term } "=" "f"
//   term     := [ "(" poly ")" ] "Dti[" int "]" [ "Dz[" int "]" ] "u"
// and the key = value problem file with inline tables and arrays.

#include <cctype>
#include <fstream>
#include <sstream>
#include <variant>

#include "operator.hpp"

namespace msl {

namespace detail {

class cursor {
 public:
  cursor(std::string_view text, source_pos origin) : s_(text), origin_(origin) {}

  [[nodiscard]] bool done() { skip_ws(); return i_ >= s_.size(); }
  [[nodiscard]] char peek() { skip_ws(); return i_ < s_.size() ? s_[i_] : '\0'; }
  [[nodiscard]] std::size_t offset() const noexcept { return i_; }

  [[nodiscard]] source_pos pos() const {
    source_pos p = origin_;
    for (std::size_t j = 0; j < i_ && j < s_.size(); ++j) {
      if (s_[j] == '\n') {
        ++p.line;
        p.col = 1;
      } else {
        ++p.col;
      }
    }
    return p;
  }

  [[noreturn]] void fail(const std::string& what, const std::string& expected) const {
    throw error(errc::syntax_error, what, pos(), expected);
  }

  bool accept(std::string_view lit) {
    skip_ws();
    if (s_.substr(i_, lit.size()) == lit) {
      i_ += lit.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view lit) {
    if (!accept(lit)) fail("unexpected " + describe_next(), "'" + std::string(lit) + "'");
  }

  unsigned integer_literal() {
    skip_ws();
    const std::size_t start = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (start == i_) fail("unexpected " + describe_next(), "integer");
    if (i_ - start > 6) {
      i_ = start;
      fail("integer literal too large", "integer below 10^6");
    }
    return static_cast<unsigned>(std::stoul(std::string(s_.substr(start, i_ - start))));
  }

  /// Unsigned decimal literal: digits [. digits] [e [+-] digits].
  std::optional<rational> number_literal() {
    skip_ws();
    std::size_t j = i_;
    bool digits = false;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j, digits = true;
    if (j < s_.size() && s_[j] == '.') {
      ++j;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j, digits = true;
    }
    if (!digits) return std::nullopt;
    if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      if (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) {
        while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
        j = k;
      }
    }
    const rational v = parse_rational(s_.substr(i_, j - i_));
    i_ = j;
    return v;
  }

  std::string describe_next() {
    skip_ws();
    if (i_ >= s_.size()) return "end of input";
    return "'" + std::string(1, s_[i_]) + "'";
  }

  void skip_ws() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i_;
      } else {
        break;
      }
    }
  }

  // Whitespace inside a line only (newlines are significant at top level).
  void skip_inline_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
    if (i_ < s_.size() && s_[i_] == '#')
      while (i_ < s_.size() && s_[i_] != '\n') ++i_;
  }

  std::string_view rest() const { return s_.substr(i_); }
  char raw(std::size_t k = 0) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }
  void advance(std::size_t n = 1) { i_ = std::min(i_ + n, s_.size()); }

 private:
  std::string_view s_;
  source_pos origin_;
  std::size_t i_ = 0;
};

class poly_parser {
 public:
  explicit poly_parser(cursor& c) : c_(c) {}

  polynomial sum() {
    polynomial acc = product();
    for (;;) {
      if (c_.accept("+")) acc = acc + product();
      else if (c_.peek() == '-' ) {
        c_.advance();
        acc = acc - product();
      } else {
        return acc;
      }
    }
  }

 private:
  polynomial product() {
    polynomial acc = unary();
    for (;;) {
      if (c_.accept("*")) {
        acc = acc * unary();
      } else if (c_.peek() == '/') {
        const source_pos at = c_.pos();
        c_.advance();
        const polynomial d = unary();
        if (d.degree() != 0)
          throw error(errc::semantic_error, "division is only allowed by a nonzero constant", at);
        acc = acc * polynomial::constant(1 / d[0]);
      } else if (starts_atom()) {
        acc = acc * unary();
      } else {
        return acc;
      }
    }
  }

  polynomial unary() {
    if (c_.accept("-")) return -unary();
    if (c_.accept("+")) return unary();
    return power();
  }

  polynomial power() {
    polynomial base = atom();
    if (c_.accept("^")) {
      const unsigned e = c_.integer_literal();
      if (e > 64) c_.fail("exponent too large", "exponent <= 64");
      polynomial out = polynomial::constant(1);
      for (unsigned j = 0; j < e; ++j) out = out * base;
      return out;
    }
    return base;
  }

  polynomial atom() {
    if (c_.accept("(")) {
      polynomial p = sum();
      c_.expect(")");
      return p;
    }
    if (c_.peek() == 'z') {
      c_.advance();
      return polynomial::z();
    }
    if (auto v = c_.number_literal()) return polynomial::constant(*v);
    c_.fail("unexpected " + c_.describe_next(), "number, 'z' or '('");
  }

  bool starts_atom() {
    const char ch = c_.peek();
    return ch == '(' || ch == 'z' || std::isdigit(static_cast<unsigned char>(ch)) || ch == '.';
  }

  cursor& c_;
};

}  // namespace detail

/// Parses the equation text; positions in errors are offset by `origin`.
inline operator_spec parse_equation(std::string_view text, source_pos origin = {}) {
  detail::cursor c(text, origin);
  c.expect("u");
  std::vector<operator_term> terms;
  std::vector<source_pos> where;
  while (c.peek() == '-') {
    c.advance();
    operator_term t;
    t.a = polynomial::constant(1);
    where.push_back(c.pos());
    if (c.accept("(")) {
      detail::poly_parser pp(c);
      t.a = pp.sum();
      c.expect(")");
    }
    c.expect("Dti[");
    t.i = c.integer_literal();
    c.expect("]");
    if (c.accept("Dz[")) {
      t.q = c.integer_literal();
      c.expect("]");
    }
    c.expect("u");
    if (t.i < 1) throw error(errc::semantic_error, "integral order i must be at least 1", where.back());
    for (std::size_t j = 0; j + 1 < where.size(); ++j)
      if (terms[j].i == t.i && terms[j].q == t.q)
        throw error(errc::semantic_error,
                    "duplicate term (i=" + std::to_string(t.i) + ", q=" + std::to_string(t.q) + ")", where.back());
    terms.push_back(std::move(t));
  }
  if (c.peek() != '=') c.fail("unexpected " + c.describe_next(), "'-' or '='");
  c.expect("=");
  c.expect("f");
  if (!c.done()) c.fail("trailing input " + c.describe_next(), "end of equation");
  if (terms.empty()) throw error(errc::semantic_error, "the operator needs at least one term", origin);
  return operator_spec(std::move(terms));
}

inline std::string format_equation(const operator_spec& op) {
  std::string out = "u";
  for (const auto& t : op.terms()) {
    out += " - (" + t.a.str() + ") Dti[" + std::to_string(t.i) + "]";
    if (t.q > 0) out += " Dz[" + std::to_string(t.q) + "]";
    out += " u";
  }
  return out + " = f";
}

// ---------------------------------------------------------------------------
// Problem files

/// Parsed value of the key = value format.
struct spec_value {
  struct entry;
  using array = std::vector<spec_value>;
  using table = std::vector<entry>;
  std::variant<std::string, rational, bool, array, table> v;
  source_pos pos;
  bool quoted = false;
};

struct spec_value::entry {
  std::string key;
  source_pos key_pos;
  spec_value value;
};

namespace detail {

class value_parser {
 public:
  explicit value_parser(cursor& c) : c_(c) {}

  spec_value value() {
    spec_value out;
    out.pos = c_.pos();
    const char ch = c_.peek();
    if (ch == '"') {
      out.v = string_literal();
      out.quoted = true;
    } else if (ch == '[') {
      c_.advance();
      spec_value::array arr;
      if (!c_.accept("]")) {
        for (;;) {
          arr.push_back(value());
          if (c_.accept("]")) break;
          if (!c_.accept(",")) c_.fail("unexpected " + c_.describe_next(), "',' or ']'");
          if (c_.accept("]")) break;
        }
      }
      out.v = std::move(arr);
    } else if (ch == '{') {
      c_.advance();
      spec_value::table tab;
      if (!c_.accept("}")) {
        for (;;) {
          spec_value::entry e;
          e.key_pos = c_.pos();
          e.key = key();
          c_.expect("=");
          e.value = value();
          tab.push_back(std::move(e));
          if (c_.accept("}")) break;
          if (!c_.accept(",")) c_.fail("unexpected " + c_.describe_next(), "',' or '}'");
        }
      }
      out.v = std::move(tab);
    } else if (c_.accept("true")) {
      out.v = true;
    } else if (c_.accept("false")) {
      out.v = false;
    } else {
      out.v = number();
    }
    return out;
  }

  std::string key() {
    c_.skip_ws();
    std::string k;
    while (std::isalnum(static_cast<unsigned char>(c_.raw())) || c_.raw() == '_') {
      k += c_.raw();
      c_.advance();
    }
    if (k.empty() || std::isdigit(static_cast<unsigned char>(k[0]))) c_.fail("unexpected " + c_.describe_next(), "key");
    return k;
  }

 private:
  rational number() {
    bool neg = false;
    if (c_.accept("-")) neg = true;
    else (void)c_.accept("+");
    auto v = c_.number_literal();
    if (!v) c_.fail("unexpected " + c_.describe_next(), "value");
    if (c_.raw() == '/') {
      c_.advance();
      auto d = c_.number_literal();
      if (!d || *d == 0) c_.fail("bad denominator", "nonzero number");
      *v /= *d;
    }
    return neg ? rational(-*v) : *v;
  }

  std::string string_literal() {
    c_.expect("\"");
    std::string s;
    while (c_.raw() != '"') {
      if (c_.raw() == '\0' || c_.raw() == '\n') c_.fail("unterminated string", "'\"'");
      if (c_.raw() == '\\') {
        c_.advance();
        const char e = c_.raw();
        s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        s += c_.raw();
      }
      c_.advance();
    }
    c_.advance();
    return s;
  }

  cursor& c_;
};

[[noreturn]] inline void semantic(const std::string& what, source_pos at) {
  throw error(errc::semantic_error, what, at);
}

inline const rational& as_number(const spec_value& v, const std::string& what) {
  if (auto* q = std::get_if<rational>(&v.v)) return *q;
  semantic(what + " must be a number", v.pos);
}

inline std::size_t as_count(const spec_value& v, const std::string& what) {
  const rational& q = as_number(v, what);
  if (!is_integer(q) || q < 0 || q > 100000) semantic(what + " must be a nonnegative integer", v.pos);
  return numerator(q).convert_to<std::size_t>();
}

inline const spec_value::table& as_table(const spec_value& v, const std::string& what) {
  if (auto* t = std::get_if<spec_value::table>(&v.v)) return *t;
  semantic(what + " must be an inline table { ... }", v.pos);
}

inline const spec_value::array& as_array(const spec_value& v, const std::string& what) {
  if (auto* a = std::get_if<spec_value::array>(&v.v)) return *a;
  semantic(what + " must be an array [ ... ]", v.pos);
}

inline const spec_value::entry& single_entry(const spec_value& v, const std::string& what) {
  const auto& t = as_table(v, what);
  if (t.size() != 1) semantic(what + " must name exactly one variant", v.pos);
  return t.front();
}

inline sequence_handle to_sequence(const spec_value& v, const std::string& what) {
  const auto& e = single_entry(v, what);
  auto positive = [&](const spec_value& x, const std::string& name) {
    const rational& q = as_number(x, name);
    if (q <= 0) semantic(name + " must be positive", x.pos);
    return q;
  };
  if (e.key == "gevrey") return sequence_handle::make_gevrey(positive(e.value, "gevrey order"));
  if (e.key == "gevrey_log") {
    const auto& a = as_array(e.value, "gevrey_log");
    if (a.size() != 2) semantic("gevrey_log takes [alpha, beta]", e.value.pos);
    return sequence_handle::make_gevrey_log(positive(a[0], "gevrey_log alpha"), as_number(a[1], "gevrey_log beta"));
  }
  if (e.key == "gamma_moment") return sequence_handle::make_gamma_moment(positive(e.value, "gamma_moment k"));
  if (e.key == "power_of") {
    const auto& t = as_table(e.value, "power_of");
    const spec_value* base = nullptr;
    const spec_value* s = nullptr;
    for (const auto& x : t) {
      if (x.key == "base") base = &x.value;
      else if (x.key == "s") s = &x.value;
      else semantic("unknown key '" + x.key + "' in power_of", x.key_pos);
    }
    if (!base || !s) semantic("power_of needs base and s", e.value.pos);
    return sequence_handle::make_power_of(to_sequence(*base, "power_of base"), positive(*s, "power_of s"));
  }
  if (e.key == "table") {
    std::vector<rational> vals;
    for (const auto& x : as_array(e.value, "table")) vals.push_back(positive(x, "table entry"));
    if (vals.empty() || vals[0] != 1) semantic("a table must start with M_0 = 1", e.value.pos);
    return sequence_handle::make_table(std::move(vals));
  }
  semantic("unknown sequence variant '" + e.key + "'", e.key_pos);
}

inline rhs_literal to_rhs(const spec_value& v) {
  const auto& e = single_entry(v, "f");
  rhs_literal f;
  if (e.key == "t_poly") {
    f.k = rhs_literal::kind::t_poly;
    for (const auto& row : as_array(e.value, "t_poly")) {
      std::vector<rational> r;
      for (const auto& x : as_array(row, "t_poly row")) r.push_back(as_number(x, "t_poly entry"));
      f.rows.push_back(std::move(r));
    }
    return f;
  }
  if (e.key == "geometric_z") {
    if (!as_table(e.value, "geometric_z").empty()) semantic("geometric_z takes no parameters", e.value.pos);
    f.k = rhs_literal::kind::geometric_z;
    return f;
  }
  if (e.key == "constant") {
    f.k = rhs_literal::kind::constant;
    f.value = as_number(e.value, "constant");
    return f;
  }
  semantic("unknown right-hand side '" + e.key + "'", e.key_pos);
}

}  // namespace detail

/// Parses a problem file.
inline problem_spec parse_problem(std::string_view text) {
  detail::cursor c(text, {});
  detail::value_parser vp(c);
  problem_spec spec;
  std::map<std::string, source_pos> seen;
  bool have_op = false;
  for (;;) {
    c.skip_ws();
    if (c.done()) break;
    const source_pos kp = c.pos();
    const std::string key = vp.key();
    if (seen.count(key)) detail::semantic("key '" + key + "' given twice", kp);
    seen[key] = kp;
    c.skip_inline_ws();
    if (c.raw() != '=') c.fail("unexpected " + c.describe_next(), "'='");
    c.advance();
    c.skip_inline_ws();
    if (c.raw() == '\n' || c.raw() == '\0') c.fail("missing value", "value");
    const spec_value v = vp.value();
    c.skip_inline_ws();
    if (c.raw() != '\n' && c.raw() != '\0') c.fail("unexpected " + c.describe_next(), "end of line");

    if (key == "equation") {
      const auto* s = std::get_if<std::string>(&v.v);
      if (!s) detail::semantic("equation must be a quoted string", v.pos);
      spec.op = parse_equation(*s, {v.pos.line, v.pos.col + 1});
      spec.equation = format_equation(spec.op);
      have_op = true;
    } else if (key == "m1") {
      spec.m1 = detail::to_sequence(v, "m1");
    } else if (key == "m2") {
      spec.m2 = detail::to_sequence(v, "m2");
    } else if (key == "base") {
      spec.base = detail::to_sequence(v, "base");
    } else if (key == "s1") {
      spec.s1 = detail::as_number(v, "s1");
    } else if (key == "s2") {
      spec.s2 = detail::as_number(v, "s2");
    } else if (key == "r") {
      spec.r = detail::as_number(v, "r");
    } else if (key == "f") {
      spec.f = detail::to_rhs(v);
    } else if (key == "nt") {
      spec.nt = detail::as_count(v, "nt");
    } else if (key == "nz") {
      spec.nz = detail::as_count(v, "nz");
    } else if (key == "direction") {
      spec.direction = detail::as_number(v, "direction").convert_to<double>();
    } else if (key == "precision") {
      const std::size_t b = detail::as_count(v, "precision");
      if (b < min_precision_bits) detail::semantic("precision must be at least 64 bits", v.pos);
      spec.precision = static_cast<unsigned>(b);
    } else if (key == "pmax") {
      spec.pmax = detail::as_count(v, "pmax");
    } else if (key == "exact") {
      const auto* b = std::get_if<bool>(&v.v);
      if (!b) detail::semantic("exact must be true or false", v.pos);
      spec.exact = *b;
    } else if (key == "fit_tolerance") {
      spec.fit_tolerance = detail::as_number(v, "fit_tolerance").convert_to<double>();
    } else {
      detail::semantic("unknown key '" + key + "'", kp);
    }
  }
  for (const char* req : {"equation", "m1", "m2", "s1", "s2", "f"})
    if (!seen.count(req)) detail::semantic(std::string("missing required key '") + req + "'", c.pos());
  if (!have_op) detail::semantic("missing equation", c.pos());
  return spec;
}

inline problem_spec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_error, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

inline std::string format_sequence(const sequence_handle& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, gevrey>) return "{ gevrey = " + to_string(v.alpha) + " }";
        else if constexpr (std::is_same_v<T, gevrey_log>)
          return "{ gevrey_log = [" + to_string(v.alpha) + ", " + to_string(v.beta) + "] }";
        else if constexpr (std::is_same_v<T, gamma_moment>) return "{ gamma_moment = " + to_string(v.k) + " }";
        else if constexpr (std::is_same_v<T, power_of>)
          return "{ power_of = { base = " + format_sequence(*v.base) + ", s = " + to_string(v.s) + " } }";
        else {
          std::string out = "{ table = [";
          for (std::size_t i = 0; i < v.values.size(); ++i) out += (i ? ", " : "") + to_string(v.values[i]);
          return out + "] }";
        }
      },
      s.variant());
}

inline bool same_sequence(const sequence_handle& a, const sequence_handle& b) {
  return format_sequence(a) == format_sequence(b);
}

inline std::string format_rhs(const rhs_literal& f) {
  switch (f.k) {
    case rhs_literal::kind::geometric_z: return "{ geometric_z = {} }";
    case rhs_literal::kind::constant: return "{ constant = " + to_string(f.value) + " }";
    case rhs_literal::kind::t_poly: break;
  }
  std::string out = "{ t_poly = [";
  for (std::size_t n = 0; n < f.rows.size(); ++n) {
    out += n ? ", [" : "[";
    for (std::size_t p = 0; p < f.rows[n].size(); ++p) out += (p ? ", " : "") + to_string(f.rows[n][p]);
    out += "]";
  }
  return out + "] }";
}

namespace detail {
// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  for (int prec = 1; prec <= 17; ++prec) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    if (parse_rational(os.str()).convert_to<double>() == x) return os.str();
  }
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}
}  // namespace detail

/// Canonical problem file with every default written out.
inline std::string format_problem(const problem_spec& s) {
  std::ostringstream os;
  os << "equation = \"" << format_equation(s.op) << "\"\n"
     << "m1 = " << format_sequence(s.m1) << "\n"
     << "m2 = " << format_sequence(s.m2) << "\n"
     << "base = " << format_sequence(s.base) << "\n"
     << "s1 = " << to_string(s.s1) << "\n"
     << "s2 = " << to_string(s.s2) << "\n"
     << "r = " << to_string(s.r) << "\n"
     << "f = " << format_rhs(s.f) << "\n"
     << "nt = " << s.nt << "\n"
     << "nz = " << s.nz << "\n"
     << "direction = " << detail::format_double(s.direction) << "\n"
     << "precision = " << s.precision << "\n"
     << "pmax = " << s.pmax << "\n"
     << "exact = " << (s.exact ? "true" : "false") << "\n"
     << "fit_tolerance = " << detail::format_double(s.fit_tolerance) << "\n";
  return os.str();
}

inline bool operator==(const problem_spec& a, const problem_spec& b) {
  return a.equation == b.equation && a.op == b.op && same_sequence(a.m1, b.m1) && same_sequence(a.m2, b.m2) &&
         same_sequence(a.base, b.base) && a.s1 == b.s1 && a.s2 == b.s2 && a.r == b.r && a.f == b.f &&
         a.nt == b.nt && a.nz == b.nz && a.direction == b.direction && a.precision == b.precision &&
         a.pmax == b.pmax && a.exact == b.exact && a.fit_tolerance == b.fit_tolerance;
}

}  // namespace msl
