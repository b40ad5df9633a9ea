#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace msl {

enum class errc {
  invalid_argument,
  table_exhausted,
  lc_violation,
  degenerate_fit,
  grid_too_small,
  profile_mismatch,
  not_a_unit,
  order_exhausted,
  truncation_overflow,
  radius_out_of_range,
  grid_mismatch,
  not_exact,
  syntax_error,
  semantic_error,
  no_positive_slope,
  multiple_positive_slopes,
  slope_mismatch,
  validation_failed,
  insufficient_terms,
  domain_guard,
  direction_out_of_domain,
  quadrature_budget,
  io_error,
};

constexpr std::string_view to_string(errc c) noexcept {
  switch (c) {
    case errc::invalid_argument: return "InvalidArgument";
    case errc::table_exhausted: return "TableExhausted";
    case errc::lc_violation: return "LcViolation";
    case errc::degenerate_fit: return "DegenerateFit";
    case errc::grid_too_small: return "GridTooSmall";
    case errc::profile_mismatch: return "ProfileMismatch";
    case errc::not_a_unit: return "NotAUnit";
    case errc::order_exhausted: return "OrderExhausted";
    case errc::truncation_overflow: return "TruncationOverflow";
    case errc::radius_out_of_range: return "RadiusOutOfRange";
    case errc::grid_mismatch: return "GridMismatch";
    case errc::not_exact: return "NotExact";
    case errc::syntax_error: return "SyntaxError";
    case errc::semantic_error: return "SemanticError";
    case errc::no_positive_slope: return "NoPositiveSlope";
    case errc::multiple_positive_slopes: return "MultiplePositiveSlopes";
    case errc::slope_mismatch: return "SlopeMismatch";
    case errc::validation_failed: return "ValidationFailed";
    case errc::insufficient_terms: return "InsufficientTerms";
    case errc::domain_guard: return "DomainGuard";
    case errc::direction_out_of_domain: return "DirectionOutOfDomain";
    case errc::quadrature_budget: return "QuadratureBudget";
    case errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Source position inside a parsed text (1-based).
struct source_pos {
  std::size_t line = 1;
  std::size_t col = 1;
};

/// Every failure raised by the library. `code()` identifies the failure
/// class; `index()` carries the offending term index where one exists and
/// `pos()` the text position for parse failures.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what) : std::runtime_error(compose(code, what)), code_(code) {}

  error(errc code, const std::string& what, std::size_t index)
      : std::runtime_error(compose(code, what)), code_(code), index_(index) {}

  error(errc code, const std::string& what, source_pos pos, std::string expected = {})
      : std::runtime_error(compose(code, what, pos, expected)),
        code_(code),
        pos_(pos),
        expected_(std::move(expected)) {}

  [[nodiscard]] errc code() const noexcept { return code_; }
  [[nodiscard]] std::optional<std::size_t> index() const noexcept { return index_; }
  [[nodiscard]] std::optional<source_pos> pos() const noexcept { return pos_; }
  [[nodiscard]] const std::string& expected() const noexcept { return expected_; }

 private:
  static std::string compose(errc code, const std::string& what) {
    return std::string(to_string(code)) + ": " + what;
  }
  static std::string compose(errc code, const std::string& what, source_pos pos,
                             const std::string& expected) {
    std::string s = std::string(to_string(code)) + " at line " + std::to_string(pos.line) +
                    ", col " + std::to_string(pos.col) + ": " + what;
    if (!expected.empty()) s += " (expected " + expected + ")";
    return s;
  }

  errc code_;
  std::optional<std::size_t> index_;
  std::optional<source_pos> pos_;
  std::string expected_;
};

}  // namespace msl
