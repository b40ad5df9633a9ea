#include <gtest/gtest.h>

#include <msl/dsl.hpp>

using namespace msl;

namespace {

const char* heat_file = R"(# heat-type problem
equation = "u - (1) Dti[1] Dz[2] u = f"
m1 = { gevrey = 1 }
m2 = { gevrey = 1 }
base = { gevrey = 1 }
s1 = 1
s2 = 1
r = 0.5
f = { geometric_z = {} }
nt = 40
nz = 20
direction = 0
precision = 128
)";

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  return errc::io_error;
}

}  // namespace

TEST(dsl, SingleTerm) {
  const auto op = parse_equation("u - (1) Dti[1] Dz[2] u = f");
  EXPECT_EQ(op.kappa(), 1u);
  EXPECT_EQ(op.K(), std::vector<unsigned>{1});
  EXPECT_EQ(op.p(1), 2u);
  EXPECT_EQ(op.leading(), polynomial::constant(1));
}

TEST(dsl, TwoTermsMatchHandBuilt) {
  const auto op = parse_equation("u - (2+z) Dti[2] Dz[3] u - (z) Dti[1] Dz[1] u = f");
  const operator_spec hand({{1, 1, polynomial::z()}, {2, 3, polynomial({2, 1})}});
  EXPECT_EQ(op, hand);
  EXPECT_EQ(op.kappa(), 2u);
  EXPECT_EQ(op.p(2), 3u);
  EXPECT_EQ(op.p(1), 1u);
}

TEST(dsl, ZeroIntegralOrder) {
  EXPECT_EQ(code_of([] { parse_equation("u - Dti[0] u = f"); }), errc::semantic_error);
}

TEST(dsl, DuplicateTerm) {
  EXPECT_EQ(code_of([] { parse_equation("u - Dti[1] Dz[1] u - (3) Dti[1] Dz[1] u = f"); }), errc::semantic_error);
}

TEST(dsl, MissingCoefficientDefaultsToOne) {
  const auto op = parse_equation("u-Dti[1]u=f");
  EXPECT_EQ(op.p(1), 0u);
  EXPECT_EQ(op.leading(), polynomial::constant(1));
}

TEST(dsl, PolynomialSyntax) {
  const auto op = parse_equation("u - (2*(1 - z)^2 + 3/4 z - 0.5e1*z^3/2) Dti[1] Dz[2] u = f");
  EXPECT_EQ(op.leading(), polynomial({rational(2), rational(-13, 4), rational(2), rational(-5, 2)}));
}

TEST(dsl, DivisionByPolynomialRejected) {
  EXPECT_EQ(code_of([] { parse_equation("u - (1/z) Dti[1] u = f"); }), errc::semantic_error);
}

TEST(dsl, SyntaxErrorPosition) {
  try {
    parse_equation("u - (1) Dti[1 Dz[2] u = f");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::syntax_error);
    ASSERT_TRUE(e.pos());
    EXPECT_EQ(e.pos()->line, 1u);
    EXPECT_EQ(e.pos()->col, 15u);
    EXPECT_EQ(e.expected(), "']'");
  }
}

TEST(dsl, MissingRightHandSide) {
  EXPECT_EQ(code_of([] { parse_equation("u - Dti[1] u ="); }), errc::syntax_error);
  EXPECT_EQ(code_of([] { parse_equation("u - Dti[1] u + Dti[2] u = f"); }), errc::syntax_error);
}

TEST(dsl, FormatEquationRoundTrip) {
  const auto op = parse_equation("u - (2+z) Dti[2] Dz[3] u - (-z^2/3) Dti[1] u = f");
  EXPECT_EQ(parse_equation(format_equation(op)), op);
}

TEST(dsl, ProblemFile) {
  const auto s = parse_problem(heat_file);
  EXPECT_EQ(s.op.kappa(), 1u);
  EXPECT_EQ(s.r, rational(1, 2));
  EXPECT_EQ(s.f.k, rhs_literal::kind::geometric_z);
  EXPECT_EQ(s.nt, 40u);
  EXPECT_EQ(s.precision, 128u);
  EXPECT_EQ(s.pmax, 12u);
  EXPECT_TRUE(same_sequence(s.m1, sequence_handle::make_gevrey(1)));
}

TEST(dsl, SequenceVariants) {
  const auto s = parse_problem(R"(equation = "u - Dti[1] Dz[2] u = f"
m1 = { power_of = { base = { gevrey_log = [1, -1] }, s = 1/2 } }
m2 = { gamma_moment = 2 }
base = { table = [1, 1, 2, 6, 24, 120] }
s1 = 1/2
s2 = 0.5
f = { t_poly = [[1], [0, 1]] }
)");
  EXPECT_EQ(format_sequence(s.m1), "{ power_of = { base = { gevrey_log = [1, -1] }, s = 1/2 } }");
  EXPECT_EQ(format_sequence(s.m2), "{ gamma_moment = 2 }");
  EXPECT_EQ(s.base.length(), std::optional<std::size_t>(6));
  EXPECT_EQ(s.s2, rational(1, 2));
  EXPECT_EQ(s.f.rows.size(), 2u);
}

TEST(dsl, UnknownKeyPosition) {
  try {
    parse_problem(std::string(heat_file) + "bogus = 3\n");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::semantic_error);
    ASSERT_TRUE(e.pos());
    EXPECT_EQ(e.pos()->line, 14u);
    EXPECT_EQ(e.pos()->col, 1u);
  }
}

TEST(dsl, EquationErrorPositionInFile) {
  try {
    parse_problem("m1 = { gevrey = 1 }\nequation = \"u - Dti[x] u = f\"\n");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::syntax_error);
    ASSERT_TRUE(e.pos());
    EXPECT_EQ(e.pos()->line, 2u);
    EXPECT_EQ(e.pos()->col, 21u);
  }
}

TEST(dsl, MissingKey) {
  EXPECT_EQ(code_of([] { parse_problem("equation = \"u - Dti[1] u = f\"\n"); }), errc::semantic_error);
}

TEST(dsl, BadValues) {
  const std::string base = "equation = \"u - Dti[1] Dz[2] u = f\"\nm1 = { gevrey = 1 }\ns1 = 1\ns2 = 1\nf = { constant = 1 }\n";
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { gevrey = -1 }\n"); }), errc::semantic_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { fancy = 1 }\n"); }), errc::semantic_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { gevrey = 1 \n"); }), errc::syntax_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { gevrey = 1 } extra\n"); }), errc::syntax_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { table = [2, 3] }\n"); }), errc::semantic_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { gevrey = 1 }\nm2 = { gevrey = 1 }\n"); }),
            errc::semantic_error);
  EXPECT_EQ(code_of([&] { parse_problem(base + "m2 = { gevrey = 1 }\nprecision = 16\n"); }), errc::semantic_error);
}

TEST(dsl, PrettyPrintRoundTrip) {
  const char* files[] = {
      heat_file,
      R"(equation = "u - (2+z) Dti[2] Dz[3] u - (z/7 - 1.25) Dti[1] Dz[1] u = f"
m1 = { gevrey_log = [3/2, 2] }
m2 = { power_of = { base = { gamma_moment = 1/3 }, s = 2 } }
s1 = 1
s2 = 1
r = 0.25
f = { t_poly = [[1, -2/3], [], [0, 0, 5]] }
direction = 0.3
exact = true
fit_tolerance = 0.1
)"};
  for (const char* text : files) {
    const auto a = parse_problem(text);
    const std::string printed = format_problem(a);
    const auto b = parse_problem(printed);
    EXPECT_TRUE(a == b) << printed;
    EXPECT_EQ(format_problem(b), printed);
  }
}

TEST(dsl, LoadMissingFile) {
  EXPECT_EQ(code_of([] { load_problem("/nonexistent/spec.toml"); }), errc::io_error);
}
