#include <gtest/gtest.h>

#include <msl/sequences.hpp>

#include <random>

using namespace msl;

namespace {

struct precision_fixture : ::testing::Test {
  precision_scope scope{128};
};

using seq = precision_fixture;

real rel_err(const real& a, const real& b) { return abs(a - b) / abs(b); }

}  // namespace

TEST_F(seq, GevreyOrderTwoValue) {
  EXPECT_EQ(seq_eval(sequence_handle::make_gevrey(2), 3), real(36));
  EXPECT_EQ(*sequence_handle::make_gevrey(2).exact(3), rational(36));
}

TEST_F(seq, GammaMomentValue) {
  const auto m = sequence_handle::make_gamma_moment(2);
  EXPECT_LT(rel_err(seq_eval(m, 4), real(2)), real(1e-35));
  EXPECT_EQ(seq_eval(m, 0), real(1));
}

TEST_F(seq, GevreyLogMatchesDirectProduct) {
  // 2! * ln(e) * ln(e+1) * ln(e+2)
  real oracle = 2;
  for (int m = 0; m <= 2; ++m) oracle *= log(euler_e() + m);
  const real v = seq_eval(sequence_handle::make_gevrey_log(1, 1), 2);
  EXPECT_LT(rel_err(v, oracle), real(1e-35));
  EXPECT_NEAR(v.convert_to<double>(), 4.0747, 5e-4);
}

TEST_F(seq, GammaMomentAgreesWithFactorials) {
  const auto m = sequence_handle::make_gamma_moment(1);
  for (unsigned p = 0; p <= 30; ++p) EXPECT_LT(rel_err(m(p), to_real(factorial_exact(p))) + real(0), real(1e-36)) << p;
  const auto half = sequence_handle::make_gamma_moment(rational(1, 2));
  for (unsigned p = 0; p <= 10; ++p) EXPECT_EQ(*half.exact(p), factorial_exact(2 * p));
}

TEST_F(seq, TableExhausted) {
  const auto t = sequence_handle::make_table({1, 2, 6});
  EXPECT_EQ(t(2), real(6));
  try {
    (void)t(3);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::table_exhausted);
    EXPECT_EQ(e.index(), std::optional<std::size_t>(3));
  }
}

TEST_F(seq, PowerOfGevrey) {
  const auto m = sequence_handle::make_power_of(sequence_handle::make_gevrey(1), rational(1, 2));
  EXPECT_LT(rel_err(m(5), sqrt(real(120))), real(1e-35));
  const auto sq = sequence_handle::make_power_of(sequence_handle::make_gevrey(1), 2);
  EXPECT_EQ(*sq.exact(4), rational(576));
}

TEST_F(seq, GevreyCertificate) {
  const auto cert = verify_srs(sequence_handle::make_gevrey(1), 50);
  EXPECT_TRUE(cert.lc_ok);
  EXPECT_LE(cert.mg_constant, 2);
  EXPECT_LE(cert.snq_constant, 2);
  EXPECT_GE(cert.snq_constant, 1);
  EXPECT_LE(cert.dilation.at(2), 2);
  EXPECT_EQ(cert.depth, 50u);
}

TEST_F(seq, DilationConstantIsPowerOfD) {
  for (rational alpha : {rational(1), rational(2), rational(1, 2), rational(3, 2)}) {
    const auto cert = verify_srs(sequence_handle::make_gevrey(alpha), 50);
    for (auto [d, c3] : cert.dilation) {
      const real bound = pow(real(d), to_real(alpha));
      EXPECT_LE(c3, bound * (1 + real(1e-30))) << d;
    }
  }
}

TEST_F(seq, LcViolationIndex) {
  try {
    verify_srs(sequence_handle::make_table({1, 2, 1, 5}), 4);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::lc_violation);
    EXPECT_EQ(e.index(), std::optional<std::size_t>(2));
  }
}

TEST_F(seq, TableRescaledWhenFirstTermBelowOne) {
  // M_p = (1/2)^p p!, lc holds, M_1 < 1.
  std::vector<rational> v;
  for (unsigned p = 0; p <= 10; ++p) v.push_back(factorial_exact(p) / rational(integer(1) << p));
  const auto cert = verify_srs(sequence_handle::make_table(v), 9);
  EXPECT_EQ(cert.rescale, rational(2));
  EXPECT_TRUE(cert.lc_ok);
}

TEST_F(seq, CertificateMonotoneInDepth) {
  const auto g = sequence_handle::make_gevrey_log(1, 1);
  const auto a = verify_srs(g, 20), b = verify_srs(g, 40);
  EXPECT_LE(a.mg_constant, b.mg_constant);
  EXPECT_LE(a.snq_constant, b.snq_constant);
  for (auto [d, c] : a.dilation) EXPECT_LE(c, b.dilation.at(d));
}

TEST_F(seq, OrderFitExactPower) {
  const auto g = sequence_handle::make_gevrey(1);
  const auto fit = regular_order_fit(sequence_handle::make_power_of(g, 2), g, 30);
  EXPECT_EQ(fit.s_hat, real(2));
  EXPECT_LT(abs(fit.lower - 1), real(1e-30));
  EXPECT_LT(abs(fit.upper - 1), real(1e-30));
}

TEST_F(seq, OrderFitGammaMoment) {
  const auto fit = regular_order_fit(sequence_handle::make_gamma_moment(2), sequence_handle::make_gevrey(1), 60);
  EXPECT_NEAR(fit.s_hat.convert_to<double>(), 0.5, 0.05);
  EXPECT_LE(fit.lower, fit.upper);
}

TEST_F(seq, OrderFitDegenerate) {
  const auto t = sequence_handle::make_table({1, 1, 1});
  try {
    regular_order_fit(t, sequence_handle::make_table({1, 2, 4}), 8);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_fit);
  }
}

TEST_F(seq, FloorQuotientWitnesses) {
  const auto g = sequence_handle::make_gevrey(1);
  const auto w = floor_quotient_witness_for(g, 1, 2, 40);
  EXPECT_EQ(w.c1, real(1));
  EXPECT_EQ(w.d1, real(1));
  const auto id = floor_quotient_witness_for(sequence_handle::make_gevrey_log(2, 1), 1, 1, 10);
  EXPECT_EQ(id.c1, real(1));
  EXPECT_EQ(id.d2, real(1));
  const auto w21 = floor_quotient_witness_for(g, 2, 1, 40);
  for (unsigned n = 1; n <= 40; ++n) {
    const real lhs = pow(g(n), 2);
    EXPECT_LE(lhs, w21.c2 * pow(w21.d2, n) * g(2 * n) * (1 + real(1e-30)));
  }
}

TEST_F(seq, FloorQuotientInequalitiesHold) {
  const auto g = sequence_handle::make_gevrey(rational(3, 2));
  for (unsigned p = 1; p <= 3; ++p)
    for (unsigned q = 1; q <= 3; ++q) {
      const auto w = floor_quotient_witness_for(g, p, q, 40);
      for (unsigned n = 1; n <= 40; ++n) {
        const real a = g(n * p / q);
        const real b = exp(log(g(n)) * p / q);
        const real slack = 1 + real(1e-30);
        EXPECT_LE(a, w.c1 * pow(w.d1, n) * b * slack);
        EXPECT_LE(b, w.c2 * pow(w.d2, n) * a * slack);
      }
    }
}

TEST_F(seq, AssocFunction) {
  const auto g = sequence_handle::make_gevrey(1);
  std::vector<real> grid{0};
  for (int i = 0; i <= 40; ++i) grid.push_back(pow(real(10), real(i) / 13));
  const auto r = assoc_M_and_omega(g, grid, 3000);
  EXPECT_EQ(r.values[0], real(0));
  EXPECT_NEAR(r.omega.convert_to<double>(), 1.0, 0.1);

  const auto h = sequence_handle::make_power_of(g, rational(1, 2));
  std::vector<real> grid2;
  for (int i = 1; i <= 20; ++i) grid2.push_back(pow(real(10), real(i) / 13));
  EXPECT_NEAR(assoc_M_and_omega(h, grid2, 3000).omega.convert_to<double>(), 0.5, 0.05);
}

TEST_F(seq, AssocFunctionGridTooSmall) {
  try {
    assoc_M_and_omega(sequence_handle::make_gevrey(1), {real(100)}, 20);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::grid_too_small);
  }
}

TEST_F(seq, PropertiesOnRandomGevreyLog) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> num(1, 6), den(1, 3), bet(-2, 3);
  for (int trial = 0; trial < 6; ++trial) {
    const auto s = sequence_handle::make_gevrey_log(rational(num(rng), den(rng)), rational(bet(rng), den(rng)));
    std::size_t N = 30;
    try {
      verify_srs(s, N);
    } catch (const error& e) {
      ASSERT_EQ(e.code(), errc::lc_violation);
      continue;
    }
    const real slack = 1 + real(1e-30);
    for (std::size_t p = 0; p + 2 <= N; ++p)
      EXPECT_GE(s(p) / s(p + 1) * slack, s(p + 1) / s(p + 2));
    if (s(1) >= 1) {
      for (std::size_t p = 0; p <= N; ++p)
        for (std::size_t q = 0; p + q <= N; ++q) EXPECT_LE(s(p) * s(q), s(p + q) * slack);
    }
    for (std::size_t n = 1; n <= 8; ++n)
      for (std::size_t p = 1; p <= 8; ++p)
        for (std::size_t q = 1; q <= 8; ++q)
          EXPECT_LE(s(n + p) / s(n + p + q), s(p) / s(p + q) * slack);
  }
}

TEST_F(seq, MonotoneForNormalizedSequences) {
  const auto g = sequence_handle::make_gevrey(rational(1, 3));
  for (std::size_t p = 0; p < 40; ++p) EXPECT_LE(g(p), g(p + 1));
}

TEST(seq_precision, CacheFollowsPrecision) {
  const auto g = sequence_handle::make_gamma_moment(3);
  real lo, hi;
  {
    precision_scope s(64);
    lo = g(7);
  }
  {
    precision_scope s(256);
    hi = g(7);
    EXPECT_GT(hi.precision(), 70u);
  }
  EXPECT_NE(lo, hi);
}
