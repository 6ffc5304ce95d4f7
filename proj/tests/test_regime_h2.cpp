#include <gtest/gtest.h>

#include "perslit/regime_h2.hpp"

using namespace perslit;

TEST(RegimeH2, GammaImaginaryPart) {
    for (double k : {1e-3, 1e-2})
        for (double d : {0.5, 1.0, 2.0}) EXPECT_NEAR(h2::gamma_const(k, 0.0, d).imag(), -1.0 / (d * k), 1e-12 / (d * k));
}

TEST(RegimeH2, BetaBarShift) {
    EXPECT_NEAR(std::abs(h2::gamma_const(0.01, 0.0, 1.0) - h2::beta_bar_e(0.01, 0.0, 1.0)), 2 * std::log(2.0) / pi,
                1e-15);
}

TEST(RegimeH2, AlphaIndependentOfIncidence) {
    const auto g = Geometry::from_eps_d(1e-4, 1.0);
    const double a0 = bie::alpha(Regime::H2, Incidence::from_angle(1e-2, 0.0), g, {48});
    const double a1 = bie::alpha(Regime::H2, Incidence::from_angle(3e-2, 0.7), g, {48});
    EXPECT_LT(a0, 0.0);
    EXPECT_NEAR(a0, a1, 1e-12);
}

TEST(RegimeH2, QApproachesMinusHalfAlpha) {
    double prev = 1e9;
    for (double eps : {1e-4, 1e-6, 1e-8}) {
        const h2::FrequencyScaling fs{0.5, eps};
        const auto g = Geometry::from_eps_d(eps, 1.0);
        const auto r = h2::p_q_h2(Incidence::from_angle(fs.k(), 0.0), g, {32});
        const double err = std::abs(r.q / r.alpha + 0.5);
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-2);
}

TEST(RegimeH2, AsymptoticInverses) {
    const h2::FrequencyScaling lo{0.5, 1e-6}, hi{2.0, 1e-3};
    const double a = -1.1;
    EXPECT_NEAR(h2::pq_asymptotic(lo, 1.0, 0.0, a).inv_q.real(), -2.0 / a, 1e-15);
    const auto r = h2::pq_asymptotic(hi, 1.0, 0.0, a);
    EXPECT_NEAR(r.inv_q.imag(), 1e-3 / a, 1e-15);
}

TEST(RegimeH2, CrossoverRejected) {
    try {
        h2::FrequencyScaling{1.02, 1e-3}.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CrossoverSigma);
    }
}

TEST(RegimeH2, InteriorOnly) {
    const auto g = Geometry::from_eps_d(1e-2, 1.0);
    try {
        h2::slit_field_u0(0.03, Incidence::from_angle(0.1, 0.0), g, {16});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutsideInterior);
    }
}

TEST(RegimeH2, E1IsScaledDerivative) {
    const auto g = Geometry::from_eps_d(1e-4, 1.0);
    const auto inc = Incidence::from_angle(1e-2, 0.0);
    const auto r = h2::p_q_h2(inc, g, {32});
    const double x = 0.4, h = 1e-5;
    const cplx fd = (h2::u0_profile(x + h, inc.k, r) - h2::u0_profile(x - h, inc.k, r)) / (2 * h);
    EXPECT_LT(std::abs(h2::E1_profile(x, inc.k, r) - I / inc.k * fd), 1e-6 * std::abs(h2::E1_profile(x, inc.k, r)));
}

TEST(RegimeH2, LeadingEnhancement) {
    const h2::FrequencyScaling a{0.5, 1e-6}, b{2.0, 1e-3};
    EXPECT_LT(std::abs(h2::slit_E_field(a, 1.0, 0.0).E1_leading - 2.0 * I / 1e-3), 1e-9);
    EXPECT_NEAR(h2::slit_E_field(b, 2.0, 0.0).E1_leading.real(), 2000.0, 1e-9);
    for (const auto& row : h2::enhancement_vs_period(a, 0.0, {0.5, 1.0, 4.0}, {32}))
        EXPECT_NEAR(row.E1_evaluated / row.E1_leading, 1.0, 0.05) << row.d;
}

TEST(RegimeH2, ApertureFieldLimits) {
    const double eps = 1e-5;
    const auto g = Geometry::from_eps_d(eps, 1.0);
    // sigma < 1: screen-like, u -> 2 above and 0 below; sigma > 1: transparent, u -> 1 on both sides.
    const auto lo = Incidence::from_angle(std::pow(eps, 0.5), 0.0);
    EXPECT_LT(std::abs(h2::aperture_field(0.5 * eps, h2::Side::Up, lo, g, {32}) - 2.0), 0.02);
    EXPECT_LT(std::abs(h2::aperture_field(0.5 * eps, h2::Side::Down, lo, g, {32})), 0.02);
    const auto hi = Incidence::from_angle(std::pow(eps, 2.0), 0.0);
    EXPECT_LT(std::abs(h2::aperture_field(0.5 * eps, h2::Side::Up, hi, g, {32}) - 1.0), 1e-4);
    EXPECT_LT(std::abs(h2::aperture_field(0.5 * eps, h2::Side::Down, hi, g, {32}) - 1.0), 1e-4);
}

TEST(RegimeH2, FarFieldSmall) {
    const auto g = Geometry::from_eps_d(1e-3, 1.0);
    const auto f = h2::far_field_h2(Incidence::from_angle(std::sqrt(1e-3), 0.0), g, {32});
    EXPECT_LT(f.up, 0.2);
    EXPECT_LT(f.down, 0.2);
    EXPECT_EQ(f.up_order, "O(eps)");
}
