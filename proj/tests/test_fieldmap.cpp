#include <gtest/gtest.h>

#include "perslit/fieldmap.hpp"

using namespace perslit;

namespace {
bie::ScatterSolution solve(double k, double th, double eps, double eta) {
    return bie::direct_solve(Incidence::from_angle(k, th), Geometry::from_eps_eta(eps, eta), {}, {48});
}
}  // namespace

TEST(Fieldmap, RegionClassification) {
    const auto s = solve(1.0, 0.2, 0.02, 0.5);
    fieldmap::FieldEvaluator ev(s, {});
    EXPECT_EQ(ev.region({0.01, 0.5}), fieldmap::Region::Slit);
    EXPECT_EQ(ev.region({0.03, 0.5}), fieldmap::Region::Pec);
    EXPECT_EQ(ev.region({0.03, 1.5}), fieldmap::Region::ExteriorUp);
    EXPECT_EQ(ev.region({0.03, -0.5}), fieldmap::Region::ExteriorDown);
    EXPECT_THROW(ev({0.03, 0.5}), Error);
}

TEST(Fieldmap, ApertureContinuity) {
    const auto s = solve(1.0, 0.3, 0.02, 0.5);
    TruncationPolicy tp;
    for (double X : {0.2, 0.5, 0.8}) {
        EXPECT_NO_THROW(fieldmap::total_field({X * 0.02, 1.0}, s, tp));
        EXPECT_NO_THROW(fieldmap::total_field({X * 0.02, 0.0}, s, tp));
        fieldmap::FieldEvaluator ev(s, tp);
        const auto [up, down] = bie::aperture_traces(s, tp, 48, X);
        EXPECT_LT(std::abs(ev({X * 0.02, 1.0}) - up), 1e-4);
        EXPECT_LT(std::abs(ev({X * 0.02, 0.0}) - down), 1e-4);
    }
}

TEST(Fieldmap, FarFieldMatchesCoefficients) {
    const auto s = solve(1.3, 0.4, 0.02, 0.5);
    fieldmap::FieldEvaluator ev(s, {});
    ev.prepare(3.0);
    const auto& inc = s.inc;
    const double z = inc.zeta.real();
    for (double x1 : {0.0, 0.013, 0.031}) {
        const cplx up = ev({x1, 4.0});
        const cplx exp_up = std::exp(I * inc.kappa * x1) * (std::exp(-I * z * 3.0) + s.R * std::exp(I * z * 3.0));
        EXPECT_LT(std::abs(up - exp_up), 1e-10);
        const cplx dn = ev({x1, -3.0});
        EXPECT_LT(std::abs(dn - s.T * std::exp(I * (inc.kappa * x1 + z * 3.0))), 1e-10);
    }
}

TEST(Fieldmap, QuasiPeriodicity) {
    const auto s = solve(1.0, 0.5, 0.02, 0.5);
    fieldmap::FieldEvaluator ev(s, {});
    ev.prepare(0.2);
    const double d = s.geom.d;
    const cplx ph = std::exp(I * (s.inc.kappa * d));
    for (const Point p : {Point{0.01, 0.3}, Point{0.017, 1.2}, Point{0.005, -0.4}})
        EXPECT_LT(std::abs(ev({p.x1 + d, p.x2}) - ph * ev(p)), 1e-12);
}

TEST(Fieldmap, ModeCoefficientsDecay) {
    const auto s = solve(1.0, 0.0, 0.02, 0.5);
    const auto c = fieldmap::slit_mode_coeffs(s, 40);
    EXPECT_TRUE(std::isfinite(c.decay_C));
    EXPECT_GT(c.decay_C, 0.0);
    for (int m = 1; m <= 40; ++m) EXPECT_LE(std::sqrt(double(m)) * std::abs(c.a(m)), c.decay_C + 1e-15);
    EXPECT_THROW(fieldmap::slit_mode_coeffs(s, 0), Error);
}

TEST(Fieldmap, GridMasksConductor) {
    const auto s = solve(1.0, 0.0, 0.02, 0.5);
    fieldmap::GridSpec spec{0.0, 0.04, -0.5, 1.5, 9, 5};
    const auto G = fieldmap::sample_grid(spec, s, {});
    ASSERT_EQ(G.values.size(), 5u);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = 0; j < 9; ++j)
            EXPECT_EQ(G.values[i][j].has_value(), G.region_mask[i][j] != fieldmap::Region::Pec);
}

TEST(Fieldmap, EigenmodeMatchesFarForm) {
    const auto g = Geometry::from_eps_eta(0.01, 0.5);
    const auto dp = h1::dispersion_root(h1::Branch::Plus, 0, 2.0, 0.5);
    const cplx a = fieldmap::eigenmode_field({0.0, 1.5}, 2.0, dp.k0, h1::Branch::Plus, g);
    EXPECT_LT(std::abs(a - h1::eigenmode_far(2.0, dp.k0, h1::Side::Up, {0.0, 1.5}, 0.5)), 1e-15);
    EXPECT_THROW(fieldmap::eigenmode_field({0.015, 0.5}, 2.0, dp.k0, h1::Branch::Plus, g), Error);
}
