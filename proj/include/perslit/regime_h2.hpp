#pragma once

#include <string>
#include <vector>

#include "perslit/bie.hpp"
#include "perslit/greens.hpp"
#include "perslit/types.hpp"

namespace perslit::h2 {

// k = eps^sigma
struct FrequencyScaling {
    double sigma = 0.5;
    double eps = 1e-3;
    double k() const { return std::pow(eps, sigma); }
    void validate() const {
        if (!(sigma > 0.0)) fail(ErrorCode::ValidationError, "sigma must be > 0");
        if (!(eps > 0.0 && eps < 1.0)) fail(ErrorCode::ValidationError, "eps must be in (0,1)");
        if (std::abs(sigma - 1.0) < 0.05) fail(ErrorCode::CrossoverSigma, "sigma must satisfy |sigma - 1| >= 0.05");
    }
};

struct EnhancementReport {
    cplx E1_leading;
    std::string order_tag;
    std::string residual_order;
};

namespace detail {
inline Geometry period_only(double d) {
    Geometry g;
    g.d = d;
    g.eps = 1e-3 * d;
    g.eta = g.eps / d;
    return g;
}
}  // namespace detail

// gamma = (1/pi)(3 ln2 + ln(pi/d)) + sum_{n != 0} [1/(2 pi |n|) - i/(d zeta_n)] - i/(d zeta_0)
inline cplx gamma_const(double k, double kappa, double d, const TruncationPolicy& tp = {}) {
    if (!(d > 0.0)) fail(ErrorCode::ValidationError, "d must be > 0");
    const auto inc = Incidence::from_k_kappa(k, kappa);
    greens::ExteriorSeries es(inc, detail::period_only(d), tp);
    return (3.0 * std::log(2.0) + std::log(pi / d)) / pi + es.compensated_sum() + es.const_term();
}

// beta^e - (1/pi) ln eps
inline cplx beta_bar_e(double k, double kappa, double d, const TruncationPolicy& tp = {}) {
    return gamma_const(k, kappa, d, tp) - 2.0 * std::log(2.0) / pi;
}

inline bie::ReducedScalars p_q_h2(const Incidence& inc, const Geometry& g, const bie::ApertureBasis& basis,
                                  const TruncationPolicy& tp = {}) {
    const double a = bie::alpha(Regime::H2, inc, g, basis);
    const double k = inc.k, e = g.eps;
    const cplx common = e * gamma_const(k, inc.kappa, g.d, tp) + e / pi * std::log(e);
    // cot k/k +- 1/(k sin k) in half-angle form; the direct difference cancels for small k.
    bie::ReducedScalars r;
    r.alpha = a;
    r.p = e + (common + 1.0 / (k * std::tan(0.5 * k))) * a;
    r.q = e + (common - std::tan(0.5 * k) / k) * a;
    r.lambda1 = r.p / e;
    r.lambda2 = r.q / e;
    return r;
}

enum class PeriodRegime { Fixed, Large, Small };

struct InvPQ {
    cplx inv_p_times;  // 1 / (p k sin k)
    cplx inv_q;
};

inline InvPQ pq_asymptotic(const FrequencyScaling& fs, double d, double theta, double alpha,
                           PeriodRegime regime = PeriodRegime::Fixed) {
    fs.validate();
    const double ct = std::cos(theta);
    InvPQ r{1.0 / (2.0 * alpha), 0.0};
    switch (regime) {
        case PeriodRegime::Large:
            r.inv_q = -2.0 / alpha;
            break;
        case PeriodRegime::Small: {
            const double eta = fs.eps / d;
            r.inv_q = I * ct * std::pow(fs.eps, fs.sigma) / (eta * alpha);
            break;
        }
        case PeriodRegime::Fixed:
            r.inv_q = fs.sigma < 1.0 ? cplx(-2.0 / alpha) : I * d * ct * std::pow(fs.eps, fs.sigma - 1.0) / alpha;
            break;
    }
    return r;
}

namespace detail {
inline void check_interior(double x2, double eps) {
    if (!(x2 > 5.0 * eps && x2 < 1.0 - 5.0 * eps)) fail(ErrorCode::OutsideInterior, "x2 must lie in (5 eps, 1 - 5 eps)");
}
}  // namespace detail

// u0(x2) = alpha [cos(k x2)(1/p + 1/q) + cos(k(1-x2))(1/p - 1/q)] / (k sin k)
inline cplx u0_profile(double x2, double k, const bie::ReducedScalars& r) {
    const cplx ip = 1.0 / r.p, iq = 1.0 / r.q;
    return r.alpha * (std::cos(k * x2) * (ip + iq) + std::cos(k * (1.0 - x2)) * (ip - iq)) / (k * std::sin(k));
}

// Normalized E1 = (i/k) du0/dx2.
inline cplx E1_profile(double x2, double k, const bie::ReducedScalars& r) {
    const cplx ip = 1.0 / r.p, iq = 1.0 / r.q;
    const cplx du = r.alpha * (-std::sin(k * x2) * (ip + iq) + std::sin(k * (1.0 - x2)) * (ip - iq)) / std::sin(k);
    return I / k * du;
}

inline cplx slit_field_u0(double x2, const Incidence& inc, const Geometry& g, const bie::ApertureBasis& basis,
                          const TruncationPolicy& tp = {}) {
    detail::check_interior(x2, g.eps);
    return u0_profile(x2, inc.k, p_q_h2(inc, g, basis, tp));
}

inline cplx slit_E_field_evaluated(double x2, const Incidence& inc, const Geometry& g,
                                   const bie::ApertureBasis& basis, const TruncationPolicy& tp = {}) {
    detail::check_interior(x2, g.eps);
    return E1_profile(x2, inc.k, p_q_h2(inc, g, basis, tp));
}

inline EnhancementReport slit_E_field(const FrequencyScaling& fs, double d, double theta) {
    fs.validate();
    EnhancementReport r;
    if (fs.sigma < 1.0) {
        r.E1_leading = 2.0 * I / std::pow(fs.eps, fs.sigma);
        r.order_tag = "O(1/k)";
        r.residual_order = "O(eps^sigma) + O(eps^(1-2sigma))";
    } else {
        r.E1_leading = d * std::cos(theta) / fs.eps;
        r.order_tag = "O(1/eps)";
        r.residual_order = "O(1)";
    }
    return r;
}

enum class Side { Up, Down };

// Leading aperture field:
//   u(x1,1) = 2 - (a/p + a/q)[eps ln eps / pi + (beta_bar + h(X)) eps]
//   u(x1,0) =   - (a/p - a/q)[eps ln eps / pi + (beta_bar + h(X)) eps]
inline cplx aperture_field(double x1, Side side, const Incidence& inc, const Geometry& g,
                           const bie::ApertureBasis& basis, const TruncationPolicy& tp = {}) {
    if (!(x1 > 0.0 && x1 < g.eps)) fail(ErrorCode::InvalidArgument, "x1 must lie in (0, eps)");
    const auto r = p_q_h2(inc, g, basis, tp);
    const double X = x1 / g.eps;
    const double h = bie::h_function(Regime::H2, inc, g, basis, X);
    const cplx bb = beta_bar_e(inc.k, inc.kappa, g.d, tp);
    const cplx w = side == Side::Up ? r.alpha / r.p + r.alpha / r.q : r.alpha / r.p - r.alpha / r.q;
    const cplx dev = -w * (g.eps * std::log(g.eps) / pi + (bb + h) * g.eps);
    return side == Side::Up ? 2.0 + dev : dev;
}

// Leading tangential and normal components on an aperture.
inline std::array<cplx, 2> aperture_E_field(double x1, Side side, const FrequencyScaling& fs, double d, double theta,
                                            const bie::ApertureBasis& basis) {
    fs.validate();
    if (!(x1 > 0.0 && x1 < fs.eps)) fail(ErrorCode::InvalidArgument, "x1 must lie in (0, eps)");
    const double X = x1 / fs.eps;
    Geometry g = Geometry::from_eps_d(fs.eps, d);
    const auto inc = Incidence::from_angle(fs.k(), theta);
    const auto psi = bie::solve_K_inv_one(Regime::H2, inc, g, basis);
    const cplx pref = slit_E_field(fs, d, theta).E1_leading;
    const double hp = bie::log_potential_derivative(psi, X).real();
    return {pref * psi(X), pref * (side == Side::Up ? -hp : hp)};
}

struct FarField {
    double up, down;
    std::string up_order, down_order;
};

// Scattered far-field magnitudes at x2 = 3 (above) and x2 = -2 (below) from a direct solve.
inline FarField far_field_h2(const Incidence& inc, const Geometry& g, const bie::ApertureBasis& basis,
                             const TruncationPolicy& tp = {}, double sigma = 0.5) {
    const auto s = bie::direct_solve(inc, g, tp, basis, 0);
    FarField f;
    f.up = std::abs(s.R - 1.0);
    f.down = std::abs(s.T);
    f.up_order = f.down_order = sigma < 1.0 ? "O(eps)" : "O(eps^(2 sigma - 1))";
    return f;
}

struct PeriodRow {
    double d;
    double E1_leading;
    double E1_evaluated;
};

inline std::vector<PeriodRow> enhancement_vs_period(const FrequencyScaling& fs, double theta,
                                                    const std::vector<double>& d_list,
                                                    const bie::ApertureBasis& basis) {
    fs.validate();
    std::vector<PeriodRow> rows;
    for (double d : d_list) {
        const Geometry g = Geometry::from_eps_d(fs.eps, d);
        g.validate();
        const auto inc = Incidence::from_angle(fs.k(), theta);
        // Uniform leading form across the period regimes: q ~ alpha(-1/2 - i eps^(1-sigma)/(d cos theta)),
        // |E1| = |alpha/q| / k.
        const cplx qa = -0.5 - I * std::pow(fs.eps, 1.0 - fs.sigma) / (d * std::cos(theta));
        const double lead = 1.0 / (std::abs(qa) * fs.k());
        rows.push_back({d, lead, std::abs(slit_E_field_evaluated(0.5, inc, g, basis))});
    }
    return rows;
}

}  // namespace perslit::h2
