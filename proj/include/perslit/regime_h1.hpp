#pragma once

#include <array>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "perslit/bie.hpp"
#include "perslit/types.hpp"

namespace perslit::h1 {

enum class Branch { Plus, Minus };
inline const char* to_string(Branch b) { return b == Branch::Plus ? "plus" : "minus"; }

struct DispersionPoint {
    Branch branch = Branch::Plus;
    int m = 0;
    double kappa = 0.0;
    double k0 = 0.0;
    double k1 = 0.0;
    double residual = 0.0;
};

struct RTPair {
    cplx R, T;
};

struct EffectiveMedium {
    double tau_xx = std::numeric_limits<double>::infinity();
    double tau_yy = 2.0;
    double mu = 0.5;
    static EffectiveMedium from_eta(double eta) { return {std::numeric_limits<double>::infinity(), 1.0 / eta, eta}; }
    void validate() const {
        if (!std::isinf(tau_xx)) fail(ErrorCode::ValidationError, "tau_xx must be infinite");
        if (!(mu > 0.0) || std::abs(mu * tau_yy - 1.0) > 1e-12)
            fail(ErrorCode::ValidationError, "effective medium needs mu > 0 and mu*tau_yy = 1");
    }
};

inline double phi_branch(Branch b, double k, double eta) {
    if (!(k >= 0.0)) fail(ErrorCode::InvalidArgument, "phi_branch needs k >= 0");
    if (b == Branch::Plus) {
        if (std::abs(std::cos(0.5 * k)) < 1e-12) fail(ErrorCode::BranchPole, "tan(k/2) pole");
        const double t = std::tan(0.5 * k);
        return k * std::sqrt(1.0 + eta * eta * t * t);
    }
    if (k > 0.0 && std::abs(std::sin(0.5 * k)) < 1e-12) fail(ErrorCode::BranchPole, "cot(k/2) pole");
    // k cot(k/2) -> 2 as k -> 0
    const double kc = k < 1e-8 ? 2.0 - k * k / 6.0 : k / std::tan(0.5 * k);
    return std::sqrt(k * k + eta * eta * kc * kc);
}

// Leading dispersion functions for |kappa| > k: zeta = i s, s = sqrt(kappa^2 - k^2).
//   c+ = cot(k/2)/k - eta/s,   c- = -tan(k/2)/k - eta/s
inline double c_branch(Branch b, double k, double kappa, double eta) {
    const double s = std::sqrt((std::abs(kappa) - k) * (std::abs(kappa) + k));
    const double f = b == Branch::Plus ? 1.0 / std::tan(0.5 * k) : -std::tan(0.5 * k);
    return f / k - eta / s;
}

inline double dc_branch_dk(Branch b, double k, double kappa, double eta) {
    const double s = std::sqrt((std::abs(kappa) - k) * (std::abs(kappa) + k));
    double df;
    if (b == Branch::Plus) {
        const double sh = std::sin(0.5 * k);
        df = -0.5 / (k * sh * sh) - 1.0 / (std::tan(0.5 * k) * k * k);
    } else {
        const double ch = std::cos(0.5 * k);
        df = -0.5 / (k * ch * ch) + std::tan(0.5 * k) / (k * k);
    }
    return df - eta * k / (s * s * s);
}

namespace detail {
struct Band {
    double lo, hi;
    bool increasing;
};
inline Band band(Branch b, int m) {
    if (m < 0) fail(ErrorCode::InvalidArgument, "band index must be >= 0");
    const double lo = (b == Branch::Plus ? m : m + 1) * pi;
    return {lo, lo + pi, m % 2 == 0};
}
}  // namespace detail

inline DispersionPoint dispersion_root(Branch b, int m, double kappa, double eta) {
    const auto bd = detail::band(b, m);
    const double K = std::abs(kappa);
    // Increasing bands rise from phi(lo) = lo to the pole at hi; decreasing ones fall from the pole at lo to hi.
    const double floor_val = bd.increasing ? bd.lo : bd.hi;
    if (!(K > floor_val))
        fail(ErrorCode::OutOfRange, std::string("|kappa| below range of ") + to_string(b) + " band " + std::to_string(m));
    auto f = [&](double k) { return phi_branch(b, k, eta) - K; };
    double a = bd.lo, c = bd.hi;
    double shrink = 1e-9;
    for (;;) {
        const double pole = bd.increasing ? c - shrink : a + shrink;
        if (f(pole) > 0.0) {
            (bd.increasing ? c : a) = pole;
            break;
        }
        shrink *= 0.1;
        if (shrink < 1e-15 * bd.hi) fail(ErrorCode::NoRoot, "dispersion bracket has no sign change");
    }
    if (bd.lo == 0.0 && bd.increasing) a = 0.0;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, a, c, boost::math::tools::eps_tolerance<double>(53), iters);
    // Pick the endpoint with the smaller |phi - |kappa||.
    double k0 = std::abs(f(r.first)) <= std::abs(f(r.second)) ? r.first : r.second;
    DispersionPoint dp;
    dp.branch = b;
    dp.m = m;
    dp.kappa = kappa;
    dp.k0 = dp.k1 = k0;
    // Odd bands solve only the squared relation, so measure |c| with the sign-consistent root function.
    const double s = std::sqrt((K - k0) * (K + k0));
    const double fk = b == Branch::Plus ? 1.0 / std::tan(0.5 * k0) : std::tan(0.5 * k0);
    dp.residual = std::abs(std::abs(fk) / k0 - eta / s);
    return dp;
}

// k1 = k0 - (1/alpha + 3 ln2/pi) eps / dc/dk, from p = c alpha + (3 ln2/pi) alpha eps + eps + ...
inline DispersionPoint dispersion_corrected(Branch b, int m, double kappa, const Geometry& g,
                                            const bie::ApertureBasis& basis) {
    DispersionPoint dp = dispersion_root(b, m, kappa, g.eta);
    const double delta = 0.05 * std::max(1.0, std::abs(kappa));
    if (std::abs(dp.k0 - std::abs(kappa)) < delta) fail(ErrorCode::CutoffProximity, "k0 too close to |kappa|");
    const double c = c_branch(b, dp.k0, kappa, g.eta);
    if (std::abs(c) > 1e-8)
        fail(ErrorCode::DomainMismatch, "band solves only the squared dispersion relation; no first-order correction");
    const double dc = dc_branch_dk(b, dp.k0, kappa, g.eta);
    if (std::abs(dc) < 1e-8) fail(ErrorCode::DegenerateSlope, "dc/dk vanishes at k0");
    const double a = bie::alpha(Regime::H1, Incidence::from_k_kappa(dp.k0, kappa), g, basis);
    dp.k1 = dp.k0 - (1.0 / a + 3.0 * std::log(2.0) / pi) * g.eps / dc;
    return dp;
}

// Root of the Galerkin-exact p (plus) or q (minus) near a starting guess.
inline double dispersion_exact(Branch b, double kappa, const Geometry& g, const bie::ApertureBasis& basis,
                               double k_lo, double k_hi, const TruncationPolicy& tp = {}) {
    auto f = [&](double k) {
        const auto pq = bie::p_q(Regime::H1, Incidence::from_k_kappa(k, kappa), g, basis, tp);
        return (b == Branch::Plus ? pq.exact.p : pq.exact.q).real();
    };
    const double fa = f(k_lo), fb = f(k_hi);
    if (fa * fb > 0.0) fail(ErrorCode::NoRoot, "p/q has no sign change on the bracket");
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, k_lo, k_hi, fa, fb,
                                                     boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (r.first + r.second);
}

enum class Side { Up, Down };

inline cplx eigenmode_far(double kappa, double k, Side side, const Point& x, double eta) {
    if (!(std::abs(kappa) > k)) fail(ErrorCode::AboveLightLine, "eigenmode needs |kappa| > k");
    const double s = std::sqrt((std::abs(kappa) - k) * (std::abs(kappa) + k));
    const double dist = side == Side::Up ? std::abs(x.x2 - 1.0) : std::abs(x.x2);
    return eta / s * std::exp(cplx(-s * dist, kappa * x.x1));
}

inline std::pair<cplx, cplx> eigenmode_slit_coeffs(double k, Branch b) {
    const cplx e = std::exp(I * k);
    if (b == Branch::Plus) {
        if (std::abs(1.0 - e) < 1e-12) fail(ErrorCode::BranchPole, "e^{ik} = 1");
        const cplx a = std::conj(e) / (1.0 - e);
        return {a, a};
    }
    if (std::abs(1.0 + e) < 1e-12) fail(ErrorCode::BranchPole, "e^{ik} = -1");
    return {-std::conj(e) / (1.0 + e), -e / (1.0 + e)};
}

// Closed forms in the sin/cos representation, valid for all real k.
inline RTPair effective_rt_zeta(double k, cplx zeta, double eta) {
    const double s = std::sin(k), c = std::cos(k);
    const cplx ek = eta * k;
    const cplx den = -I * (zeta * zeta + ek * ek) * s + 2.0 * zeta * ek * c;
    if (std::abs(den) == 0.0) fail(ErrorCode::SingularSystem, "effective slab denominator vanishes");
    return {I * (ek * ek - zeta * zeta) * s / den, 2.0 * zeta * ek / den};
}

inline RTPair effective_rt(double k, double theta, double eta) {
    if (!(std::abs(theta) < pi / 2) || std::cos(theta) < 1e-6) fail(ErrorCode::GrazingIncidence, "cos(theta) < 1e-6");
    if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "k must be > 0");
    return effective_rt_zeta(k, k * std::cos(theta), eta);
}

// Same leading-order limit written through the normalized angle factor.
inline RTPair asymptotic_rt(const Incidence& inc, const Geometry& g) {
    if (!inc.propagating()) fail(ErrorCode::InvalidArgument, "asymptotic_rt needs a propagating wave");
    const double ct = inc.zeta.real() / inc.k;
    if (ct < 1e-6) fail(ErrorCode::GrazingIncidence, "cos(theta) < 1e-6");
    const double s = std::sin(inc.k), c = std::cos(inc.k), e = g.eta;
    const cplx den = -I * s * (e * e + ct * ct) + 2.0 * ct * e * c;
    return {I * s * (e * e - ct * ct) / den, 2.0 * ct * e / den};
}

struct LayeredResult {
    RTPair rt;
    cplx a_plus, a_minus;
};

// 4x4 continuity system for (R0, T0, a+, a-) with unit incident amplitude.
inline Eigen::Matrix4cd layered_matrix(double k, cplx zeta, const EffectiveMedium& em) {
    const cplx e = std::exp(I * k), ei = std::conj(e);
    const cplx w = I * em.mu * k;
    Eigen::Matrix4cd A;
    A << 0.0, -1.0, 1.0, 1.0,
         0.0, I * zeta, w, -w,
         -1.0, 0.0, e, ei,
         -I * zeta, 0.0, w * e, -w * ei;
    return A;
}

inline cplx layered_determinant(double k, cplx zeta, const EffectiveMedium& em) {
    return layered_matrix(k, zeta, em).determinant();
}

inline LayeredResult layered_solver(double k, double theta, const EffectiveMedium& em) {
    em.validate();
    if (!(std::abs(theta) < pi / 2) || std::cos(theta) < 1e-6) fail(ErrorCode::GrazingIncidence, "cos(theta) < 1e-6");
    const cplx zeta = k * std::cos(theta);
    const Eigen::Matrix4cd A = layered_matrix(k, zeta, em);
    if (std::abs(A.determinant()) < 1e-14) fail(ErrorCode::SingularSystem, "layered system determinant < 1e-14");
    Eigen::Vector4cd rhs(0.0, 0.0, 1.0, -I * zeta);
    const Eigen::Vector4cd x = A.fullPivLu().solve(rhs);
    return {{x(0), x(1)}, x(2), x(3)};
}

inline std::pair<double, double> homogenized_dispersion(double k, double eta) {
    return {phi_branch(Branch::Plus, k, eta), phi_branch(Branch::Minus, k, eta)};
}

// Thin metal film of thickness ell between vacuum half spaces, Drude permittivity without loss,
// units with c = omega_p = 1 (so k = omega/omega_p).
inline double spp_metal_dispersion(double w, double ell, Branch b) {
    if (!(w > 0.0) || !(ell > 0.0)) fail(ErrorCode::InvalidArgument, "need omega/omega_p > 0 and ell > 0");
    const double t1 = 1.0, t2 = 1.0 - 1.0 / (w * w);
    if (!(t2 < 0.0)) fail(ErrorCode::InvalidArgument, "requires omega below the plasma frequency");
    const double k = w;
    auto f = [&](double kap) {
        const double q2 = std::sqrt(kap * kap - k * k * t2), q1 = std::sqrt(kap * kap - k * k * t1);
        const double r = b == Branch::Plus ? t1 * q2 / (t2 * q1) : t2 * q1 / (t1 * q2);
        return std::tanh(q2 * ell) + r;
    };
    double lo = k * (1.0 + 1e-9), hi = 50.0 * k;
    const double flo = f(lo), fhi = f(hi);
    if (!(flo * fhi < 0.0)) fail(ErrorCode::NoRoot, "no sign change for kappa in (k, 50k)");
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                     boost::math::tools::eps_tolerance<double>(53), iters);
    return 0.5 * (r.first + r.second);
}

struct ScanRow {
    double k, theta;
    cplx R, T;
    double absR2, absT2;
    bool total_transmission;
};

inline ScanRow scan_point(double eta, double k, double theta) {
    const auto rt = effective_rt(k, theta, eta);
    const double r2 = std::norm(rt.R), t2 = std::norm(rt.T);
    return {k, theta, rt.R, rt.T, r2, t2, t2 > 0.999};
}

inline std::vector<ScanRow> total_transmission_scan(double eta, const std::vector<double>& k_grid,
                                                    const std::vector<double>& theta_grid) {
    std::vector<ScanRow> rows;
    rows.reserve(k_grid.size() * theta_grid.size());
    for (double k : k_grid)
        for (double th : theta_grid) rows.push_back(scan_point(eta, k, th));
    return rows;
}

}  // namespace perslit::h1
