#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "perslit/numerics.hpp"
#include "perslit/types.hpp"

namespace perslit::greens {

// sqrt(k^2 - kappa_n^2) on the branch with Re >= 0, Im >= 0.
inline cplx zeta_n(double k, double kappa, double d, int n) {
    if (!(k > 0.0) || !(d > 0.0)) fail(ErrorCode::InvalidArgument, "zeta_n requires k > 0 and d > 0");
    const double kn = std::abs(kappa + 2.0 * pi * n / d);
    if (std::abs(k - kn) < 1e-13 * k) fail(ErrorCode::CutoffDegenerate, "Wood anomaly: |kappa_n| == k");
    const double prod = (k - kn) * (k + kn);
    return prod > 0 ? cplx(std::sqrt(prod), 0.0) : cplx(0.0, std::sqrt(-prod));
}

// g^d(x, y): quasi-periodic free-space Green's function, evanescent tail controlled by tp.tol.
inline cplx periodic_green(const Point& x, const Point& y, const Incidence& inc, double d,
                           const TruncationPolicy& tp) {
    const double h = std::abs(x.x2 - y.x2);
    if (h == 0.0) fail(ErrorCode::NonConvergent, "periodic_green needs x2 != y2; use the kernel splits on the aperture");
    const double dx = x.x1 - y.x1;
    auto term = [&](int n) {
        const double kn = inc.kappa + 2.0 * pi * n / d;
        const cplx z = zeta_n(inc.k, inc.kappa, d, n);
        return std::exp(I * (kn * dx + z * h)) / z;
    };
    cplx sum = term(0);
    const double q = std::exp(-2.0 * pi * h / d);
    const int hard_cap = 10'000'000;
    for (int n = 1;; ++n) {
        const cplx a = term(n), b = term(-n);
        sum += a + b;
        const double mag = std::abs(a) + std::abs(b);
        const bool evanescent = std::abs(inc.kappa) + inc.k < 2.0 * pi * n / d;
        if (evanescent && n >= 2 && mag / (1.0 - q) < tp.tol * std::max(1.0, std::abs(sum))) break;
        if (n > hard_cap) fail(ErrorCode::NonConvergent, "periodic_green tail did not fall below tol");
    }
    return -I / (2.0 * d) * sum;
}

// g^e(x, y) = g^d(x, y) + g^d(x', y), image x' across the nearer slab face.
inline cplx exterior_green(const Point& x, const Point& y, const Incidence& inc, double d,
                           const TruncationPolicy& tp) {
    Point xi;
    if (x.x2 >= 1.0 && y.x2 >= 1.0) xi = {x.x1, 2.0 - x.x2};
    else if (x.x2 <= 0.0 && y.x2 <= 0.0) xi = {x.x1, -x.x2};
    else fail(ErrorCode::DomainMismatch, "exterior_green points on opposite sides of the slab");
    return periodic_green(x, y, inc, d, tp) + periodic_green(xi, y, inc, d, tp);
}

namespace detail {
// 1D Neumann Green's function on (0,1) of  G'' + K G = delta, K = k^2 - (m pi/eps)^2.
inline double neumann_1d(double K, double x, double y) {
    const double lo = std::min(x, y), hi = std::max(x, y);
    if (K > 0) {
        const double s = std::sqrt(K);
        const double den = s * std::sin(s);
        if (std::abs(std::sin(s)) < 1e-12) fail(ErrorCode::ModalSingularity, "slit mode resonance sin(sqrt K) = 0");
        return std::cos(s * lo) * std::cos(s * (1.0 - hi)) / den;
    }
    if (K == 0) fail(ErrorCode::ModalSingularity, "slit mode cut-off");
    const double t = std::sqrt(-K);
    const double a = t * lo, b = t * (1.0 - hi);
    const double num = std::exp(a + b - t) + std::exp(a - b - t) + std::exp(b - a - t) + std::exp(-a - b - t);
    return -num / (2.0 * t * (-std::expm1(-2.0 * t)));
}
}  // namespace detail

// g^i_eps(x, y) for x, y in the reference slit (0,eps) x (0,1). The x2 modal sum is done in closed
// form, the x1 modal sum is truncated by its geometric tail.
inline double slit_green(const Point& x, const Point& y, double k, double eps, const TruncationPolicy& tp) {
    auto inside = [&](const Point& p) { return p.x1 >= 0 && p.x1 <= eps && p.x2 >= 0 && p.x2 <= 1; };
    if (!inside(x) || !inside(y)) fail(ErrorCode::DomainMismatch, "slit_green points must lie in the slit");
    const double h = std::abs(x.x2 - y.x2);
    double sum = detail::neumann_1d(k * k, x.x2, y.x2) / eps;
    const int cap = std::max(tp.m_max, 1'000'000);
    for (int m = 1;; ++m) {
        const double km = m * pi / eps;
        const double term = 2.0 / eps * std::cos(km * x.x1) * std::cos(km * y.x1) *
                            detail::neumann_1d(k * k - km * km, x.x2, y.x2);
        sum += term;
        const double bound = std::exp(-km * h) / (m * pi) / std::max(1e-300, 1.0 - std::exp(-pi * h / eps));
        if (m >= tp.m_max && bound < tp.tol) break;
        if (m > cap) fail(ErrorCode::NonConvergent, "slit_green needs x2 != y2 for convergence");
    }
    return sum;
}

struct BetaI {
    double beta_i;
    double beta_tilde;
};

inline BetaI kernel_beta_i(double k, double eps) {
    if (std::abs(std::sin(k)) < 1e-12) fail(ErrorCode::SlitResonance, "sin k = 0");
    if (!(k * eps < 0.5)) fail(ErrorCode::InvalidArgument, "kernel_beta_i requires k*eps < 0.5");
    return {std::cos(k) / std::sin(k) / (k * eps) + 2.0 * std::log(2.0) / pi, 1.0 / (k * std::sin(k) * eps)};
}

inline double rho_i(double X, double Y) {
    return (std::log(std::abs(std::sin(pi * (X + Y) / 2))) + std::log(std::abs(std::sin(pi * (X - Y) / 2)))) / pi;
}

// Per-mode coefficient of G^i - beta^i - rho^i (multiplying cos(m pi X) cos(m pi Y)) and of G~^i - beta~.
inline double slit_remainder_coeff(int m, double k, double eps) {
    const double a = k * eps / (m * pi);
    const double sq = std::sqrt((1.0 - a) * (1.0 + a));
    const double s = m * pi / eps * sq;
    const double num = -a * a / (1.0 + sq) - 2.0 / std::expm1(2.0 * s);
    return 2.0 / (m * pi) * num / sq;
}
inline double slit_cross_coeff(int m, double k, double eps) {
    const double a = k * eps / (m * pi);
    const double sq = std::sqrt((1.0 - a) * (1.0 + a));
    const double s = m * pi / eps * sq;
    if (s > 700) return 0.0;
    return -2.0 / (m * pi) / (sq * std::sinh(s));
}

inline int slit_series_terms(double k, double eps, const TruncationPolicy& tp) {
    const double ke = k * eps;
    const int need = static_cast<int>(std::ceil(ke / std::sqrt(2.0 * pi * pi * pi * tp.tol))) + 8;
    return std::clamp(std::max(need, tp.m_max), 1, 100000);
}

// G^i_eps(X, Y) - beta^i - rho^i(X, Y).
inline double slit_kernel_remainder(double X, double Y, double k, double eps, const TruncationPolicy& tp) {
    const int M = slit_series_terms(k, eps, tp);
    double s = 0.0;
    for (int m = 1; m <= M; ++m) s += slit_remainder_coeff(m, k, eps) * std::cos(m * pi * X) * std::cos(m * pi * Y);
    return s;
}

inline double scaled_slit_kernel(double X, double Y, double k, double eps, const TruncationPolicy& tp) {
    return kernel_beta_i(k, eps).beta_i + rho_i(X, Y) + slit_kernel_remainder(X, Y, k, eps, tp);
}

inline double scaled_slit_kernel_cross(double X, double Y, double k, double eps, const TruncationPolicy& tp) {
    double s = kernel_beta_i(k, eps).beta_tilde;
    for (int m = 1; m <= slit_series_terms(k, eps, tp); ++m) {
        const double c = slit_cross_coeff(m, k, eps);
        if (c == 0.0) break;
        s += c * std::cos(m * pi * X) * std::cos(m * pi * Y);
    }
    return s;
}

// Scaled exterior aperture kernel
//   G^e_eps(X,Y) = -(i/d) sum_n zeta_n^{-1} exp(i kappa_n eps (X-Y))
// written, with u = X - Y, as
//   e^{i kappa eps u} [ c0 + A ln|u| + B u ln|u| + C u^2 ln|u| + H(u) ],
// where c0 = -i/(d zeta_0) and H is analytic on |u| <= 1. The n != 0 tail is compensated against
// 1/(2 pi |n|) and its 1/n^2, 1/n^3 asymptotics are summed in closed form (Clausen-type series).
class ExteriorSeries {
public:
    ExteriorSeries(const Incidence& inc, const Geometry& g, const TruncationPolicy& tp)
        : inc_(inc), g_(g), nmax_(tp.n_max) {
        delta_ = inc.kappa * g.d / (2.0 * pi);
        mu_ = inc.k * g.d / (2.0 * pi);
        c0_ = -I / (g.d * zeta_n(inc.k, inc.kappa, g.d, 0));
        const double s2 = delta_ * delta_ + 0.5 * mu_ * mu_;
        cp_.assign(2 * nmax_ + 1, 0.0);
        for (int n = -nmax_; n <= nmax_; ++n) {
            if (n == 0) continue;
            const double an = std::abs(n), sg = n > 0 ? 1.0 : -1.0;
            const cplx asym = (delta_ * sg / (an * an) - s2 / (an * an * an)) / (2.0 * pi);
            cp_[n + nmax_] = c_n(n) - asym;
        }
        A_ = 1.0 / pi;
        B_ = -2.0 * I * delta_ * g.eta;
        C_ = -(2.0 * delta_ * delta_ + mu_ * mu_) * pi * g.eta * g.eta;
        lg_ = std::log(2.0 * pi * g.eta);
    }

    // 1/(2 pi |n|) - i/(d zeta_n), evaluated without cancellation for evanescent orders.
    cplx c_n(int n) const {
        const double an = std::abs(n);
        const double v = std::abs(n + delta_);
        if (v > mu_) {
            const double w = std::sqrt((v - mu_) * (v + mu_));
            if (std::abs(w) < 1e-13 * std::max(1.0, v)) fail(ErrorCode::CutoffDegenerate, "Wood anomaly in exterior series");
            return (delta_ * (2.0 * n + delta_) - mu_ * mu_) / ((w + an) * an * w) / (2.0 * pi);
        }
        return 1.0 / (2.0 * pi * an) - I / (g_.d * zeta_n(inc_.k, inc_.kappa, g_.d, n));
    }

    cplx const_term() const { return c0_; }
    double coeff_log() const { return A_; }
    cplx coeff_ulog() const { return B_; }
    double coeff_u2log() const { return C_; }

    // sum_{n != 0} c_n.
    cplx compensated_sum() const {
        static const double zeta3 = std::riemann_zeta(3.0);
        cplx s = -(2.0 * delta_ * delta_ + mu_ * mu_) / (2.0 * pi) * zeta3;
        for (int n = nmax_; n >= 1; --n) s += cp_[n + nmax_] + cp_[-n + nmax_];
        return s;
    }

    // Analytic remainder H(u) (excluding c0).
    cplx H(double u) const {
        const double eta = g_.eta;
        const double x = 2.0 * pi * eta * u;
        double slog;
        if (u == 0.0) slog = std::log(2.0 * pi * eta) / pi;
        else slog = std::log(std::abs(2.0 * std::sin(pi * eta * u) / u)) / pi;
        const cplx cl = I * delta_ / pi * (numerics::s_cl2(x) - 2.0 * pi * eta * lg_ * u);
        const double c3 = -(2.0 * delta_ * delta_ + mu_ * mu_) / (2.0 * pi) *
                          (numerics::s_c3(x) + 2.0 * pi * pi * eta * eta * lg_ * u * u);
        const cplx e1 = std::exp(I * x);
        cplx ep = 1.0, tail = 0.0;
        for (int n = 1; n <= nmax_; ++n) {
            ep *= e1;
            tail += cp_[n + nmax_] * ep + cp_[-n + nmax_] * std::conj(ep);
        }
        return slog + cl + c3 + tail;
    }

    // Full G^e_eps(X, Y) for X != Y.
    cplx kernel(double X, double Y) const {
        const double u = X - Y;
        if (u == 0.0) fail(ErrorCode::NonConvergent, "exterior aperture kernel is log-singular at X == Y");
        const double l = std::log(std::abs(u));
        const cplx br = c0_ + A_ * l + B_ * u * l + C_ * u * u * l + H(u);
        return std::exp(I * inc_.kappa * g_.eps * u) * br;
    }

    double delta() const { return delta_; }
    double mu() const { return mu_; }

private:
    Incidence inc_;
    Geometry g_;
    int nmax_;
    double delta_ = 0, mu_ = 0, lg_ = 0;
    cplx c0_;
    double A_ = 0, C_ = 0;
    cplx B_;
    std::vector<cplx> cp_;
};

inline cplx scaled_exterior_kernel(double X, double Y, const Incidence& inc, const Geometry& g,
                                   const TruncationPolicy& tp) {
    return ExteriorSeries(inc, g, tp).kernel(X, Y);
}

struct KernelSplit {
    cplx beta;
    std::function<cplx(double, double)> rho_at;
    std::string remainder_order;
};

// beta^e written as -i/(d zeta_0) + small part; the small part is what remains after the
// dominant propagating-order term is removed.
inline cplx beta_e_small(Regime regime, const Incidence& inc, const Geometry& g, const TruncationPolicy& tp) {
    if (regime == Regime::H1) return std::log(2.0) / pi;
    ExteriorSeries es(inc, g, tp);
    return (std::log(g.eps) + std::log(2.0) + std::log(pi / g.d)) / pi + es.compensated_sum();
}

inline KernelSplit kernel_split_exterior(Regime regime, const Incidence& inc, const Geometry& g,
                                         const TruncationPolicy& tp) {
    if (std::abs(inc.zeta) < 1e-13 * inc.k) fail(ErrorCode::CutoffDegenerate, "zeta ~ 0");
    const cplx c0 = -I / (g.d * zeta_n(inc.k, inc.kappa, g.d, 0));
    KernelSplit ks;
    ks.beta = c0 + beta_e_small(regime, inc, g, tp);
    if (regime == Regime::H1) {
        const cplx skew = inc.kappa * g.eta / inc.zeta;
        const double eta = g.eta;
        ks.rho_at = [eta, skew](double X, double Y) -> cplx {
            return std::log(std::abs(std::sin(pi * eta * (X - Y)))) / pi + skew * (X - Y);
        };
        ks.remainder_order = inc.kappa == 0.0 ? "eps^2" : "eps";
    } else {
        ks.rho_at = [](double X, double Y) -> cplx { return std::log(std::abs(X - Y)) / pi; };
        ks.remainder_order = inc.kappa == 0.0 ? "eps^2 ln eps" : "eps";
    }
    return ks;
}

}  // namespace perslit::greens
