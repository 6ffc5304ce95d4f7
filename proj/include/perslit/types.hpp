#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "perslit/errors.hpp"

namespace perslit {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

struct Point {
    double x1 = 0.0;
    double x2 = 0.0;
};

enum class Regime { H1, H2 };

inline const char* to_string(Regime r) { return r == Regime::H1 ? "H1" : "H2"; }

// Slab thickness is normalized to 1.
struct Geometry {
    double eps = 0.0;
    double d = 0.0;
    double eta = 0.0;

    static Geometry from_eps_d(double eps, double d) {
        Geometry g{eps, d, eps / d};
        g.validate();
        return g;
    }
    static Geometry from_eps_eta(double eps, double eta) {
        Geometry g{eps, eps / eta, eta};
        g.eta = g.eps / g.d;
        g.validate();
        return g;
    }
    void validate() const {
        if (!(eps > 0.0)) fail(ErrorCode::ValidationError, "eps must be > 0");
        if (!(d > 0.0)) fail(ErrorCode::ValidationError, "d must be > 0");
        if (!(eps < d)) fail(ErrorCode::ValidationError, "eps must be < d");
        if (std::abs(eta * d - eps) > 1e-14 * d) fail(ErrorCode::ValidationError, "eta inconsistent with eps/d");
    }
};

// kappa = k sin(theta), zeta = k cos(theta). For bound-state work (|kappa| > k)
// use from_k_kappa, which leaves theta undefined (NaN) and zeta = sqrt(k^2-kappa^2) on the
// physical branch.
struct Incidence {
    double k = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    cplx zeta = 0.0;

    static Incidence from_angle(double k, double theta) {
        if (!(k > 0.0)) fail(ErrorCode::ValidationError, "k must be > 0");
        if (!(std::abs(theta) < pi / 2)) fail(ErrorCode::ValidationError, "|theta| must be < pi/2");
        return Incidence{k, theta, k * std::sin(theta), cplx(k * std::cos(theta), 0.0)};
    }
    static Incidence from_k_kappa(double k, double kappa) {
        if (!(k > 0.0)) fail(ErrorCode::ValidationError, "k must be > 0");
        const double a = std::abs(kappa);
        Incidence inc{k, std::numeric_limits<double>::quiet_NaN(), kappa, 0.0};
        const double prod = (k - a) * (k + a);
        if (prod > 0) {
            inc.zeta = cplx(std::sqrt(prod), 0.0);
            inc.theta = std::asin(kappa / k);
        } else {
            inc.zeta = cplx(0.0, std::sqrt(-prod));
        }
        return inc;
    }
    bool propagating() const { return zeta.imag() == 0.0 && zeta.real() > 0.0; }
};

struct TruncationPolicy {
    int n_max = 200;
    int m_max = 64;
    double tol = 1e-10;

    void validate() const {
        if (n_max < 1) fail(ErrorCode::ValidationError, "n_max must be >= 1");
        if (m_max < 1) fail(ErrorCode::ValidationError, "m_max must be >= 1");
        if (!(tol > 0.0)) fail(ErrorCode::ValidationError, "tol must be > 0");
    }
};

}  // namespace perslit
