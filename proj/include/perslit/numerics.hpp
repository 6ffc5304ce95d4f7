#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "perslit/types.hpp"

namespace perslit::numerics {

// Gauss-Chebyshev (first kind) nodes on [-1,1], ascending.
inline Eigen::VectorXd chebyshev_nodes(int m) {
    Eigen::VectorXd t(m);
    for (int k = 0; k < m; ++k) t(k) = -std::cos((2.0 * k + 1.0) * pi / (2.0 * m));
    return t;
}

// T(k, j) = T_j(t_k) for j < n.
inline Eigen::MatrixXd chebyshev_table(const Eigen::VectorXd& t, int n) {
    Eigen::MatrixXd T(t.size(), n);
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        double a = 1.0, b = t(k);
        for (int j = 0; j < n; ++j) {
            if (j == 0) T(k, j) = 1.0;
            else if (j == 1) T(k, j) = t(k);
            else {
                const double c = 2.0 * t(k) * b - a;
                a = b;
                b = c;
                T(k, j) = c;
            }
        }
    }
    return T;
}

inline void chebyshev_TU(double t, int n, std::vector<double>& Tv, std::vector<double>& Uv) {
    Tv.assign(n, 0.0);
    Uv.assign(n, 0.0);
    if (n > 0) { Tv[0] = 1.0; Uv[0] = 1.0; }
    if (n > 1) { Tv[1] = t; Uv[1] = 2.0 * t; }
    for (int j = 2; j < n; ++j) {
        Tv[j] = 2.0 * t * Tv[j - 1] - Tv[j - 2];
        Uv[j] = 2.0 * t * Uv[j - 1] - Uv[j - 2];
    }
}

struct Rule {
    Eigen::VectorXd x;
    Eigen::VectorXd w;
};

// Gauss-Legendre on [a,b] by Newton iteration on P_n.
inline Rule gauss_legendre(int n, double a, double b) {
    Rule r{Eigen::VectorXd(n), Eigen::VectorXd(n)};
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p1 = z, p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x(i) = 0.5 * (a + b) - 0.5 * (b - a) * z;
        r.x(n - 1 - i) = 0.5 * (a + b) + 0.5 * (b - a) * z;
        r.w(i) = r.w(n - 1 - i) = 0.5 * (b - a) * w;
    }
    return r;
}

// J_0..J_nmax at real x, Miller backward recurrence normalized by J0 + 2 sum J_2k = 1.
inline std::vector<double> bessel_j_array(double x, int nmax) {
    std::vector<double> J(nmax + 1, 0.0);
    const double ax = std::abs(x);
    if (ax < 1e-300) {
        J[0] = 1.0;
        return J;
    }
    const int top = std::max(nmax, static_cast<int>(ax));
    const int start = 2 * ((top + 40 + static_cast<int>(std::sqrt(50.0 * top))) / 2);
    std::vector<double> b(start + 2, 0.0);
    b[start] = 1e-30;
    for (int n = start; n >= 1; --n) {
        b[n - 1] = 2.0 * n / ax * b[n] - b[n + 1];
        if (std::abs(b[n - 1]) > 1e200)
            for (int m = n - 1; m <= start; ++m) b[m] *= 1e-200;
    }
    double norm = b[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0 * b[k];
    for (int n = 0; n <= nmax; ++n) J[n] = b[n] / norm;
    if (x < 0)
        for (int n = 1; n <= nmax; n += 2) J[n] = -J[n];
    return J;
}

// Cl2(x) + x ln|x| and C3(x) - (x^2/2) ln|x|, where Cl2 = sum sin(nx)/n^2 and C3 = sum cos(nx)/n^3.
// Both are analytic on |x| < 2 pi; reflection through 2 pi - x is used for |x| > pi.
namespace detail {
inline const std::vector<double>& zeta_even() {
    static const std::vector<double> z = [] {
        std::vector<double> v(80);
        for (int k = 1; k < 80; ++k) v[k] = std::riemann_zeta(2.0 * k);
        return v;
    }();
    return z;
}
inline double s_cl2_series(double x) {
    const auto& z = zeta_even();
    const double r = (x / (2 * pi)) * (x / (2 * pi));
    double p = r, s = 0.0;
    for (int k = 1; k < 80; ++k) {
        const double term = z[k] / (k * (2.0 * k + 1.0)) * p;
        s += term;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
        p *= r;
    }
    return x + x * s;
}
inline double s_c3_series(double x) {
    const auto& z = zeta_even();
    const double r = (x / (2 * pi)) * (x / (2 * pi));
    double p = r, s = 0.0;
    for (int k = 1; k < 80; ++k) {
        const double term = z[k] / (k * (2.0 * k + 1.0) * (2.0 * k + 2.0)) * p;
        s += term;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
        p *= r;
    }
    static const double zeta3 = std::riemann_zeta(3.0);
    return zeta3 - 0.75 * x * x - x * x * s;
}
inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(std::abs(x)); }
}  // namespace detail

inline double s_cl2(double x) {
    const double ax = std::abs(x);
    if (ax <= pi) return detail::s_cl2_series(x);
    const double sg = x < 0 ? -1.0 : 1.0;
    const double y = 2 * pi - ax;
    const double cl2 = -(detail::s_cl2_series(y) - detail::xlogx(y));
    return sg * (cl2 + detail::xlogx(ax));
}

inline double s_c3(double x) {
    const double ax = std::abs(x);
    if (ax <= pi) return detail::s_c3_series(ax);
    const double y = 2 * pi - ax;
    const double c3 = detail::s_c3_series(y) + 0.5 * y * detail::xlogx(y);
    return c3 - 0.5 * ax * detail::xlogx(ax);
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx.push_back(std::log(std::abs(x[i])));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return fit_slope(lx, ly);
}

}  // namespace perslit::numerics
