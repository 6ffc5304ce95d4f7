#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include <Eigen/Dense>

#include "perslit/greens.hpp"
#include "perslit/numerics.hpp"
#include "perslit/types.hpp"

namespace perslit::bie {

struct ApertureBasis {
    int n_basis = 64;
    void validate() const {
        if (n_basis < 4) fail(ErrorCode::ValidationError, "n_basis must be >= 4");
    }
};

// Density on the unit aperture: phi(X) = sum_j c_j T_j(2X-1) / sqrt(X(1-X)).
struct Density {
    Eigen::VectorXcd coeffs;

    cplx total() const { return pi * coeffs(0); }  // <phi, 1>
    cplx operator()(double X) const {
        const double t = 2.0 * X - 1.0;
        double a = 1.0, b = t;
        cplx s = coeffs(0);
        for (Eigen::Index j = 1; j < coeffs.size(); ++j) {
            s += coeffs(j) * b;
            const double c = 2.0 * t * b - a;
            a = b;
            b = c;
        }
        return s / std::sqrt(X * (1.0 - X));
    }
};

// Galerkin machinery for the weighted Chebyshev basis psi_j(X) = T_j(2X-1)/sqrt(X(1-X)).
// With t = 2X-1, psi_j(X) dX = T_j(t) dt / sqrt(1-t^2), and the classical identity
//   int ln|t-s| T_l(s) / sqrt(1-s^2) ds = -pi ln2 (l = 0), -(pi/l) T_l(t) (l >= 1)
// makes logarithmic kernels diagonal.
class Discretization {
public:
    explicit Discretization(int n) : n_(n), m_(n + 40), l_(n + 24) {
        t_ = numerics::chebyshev_nodes(m_);
        X_ = (t_.array() + 1.0) * 0.5;
        T_ = numerics::chebyshev_table(t_, l_);
        lam_.resize(l_);
        lam_pt_.resize(l_);
        lam_(0) = -2.0 * pi * pi * std::log(2.0);
        lam_pt_(0) = -2.0 * pi * std::log(2.0);
        for (int l = 1; l < l_; ++l) {
            lam_(l) = -pi * pi / (2.0 * l);
            lam_pt_(l) = -pi / l;
        }
    }

    int n() const { return n_; }
    int m() const { return m_; }
    int l() const { return l_; }
    const Eigen::VectorXd& t() const { return t_; }
    const Eigen::VectorXd& X() const { return X_; }
    const Eigen::MatrixXd& T() const { return T_; }
    const Eigen::VectorXd& lambda() const { return lam_; }
    const Eigen::VectorXd& lambda_pointwise() const { return lam_pt_; }

    // Chebyshev coefficients (rows i < n, columns l < L) of a(X) T_i(t).
    Eigen::MatrixXcd coeffs(const Eigen::VectorXcd& a_at_nodes) const {
        Eigen::MatrixXcd At = T_.leftCols(n_).cast<cplx>();
        At = a_at_nodes.asDiagonal() * At;
        Eigen::MatrixXcd g = At.transpose() * T_.cast<cplx>();
        g.col(0) /= static_cast<double>(m_);
        g.rightCols(l_ - 1) *= 2.0 / m_;
        return g;
    }

    // int int psi_i(X) a(X) ln|X-Y| b(Y) psi_j(Y) dX dY
    Eigen::MatrixXcd log_galerkin(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) const {
        const Eigen::MatrixXcd ga = coeffs(a), gb = coeffs(b);
        return ga * lam_.cast<cplx>().asDiagonal() * gb.transpose();
    }

    Eigen::MatrixXd plain_log() const {
        return lam_.head(n_).asDiagonal();
    }

    // Tensor Gauss-Chebyshev Galerkin of a smooth kernel sampled at node pairs S(k, l) = S(X_k, X_l).
    template <class Mat>
    Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, Eigen::Dynamic> smooth_galerkin(const Mat& S) const {
        using Sc = typename Mat::Scalar;
        const auto Tn = T_.leftCols(n_).cast<Sc>();
        const double w = pi / m_;
        return (w * w) * (Tn.transpose() * S * Tn);
    }

    // int_0^1 exp(i omega X) psi_j(X) dX = pi exp(i omega/2) i^j J_j(omega/2).
    Eigen::VectorXcd fourier_moments(double omega) const {
        const auto J = numerics::bessel_j_array(omega / 2.0, n_);
        Eigen::VectorXcd v(n_);
        const cplx ph = pi * std::exp(I * (omega / 2.0));
        cplx ij = 1.0;
        for (int j = 0; j < n_; ++j) {
            v(j) = ph * ij * J[j];
            ij *= I;
        }
        return v;
    }

    // int_0^1 cos(m pi X) psi_j(X) dX.
    Eigen::VectorXd cos_moments(int m) const {
        const Eigen::VectorXcd a = fourier_moments(m * pi);
        return a.real();
    }

    // int int psi_i(X) ln(X+Y) psi_j(Y) dX dY.
    const Eigen::MatrixXd& corner() const {
        static std::mutex mu;
        static std::map<int, std::shared_ptr<Eigen::MatrixXd>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[n_];
        if (!slot) slot = std::make_shared<Eigen::MatrixXd>(build_corner(n_));
        corner_ = slot;
        return *corner_;
    }

private:
    // z(b) = c - sqrt(c^2 - 1), c = 2 - cos b, written without cancellation.
    static double corner_z(double b) {
        const double c = 2.0 - std::cos(b);
        const double r = std::sqrt(2.0) * std::sin(0.5 * b) * std::sqrt(3.0 - std::cos(b));
        return 1.0 / (c + r);
    }

    static Eigen::MatrixXd build_corner(int n) {
        const int nq = 2 * n + 240;
        const auto r = numerics::gauss_legendre(nq, 0.0, pi);
        Eigen::MatrixXd C(nq, n), Iv(nq, n);
        for (int q = 0; q < nq; ++q) {
            const double b = r.x(q);
            const double z = corner_z(b);
            double zp = z;
            Iv(q, 0) = -pi * std::log(2.0 * z);
            for (int i = 1; i < n; ++i) {
                Iv(q, i) = -pi * zp / i;
                zp *= z;
            }
            for (int j = 0; j < n; ++j) C(q, j) = r.w(q) * std::cos(j * b);
        }
        Eigen::MatrixXd Q = Iv.transpose() * C;
        Q(0, 0) -= pi * pi * std::log(2.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if ((i + j) % 2) Q(i, j) = -Q(i, j);
        return 0.5 * (Q + Q.transpose());
    }

    int n_, m_, l_;
    Eigen::VectorXd t_, X_;
    Eigen::MatrixXd T_;
    Eigen::VectorXd lam_, lam_pt_;
    mutable std::shared_ptr<Eigen::MatrixXd> corner_;
};

inline Eigen::MatrixXd rank_one_P(int n) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    P(0, 0) = pi * pi;
    return P;
}

// Galerkin matrix of rho^i(X,Y) = (1/pi)[ln|sin(pi(X+Y)/2)| + ln|sin(pi(X-Y)/2)|]
//   = (1/pi)[ln|X-Y| + ln(X+Y) + ln(2-X-Y) + S(X,Y)], S analytic.
inline Eigen::MatrixXd galerkin_rho_i(const Discretization& D) {
    const int n = D.n(), m = D.m();
    const Eigen::MatrixXd& Q = D.corner();
    Eigen::MatrixXd Qr = Q;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if ((i + j) % 2) Qr(i, j) = -Qr(i, j);
    Eigen::MatrixXd S(m, m);
    const auto& X = D.X();
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double w = X(a) + X(b), u = X(a) - X(b);
            const double sw = std::log(std::sin(pi * w / 2) / (w * (2.0 - w)));
            const double su = u == 0.0 ? std::log(pi / 2) : std::log(std::sin(pi * u / 2) / u);
            S(a, b) = sw + su;
        }
    return (D.plain_log() + Q + Qr + D.smooth_galerkin(S)) / pi;
}

// Galerkin matrix of rho^e: H1 (1/pi) ln|sin(pi eta u)| + (kappa eta/zeta) u, H2 (1/pi) ln|u|.
inline Eigen::MatrixXcd galerkin_rho_e(Regime regime, const Incidence& inc, const Geometry& g,
                                       const Discretization& D) {
    const int n = D.n(), m = D.m();
    Eigen::MatrixXcd R = D.plain_log().cast<cplx>() / pi;
    if (regime == Regime::H2) return R;
    Eigen::MatrixXd S(m, m);
    const auto& X = D.X();
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double u = X(a) - X(b);
            S(a, b) = u == 0.0 ? std::log(pi * g.eta) : std::log(std::abs(std::sin(pi * g.eta * u) / u));
        }
    R += D.smooth_galerkin(S).cast<cplx>() / pi;
    if (std::abs(inc.zeta) < 1e-13 * inc.k) fail(ErrorCode::CutoffDegenerate, "zeta ~ 0 in skew term");
    const cplx skew = inc.kappa * g.eta / inc.zeta;
    // int psi_i X = pi/2 delta_i0 + pi/4 delta_i1, int psi_i = pi delta_i0.
    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(n), m1 = Eigen::VectorXd::Zero(n);
    m0(0) = pi;
    m1(0) = pi / 2;
    m1(1) = pi / 4;
    R += skew * (m1 * m0.transpose() - m0 * m1.transpose()).cast<cplx>();
    return R;
}

// Galerkin of K (kernel rho^i + rho^e).
inline Eigen::MatrixXcd assemble_K(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis) {
    basis.validate();
    Discretization D(basis.n_basis);
    return galerkin_rho_i(D).cast<cplx>() + galerkin_rho_e(regime, inc, g, D);
}

inline Eigen::MatrixXcd assemble_K(Regime regime, const Incidence& inc, const Geometry& g, const Discretization& D) {
    return galerkin_rho_i(D).cast<cplx>() + galerkin_rho_e(regime, inc, g, D);
}

// Full operators on one aperture:
//   T^e + T^i = (cot k/(k eps) + c0) P + A_rest,     c0 = -i/(d zeta_0)
//   T~^i      = beta~ P + C_rest
struct FullOperators {
    double cot_term = 0.0;  // cot k / (k eps)
    cplx c0;
    double beta_tilde = 0.0;
    // cot_term +- beta_tilde, in half-angle form
    double cot_plus = 0.0, cot_minus = 0.0;
    Eigen::MatrixXcd A_rest;
    Eigen::MatrixXcd C_rest;
};

inline FullOperators assemble_full(const Incidence& inc, const Geometry& g, const TruncationPolicy& tp,
                                   const Discretization& D) {
    const int n = D.n(), m = D.m();
    const auto bi = greens::kernel_beta_i(inc.k, g.eps);
    FullOperators op;
    op.cot_term = std::cos(inc.k) / std::sin(inc.k) / (inc.k * g.eps);
    op.beta_tilde = bi.beta_tilde;
    op.cot_plus = 1.0 / (std::tan(0.5 * inc.k) * inc.k * g.eps);
    op.cot_minus = -std::tan(0.5 * inc.k) / (inc.k * g.eps);

    // Interior: 2ln2/pi P + rho^i + modal remainder.
    Eigen::MatrixXd Ai = 2.0 * std::log(2.0) / pi * rank_one_P(n) + galerkin_rho_i(D);
    Eigen::MatrixXd Ci = Eigen::MatrixXd::Zero(n, n);
    const int M = greens::slit_series_terms(inc.k, g.eps, tp);
    for (int mm = 1; mm <= M; ++mm) {
        const double r = greens::slit_remainder_coeff(mm, inc.k, g.eps);
        const double c = greens::slit_cross_coeff(mm, inc.k, g.eps);
        const Eigen::VectorXd cm = D.cos_moments(mm);
        Ai += r * cm * cm.transpose();
        if (c != 0.0) Ci += c * cm * cm.transpose();
    }

    // Exterior.
    greens::ExteriorSeries es(inc, g, tp);
    op.c0 = es.const_term();
    const double ke = inc.kappa * g.eps;
    const auto& X = D.X();
    Eigen::VectorXcd E(m), Eb(m), XE(m), YEb(m), X2E(m), Y2Eb(m);
    for (int a = 0; a < m; ++a) {
        E(a) = std::exp(I * (ke * X(a)));
        Eb(a) = std::conj(E(a));
        XE(a) = X(a) * E(a);
        YEb(a) = X(a) * Eb(a);
        X2E(a) = X(a) * X(a) * E(a);
        Y2Eb(a) = X(a) * X(a) * Eb(a);
    }
    Eigen::MatrixXcd Ae = es.coeff_log() * D.log_galerkin(E, Eb);
    const cplx B = es.coeff_ulog();
    const double Cc = es.coeff_u2log();
    if (B != 0.0) Ae += B * (D.log_galerkin(XE, Eb) - D.log_galerkin(E, YEb));
    if (Cc != 0.0) Ae += Cc * (D.log_galerkin(X2E, Eb) - 2.0 * D.log_galerkin(XE, YEb) + D.log_galerkin(E, Y2Eb));
    Eigen::MatrixXcd S(m, m);
    std::map<double, cplx> hcache;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double u = X(a) - X(b);
            auto it = hcache.find(u);
            cplx h;
            if (it == hcache.end()) {
                h = es.H(u);
                hcache.emplace(u, h);
            } else {
                h = it->second;
            }
            const cplx ph = std::exp(I * (ke * u));
            const double th = ke * u;
            const cplx em1(-2.0 * std::sin(0.5 * th) * std::sin(0.5 * th), std::sin(th));
            S(a, b) = ph * h + op.c0 * em1;
        }
    Ae += D.smooth_galerkin(S);

    op.A_rest = Ai.cast<cplx>() + Ae;
    op.C_rest = Ci.cast<cplx>();
    return op;
}

struct ReducedScalars {
    double alpha = 0.0;
    cplx p, q, lambda1, lambda2;
};

struct PQ {
    ReducedScalars exact;    // from the full Galerkin operator L
    ReducedScalars leading;  // with <L^-1 e1, e1 +- e2> replaced by alpha
    cplx L11, L12;           // <L^-1 e1, e1>, <L^-1 e1, e2>
    cplx L22, L21;           // <L^-1 e2, e2>, <L^-1 e2, e1>
    cplx beta, beta_tilde;
};

inline cplx regime_beta(Regime regime, const Incidence& inc, const Geometry& g, const TruncationPolicy& tp) {
    const double cot_term = std::cos(inc.k) / std::sin(inc.k) / (inc.k * g.eps);
    greens::ExteriorSeries es(inc, g, tp);
    return cot_term + 2.0 * std::log(2.0) / pi + es.const_term() + greens::beta_e_small(regime, inc, g, tp);
}

inline Eigen::VectorXcd solve_checked(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b, ErrorCode code) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rc = lu.rcond();
    if (!(rc > 1e-13)) fail(code, "Galerkin matrix numerically singular (rcond " + std::to_string(rc) + ")");
    Eigen::VectorXcd x = lu.solve(b);
    x += lu.solve(b - A * x);
    return x;
}

inline Density solve_K_inv_one(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis) {
    basis.validate();
    Discretization D(basis.n_basis);
    const Eigen::MatrixXcd K = assemble_K(regime, inc, g, D);
    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(D.n());
    one(0) = pi;
    Density psi{solve_checked(K, one, ErrorCode::SingularOperator)};
    const double res = (K * psi.coeffs - one).norm() / one.norm();
    if (res > 1e-9) fail(ErrorCode::SingularOperator, "K^-1 1 residual too large");
    return psi;
}

inline double alpha(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis) {
    return solve_K_inv_one(regime, inc, g, basis).total().real();
}

inline cplx alpha_complex(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis) {
    return solve_K_inv_one(regime, inc, g, basis).total();
}

// h(X) = (1/pi) int ln|X-Y| (K^-1 1)(Y) dY and its derivative.
inline cplx log_potential(const Density& psi, double X) {
    std::vector<double> Tv, Uv;
    const int n = static_cast<int>(psi.coeffs.size());
    numerics::chebyshev_TU(2.0 * X - 1.0, n, Tv, Uv);
    cplx s = psi.coeffs(0) * (-2.0 * pi * std::log(2.0));
    for (int j = 1; j < n; ++j) s += psi.coeffs(j) * (-pi / j) * Tv[j];
    return s / pi;
}

inline cplx log_potential_derivative(const Density& psi, double X) {
    std::vector<double> Tv, Uv;
    const int n = static_cast<int>(psi.coeffs.size());
    numerics::chebyshev_TU(2.0 * X - 1.0, n, Tv, Uv);
    cplx s = 0.0;
    for (int j = 1; j < n; ++j) s += psi.coeffs(j) * Uv[j - 1];
    return -2.0 * s;
}

inline double h_function(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis, double X) {
    if (!(X > 0.0 && X < 1.0)) fail(ErrorCode::InvalidArgument, "h_function needs X in (0,1)");
    return log_potential(solve_K_inv_one(regime, inc, g, basis), X).real();
}

inline double h_prime(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis, double X) {
    if (!(X > 0.0 && X < 1.0)) fail(ErrorCode::InvalidArgument, "h_prime needs X in (0,1)");
    return log_potential_derivative(solve_K_inv_one(regime, inc, g, basis), X).real();
}

inline PQ p_q(Regime regime, const Incidence& inc, const Geometry& g, const ApertureBasis& basis,
              const TruncationPolicy& tp = {}) {
    basis.validate();
    Discretization D(basis.n_basis);
    const int n = D.n();
    const FullOperators op = assemble_full(inc, g, tp, D);
    const cplx beta = regime_beta(regime, inc, g, tp);
    const cplx bt = op.beta_tilde;
    // L = full - P-block, with the large constants cancelled symbolically.
    const cplx shift = 2.0 * std::log(2.0) / pi + greens::beta_e_small(regime, inc, g, tp);
    const Eigen::MatrixXcd AL = op.A_rest - shift * rank_one_P(n).cast<cplx>();
    const Eigen::MatrixXcd& CL = op.C_rest;
    Eigen::MatrixXcd Lfull(2 * n, 2 * n);
    Lfull << AL, CL, CL, AL;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Lfull);
    if (!(lu.rcond() > 1e-13)) fail(ErrorCode::SingularOperator, "L numerically singular");
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(2 * n), e2 = Eigen::VectorXcd::Zero(2 * n);
    e1(0) = pi;
    e2(n) = pi;
    const Eigen::VectorXcd x1 = lu.solve(e1), x2 = lu.solve(e2);
    PQ r;
    r.L11 = pi * x1(0);
    r.L12 = pi * x1(n);
    r.L22 = pi * x2(n);
    r.L21 = pi * x2(0);
    r.beta = beta;
    r.beta_tilde = bt;
    const double eps = g.eps;
    const cplx bp = beta - op.cot_term + op.cot_plus, bm = beta - op.cot_term + op.cot_minus;
    r.exact.lambda1 = 1.0 + bp * (r.L11 + r.L12);
    r.exact.lambda2 = 1.0 + bm * (r.L11 - r.L12);
    r.exact.p = eps * r.exact.lambda1;
    r.exact.q = eps * r.exact.lambda2;

    const Eigen::MatrixXcd K = assemble_K(regime, inc, g, D);
    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(n);
    one(0) = pi;
    const cplx a = pi * solve_checked(K, one, ErrorCode::SingularOperator)(0);
    r.exact.alpha = r.leading.alpha = a.real();
    r.leading.lambda1 = 1.0 + bp * a;
    r.leading.lambda2 = 1.0 + bm * a;
    r.leading.p = eps * r.leading.lambda1;
    r.leading.q = eps * r.leading.lambda2;
    return r;
}

struct ScatterSolution {
    Incidence inc;
    Geometry geom;
    Density phi1, phi2;
    std::map<int, cplx> rayleigh_up, rayleigh_down;
    cplx R, T;
};

inline ScatterSolution direct_solve(const Incidence& inc, const Geometry& g, const TruncationPolicy& tp,
                                    const ApertureBasis& basis, int rayleigh_orders = 3) {
    basis.validate();
    tp.validate();
    if (!inc.propagating()) fail(ErrorCode::InvalidArgument, "direct_solve needs a propagating incident wave");
    Discretization D(basis.n_basis);
    const int n = D.n();
    const FullOperators op = assemble_full(inc, g, tp, D);
    const Eigen::VectorXcd F = 2.0 * D.fourier_moments(inc.kappa * g.eps) / g.eps;
    Eigen::VectorXcd m = Eigen::VectorXcd::Zero(n);
    m(0) = pi;
    auto solve_sm = [&](const Eigen::MatrixXcd& R, cplx c) {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(R);
        const double rc = lu.rcond();
        if (!(rc > 1e-13)) fail(ErrorCode::IllConditioned, "block system condition estimate exceeds 1e13");
        auto refine = [&](const Eigen::VectorXcd& b) {
            Eigen::VectorXcd x = lu.solve(b);
            x += lu.solve(b - R * x);
            return x;
        };
        const Eigen::VectorXcd y = refine(F), z = refine(m);
        const cplx den = 1.0 + c * (m.transpose() * z)(0);
        return Eigen::VectorXcd(y - z * (c * (m.transpose() * y)(0) / den));
    };
    const Eigen::VectorXcd xp = solve_sm(op.A_rest + op.C_rest, op.cot_plus + op.c0);
    const Eigen::VectorXcd xm = solve_sm(op.A_rest - op.C_rest, op.cot_minus + op.c0);
    ScatterSolution s;
    s.inc = inc;
    s.geom = g;
    s.phi1.coeffs = 0.5 * (xp + xm);
    s.phi2.coeffs = 0.5 * (xp - xm);
    for (int k = -rayleigh_orders; k <= rayleigh_orders; ++k) {
        const double kn = inc.kappa + 2.0 * pi * k / g.d;
        const cplx zn = greens::zeta_n(inc.k, inc.kappa, g.d, k);
        const Eigen::VectorXcd mom = D.fourier_moments(-kn * g.eps);
        const cplx pre = I * g.eta / zn;
        s.rayleigh_up[k] = pre * (mom.transpose() * s.phi1.coeffs)(0);
        s.rayleigh_down[k] = pre * (mom.transpose() * s.phi2.coeffs)(0);
    }
    s.R = 1.0 + s.rayleigh_up[0];
    s.T = s.rayleigh_down[0];
    return s;
}

// Pointwise exterior single-layer operator X -> int G^e(X,Y) phi(Y) dY on the aperture.
class ExteriorTrace {
public:
    ExteriorTrace(const Incidence& inc, const Geometry& g, const TruncationPolicy& tp, const Discretization& D,
                  const Density& phi)
        : es_(inc, g, tp), D_(D), ke_(inc.kappa * g.eps), c_(phi.coeffs) {
        const int m = D.m();
        const auto& X = D.X();
        Eigen::VectorXcd Eb(m), YEb(m), Y2Eb(m);
        for (int a = 0; a < m; ++a) {
            Eb(a) = std::exp(-I * (ke_ * X(a)));
            YEb(a) = X(a) * Eb(a);
            Y2Eb(a) = X(a) * X(a) * Eb(a);
        }
        w0_ = D.coeffs(Eb).transpose() * c_;
        w1_ = D.coeffs(YEb).transpose() * c_;
        w2_ = D.coeffs(Y2Eb).transpose() * c_;
        vals_ = D.T().leftCols(D.n()).cast<cplx>() * c_;
    }

    cplx operator()(double X) const {
        const int L = D_.l();
        std::vector<double> Tv, Uv;
        numerics::chebyshev_TU(2.0 * X - 1.0, L, Tv, Uv);
        const auto& lp = D_.lambda_pointwise();
        cplx i0 = 0.0, i1 = 0.0, i2 = 0.0;
        for (int l = 0; l < L; ++l) {
            i0 += w0_(l) * lp(l) * Tv[l];
            i1 += w1_(l) * lp(l) * Tv[l];
            i2 += w2_(l) * lp(l) * Tv[l];
        }
        const cplx E = std::exp(I * (ke_ * X));
        cplx s = E * (es_.coeff_log() * i0 + es_.coeff_ulog() * (X * i0 - i1) +
                      es_.coeff_u2log() * (X * X * i0 - 2.0 * X * i1 + i2));
        const auto& Y = D_.X();
        cplx sm = 0.0;
        for (int q = 0; q < D_.m(); ++q) {
            const double u = X - Y(q);
            const double th = ke_ * u;
            const cplx em1(-2.0 * std::sin(0.5 * th) * std::sin(0.5 * th), std::sin(th));
            const cplx h = es_.H(u);
            sm += (std::exp(I * th) * h + es_.const_term() * em1) * vals_(q);
        }
        s += sm * (pi / D_.m());
        s += es_.const_term() * pi * c_(0);
        return s;
    }

private:
    greens::ExteriorSeries es_;
    const Discretization& D_;
    double ke_;
    Eigen::VectorXcd c_, w0_, w1_, w2_, vals_;
};

// Total field on the apertures from a direct solution: u(eps X, 1) and u(eps X, 0).
inline std::pair<cplx, cplx> aperture_traces(const ScatterSolution& s, const TruncationPolicy& tp, int n_basis,
                                             double X) {
    Discretization D(n_basis);
    ExteriorTrace up(s.inc, s.geom, tp, D, s.phi1), down(s.inc, s.geom, tp, D, s.phi2);
    const cplx f = 2.0 * std::exp(I * (s.inc.kappa * s.geom.eps * X));
    return {f - s.geom.eps * up(X), -s.geom.eps * down(X)};
}

inline std::pair<cplx, cplx> solution_moments(const ScatterSolution& sol) {
    return {sol.phi1.total(), sol.phi2.total()};
}

}  // namespace perslit::bie
