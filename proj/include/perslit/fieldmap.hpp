#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "perslit/bie.hpp"
#include "perslit/regime_h1.hpp"

namespace perslit::fieldmap {

enum class Region { ExteriorUp, ExteriorDown, Slit, Pec };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::ExteriorUp: return "exterior-up";
        case Region::ExteriorDown: return "exterior-down";
        case Region::Slit: return "slit";
        case Region::Pec: return "pec";
    }
    return "?";
}

// Slit expansion u = a0 cos(k x2) + b0 cos(k(1-x2)) + sum_m (a_m e^{-k2 x2} + b_m e^{-k2(1-x2)}) cos(m pi x1/eps).
// Index 0 holds the cosine-form pair, matching -a0 k sin k = -<phi1,1>, b0 k sin k = <phi2,1>.
struct SlitModeCoeffs {
    Eigen::VectorXcd a, b;
    Eigen::VectorXd k2;
    double decay_C = 0.0;  // max_m sqrt(m) max(|a_m|, |b_m|)
};

inline SlitModeCoeffs slit_mode_coeffs(const bie::ScatterSolution& sol, int m_max) {
    if (m_max < 1) fail(ErrorCode::InvalidArgument, "m_max must be >= 1");
    const double k = sol.inc.k, eps = sol.geom.eps;
    const bie::Discretization D(static_cast<int>(sol.phi1.coeffs.size()));
    SlitModeCoeffs c;
    c.a.resize(m_max + 1);
    c.b.resize(m_max + 1);
    c.k2.resize(m_max + 1);
    const double ks = k * std::sin(k);
    if (std::abs(std::sin(k)) < 1e-12) fail(ErrorCode::SlitResonance, "sin k = 0");
    c.a(0) = sol.phi1.total() / ks;
    c.b(0) = sol.phi2.total() / ks;
    c.k2(0) = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        const double w = m * pi / eps;
        if (!(w > k)) fail(ErrorCode::ModeDegenerate, "k2 not real for mode " + std::to_string(m));
        const double k2 = std::sqrt((w - k) * (w + k));
        const double e = std::exp(-k2);
        if (std::abs(1.0 - e * e) < 1e-14) fail(ErrorCode::ModeDegenerate, "mode matrix singular");
        const Eigen::VectorXd cm = D.cos_moments(m);
        const cplx F1 = (cm.transpose().cast<cplx>() * sol.phi1.coeffs)(0);
        const cplx F2 = (cm.transpose().cast<cplx>() * sol.phi2.coeffs)(0);
        // (-a k2 e + b k2)/2 = -F1,  (-a k2 + b k2 e)/2 = F2
        const double det = k2 * k2 / 4.0 * (1.0 - e * e);
        const cplx r1 = -F1, r2 = F2;
        c.a(m) = (r1 * (k2 * e / 2.0) - (k2 / 2.0) * r2) / det;
        c.b(m) = ((-k2 * e / 2.0) * r2 + (k2 / 2.0) * r1) / det;
        c.k2(m) = k2;
        c.decay_C = std::max(c.decay_C, std::sqrt(double(m)) * std::max(std::abs(c.a(m)), std::abs(c.b(m))));
    }
    return c;
}

// Evaluates the total field from a direct solution: Rayleigh expansions outside, waveguide modes inside.
class FieldEvaluator {
public:
    FieldEvaluator(const bie::ScatterSolution& sol, const TruncationPolicy& tp)
        : sol_(sol), tp_(tp), D_(static_cast<int>(sol.phi1.coeffs.size())),
          modes_(slit_mode_coeffs(sol, std::max(tp.m_max, 1))) {}

    const SlitModeCoeffs& modes() const { return modes_; }

    Region region(const Point& x) const {
        if (x.x2 > 1.0) return Region::ExteriorUp;
        if (x.x2 < 0.0) return Region::ExteriorDown;
        const double d = sol_.geom.d;
        const double r = x.x1 - std::floor(x.x1 / d) * d;
        return (r >= 0.0 && r <= sol_.geom.eps) ? Region::Slit : Region::Pec;
    }

    // Compute Rayleigh amplitudes so that points at distance >= h from the slab converge.
    void prepare(double h) {
        const int need = orders_for(h);
        if (need <= orders_) return;
        const auto& inc = sol_.inc;
        const auto& g = sol_.geom;
        up_.assign(2 * need + 1, 0.0);
        down_.assign(2 * need + 1, 0.0);
        zn_.assign(2 * need + 1, 0.0);
        for (int n = -need; n <= need; ++n) {
            const double kn = inc.kappa + 2.0 * pi * n / g.d;
            const cplx z = greens::zeta_n(inc.k, inc.kappa, g.d, n);
            const Eigen::VectorXcd mom = D_.fourier_moments(-kn * g.eps);
            const cplx pre = I * g.eta / z;
            zn_[n + need] = z;
            up_[n + need] = pre * (mom.transpose() * sol_.phi1.coeffs)(0);
            down_[n + need] = pre * (mom.transpose() * sol_.phi2.coeffs)(0);
        }
        orders_ = need;
    }

    cplx operator()(const Point& x) const {
        const auto reg = region(x);
        const auto& inc = sol_.inc;
        const auto& g = sol_.geom;
        switch (reg) {
            case Region::Pec:
                fail(ErrorCode::InvalidArgument, "point lies inside the conductor");
            case Region::ExteriorUp:
            case Region::ExteriorDown: {
                const double h = reg == Region::ExteriorUp ? x.x2 - 1.0 : -x.x2;
                const int need = orders_for(h);
                if (need > orders_) fail(ErrorCode::InvalidArgument, "FieldEvaluator::prepare not called for this height");
                const auto& amp = reg == Region::ExteriorUp ? up_ : down_;
                cplx s = 0.0;
                for (int n = -need; n <= need; ++n) {
                    const double kn = inc.kappa + 2.0 * pi * n / g.d;
                    const int i = n + orders_;
                    s += amp[i] * std::exp(I * (kn * x.x1 + zn_[i] * h));
                }
                if (reg == Region::ExteriorUp) {
                    const cplx z = inc.zeta;
                    s += std::exp(I * (inc.kappa * x.x1 - z * (x.x2 - 1.0))) + std::exp(I * (inc.kappa * x.x1 + z * h));
                }
                return s;
            }
            case Region::Slit: {
                const double nper = std::floor(x.x1 / g.d);
                const double r = x.x1 - nper * g.d;
                const cplx ph = std::exp(I * (inc.kappa * nper * g.d));
                const double k = inc.k;
                cplx s = modes_.a(0) * std::cos(k * x.x2) + modes_.b(0) * std::cos(k * (1.0 - x.x2));
                for (Eigen::Index m = 1; m < modes_.a.size(); ++m) {
                    const double k2 = modes_.k2(m);
                    const double c = std::cos(m * pi * r / g.eps);
                    s += (modes_.a(m) * std::exp(-k2 * x.x2) + modes_.b(m) * std::exp(-k2 * (1.0 - x.x2))) * c;
                }
                return ph * s;
            }
        }
        return 0.0;
    }

    int orders() const { return orders_; }

private:
    int orders_for(double h) const {
        const double d = sol_.geom.d;
        const double decay = 2.0 * pi * std::max(h, 1e-300) / d;
        const double need = std::log(1.0 / tp_.tol) / decay + std::abs(sol_.inc.kappa) * d / (2.0 * pi) + 2.0;
        return static_cast<int>(std::min(need, 20000.0));
    }

    bie::ScatterSolution sol_;
    TruncationPolicy tp_;
    bie::Discretization D_;
    SlitModeCoeffs modes_;
    int orders_ = -1;
    std::vector<cplx> up_, down_, zn_;
};

// Total field at a point; inside a matching band of 2 eps around the apertures the slit expansion is used
// on the slit side, and on the aperture line itself both representations are compared.
inline cplx total_field(const Point& x, const bie::ScatterSolution& sol, const TruncationPolicy& tp) {
    FieldEvaluator ev(sol, tp);
    const auto reg = ev.region(x);
    if (reg == Region::ExteriorUp) ev.prepare(x.x2 - 1.0);
    if (reg == Region::ExteriorDown) ev.prepare(-x.x2);
    const cplx v = ev(x);
    if (reg == Region::Slit && (x.x2 == 1.0 || x.x2 == 0.0)) {
        const double r = x.x1 - std::floor(x.x1 / sol.geom.d) * sol.geom.d;
        const double X = std::clamp(r / sol.geom.eps, 1e-9, 1.0 - 1e-9);
        const auto tr = bie::aperture_traces(sol, tp, static_cast<int>(sol.phi1.coeffs.size()), X);
        const cplx ext = std::exp(I * (sol.inc.kappa * (x.x1 - r))) * (x.x2 == 1.0 ? tr.first : tr.second);
        if (std::abs(ext - v) > 1e-3 * std::max(1.0, std::abs(v)))
            fail(ErrorCode::RegionAmbiguous, "aperture representations disagree");
    }
    return v;
}

// Bound-state eigenmode (normalized per side) with the slit profile of the matching branch.
inline cplx eigenmode_field(const Point& x, double kappa, double k, h1::Branch b, const Geometry& g) {
    if (x.x2 > 1.0) return h1::eigenmode_far(kappa, k, h1::Side::Up, x, g.eta);
    if (x.x2 < 0.0) return h1::eigenmode_far(kappa, k, h1::Side::Down, x, g.eta);
    const double r = x.x1 - std::floor(x.x1 / g.d) * g.d;
    if (r > g.eps) fail(ErrorCode::InvalidArgument, "point lies inside the conductor");
    const auto [a0, b0] = h1::eigenmode_slit_coeffs(k, b);
    return std::exp(I * (kappa * (x.x1 - r))) * (a0 * std::exp(I * (k * x.x2)) + b0 * std::exp(I * (k * (1.0 - x.x2))));
}

struct GridSpec {
    double x1_min = 0.0, x1_max = 1.0;
    double x2_min = -1.0, x2_max = 2.0;
    int n1 = 50, n2 = 50;
};

struct FieldGrid {
    std::vector<double> x1_samples, x2_samples;
    std::vector<std::vector<std::optional<cplx>>> values;  // row = x2, col = x1
    std::vector<std::vector<Region>> region_mask;
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

inline FieldGrid sample_grid(const GridSpec& spec, const bie::ScatterSolution& sol, const TruncationPolicy& tp) {
    if (spec.n1 < 1 || spec.n2 < 1) fail(ErrorCode::ValidationError, "grid sizes must be >= 1");
    FieldGrid G;
    G.x1_samples = linspace(spec.x1_min, spec.x1_max, spec.n1);
    G.x2_samples = linspace(spec.x2_min, spec.x2_max, spec.n2);
    FieldEvaluator ev(sol, tp);
    double hmin = std::numeric_limits<double>::infinity();
    for (double y : G.x2_samples) {
        if (y > 1.0) hmin = std::min(hmin, y - 1.0);
        if (y < 0.0) hmin = std::min(hmin, -y);
    }
    if (std::isfinite(hmin)) ev.prepare(hmin);
    G.values.assign(spec.n2, std::vector<std::optional<cplx>>(spec.n1));
    G.region_mask.assign(spec.n2, std::vector<Region>(spec.n1));
    for (int i = 0; i < spec.n2; ++i)
        for (int j = 0; j < spec.n1; ++j) {
            const Point p{G.x1_samples[j], G.x2_samples[i]};
            const auto r = ev.region(p);
            G.region_mask[i][j] = r;
            if (r != Region::Pec) G.values[i][j] = ev(p);
        }
    return G;
}

}  // namespace perslit::fieldmap
