// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "perslit/fieldmap.hpp"
#include "perslit/regime_h2.hpp"

using namespace perslit;
using h1::Branch;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

double flux(const bie::ScatterSolution& s) {
    double f = 0.0;
    for (const auto* amp : {&s.rayleigh_up, &s.rayleigh_down})
        for (const auto& [n, a] : *amp) {
            const cplx z = greens::zeta_n(s.inc.k, s.inc.kappa, s.geom.d, n);
            if (z.imag() != 0.0) continue;
            f += std::norm(amp == &s.rayleigh_up && n == 0 ? a + 1.0 : a) * z.real() / s.inc.zeta.real();
        }
    return f;
}

Outcome conservation() {
    double worst = 0.0;
    for (double eta : {0.3, 0.5, 0.7})
        for (int i = 0; i < 100; ++i)
            for (int j = 0; j < 50; ++j) {
                const double k = 0.05 + 20.0 * i / 99.0;
                const double th = 85.0 * j / 49.0 * pi / 180.0;
                const auto rt = h1::effective_rt(k, th, eta);
                worst = std::max(worst, std::abs(std::norm(rt.R) + std::norm(rt.T) - 1.0));
            }
    return {worst <= 1e-12, fmt("max | |R0|^2+|T0|^2-1 | = %.3e", worst)};
}

Outcome anomalies() {
    double wt = 0.0, wr = 0.0;
    for (double eta : {0.3, 0.5, 0.7}) {
        for (int m = 1; m <= 3; ++m)
            for (double deg : {0.0, 20.0, 45.0})
                wt = std::max(wt, std::abs(std::abs(h1::effective_rt(m * pi, deg * pi / 180, eta).T) - 1.0));
        for (double k : {0.3, 1.0, 2.5, 7.0}) wr = std::max(wr, std::abs(h1::effective_rt(k, std::acos(eta), eta).R));
    }
    return {wt <= 1e-12 && wr <= 1e-12, fmt("max ||T0|-1| = %.3e", wt) + fmt(", max |R0| at cos(theta)=eta = %.3e", wr)};
}

struct OracleRun {
    std::vector<double> err, flux;
};

const OracleRun& oracle() {
    static const OracleRun r = [] {
        OracleRun o;
        const auto inc = Incidence::from_angle(1.0, 0.0);
        const auto rt0 = h1::effective_rt(1.0, 0.0, 0.5);
        for (double eps : {1e-2, 5e-3, 2.5e-3}) {
            const auto s = bie::direct_solve(inc, Geometry::from_eps_eta(eps, 0.5), {}, {64});
            o.err.push_back(std::max(std::abs(s.R - rt0.R), std::abs(s.T - rt0.T)));
            o.flux.push_back(flux(s));
        }
        return o;
    }();
    return r;
}

Outcome oracle_rate() {
    const auto& o = oracle();
    const double r1 = o.err[0] / o.err[1], r2 = o.err[1] / o.err[2];
    const bool ok = std::abs(r1 - 2.0) <= 0.4 && std::abs(r2 - 2.0) <= 0.4;
    return {ok, fmt("errors %.3e", o.err[0]) + fmt(" %.3e", o.err[1]) + fmt(" %.3e", o.err[2]) +
                    fmt("; ratios %.3f", r1) + fmt(" %.3f", r2)};
}

Outcome oracle_flux() {
    double worst = 0.0;
    for (double f : oracle().flux) worst = std::max(worst, std::abs(f - 1.0));
    return {worst <= 1e-6, fmt("max ||R|^2+|T|^2-1| = %.3e", worst)};
}

Outcome dispersion() {
    const double eta = 0.5;
    double worst = 0.0;
    int roots = 0, out_of_range = 0;
    bool order_ok = true, light_ok = true, band_ok = true, limit_ok = true, range_ok = true;
    for (auto b : {Branch::Plus, Branch::Minus})
        for (double kappa : {1.0, 2.0, 5.0, 20.0}) {
            double prev = -1.0;
            for (int m = 0; m <= 2; ++m) {
                const double lo = (b == Branch::Plus ? m : m + 1) * pi;
                const double floor_val = m % 2 == 0 ? lo : lo + pi;
                try {
                    const auto dp = h1::dispersion_root(b, m, kappa, eta);
                    ++roots;
                    worst = std::max(worst, std::abs(h1::phi_branch(b, dp.k0, eta) - kappa));
                    light_ok &= dp.k0 <= kappa;
                    band_ok &= dp.k0 >= lo && dp.k0 < lo + pi;
                    order_ok &= dp.k0 > prev;
                    range_ok &= kappa > floor_val;
                    prev = dp.k0;
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::OutOfRange) throw;
                    ++out_of_range;
                    range_ok &= kappa <= floor_val;
                }
            }
        }
    // Large-|kappa| limits: increasing bands approach their upper pole, decreasing bands their lower one.
    double worst_lim = 0.0;
    for (auto b : {Branch::Plus, Branch::Minus})
        for (int m = 0; m <= 2; ++m) {
            const double lo = (b == Branch::Plus ? m : m + 1) * pi;
            const double target = m % 2 == 0 ? lo + pi : lo;
            const double k0 = h1::dispersion_root(b, m, 1e3, eta).k0;
            worst_lim = std::max(worst_lim, std::abs(k0 - target));
        }
    limit_ok = worst_lim < 1e-3;
    const bool ok = worst < 1e-12 && order_ok && light_ok && band_ok && range_ok && limit_ok;
    std::string d = std::to_string(roots) + " roots, " + std::to_string(out_of_range) + " OutOfRange" +
                    fmt("; max residual %.3e", worst) + (order_ok ? "; ordered" : "; ORDER VIOLATED") +
                    (light_ok ? "; below light line" : "; LIGHT LINE VIOLATED") +
                    (band_ok && range_ok ? "" : "; BAND VIOLATED") + fmt("; max |k0 - limit| at kappa=1e3: %.3e", worst_lim);
    return {ok, d};
}

Outcome correction() {
    const auto bd = h1::dispersion_root(Branch::Plus, 0, 2.0, 0.5);
    std::vector<double> eps{2e-3, 1e-3, 5e-4}, res;
    std::string d;
    for (double e : eps) {
        const auto g = Geometry::from_eps_eta(e, 0.5);
        const auto dp = h1::dispersion_corrected(Branch::Plus, 0, 2.0, g, {64});
        const double kx = h1::dispersion_exact(Branch::Plus, 2.0, g, {64}, bd.k0 - 0.1, std::min(bd.k0 + 0.1, 1.999));
        res.push_back(std::abs(kx - dp.k1));
        d += fmt("%.3e ", res.back());
    }
    const double slope = numerics::loglog_slope(eps, res);
    return {std::abs(slope - 2.0) <= 0.3, "|k_exact - k1| = " + d + fmt("; slope %.3f", slope)};
}

Outcome alpha_props() {
    bool ok = true;
    std::string d;
    const auto g1 = Geometry::from_eps_eta(0.02, 0.5);
    const auto g2 = Geometry::from_eps_d(1e-4, 1.0);
    for (auto [reg, g, inc] : {std::tuple{Regime::H1, g1, Incidence::from_angle(1.0, 0.3)},
                               std::tuple{Regime::H2, g2, Incidence::from_k_kappa(1e-3, 0.0)}}) {
        const cplx a = bie::alpha_complex(reg, inc, g, {64});
        ok &= a.real() < 0.0 && std::abs(a.imag()) < 1e-9 * std::abs(a.real());
        d += std::string(to_string(reg)) + fmt(" alpha=%.6f", a.real()) + fmt(" (|Im|=%.1e); ", std::abs(a.imag()));
    }
    const double a0 = bie::alpha(Regime::H2, Incidence::from_k_kappa(1e-3, 0.0), g2, {64});
    const double a1 = bie::alpha(Regime::H2, Incidence::from_k_kappa(1e-2, 5e-3), g2, {64});
    ok &= std::abs(a0 - a1) < 1e-6;
    d += fmt("H2 variation %.2e; ", std::abs(a0 - a1));
    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    int neg = 0;
    for (auto [reg, g, inc] : {std::tuple{Regime::H1, g1, Incidence::from_angle(1.0, 0.0)},
                               std::tuple{Regime::H2, g2, Incidence::from_k_kappa(1e-3, 0.0)}}) {
        const auto K = bie::assemble_K(reg, inc, g, bie::ApertureBasis{32});
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd c(32);
            for (int j = 0; j < 32; ++j) c(j) = nd(rng) / (1.0 + j);
            const cplx v = (c.transpose().cast<cplx>() * K * c.cast<cplx>())(0);
            neg += v.real() < 0.0;
        }
    }
    ok &= neg == 100;
    d += std::to_string(neg) + "/100 random quadratic forms negative";
    return {ok, d};
}

Outcome slit_profile() {
    const double eps = 1e-4;
    bool ok = true;
    std::string d;
    for (double sigma : {0.25, 0.5, 0.75}) {
        const auto g = Geometry::from_eps_d(eps, 1.0);
        const auto inc = Incidence::from_angle(std::pow(eps, sigma), 0.0);
        const auto r = h2::p_q_h2(inc, g, {64});
        std::vector<double> x, y;
        for (int i = 0; i <= 30; ++i) {
            x.push_back(0.2 + 0.6 * i / 30.0);
            y.push_back(h2::u0_profile(x.back(), inc.k, r).real());
        }
        const double s = numerics::fit_slope(x, y);
        const double tol = 5.0 * (std::pow(eps, 2 * sigma) + std::pow(eps, 1 - sigma));
        ok &= std::abs(s - 2.0) <= tol;
        d += fmt("sigma=%.2f: ", sigma) + fmt("slope %.5f", s) + fmt(" (tol %.3f); ", tol);
    }
    return {ok, d};
}

Outcome enhancement() {
    std::vector<double> eps{1e-3, 1e-4, 1e-5, 1e-6};
    bool ok = true;
    std::string d;
    for (auto [sigma, expect] : {std::pair{0.25, -0.25}, std::pair{0.5, -0.5}, std::pair{2.0, -1.0}}) {
        std::vector<double> e;
        for (double ep : eps) {
            const auto g = Geometry::from_eps_d(ep, 1.0);
            const auto inc = Incidence::from_angle(std::pow(ep, sigma), 0.0);
            e.push_back(std::abs(h2::slit_E_field_evaluated(0.5, inc, g, {64})));
        }
        const double s = numerics::loglog_slope(eps, e);
        ok &= std::abs(s - expect) <= 0.1;
        d += fmt("sigma=%.2f ", sigma) + fmt("exponent %.3f; ", s);
    }
    // Fixed slit fraction: d = eps/eta.
    double amax = 0.0, amin = 1e300;
    std::vector<double> a;
    for (double ep : eps) {
        const auto rows = h2::enhancement_vs_period({0.5, ep}, 0.0, {ep / 0.5}, {64});
        a.push_back(rows[0].E1_evaluated);
        amax = std::max(amax, a.back());
        amin = std::min(amin, a.back());
    }
    const double s = numerics::loglog_slope(eps, a);
    const bool bounded = amax < 10.0 && amin > 0.1 && std::abs(s) < 0.1;
    ok &= bounded;
    d += fmt("d=eps/eta: |E1| in [%.3f, ", amin) + fmt("%.3f]", amax) + fmt(", exponent %.3f", s);
    return {ok, d};
}

Outcome aperture_rate() {
    const double sigma = 0.5;
    std::vector<double> eps{4e-3, 2e-3, 1e-3, 5e-4}, up, down, up_l, down_l;
    for (double e : eps) {
        const auto g = Geometry::from_eps_d(e, 1.0);
        const auto inc = Incidence::from_angle(std::pow(e, sigma), 0.0);
        const auto s = bie::direct_solve(inc, g, {}, {64}, 0);
        double mu = 0.0, md = 0.0;
        for (double X : {0.25, 0.5, 0.75}) {
            const auto [a, b] = bie::aperture_traces(s, {}, 64, X);
            mu = std::max(mu, std::abs(a - 2.0));
            md = std::max(md, std::abs(b));
        }
        up.push_back(mu);
        down.push_back(md);
        up_l.push_back(mu / std::abs(std::log(e)));
        down_l.push_back(md / std::abs(std::log(e)));
    }
    const double su = numerics::loglog_slope(eps, up), sd = numerics::loglog_slope(eps, down);
    const double sul = numerics::loglog_slope(eps, up_l), sdl = numerics::loglog_slope(eps, down_l);
    auto in = [](double a, double b) { return std::abs(a - 1.0) <= 0.2 || std::abs(b - 1.0) <= 0.2; };
    return {in(su, sul) && in(sd, sdl), fmt("exponent above %.3f", su) + fmt(" (%.3f after dividing by |ln eps|)", sul) +
                                             fmt(", below %.3f", sd) + fmt(" (%.3f after dividing by |ln eps|)", sdl)};
}

Outcome bound_decay() {
    bool ok = true;
    std::string d;
    const double eta = 0.5;
    for (auto [kappa, b, m] : {std::tuple{2.0, Branch::Plus, 0}, std::tuple{5.0, Branch::Minus, 0},
                               std::tuple{20.0, Branch::Plus, 2}}) {
        const double k = h1::dispersion_root(b, m, kappa, eta).k0;
        std::vector<double> x, y;
        for (int i = 0; i <= 20; ++i) {
            const double x2 = 1.2 + 0.05 * i;
            x.push_back(x2);
            y.push_back(std::log(std::abs(h1::eigenmode_far(kappa, k, h1::Side::Up, {0.3, x2}, eta))));
        }
        const double fit = -numerics::fit_slope(x, y);
        const double s = std::sqrt(kappa * kappa - k * k);
        const double rel = std::abs(fit - s) / s;
        ok &= rel < 1e-3;
        d += fmt("kappa=%.0f: ", kappa) + fmt("rel err %.2e; ", rel);
    }
    return {ok, d};
}

double sup_off_diagonal(const std::function<double(double, double)>& f) {
    double m = 0.0;
    const int n = 24;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double X = (i + 0.5) / n, Y = (j + 0.5) / n;
            if (std::abs(X - Y) < 0.05) continue;
            m = std::max(m, f(X, Y));
        }
    return m;
}

double nominal(const std::string& tag, double e) {
    if (tag == "eps") return e;
    if (tag == "eps^2") return e * e;
    if (tag == "eps^2 ln eps") return e * e * std::abs(std::log(e));
    fail(ErrorCode::InvalidArgument, "unknown order tag " + tag);
}

Outcome kernel_rates() {
    const TruncationPolicy tp;
    const std::vector<double> eps{4e-3, 2e-3, 1e-3, 5e-4};
    bool ok = true;
    std::string d;
    {
        std::vector<double> r, nom;
        for (double e : eps) {
            r.push_back(sup_off_diagonal(
                [&](double X, double Y) { return std::abs(greens::slit_kernel_remainder(X, Y, 1.0, e, tp)); }));
            nom.push_back(e * e);
        }
        const double s = numerics::loglog_slope(eps, r), sn = numerics::loglog_slope(eps, nom);
        ok &= std::abs(s - sn) <= 0.3;
        d += fmt("slit %.3f", s) + fmt(" (nominal %.3f); ", sn);
    }
    for (auto [reg, th] : {std::pair{Regime::H1, 0.0}, std::pair{Regime::H1, 0.4}, std::pair{Regime::H2, 0.0}}) {
        std::vector<double> r, nom;
        std::string tag;
        for (double e : eps) {
            const auto g = reg == Regime::H1 ? Geometry::from_eps_eta(e, 0.5) : Geometry::from_eps_d(e, 1.0);
            const auto inc = Incidence::from_angle(reg == Regime::H1 ? 1.0 : std::sqrt(e), th);
            const auto ks = greens::kernel_split_exterior(reg, inc, g, tp);
            const greens::ExteriorSeries es(inc, g, tp);
            r.push_back(sup_off_diagonal(
                [&](double X, double Y) { return std::abs(es.kernel(X, Y) - ks.beta - ks.rho_at(X, Y)); }));
            nom.push_back(nominal(ks.remainder_order, e));
            tag = ks.remainder_order;
        }
        const double s = numerics::loglog_slope(eps, r), sn = numerics::loglog_slope(eps, nom);
        ok &= std::abs(s - sn) <= 0.3;
        d += std::string(to_string(reg)) + (th == 0.0 ? " normal " : " oblique ") + fmt("%.3f", s) +
             fmt(" (nominal %.3f, ", sn) + tag + "); ";
    }
    return {ok, d};
}

Outcome determinism(const std::string& exe) {
    namespace fs = std::filesystem;
    if (exe.empty()) return {false, "perslit executable path not given"};
    const fs::path dir = fs::temp_directory_path() / ("perslit_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "t.ini");
        f << "[geometry]\neta = 0.5\n\n[scan]\nk_min = 0.5\nk_max = 10\nk_count = 40\n"
             "theta_min = 0\ntheta_max = 60\ntheta_count = 7\n";
    }
    auto run = [&](const std::string& out, int jobs) {
        const std::string cmd = "\"" + exe + "\" transmit --config \"" + (dir / "t.ini").string() + "\" --jobs " +
                                std::to_string(jobs) + " --out \"" + (dir / out).string() + "\"";
        return std::system(cmd.c_str());
    };
    auto slurp = [&](const std::string& n) {
        std::ifstream f(dir / n, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const int c1 = run("a.csv", 1), c2 = run("b.csv", 1), c3 = run("c.csv", 4);
    const std::string a = slurp("a.csv"), b = slurp("b.csv"), c = slurp("c.csv");
    fs::remove_all(dir);
    const bool ok = c1 == 0 && c2 == 0 && c3 == 0 && !a.empty() && a == b && a == c;
    return {ok, std::to_string(a.size()) + " bytes; repeat " + (a == b ? "identical" : "DIFFERENT") + ", --jobs 4 " +
                    (a == c ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string exe = argc > 1 ? argv[1] : "";
    report(1, "energy conservation of the effective slab", conservation);
    report(2, "total transmission anomalies", anomalies);
    report(3, "direct solve converges to effective slab at first order", oracle_rate);
    report(4, "direct solve flux balance", oracle_flux);
    report(5, "dispersion roots", dispersion);
    report(6, "first-order dispersion correction", correction);
    report(7, "alpha sign, reality and invariance", alpha_props);
    report(8, "low-frequency slit profile", slit_profile);
    report(9, "field enhancement exponents", enhancement);
    report(10, "aperture field deviation rate", aperture_rate);
    report(11, "bound-state decay", bound_decay);
    report(12, "kernel expansion remainder rates", kernel_rates);
    report(13, "byte-identical CSV across runs", [&] { return determinism(exe); });
    std::printf("%d of 13 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
