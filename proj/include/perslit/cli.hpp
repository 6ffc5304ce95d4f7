#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "perslit/bie.hpp"
#include "perslit/fieldmap.hpp"
#include "perslit/regime_h1.hpp"
#include "perslit/regime_h2.hpp"

namespace perslit::cli {

enum class Command { Dispersion, Transmit, Enhance, Fields, Oracle, Spp };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::Dispersion: return "dispersion";
        case Command::Transmit: return "transmit";
        case Command::Enhance: return "enhance";
        case Command::Fields: return "fields";
        case Command::Oracle: return "oracle";
        case Command::Spp: return "spp";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    for (auto c : {Command::Dispersion, Command::Transmit, Command::Enhance, Command::Fields, Command::Oracle,
                   Command::Spp})
        if (s == to_string(c)) return c;
    fail(ErrorCode::ValidationError, "unknown command '" + s + "'");
}

// ---------------------------------------------------------------- ini reader

struct IniEntry {
    std::string section, key, value;
    int line = 0, column = 0, value_column = 0;
};

namespace detail {
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
inline std::size_t skip_ws(const std::string& s, std::size_t i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    return i;
}
inline std::size_t rtrim_end(const std::string& s, std::size_t end) {
    while (end > 0 && (s[end - 1] == ' ' || s[end - 1] == '\t')) --end;
    return end;
}
}  // namespace detail

// Flat INI: [section], key = value, '#' or ';' comments (full line or after whitespace).
inline std::vector<IniEntry> parse_ini(const std::string& text) {
    std::vector<IniEntry> out;
    std::string section;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        // strip trailing comment introduced by whitespace + '#'/';'
        std::string s = raw;
        for (std::size_t i = 1; i < s.size(); ++i)
            if ((s[i] == '#' || s[i] == ';') && (s[i - 1] == ' ' || s[i - 1] == '\t')) {
                s.resize(i);
                break;
            }
        const std::size_t b = detail::skip_ws(s, 0);
        const std::size_t e = detail::rtrim_end(s, s.size());
        if (b >= e || s[b] == '#' || s[b] == ';') continue;
        if (s[b] == '[') {
            if (s[e - 1] != ']') throw ParseFailure(lineno, static_cast<int>(e) + 1, "expected ']'");
            section = s.substr(b + 1, e - b - 2);
            for (std::size_t i = 0; i < section.size(); ++i)
                if (!detail::ident_char(section[i]))
                    throw ParseFailure(lineno, static_cast<int>(b + 2 + i), "invalid character in section name");
            if (section.empty()) throw ParseFailure(lineno, static_cast<int>(b) + 2, "empty section name");
            continue;
        }
        const std::size_t eq = s.find('=', b);
        if (eq == std::string::npos || eq >= e) throw ParseFailure(lineno, static_cast<int>(b) + 1, "expected 'key = value'");
        const std::size_t ke = detail::rtrim_end(s, eq);
        if (ke <= b) throw ParseFailure(lineno, static_cast<int>(b) + 1, "empty key");
        for (std::size_t i = b; i < ke; ++i)
            if (!detail::ident_char(s[i])) throw ParseFailure(lineno, static_cast<int>(i) + 1, "invalid character in key");
        const std::size_t vb = detail::skip_ws(s, eq + 1);
        if (vb >= e) throw ParseFailure(lineno, static_cast<int>(eq) + 2, "missing value");
        if (section.empty()) throw ParseFailure(lineno, static_cast<int>(b) + 1, "key outside of any section");
        IniEntry ent{section, s.substr(b, ke - b), s.substr(vb, e - vb), lineno, static_cast<int>(b) + 1,
                     static_cast<int>(vb) + 1};
        const std::string full = ent.section + "." + ent.key;
        if (seen.count(full)) throw ParseFailure(lineno, ent.column, "duplicate key '" + full + "'");
        seen[full] = lineno;
        out.push_back(std::move(ent));
    }
    return out;
}

// ---------------------------------------------------------------- config

enum class Kind { Real, Int, RealList, Text };

inline const std::map<std::string, Kind>& schema() {
    static const std::map<std::string, Kind> s = {
        {"geometry.eps", Kind::Real},     {"geometry.d", Kind::Real},         {"geometry.eta", Kind::Real},
        {"scan.k_min", Kind::Real},       {"scan.k_max", Kind::Real},         {"scan.k_count", Kind::Int},
        {"scan.theta_min", Kind::Real},   {"scan.theta_max", Kind::Real},     {"scan.theta_count", Kind::Int},
        {"scan.k", Kind::Real},           {"scan.theta", Kind::Real},         {"scan.kappa", Kind::RealList},
        {"scan.branch", Kind::Text},      {"scan.band_max", Kind::Int},       {"scan.eps_list", Kind::RealList},
        {"scan.sigma", Kind::RealList},   {"scan.x1_min", Kind::Real},        {"scan.x1_max", Kind::Real},
        {"scan.x1_count", Kind::Int},     {"scan.x2_min", Kind::Real},        {"scan.x2_max", Kind::Real},
        {"scan.x2_count", Kind::Int},     {"scan.omega_min", Kind::Real},     {"scan.omega_max", Kind::Real},
        {"scan.omega_count", Kind::Int},  {"scan.ell", Kind::Real},           {"numerics.n_basis", Kind::Int},
        {"numerics.n_max", Kind::Int},    {"numerics.m_max", Kind::Int},      {"numerics.tol", Kind::Real},
        {"output.format", Kind::Text},    {"output.path", Kind::Text},
    };
    return s;
}

struct RunConfig {
    Command command = Command::Transmit;
    std::optional<double> eps, d, eta;
    std::vector<double> k_grid, theta_grid;  // theta in degrees
    double k = 1.0, theta = 0.0;             // theta in degrees
    std::vector<double> kappa_list, eps_list, sigma_list, omega_grid;
    std::vector<h1::Branch> branches{h1::Branch::Plus, h1::Branch::Minus};
    int band_max = 2;
    fieldmap::GridSpec grid;
    double ell = 1.0;
    bie::ApertureBasis basis;
    TruncationPolicy tp;
    std::string format = "csv";
    std::string out_path;
    std::map<std::string, std::string> echo;  // effective settings, defaults included
    std::string hash;

    Geometry geometry() const {
        Geometry g;
        if (eps && d) g = Geometry::from_eps_d(*eps, *d);
        else if (eps && eta) g = Geometry::from_eps_eta(*eps, *eta);
        else fail(ErrorCode::ValidationError, "geometry needs two of eps, d, eta");
        if (eta && std::abs(g.eta - *eta) > 1e-12 * *eta) fail(ErrorCode::ValidationError, "eta must equal eps/d");
        return g;
    }
    double eta_value() const {
        if (eta) return *eta;
        if (eps && d) return *eps / *d;
        fail(ErrorCode::ValidationError, "missing key geometry.eta");
    }
};

inline std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

namespace detail {
inline double to_real(const IniEntry& e, const std::string& tok, int col) {
    double v = 0.0;
    const char* f = tok.data();
    const char* l = f + tok.size();
    auto r = std::from_chars(f, l, v);
    if (r.ec != std::errc() || r.ptr != l || !std::isfinite(v))
        throw ParseFailure(e.line, col, "invalid number '" + tok + "' for " + e.section + "." + e.key);
    return v;
}
inline long to_int(const IniEntry& e) {
    long v = 0;
    const char* f = e.value.data();
    const char* l = f + e.value.size();
    auto r = std::from_chars(f, l, v);
    if (r.ec != std::errc() || r.ptr != l)
        throw ParseFailure(e.line, e.value_column, "invalid integer '" + e.value + "' for " + e.section + "." + e.key);
    return v;
}
inline std::vector<double> to_list(const IniEntry& e) {
    std::vector<double> v;
    std::size_t start = 0;
    while (start <= e.value.size()) {
        std::size_t comma = e.value.find(',', start);
        if (comma == std::string::npos) comma = e.value.size();
        std::size_t b = skip_ws(e.value, start), en = rtrim_end(e.value, comma);
        if (b >= en) throw ParseFailure(e.line, e.value_column + static_cast<int>(start), "empty list element");
        v.push_back(to_real(e, e.value.substr(b, en - b), e.value_column + static_cast<int>(b)));
        start = comma + 1;
    }
    return v;
}
inline std::vector<double> grid(double a, double b, long n, const std::string& name) {
    if (n < 1) fail(ErrorCode::ValidationError, name + "_count must be >= 1");
    if (n > 1000000) fail(ErrorCode::ValidationError, name + "_count too large");
    if (n > 1 && !(b > a)) fail(ErrorCode::ValidationError, name + "_max must be > " + name + "_min");
    return fieldmap::linspace(a, b, static_cast<int>(n));
}
}  // namespace detail

inline RunConfig parse_config(const std::string& text, Command command) {
    const auto entries = parse_ini(text);
    std::map<std::string, const IniEntry*> kv;
    for (const auto& e : entries) {
        const std::string full = e.section + "." + e.key;
        if (!schema().count(full)) {
            static const std::set<std::string> sections{"geometry", "scan", "numerics", "output"};
            if (!sections.count(e.section)) fail(ErrorCode::ValidationError, "unknown section [" + e.section + "]");
            fail(ErrorCode::ValidationError, "unknown key " + full);
        }
        kv[full] = &e;
    }
    RunConfig c;
    c.command = command;
    std::map<std::string, double> reals;
    std::map<std::string, long> ints;
    std::map<std::string, std::vector<double>> lists;
    std::map<std::string, std::string> texts;
    for (const auto& [name, e] : kv) {
        switch (schema().at(name)) {
            case Kind::Real: reals[name] = detail::to_real(*e, e->value, e->value_column); break;
            case Kind::Int: ints[name] = detail::to_int(*e); break;
            case Kind::RealList: lists[name] = detail::to_list(*e); break;
            case Kind::Text: texts[name] = e->value; break;
        }
    }
    auto need_real = [&](const std::string& n) {
        if (!reals.count(n)) fail(ErrorCode::ValidationError, "missing key " + n);
        return reals[n];
    };
    auto need_int = [&](const std::string& n) {
        if (!ints.count(n)) fail(ErrorCode::ValidationError, "missing key " + n);
        return ints[n];
    };
    auto need_list = [&](const std::string& n) {
        if (!lists.count(n)) fail(ErrorCode::ValidationError, "missing key " + n);
        return lists[n];
    };
    auto real_or = [&](const std::string& n, double dflt) { return reals.count(n) ? reals[n] : dflt; };
    auto int_or = [&](const std::string& n, long dflt) { return ints.count(n) ? ints[n] : dflt; };

    if (reals.count("geometry.eps")) c.eps = reals["geometry.eps"];
    if (reals.count("geometry.d")) c.d = reals["geometry.d"];
    if (reals.count("geometry.eta")) c.eta = reals["geometry.eta"];
    if (c.eps && !(*c.eps > 0.0)) fail(ErrorCode::ValidationError, "eps must be > 0");
    if (c.d && !(*c.d > 0.0)) fail(ErrorCode::ValidationError, "d must be > 0");
    if (c.eta && !(*c.eta > 0.0 && *c.eta < 1.0)) fail(ErrorCode::ValidationError, "eta must be in (0,1)");
    if (c.eps && c.d && !(*c.eps < *c.d)) fail(ErrorCode::ValidationError, "eps must be < d");

    c.basis.n_basis = static_cast<int>(int_or("numerics.n_basis", 64));
    c.tp.n_max = static_cast<int>(int_or("numerics.n_max", 200));
    c.tp.m_max = static_cast<int>(int_or("numerics.m_max", 64));
    c.tp.tol = real_or("numerics.tol", 1e-10);
    c.basis.validate();
    c.tp.validate();
    if (c.basis.n_basis > 512) fail(ErrorCode::ValidationError, "n_basis must be <= 512");

    if (texts.count("output.format")) c.format = texts["output.format"];
    if (c.format != "csv" && c.format != "json") fail(ErrorCode::ValidationError, "output.format must be csv or json");
    if (texts.count("output.path")) c.out_path = texts["output.path"];

    auto check_theta = [](double t, const std::string& key) {
        if (!(std::abs(t) < 90.0) || std::cos(t * pi / 180.0) < 1e-6)
            fail(ErrorCode::ValidationError, key + " must satisfy |theta| < 90 degrees");
    };
    auto branches_from = [&]() {
        const std::string b = texts.count("scan.branch") ? texts["scan.branch"] : "both";
        if (b == "plus") c.branches = {h1::Branch::Plus};
        else if (b == "minus") c.branches = {h1::Branch::Minus};
        else if (b == "both") c.branches = {h1::Branch::Plus, h1::Branch::Minus};
        else fail(ErrorCode::ValidationError, "scan.branch must be plus, minus or both");
    };

    switch (command) {
        case Command::Transmit: {
            const double eta = c.eta_value();
            if (!(eta > 0.0 && eta < 1.0)) fail(ErrorCode::ValidationError, "eta must be in (0,1)");
            c.k_grid = detail::grid(need_real("scan.k_min"), need_real("scan.k_max"), need_int("scan.k_count"), "scan.k");
            c.theta_grid = detail::grid(need_real("scan.theta_min"), need_real("scan.theta_max"),
                                        need_int("scan.theta_count"), "scan.theta");
            for (double k : c.k_grid)
                if (!(k > 0.0)) fail(ErrorCode::ValidationError, "scan.k_min must be > 0");
            for (double t : c.theta_grid) check_theta(t, "scan.theta");
            break;
        }
        case Command::Dispersion: {
            c.eta_value();
            c.kappa_list = need_list("scan.kappa");
            c.band_max = static_cast<int>(int_or("scan.band_max", 2));
            if (c.band_max < 0) fail(ErrorCode::ValidationError, "scan.band_max must be >= 0");
            branches_from();
            if (c.eps) c.geometry().validate();
            break;
        }
        case Command::Enhance: {
            if (!c.d) fail(ErrorCode::ValidationError, "missing key geometry.d");
            c.eps_list = need_list("scan.eps_list");
            c.sigma_list = need_list("scan.sigma");
            c.theta = real_or("scan.theta", 0.0);
            check_theta(c.theta, "scan.theta");
            for (double s : c.sigma_list) {
                if (!(s > 0.0)) fail(ErrorCode::ValidationError, "scan.sigma must be > 0");
                if (std::abs(s - 1.0) < 0.05)
                    fail(ErrorCode::ValidationError, "scan.sigma must satisfy |sigma - 1| >= 0.05 (crossover excluded)");
            }
            for (double e : c.eps_list) {
                if (!(e > 0.0 && e < 1.0)) fail(ErrorCode::ValidationError, "scan.eps_list values must be in (0,1)");
                if (!(e < *c.d)) fail(ErrorCode::ValidationError, "eps must be < d");
            }
            break;
        }
        case Command::Fields: {
            const Geometry g = c.geometry();
            g.validate();
            c.k = need_real("scan.k");
            c.theta = real_or("scan.theta", 0.0);
            if (!(c.k > 0.0)) fail(ErrorCode::ValidationError, "scan.k must be > 0");
            check_theta(c.theta, "scan.theta");
            c.grid.x1_min = real_or("scan.x1_min", 0.0);
            c.grid.x1_max = real_or("scan.x1_max", g.d);
            c.grid.n1 = static_cast<int>(int_or("scan.x1_count", 41));
            c.grid.x2_min = real_or("scan.x2_min", -0.5);
            c.grid.x2_max = real_or("scan.x2_max", 1.5);
            c.grid.n2 = static_cast<int>(int_or("scan.x2_count", 41));
            if (c.grid.n1 < 1 || c.grid.n2 < 1) fail(ErrorCode::ValidationError, "scan.x1_count and scan.x2_count must be >= 1");
            break;
        }
        case Command::Oracle: {
            const double eta = c.eta_value();
            c.k = need_real("scan.k");
            c.theta = real_or("scan.theta", 0.0);
            if (!(c.k > 0.0)) fail(ErrorCode::ValidationError, "scan.k must be > 0");
            check_theta(c.theta, "scan.theta");
            c.eps_list = lists.count("scan.eps_list") ? lists["scan.eps_list"] : std::vector<double>{1e-2, 5e-3, 2.5e-3};
            for (double e : c.eps_list)
                if (!(e > 0.0 && c.k * e < 0.5)) fail(ErrorCode::ValidationError, "scan.eps_list values must satisfy 0 < k*eps < 0.5");
            (void)eta;
            break;
        }
        case Command::Spp: {
            c.omega_grid = detail::grid(need_real("scan.omega_min"), need_real("scan.omega_max"),
                                        need_int("scan.omega_count"), "scan.omega");
            for (double w : c.omega_grid)
                if (!(w > 0.0 && w < 1.0)) fail(ErrorCode::ValidationError, "scan.omega values must be in (0,1)");
            c.ell = need_real("scan.ell");
            if (!(c.ell > 0.0)) fail(ErrorCode::ValidationError, "scan.ell must be > 0");
            branches_from();
            break;
        }
    }

    // Effective settings: everything given plus numeric defaults.
    for (const auto& [n, v] : reals) c.echo[n] = fmt_num(v);
    for (const auto& [n, v] : ints) c.echo[n] = std::to_string(v);
    for (const auto& [n, v] : texts) c.echo[n] = v;
    for (const auto& [n, v] : lists) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_num(v[i]);
        c.echo[n] = s;
    }
    c.echo["numerics.n_basis"] = std::to_string(c.basis.n_basis);
    c.echo["numerics.n_max"] = std::to_string(c.tp.n_max);
    c.echo["numerics.m_max"] = std::to_string(c.tp.m_max);
    c.echo["numerics.tol"] = fmt_num(c.tp.tol);
    c.echo["output.format"] = c.format;
    c.echo.erase("output.path");
    std::string canon = std::string("command=") + to_string(command) + "\n";
    for (const auto& [n, v] : c.echo) canon += n + "=" + v + "\n";
    c.hash = sha256_hex(canon);
    return c;
}

inline RunConfig load_config(const std::string& path, Command command) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), command);
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

struct RunReport {
    long long rows_written = 0;
    std::vector<std::string> warnings;
    std::map<std::string, double> timing;
};

inline std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, double>) return fmt_num(v);
            else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
            else {
                if (v.find_first_of(",\"\n") == std::string::npos) return v;
                std::string q = "\"";
                for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
                return q + "\"";
            }
        },
        c);
}

inline void write_csv(std::ostream& os, const Table& t, const RunConfig& cfg) {
    os << "# perslit " << to_string(cfg.command) << " config_sha256=" << cfg.hash;
    for (const auto& [n, v] : cfg.echo)
        if (n.rfind("numerics.", 0) == 0) os << ' ' << n.substr(9) << '=' << v;
    os << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
        os << '\n';
    }
}

inline void write_json(std::ostream& os, const Table& t) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json rec = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < r.size(); ++i)
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::monostate>) rec[t.columns[i]] = nullptr;
                    else rec[t.columns[i]] = v;
                },
                r[i]);
        arr.push_back(std::move(rec));
    }
    os << arr.dump(1) << '\n';
}

// Runs f(i) for i in [0, n) on `jobs` threads; results come back in index order.
template <class R, class F>
std::vector<R> parallel_map(std::size_t n, int jobs, F f) {
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errs(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = f(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    const int nt = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

struct RowBlock {
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> warnings;
};

namespace detail {
inline Cell num(double v) { return v; }
inline Cell flag(bool b) { return static_cast<long long>(b ? 1 : 0); }
inline std::string coord(const std::string& s) { return "[" + s + "] "; }
}  // namespace detail

inline Table run_transmit(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"k", "theta", "re_R", "im_R", "re_T", "im_T", "absR2", "absT2", "flag_total_transmission"};
    const double eta = c.eta_value();
    auto blocks = parallel_map<RowBlock>(c.k_grid.size(), jobs, [&](std::size_t i) {
        RowBlock b;
        for (double th : c.theta_grid) {
            const auto r = h1::scan_point(eta, c.k_grid[i], th * pi / 180.0);
            b.rows.push_back({r.k, th, r.R.real(), r.R.imag(), r.T.real(), r.T.imag(), r.absR2, r.absT2,
                              detail::flag(r.total_transmission)});
        }
        return b;
    });
    for (auto& b : blocks)
        for (auto& r : b.rows) t.rows.push_back(std::move(r));
    (void)rep;
    return t;
}

inline Table run_dispersion(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"branch", "m", "kappa", "k0", "k1", "residual", "status"};
    struct Task {
        h1::Branch b;
        int m;
        double kappa;
    };
    std::vector<Task> tasks;
    for (auto b : c.branches)
        for (int m = 0; m <= c.band_max; ++m)
            for (double kap : c.kappa_list) tasks.push_back({b, m, kap});
    const double eta = c.eta_value();
    auto blocks = parallel_map<RowBlock>(tasks.size(), jobs, [&](std::size_t i) {
        const auto& tk = tasks[i];
        RowBlock rb;
        const std::string where = detail::coord(std::string("branch=") + h1::to_string(tk.b) + " m=" +
                                                std::to_string(tk.m) + " kappa=" + fmt_num(tk.kappa));
        std::vector<Cell> row{std::string(h1::to_string(tk.b)), static_cast<long long>(tk.m), tk.kappa};
        try {
            const auto dp = h1::dispersion_root(tk.b, tk.m, tk.kappa, eta);
            Cell k1 = std::monostate{};
            std::string status = "ok";
            if (c.eps) {
                try {
                    k1 = h1::dispersion_corrected(tk.b, tk.m, tk.kappa, c.geometry(), c.basis).k1;
                } catch (const Error& e) {
                    status = perslit::to_string(e.code());
                    rb.warnings.push_back(where + e.what());
                }
            }
            row.insert(row.end(), {dp.k0, k1, dp.residual, status});
        } catch (const Error& e) {
            row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{},
                                   std::string(perslit::to_string(e.code()))});
            rb.warnings.push_back(where + e.what());
        }
        rb.rows.push_back(std::move(row));
        return rb;
    });
    for (auto& b : blocks) {
        for (auto& r : b.rows) t.rows.push_back(std::move(r));
        for (auto& w : b.warnings) rep.warnings.push_back(std::move(w));
    }
    return t;
}

inline Table run_enhance(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"sigma", "eps", "k", "d", "theta", "E1_leading_abs", "E1_evaluated_abs", "u0_slope", "order_tag", "status"};
    std::vector<std::pair<double, double>> tasks;
    for (double s : c.sigma_list)
        for (double e : c.eps_list) tasks.push_back({s, e});
    auto blocks = parallel_map<RowBlock>(tasks.size(), jobs, [&](std::size_t i) {
        const auto [sigma, eps] = tasks[i];
        const h2::FrequencyScaling fs{sigma, eps};
        const double th = c.theta * pi / 180.0;
        RowBlock rb;
        std::vector<Cell> row{sigma, eps, fs.k(), *c.d, c.theta};
        try {
            const auto rep2 = h2::slit_E_field(fs, *c.d, th);
            const Geometry g = Geometry::from_eps_d(eps, *c.d);
            const auto inc = Incidence::from_angle(fs.k(), th);
            const auto pq = h2::p_q_h2(inc, g, c.basis, c.tp);
            std::vector<double> xs, ys;
            for (int j = 0; j <= 12; ++j) {
                const double x = 0.2 + 0.05 * j;
                xs.push_back(x);
                ys.push_back(h2::u0_profile(x, fs.k(), pq).real());
            }
            row.insert(row.end(), {std::abs(rep2.E1_leading), std::abs(h2::E1_profile(0.5, fs.k(), pq)),
                                   numerics::fit_slope(xs, ys), rep2.order_tag, std::string("ok")});
        } catch (const Error& e) {
            row.insert(row.end(), {std::monostate{}, std::monostate{}, std::monostate{}, std::monostate{},
                                   std::string(perslit::to_string(e.code()))});
            rb.warnings.push_back(detail::coord("sigma=" + fmt_num(sigma) + " eps=" + fmt_num(eps)) + e.what());
        }
        rb.rows.push_back(std::move(row));
        return rb;
    });
    for (auto& b : blocks) {
        for (auto& r : b.rows) t.rows.push_back(std::move(r));
        for (auto& w : b.warnings) rep.warnings.push_back(std::move(w));
    }
    return t;
}

inline Table run_fields(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"x1", "x2", "region", "re_u", "im_u"};
    const Geometry g = c.geometry();
    const auto inc = Incidence::from_angle(c.k, c.theta * pi / 180.0);
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = bie::direct_solve(inc, g, c.tp, c.basis);
    rep.timing["solve"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fieldmap::FieldEvaluator ev(sol, c.tp);
    const auto x1s = fieldmap::linspace(c.grid.x1_min, c.grid.x1_max, c.grid.n1);
    const auto x2s = fieldmap::linspace(c.grid.x2_min, c.grid.x2_max, c.grid.n2);
    double hmin = std::numeric_limits<double>::infinity();
    for (double y : x2s) {
        if (y > 1.0) hmin = std::min(hmin, y - 1.0);
        if (y < 0.0) hmin = std::min(hmin, -y);
    }
    if (std::isfinite(hmin)) ev.prepare(hmin);
    auto blocks = parallel_map<RowBlock>(x2s.size(), jobs, [&](std::size_t i) {
        RowBlock rb;
        for (double x1 : x1s) {
            const Point p{x1, x2s[i]};
            const auto r = ev.region(p);
            if (r == fieldmap::Region::Pec) {
                rb.rows.push_back({x1, x2s[i], std::string(fieldmap::to_string(r)), std::monostate{}, std::monostate{}});
            } else {
                const cplx u = ev(p);
                rb.rows.push_back({x1, x2s[i], std::string(fieldmap::to_string(r)), u.real(), u.imag()});
            }
        }
        return rb;
    });
    for (auto& b : blocks)
        for (auto& r : b.rows) t.rows.push_back(std::move(r));
    return t;
}

inline double propagating_flux(const bie::ScatterSolution& s) {
    double flux = 0.0;
    const double z0 = s.inc.zeta.real();
    for (const auto* amp : {&s.rayleigh_up, &s.rayleigh_down})
        for (const auto& [n, a] : *amp) {
            const cplx z = greens::zeta_n(s.inc.k, s.inc.kappa, s.geom.d, n);
            if (z.imag() != 0.0) continue;
            const cplx v = (amp == &s.rayleigh_up && n == 0) ? a + 1.0 : a;
            flux += std::norm(v) * z.real() / z0;
        }
    return flux;
}

inline Table run_oracle(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"eps", "d", "re_R", "im_R", "re_T", "im_T", "re_R0", "im_R0", "re_T0", "im_T0",
                 "err_R", "err_T", "flux", "slope_err_R", "slope_err_T"};
    const double eta = c.eta_value();
    const double th = c.theta * pi / 180.0;
    const auto rt0 = h1::effective_rt(c.k, th, eta);
    struct Res {
        bie::ScatterSolution s;
        double flux;
    };
    auto res = parallel_map<Res>(c.eps_list.size(), jobs, [&](std::size_t i) {
        const Geometry g = Geometry::from_eps_eta(c.eps_list[i], eta);
        auto s = bie::direct_solve(Incidence::from_angle(c.k, th), g, c.tp, c.basis);
        return Res{s, propagating_flux(s)};
    });
    std::vector<double> er, et;
    for (const auto& r : res) {
        er.push_back(std::abs(r.s.R - rt0.R));
        et.push_back(std::abs(r.s.T - rt0.T));
    }
    Cell sr = std::monostate{}, st = std::monostate{};
    if (c.eps_list.size() >= 2) {
        sr = numerics::loglog_slope(c.eps_list, er);
        st = numerics::loglog_slope(c.eps_list, et);
    } else {
        rep.warnings.push_back("[oracle] a single eps value gives no convergence slope");
    }
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& s = res[i].s;
        t.rows.push_back({c.eps_list[i], s.geom.d, s.R.real(), s.R.imag(), s.T.real(), s.T.imag(), rt0.R.real(),
                          rt0.R.imag(), rt0.T.real(), rt0.T.imag(), er[i], et[i], res[i].flux, sr, st});
    }
    return t;
}

inline Table run_spp(const RunConfig& c, int jobs, RunReport& rep) {
    Table t;
    t.columns = {"branch", "omega_over_omegap", "kappa", "status"};
    std::vector<std::pair<h1::Branch, double>> tasks;
    for (auto b : c.branches)
        for (double w : c.omega_grid) tasks.push_back({b, w});
    auto blocks = parallel_map<RowBlock>(tasks.size(), jobs, [&](std::size_t i) {
        const auto [b, w] = tasks[i];
        RowBlock rb;
        try {
            rb.rows.push_back({std::string(h1::to_string(b)), w, h1::spp_metal_dispersion(w, c.ell, b), std::string("ok")});
        } catch (const Error& e) {
            rb.rows.push_back({std::string(h1::to_string(b)), w, std::monostate{}, std::string(perslit::to_string(e.code()))});
            rb.warnings.push_back(detail::coord(std::string("branch=") + h1::to_string(b) + " omega=" + fmt_num(w)) + e.what());
        }
        return rb;
    });
    for (auto& b : blocks) {
        for (auto& r : b.rows) t.rows.push_back(std::move(r));
        for (auto& w : b.warnings) rep.warnings.push_back(std::move(w));
    }
    return t;
}

inline Table compute(const RunConfig& c, int jobs, RunReport& rep) {
    switch (c.command) {
        case Command::Transmit: return run_transmit(c, jobs, rep);
        case Command::Dispersion: return run_dispersion(c, jobs, rep);
        case Command::Enhance: return run_enhance(c, jobs, rep);
        case Command::Fields: return run_fields(c, jobs, rep);
        case Command::Oracle: return run_oracle(c, jobs, rep);
        case Command::Spp: return run_spp(c, jobs, rep);
    }
    return {};
}

// Computes the table and writes it to out_path (stdout when empty).
inline RunReport run(const RunConfig& c, int jobs, const std::string& out_path) {
    RunReport rep;
    const auto t0 = std::chrono::steady_clock::now();
    const Table t = compute(c, jobs, rep);
    const auto t1 = std::chrono::steady_clock::now();
    rep.timing["compute"] = std::chrono::duration<double>(t1 - t0).count();
    std::ostringstream os;
    if (c.format == "json") write_json(os, t);
    else write_csv(os, t, c);
    if (out_path.empty()) {
        std::cout << os.str();
        std::cout.flush();
        if (!std::cout) fail(ErrorCode::IoError, "failed writing to stdout");
    } else {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::IoError, "cannot open output '" + out_path + "'");
        f << os.str();
        f.close();
        if (!f) fail(ErrorCode::IoError, "failed writing '" + out_path + "'");
    }
    rep.rows_written = static_cast<long long>(t.rows.size());
    rep.timing["write"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    for (const auto& w : rep.warnings) spdlog::warn("{}", w);
    return rep;
}

inline int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ParseError:
        case ErrorCode::ValidationError: return 2;
        case ErrorCode::IoError: return 1;
        default: return 3;
    }
}

}  // namespace perslit::cli
