#pragma once

/// Line-based scenario configuration: `section.key = value` with `#` comments.
/// Keys are fixed; unknown keys are rejected with their line number.  Values
/// with several fields (centers, modes) are whitespace separated.

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "apmcf/ambient.hpp"
#include "apmcf/flow.hpp"

namespace apmcf {

struct ScenarioConfig {
    struct Mode {
        int l = 0;
        int m = 0;
        double amplitude = 0.0;
        bool operator==(const Mode&) const = default;
    };

    // ambient
    AmbientKind kind = AmbientKind::Euclidean;
    double mass = 1.0;
    PerturbationSpec::Family pert_family = PerturbationSpec::Family::Zero;
    double beta = 0.0;
    double r_cut = 1.0;
    double r_inner = -1.0;  // < 0: auto (radius / 10 for Schwarzschild, else 0)
    double band_c = 10.0;

    // initial surface
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
    std::vector<Mode> modes;

    // grid
    int n_theta = 48;
    int n_phi = -1;  // < 0: auto (2 * n_theta)

    // flow
    GlobalTerm global_term = GlobalTerm::H0;
    double cfl = 0.2;
    double t_end = 10.0;
    long max_steps = 5'000'000;
    double stop_umbilic_tol = 1e-9;

    // analysis
    double fit_window = 0.6;
    double fit_floor = 1e-13;
    double B1 = 2.0, B2 = 100.0, B3 = 100.0;

    // output
    std::string directory = "out";
    int cadence = 10;

    int resolved_n_phi() const { return n_phi < 0 ? 2 * n_theta : n_phi; }
    double resolved_r_inner() const {
        if (r_inner >= 0.0) return r_inner;
        return kind == AmbientKind::Schwarzschild ? radius / 10.0 : 0.0;
    }

    bool operator==(const ScenarioConfig& o) const {
        return kind == o.kind && mass == o.mass && pert_family == o.pert_family &&
               beta == o.beta && r_cut == o.r_cut && r_inner == o.r_inner &&
               band_c == o.band_c && center == o.center && radius == o.radius &&
               modes == o.modes && n_theta == o.n_theta && n_phi == o.n_phi &&
               global_term == o.global_term && cfl == o.cfl && t_end == o.t_end &&
               max_steps == o.max_steps && stop_umbilic_tol == o.stop_umbilic_tol &&
               fit_window == o.fit_window && fit_floor == o.fit_floor && B1 == o.B1 &&
               B2 == o.B2 && B3 == o.B3 && directory == o.directory && cadence == o.cadence;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream is{std::string(s)};
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

inline bool parse_int(std::string_view s, long& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

}  // namespace detail

/// Parse and fully validate a scenario.  Throws ParseError (malformed lines),
/// UnknownKeyError (unrecognized section.key), or ValidationError (invariant
/// breach); each carries one message per offending line.
inline ScenarioConfig parse_config(std::string_view text) {
    using detail::parse_double;
    using detail::parse_int;

    ScenarioConfig cfg;
    std::vector<std::string> parse_issues, unknown_issues, validation_issues;

    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                             : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;

        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            parse_issues.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string val{detail::trim(line.substr(eq + 1))};
        if (key.empty() || val.empty()) {
            parse_issues.push_back("line " + std::to_string(lineno) + ": empty key or value");
            continue;
        }

        auto bad_value = [&] {
            parse_issues.push_back("line " + std::to_string(lineno) + ": bad value for " + key);
        };
        auto getd = [&](double& dst) {
            double d;
            if (parse_double(val, d))
                dst = d;
            else
                bad_value();
        };
        auto geti = [&](int& dst) {
            long l;
            if (parse_int(val, l))
                dst = static_cast<int>(l);
            else
                bad_value();
        };

        if (key == "ambient.kind") {
            if (val == "euclidean")
                cfg.kind = AmbientKind::Euclidean;
            else if (val == "sphere")
                cfg.kind = AmbientKind::SphereChart;
            else if (val == "hyperbolic")
                cfg.kind = AmbientKind::HyperbolicChart;
            else if (val == "schwarzschild")
                cfg.kind = AmbientKind::Schwarzschild;
            else
                bad_value();
        } else if (key == "ambient.m") {
            getd(cfg.mass);
        } else if (key == "ambient.perturbation") {
            if (val == "zero")
                cfg.pert_family = PerturbationSpec::Family::Zero;
            else if (val == "axial_deviatoric")
                cfg.pert_family = PerturbationSpec::Family::AxialDeviatoric;
            else
                bad_value();
        } else if (key == "ambient.beta") {
            getd(cfg.beta);
        } else if (key == "ambient.r_cut") {
            getd(cfg.r_cut);
        } else if (key == "ambient.r_inner") {
            getd(cfg.r_inner);
        } else if (key == "ambient.band_c") {
            getd(cfg.band_c);
        } else if (key == "surface.center") {
            const auto parts = detail::split_ws(val);
            double x, y, z;
            if (parts.size() == 3 && parse_double(parts[0], x) && parse_double(parts[1], y) &&
                parse_double(parts[2], z))
                cfg.center = {x, y, z};
            else
                bad_value();
        } else if (key == "surface.radius") {
            getd(cfg.radius);
        } else if (key == "surface.mode") {
            const auto parts = detail::split_ws(val);
            long l, m;
            double a;
            if (parts.size() == 3 && parse_int(parts[0], l) && parse_int(parts[1], m) &&
                parse_double(parts[2], a))
                cfg.modes.push_back({static_cast<int>(l), static_cast<int>(m), a});
            else
                bad_value();
        } else if (key == "grid.n_theta") {
            geti(cfg.n_theta);
        } else if (key == "grid.n_phi") {
            geti(cfg.n_phi);
        } else if (key == "flow.global_term") {
            if (val == "h0")
                cfg.global_term = GlobalTerm::H0;
            else if (val == "h")
                cfg.global_term = GlobalTerm::H;
            else if (val == "h1")
                cfg.global_term = GlobalTerm::H1;
            else
                bad_value();
        } else if (key == "flow.cfl") {
            getd(cfg.cfl);
        } else if (key == "flow.t_end") {
            getd(cfg.t_end);
        } else if (key == "flow.max_steps") {
            long l;
            if (parse_int(val, l))
                cfg.max_steps = l;
            else
                bad_value();
        } else if (key == "flow.stop_umbilic_tol") {
            getd(cfg.stop_umbilic_tol);
        } else if (key == "analysis.fit_window") {
            getd(cfg.fit_window);
        } else if (key == "analysis.fit_floor") {
            getd(cfg.fit_floor);
        } else if (key == "analysis.B1") {
            getd(cfg.B1);
        } else if (key == "analysis.B2") {
            getd(cfg.B2);
        } else if (key == "analysis.B3") {
            getd(cfg.B3);
        } else if (key == "output.directory") {
            cfg.directory = val;
        } else if (key == "output.cadence") {
            geti(cfg.cadence);
        } else {
            unknown_issues.push_back("line " + std::to_string(lineno) + ": unknown key " + key);
        }
    }

    if (!parse_issues.empty()) throw ParseError("malformed configuration", parse_issues);
    if (!unknown_issues.empty())
        throw UnknownKeyError("unknown configuration keys", unknown_issues);

    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) validation_issues.push_back(msg);
    };
    check(cfg.n_theta >= 16, "grid.n_theta must be >= 16");
    check(cfg.resolved_n_phi() >= 2 * cfg.n_theta, "grid.n_phi must be >= 2 * n_theta");
    check(cfg.resolved_n_phi() % 2 == 0, "grid.n_phi must be even");
    check(cfg.radius > 0.0, "surface.radius must be positive");
    check(cfg.cfl > 0.0 && cfg.cfl <= 0.5, "flow.cfl must lie in (0, 0.5]");
    check(cfg.t_end >= 0.0, "flow.t_end must be nonnegative");
    check(cfg.max_steps >= 0, "flow.max_steps must be nonnegative");
    check(cfg.stop_umbilic_tol > 0.0, "flow.stop_umbilic_tol must be positive");
    check(cfg.cadence >= 1, "output.cadence must be >= 1");
    check(cfg.fit_window > 0.0 && cfg.fit_window <= 1.0, "analysis.fit_window must be in (0, 1]");
    check(cfg.band_c > 0.0, "ambient.band_c must be positive");
    for (const auto& m : cfg.modes) {
        check(m.l >= 0, "surface.mode: l must be >= 0");
        check(std::abs(m.m) <= m.l, "surface.mode: |m| must be <= l");
    }
    if (cfg.kind == AmbientKind::Schwarzschild) {
        check(cfg.mass > 0.0, "ambient.m must be positive (m > 0)");
        check(cfg.resolved_r_inner() > 0.0, "ambient.r_inner must be positive for schwarzschild");
        if (cfg.pert_family != PerturbationSpec::Family::Zero) {
            check(cfg.r_cut > 0.0, "ambient.r_cut must be positive");
            check(cfg.resolved_r_inner() > cfg.r_cut * (1.0 + 1e-6),
                  "ambient.r_inner must exceed r_cut for a perturbed metric");
        }
    }
    if (cfg.kind == AmbientKind::HyperbolicChart)
        check(cfg.center.norm() + cfg.radius < 1.0,
              "initial surface must stay inside the Poincare ball");

    if (!validation_issues.empty())
        throw ValidationError("invalid configuration", validation_issues);
    return cfg;
}

/// Canonical text form; parse(serialize(cfg)) reproduces cfg field by field.
inline std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "ambient.kind = " << to_string(c.kind) << "\n";
    os << "ambient.m = " << c.mass << "\n";
    os << "ambient.perturbation = "
       << (c.pert_family == PerturbationSpec::Family::Zero ? "zero" : "axial_deviatoric")
       << "\n";
    os << "ambient.beta = " << c.beta << "\n";
    os << "ambient.r_cut = " << c.r_cut << "\n";
    os << "ambient.r_inner = " << c.r_inner << "\n";
    os << "ambient.band_c = " << c.band_c << "\n";
    os << "surface.center = " << c.center[0] << " " << c.center[1] << " " << c.center[2] << "\n";
    os << "surface.radius = " << c.radius << "\n";
    for (const auto& m : c.modes)
        os << "surface.mode = " << m.l << " " << m.m << " " << m.amplitude << "\n";
    os << "grid.n_theta = " << c.n_theta << "\n";
    os << "grid.n_phi = " << c.n_phi << "\n";
    os << "flow.global_term = " << to_string(c.global_term) << "\n";
    os << "flow.cfl = " << c.cfl << "\n";
    os << "flow.t_end = " << c.t_end << "\n";
    os << "flow.max_steps = " << c.max_steps << "\n";
    os << "flow.stop_umbilic_tol = " << c.stop_umbilic_tol << "\n";
    os << "analysis.fit_window = " << c.fit_window << "\n";
    os << "analysis.fit_floor = " << c.fit_floor << "\n";
    os << "analysis.B1 = " << c.B1 << "\n";
    os << "analysis.B2 = " << c.B2 << "\n";
    os << "analysis.B3 = " << c.B3 << "\n";
    os << "output.directory = " << c.directory << "\n";
    os << "output.cadence = " << c.cadence << "\n";
    return os.str();
}

}  // namespace apmcf
