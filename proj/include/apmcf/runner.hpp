#pragma once

/// Scenario orchestration: build ambient and initial surface from a parsed
/// configuration, execute the flow, write the CSV artifacts and the analysis
/// summary, and map outcomes to exit codes.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "apmcf/analysis.hpp"
#include "apmcf/config.hpp"
#include "apmcf/csv.hpp"
#include "apmcf/flow.hpp"
#include "apmcf/spherical_harmonics.hpp"

namespace apmcf {

/// Process exit codes; one distinct code per documented outcome.
enum class ExitCode : int {
    Converged = 0,
    Internal = 1,
    TimeBudget = 2,
    StepBudget = 3,
    GraphDegeneration = 4,
    NonpositiveMeanCurvature = 5,
    StepRejected = 6,
    NumericError = 7,
    ParseFailure = 10,
    ValidationFailure = 11,
    UnknownKey = 12,
    Io = 13,
};

inline ExitCode exit_code(Termination t) {
    switch (t) {
        case Termination::Converged: return ExitCode::Converged;
        case Termination::TimeBudget: return ExitCode::TimeBudget;
        case Termination::StepBudget: return ExitCode::StepBudget;
        case Termination::ErrorGraphDegeneration: return ExitCode::GraphDegeneration;
        case Termination::ErrorNonpositiveMeanCurvature:
            return ExitCode::NonpositiveMeanCurvature;
        case Termination::ErrorStepRejected: return ExitCode::StepRejected;
        case Termination::ErrorNumeric: return ExitCode::NumericError;
    }
    return ExitCode::Internal;
}

inline AmbientMetric ambient_from(const ScenarioConfig& c) {
    switch (c.kind) {
        case AmbientKind::Euclidean: return AmbientMetric::euclidean();
        case AmbientKind::SphereChart: return AmbientMetric::sphere_chart();
        case AmbientKind::HyperbolicChart: return AmbientMetric::hyperbolic_chart();
        case AmbientKind::Schwarzschild: {
            PerturbationSpec p = c.pert_family == PerturbationSpec::Family::Zero
                                     ? PerturbationSpec::zero()
                                     : PerturbationSpec::axial_deviatoric(c.beta, c.r_cut);
            return AmbientMetric::schwarzschild(c.mass, p);
        }
    }
    throw ValidationError("unreachable ambient kind");
}

inline FlowConfig flow_config_from(const ScenarioConfig& c) {
    FlowConfig f;
    f.global_term = c.global_term;
    f.cfl = c.cfl;
    f.t_end = c.t_end;
    f.max_steps = c.max_steps;
    f.stop_umbilic_rel = c.stop_umbilic_tol;
    f.monitor_cadence = c.cadence;
    f.r_inner = c.resolved_r_inner();
    f.band_c = c.band_c;
    if (c.kind == AmbientKind::Schwarzschild) f.sigma_ref = c.radius;
    f.B1 = c.B1;
    f.B2 = c.B2;
    f.B3 = c.B3;
    return f;
}

struct InitialDiagnostics {
    double min_H = 0.0;
    double max_aring = 0.0;
    double int_aring2 = 0.0;  // integral of |Aring|^2 dmu
};

struct InitialSurface {
    RadialGraph graph;
    InitialDiagnostics diagnostics;
};

/// rho = radius + sum of amplitude * Y_lm, with the smallness diagnostics the
/// convergence statements hypothesize (min H, max |Aring|, int |Aring|^2).
inline InitialSurface build_initial_surface(const ScenarioConfig& c) {
    auto grid = GridSpec::create(c.n_theta, c.resolved_n_phi());
    RadialGraph s = RadialGraph::sphere(grid, c.center, c.radius);
    for (const auto& m : c.modes)
        for (int i = 0; i < grid->n_theta; ++i)
            for (int j = 0; j < grid->n_phi; ++j)
                s.rho[grid->idx(i, j)] +=
                    m.amplitude * real_sph_harmonic(m.l, m.m, grid->theta[i], grid->phi[j]);
    s.validate();

    const AmbientMetric amb = ambient_from(c);
    auto first = first_fundamental(s, amb);
    auto second = second_fundamental(s, amb, first);
    InitialSurface out{std::move(s), {}};
    out.diagnostics.min_H = second.min_H;
    out.diagnostics.max_aring = std::sqrt(std::max(0.0, second.max_Aring2));
    std::vector<double> buf(first.weight.size());
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = first.weight[k] * second.Aring2[k];
    out.diagnostics.int_aring2 = pairwise_sum(buf);
    return out;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

struct AnalysisOutput {
    std::string csv;
    std::string text;
};

/// Analysis over a finished run: decay fits, sphere fit of the final surface,
/// bound monitors.  Works from the in-memory run.
inline AnalysisOutput analyze_run(const FlowRun& run_data, const AmbientMetric& amb,
                                  const ScenarioConfig& cfg) {
    std::ostringstream csv, txt;
    csv.precision(17);
    txt.precision(12);
    csv << "metric,value\n";

    txt << "run summary\n===========\n";
    txt << "termination: " << to_string(run_data.reason) << "\n";
    txt << "steps: " << run_data.steps << ", final time: " << run_data.t_final << "\n";
    csv << "steps," << run_data.steps << "\n";
    csv << "t_final," << run_data.t_final << "\n";

    if (run_data.records.size() < 2) {
        txt << "not enough records for analysis\n";
        return {csv.str(), txt.str()};
    }

    const auto& rec0 = run_data.records.front();
    const auto& recN = run_data.records.back();
    const double area_drift =
        std::abs(recN.terms.area - rec0.terms.area) / rec0.terms.area;
    csv << "area_initial," << rec0.terms.area << "\n";
    csv << "area_final," << recN.terms.area << "\n";
    csv << "area_drift_rel," << area_drift << "\n";
    csv << "volume_initial," << rec0.terms.volume << "\n";
    csv << "volume_final," << recN.terms.volume << "\n";
    csv << "final_max_aring," << recN.monitor.max_aring << "\n";
    csv << "final_h0," << recN.terms.h0 << "\n";
    csv << "final_h," << recN.terms.h << "\n";
    txt << "relative area drift: " << area_drift << "\n";
    txt << "final max |Aring|: " << recN.monitor.max_aring << "\n";

    bool identities_ok = true;
    for (const auto& r : run_data.records) identities_ok &= identities_within(r.terms);
    csv << "integral_identities_ok," << (identities_ok ? 1 : 0) << "\n";
    txt << "exact integral identities on every record: " << (identities_ok ? "pass" : "FAIL")
        << "\n";

    // decay fits on the traceless norm and on h0/h - 1
    std::vector<double> t, aring, ratio;
    for (const auto& r : run_data.records) {
        t.push_back(r.t);
        aring.push_back(r.monitor.max_aring);
        ratio.push_back(r.monitor.h0_over_h_minus_1);
    }
    auto report_fit = [&](const char* name, const std::vector<double>& v) {
        try {
            auto w = decay_window(t, v, cfg.fit_window, cfg.fit_floor);
            auto f = fit_decay(t, v, w.t_begin, w.t_end);
            csv << name << "_rate," << f.rate << "\n";
            csv << name << "_r2," << f.r_squared << "\n";
            csv << name << "_window_begin," << f.t_begin << "\n";
            csv << name << "_window_end," << f.t_end << "\n";
            txt << name << ": rate " << f.rate << " (R^2 " << f.r_squared << ") on ["
                << f.t_begin << ", " << f.t_end << "], " << f.samples << " samples\n";
        } catch (const Error& e) {
            csv << name << "_rate,nan\n";
            txt << name << ": no fit (" << e.what() << ")\n";
        }
    };
    report_fit("decay_max_aring", aring);
    report_fit("decay_h0_over_h_minus_1", ratio);

    auto fit = fit_sphere(run_data.final_surface);
    csv << "fit_r0," << fit.r0 << "\n";
    csv << "fit_center_x," << fit.center[0] << "\n";
    csv << "fit_center_y," << fit.center[1] << "\n";
    csv << "fit_center_z," << fit.center[2] << "\n";
    csv << "fit_rms," << fit.rms_residual << "\n";
    txt << "best-fit sphere: r0 " << fit.r0 << ", center (" << fit.center[0] << ", "
        << fit.center[1] << ", " << fit.center[2] << "), rms " << fit.rms_residual << "\n";

    if (amb.kind == AmbientKind::Euclidean) {
        auto rep = averaged_curvature_bounds(run_data);
        csv << "h_bounds_gamma," << rep.gamma << "\n";
        csv << "h_bounds_alpha," << rep.alpha << "\n";
        csv << "h_bounds_eps," << rep.eps << "\n";
        csv << "h_bounds_h_within," << (rep.h_within ? 1 : 0) << "\n";
        csv << "h_bounds_h0_within," << (rep.h0_within ? 1 : 0) << "\n";
        txt << "averaged-curvature bounds: h within "
            << (rep.h_within ? "yes" : "NO") << ", h0 within "
            << (rep.h0_within ? "yes" : "NO") << " (alpha " << rep.alpha << ", eps " << rep.eps
            << ")\n";
        if (!rep.h_within) txt << "  first violation at t = " << rep.first_violation_t << "\n";
    }

    if (amb.kind == AmbientKind::Schwarzschild) {
        const double sigma = cfg.radius;
        auto rep = schwarzschild_monitors(run_data, amb, sigma, cfg.B1, cfg.B2, cfg.B3,
                                          cfg.band_c);
        csv << "bsigma_all_ok," << (rep.all_bsigma_ok ? 1 : 0) << "\n";
        csv << "max_r0_dev," << rep.max_r0_dev << "\n";
        csv << "max_r," << rep.max_max_r << "\n";
        txt << "roundness class B_sigma: " << (rep.all_bsigma_ok ? "all records pass" : "FAIL")
            << "; max |r0 - sigma| " << rep.max_r0_dev << "; max r " << rep.max_max_r << "\n";

        auto first = first_fundamental(run_data.final_surface, amb);
        auto second = second_fundamental(run_data.final_surface, amb, first);
        auto res = cmc_expansion_residual(run_data.final_surface, amb, fit, second, first,
                                          sigma, cfg.band_c);
        csv << "cmc_residual," << res.max_residual << "\n";
        csv << "cmc_band," << res.band << "\n";
        csv << "cmc_within_band," << (res.within_band ? 1 : 0) << "\n";
        txt << "final-surface mean-curvature expansion residual: " << res.max_residual
            << " (band " << res.band << ", " << (res.within_band ? "inside" : "OUTSIDE")
            << ")\n";
        const double dev = std::max(std::abs(recN.monitor.max_H - recN.terms.h0),
                                    std::abs(recN.monitor.min_H - recN.terms.h0));
        csv << "final_umbilic_rel," << dev / recN.terms.h0 << "\n";
        txt << "final max|H - h0| / h0: " << dev / recN.terms.h0 << "\n";
    }
    return {csv.str(), txt.str()};
}

}  // namespace detail

struct ExecOptions {
    std::optional<std::string> out_dir;
    std::optional<int> cadence;
    bool quiet = false;
};

/// Run one scenario end to end and write run.csv, surface_final.csv,
/// analysis.csv, analysis.txt, and the resolved config.cfg into the output
/// directory.  Returns the documented exit code.
inline ExitCode execute(ScenarioConfig cfg, const ExecOptions& opt, std::ostream& log) {
    if (opt.out_dir) cfg.directory = *opt.out_dir;
    if (opt.cadence) cfg.cadence = *opt.cadence;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.directory, ec);
    if (ec) {
        log << "error: cannot create output directory " << cfg.directory << "\n";
        return ExitCode::Io;
    }

    try {
        const AmbientMetric amb = ambient_from(cfg);
        auto initial = build_initial_surface(cfg);
        if (!opt.quiet)
            log << "initial surface: min H = " << initial.diagnostics.min_H
                << ", max |Aring| = " << initial.diagnostics.max_aring
                << ", int |Aring|^2 dmu = " << initial.diagnostics.int_aring2 << "\n";

        const FlowConfig fcfg = flow_config_from(cfg);
        FlowRun r = run(initial.graph, amb, fcfg);
        if (!opt.quiet)
            log << "flow: " << to_string(r.reason) << " after " << r.steps << " steps, t = "
                << r.t_final << "\n";

        write_timeseries_csv(cfg.directory + "/run.csv", r);
        {
            auto first = first_fundamental(r.final_surface, amb);
            auto second = second_fundamental(r.final_surface, amb, first);
            write_surface_csv(cfg.directory + "/surface_final.csv", r.final_surface, first,
                              second);
        }
        auto analysis = detail::analyze_run(r, amb, cfg);
        detail::write_text(cfg.directory + "/analysis.csv", analysis.csv);
        detail::write_text(cfg.directory + "/analysis.txt", analysis.text);
        detail::write_text(cfg.directory + "/config.cfg", serialize_config(cfg));
        if (!opt.quiet) log << "artifacts written to " << cfg.directory << "\n";
        if (!r.error_detail.empty()) log << "error detail: " << r.error_detail << "\n";
        return exit_code(r.reason);
    } catch (const IoError& e) {
        log << "io error: " << e.what() << "\n";
        return ExitCode::Io;
    } catch (const NonpositiveMeanCurvatureError& e) {
        log << "error: " << e.what() << "\n";
        return ExitCode::NonpositiveMeanCurvature;
    } catch (const ValidationError& e) {
        log << "error: " << e.what() << "\n";
        return ExitCode::ValidationFailure;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return ExitCode::NumericError;
    }
}

/// Re-run the analysis from the CSV artifacts of a previous run directory.
/// The time-series statistics come from run.csv; surface-level results are
/// recomputed from surface_final.csv through the stored configuration.
inline ExitCode analyze_directory(const std::string& dir, std::ostream& log) {
    try {
        std::ifstream is(dir + "/config.cfg", std::ios::binary);
        if (!is) throw IoError("missing " + dir + "/config.cfg");
        std::stringstream buf;
        buf << is.rdbuf();
        ScenarioConfig cfg = parse_config(buf.str());
        const AmbientMetric amb = ambient_from(cfg);

        CsvTable series = read_csv(dir + "/run.csv");
        CsvTable surf = read_csv(dir + "/surface_final.csv");

        auto grid = GridSpec::create(cfg.n_theta, cfg.resolved_n_phi());
        if (surf.rows() != grid->size())
            throw IoError("surface_final.csv does not match the configured grid");
        RadialGraph final_surface;
        final_surface.center = cfg.center;
        final_surface.grid = grid;
        final_surface.rho = surf.col("rho");

        std::ostringstream csv, txt;
        csv.precision(17);
        txt.precision(12);
        csv << "metric,value\n";
        txt << "stored-run analysis\n===================\n";

        const auto& t = series.col("t");
        auto report_fit = [&](const char* name, const std::vector<double>& v) {
            try {
                auto w = decay_window(t, v, cfg.fit_window, cfg.fit_floor);
                auto f = fit_decay(t, v, w.t_begin, w.t_end);
                csv << name << "_rate," << f.rate << "\n";
                csv << name << "_r2," << f.r_squared << "\n";
                txt << name << ": rate " << f.rate << " (R^2 " << f.r_squared << ")\n";
            } catch (const Error& e) {
                csv << name << "_rate,nan\n";
                txt << name << ": no fit (" << e.what() << ")\n";
            }
        };
        if (t.size() >= 2) {
            report_fit("decay_max_aring", series.col("max_Aring"));
            report_fit("decay_h0_over_h_minus_1", series.col("h0_over_h_minus_1"));
            const auto& area = series.col("area");
            csv << "area_drift_rel," << std::abs(area.back() - area.front()) / area.front()
                << "\n";
        } else {
            txt << "not enough samples for decay fits\n";
        }

        auto fit = fit_sphere(final_surface);
        csv << "fit_r0," << fit.r0 << "\n";
        csv << "fit_rms," << fit.rms_residual << "\n";
        txt << "best-fit sphere: r0 " << fit.r0 << ", rms " << fit.rms_residual << "\n";
        if (amb.kind == AmbientKind::Schwarzschild) {
            auto first = first_fundamental(final_surface, amb);
            auto second = second_fundamental(final_surface, amb, first);
            auto res = cmc_expansion_residual(final_surface, amb, fit, second, first,
                                              cfg.radius, cfg.band_c);
            csv << "cmc_residual," << res.max_residual << "\n";
            csv << "cmc_within_band," << (res.within_band ? 1 : 0) << "\n";
            txt << "mean-curvature expansion residual: " << res.max_residual << "\n";
        }

        detail::write_text(dir + "/analysis.csv", csv.str());
        detail::write_text(dir + "/analysis.txt", txt.str());
        log << txt.str();
        return ExitCode::Converged;
    } catch (const IoError& e) {
        log << "io error: " << e.what() << "\n";
        return ExitCode::Io;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        for (const auto& i : e.issues) log << "  " << i << "\n";
        return ExitCode::ValidationFailure;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return ExitCode::NumericError;
    }
}

}  // namespace apmcf
