#pragma once

/// Constrained mean curvature flow of radial graphs:
///     dF/dt = (h_k(t) - H) nu
/// with the global term selected per run: h0 = int H^2 / int H (area
/// preserving, the primary mode), h = int H / |M| (volume preserving), or
/// h1 = int H E2 / int E2 (conserves int H).
///
/// Time stepping is classic RK4 with the global term recomputed at every
/// stage, a parabolic CFL step size measured in the isotropic grid resolution,
/// and step rejection with halving when a trial state leaves the graph class.
/// Each stage velocity passes through the grid's longitudinal filter; without
/// it the uniform-phi sampling near the poles forces time steps two orders of
/// magnitude below the isotropic CFL.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "apmcf/geometry.hpp"

namespace apmcf {

enum class GlobalTerm : std::uint8_t { H0, H, H1 };  // k = 0, -1, +1

inline const char* to_string(GlobalTerm g) {
    switch (g) {
        case GlobalTerm::H0: return "h0";
        case GlobalTerm::H: return "h";
        case GlobalTerm::H1: return "h1";
    }
    return "?";
}

struct FlowConfig {
    GlobalTerm global_term = GlobalTerm::H0;
    double cfl = 0.2;                // in (0, 0.5]
    double t_end = 10.0;             // 0 means: stop immediately (time budget)
    long max_steps = 5'000'000;
    double stop_umbilic_rel = 1e-9;  // stop when max|H - h_k| <= tol * h_k
    int monitor_cadence = 10;
    double r_inner = 0.0;            // inner radius of the Schwarzschild volume
    double band_c = 10.0;            // O(sigma^-l) band constant
    // reference data for the roundness monitors (Schwarzschild runs)
    double sigma_ref = 0.0;
    double B1 = 2.0, B2 = 100.0, B3 = 100.0;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 0.5)) throw ValidationError("flow.cfl must lie in (0, 0.5]");
        if (!(t_end >= 0.0)) throw ValidationError("flow.t_end must be nonnegative");
        if (max_steps < 0) throw ValidationError("flow.max_steps must be nonnegative");
        if (!(stop_umbilic_rel > 0.0)) throw ValidationError("flow.stop_umbilic_tol must be positive");
        if (monitor_cadence < 1) throw ValidationError("output.cadence must be >= 1");
    }
};

/// Per-node flow speed f = h_k - H.
inline std::vector<double> normal_speed(const SecondFundamental& second, const GlobalTerms& terms,
                                        const FlowConfig& cfg) {
    double hk = 0.0;
    switch (cfg.global_term) {
        case GlobalTerm::H0: hk = terms.h0; break;
        case GlobalTerm::H: hk = terms.h; break;
        case GlobalTerm::H1:
            if (!(terms.int_E2 > 0.0))
                throw Error("h1 undefined: integral of E2 is nonpositive");
            hk = terms.h1;
            break;
    }
    std::vector<double> f(second.H.size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = hk - second.H[k];
    return f;
}

/// Radial velocity realizing the normal speed: d rho / dt = f / <nu, omega>.
inline std::vector<double> radial_velocity(const RadialGraph& s, std::span<const double> f,
                                           const FirstFundamental& first) {
    if (f.size() != s.rho.size())
        throw ValidationError("speed field does not match the surface grid");
    if (first.min_margin < 0.05)
        throw GraphDegenerationError("surface about to leave the radial graph class");
    std::vector<double> v(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) v[k] = f[k] / first.margin[k];
    return v;
}

struct StageEval {
    FirstFundamental first;
    SecondFundamental second;
    GlobalTerms terms;
    std::vector<double> speed;     // h_k - H
    std::vector<double> velocity;  // filtered d rho / dt
    double h_k = 0.0;
    double max_dev = 0.0;  // max |H - h_k|
};

inline StageEval eval_stage(const RadialGraph& s, const AmbientMetric& amb,
                            const FlowConfig& cfg) {
    StageEval e;
    e.first = first_fundamental(s, amb);
    e.second = second_fundamental(s, amb, e.first);
    e.terms = global_terms(s, amb, e.first, e.second, cfg.r_inner, /*with_volume=*/false);
    e.speed = normal_speed(e.second, e.terms, cfg);
    e.velocity = radial_velocity(s, e.speed, e.first);
    s.grid->filter_longitudinal(e.velocity);
    switch (cfg.global_term) {
        case GlobalTerm::H0: e.h_k = e.terms.h0; break;
        case GlobalTerm::H: e.h_k = e.terms.h; break;
        case GlobalTerm::H1: e.h_k = e.terms.h1; break;
    }
    double md = 0.0;
    for (double f : e.speed) md = std::max(md, std::abs(f));
    e.max_dev = md;
    return e;
}

/// Parabolic CFL step: dt = cfl * h_min^2 / max(|A|^2 + |Ric| + 1), with h_min
/// the smallest isotropic arclength resolution (the zonal spacing counts at
/// its filtered, latitude-independent value).
inline double cfl_step(const RadialGraph& s, const AmbientMetric& amb, const StageEval& e,
                       const FlowConfig& cfg) {
    const GridSpec& g = *s.grid;
    double h_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n_theta; ++i) {
        const double st = g.sin_theta[i];
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            const double arc_t = std::sqrt(e.first.g11[k]) * g.row_spacing[i];
            const double arc_p = std::sqrt(e.first.g22[k]) / st * g.dphi;
            h_min = std::min(h_min, std::min(arc_t, arc_p));
        }
    }
    const double denom =
        std::max(1.0, e.second.max_A2 + amb.ricci_bound(e.first.min_r, cfg.band_c) + 1.0);
    return cfg.cfl * h_min * h_min / denom;
}

namespace detail {

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// One RK4 step at fixed dt; throws if any trial state degenerates.
inline void rk4_advance(RadialGraph& s, const AmbientMetric& amb, const FlowConfig& cfg,
                        double dt, const StageEval& stage1) {
    const std::size_t n = s.rho.size();
    const std::vector<double>& k1 = stage1.velocity;

    RadialGraph trial = s;
    auto trial_velocity = [&](const std::vector<double>& base, const std::vector<double>& kv,
                              double scale) {
        for (std::size_t q = 0; q < n; ++q) trial.rho[q] = base[q] + scale * kv[q];
        StageEval e = eval_stage(trial, amb, cfg);
        if (!all_finite(e.velocity)) throw StepRejectedError("nonfinite stage velocity");
        return std::move(e.velocity);
    };

    const std::vector<double> k2 = trial_velocity(s.rho, k1, 0.5 * dt);
    const std::vector<double> k3 = trial_velocity(s.rho, k2, 0.5 * dt);
    const std::vector<double> k4 = trial_velocity(s.rho, k3, dt);

    for (std::size_t q = 0; q < n; ++q)
        s.rho[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
    if (!all_finite(s.rho)) throw StepRejectedError("nonfinite state after step");
}

}  // namespace detail

struct StepResult {
    double dt = 0.0;
    int halvings = 0;
};

/// One adaptive step: CFL-sized RK4 with rejection and halving (up to 10).
/// `dt_cap` additionally limits the step (time budget); `forced_dt`, when
/// positive, bypasses the CFL formula (convergence studies).
inline StepResult step(RadialGraph& s, const AmbientMetric& amb, const FlowConfig& cfg,
                       const StageEval& stage1, double dt_cap,
                       double forced_dt = 0.0) {
    double dt = forced_dt > 0.0 ? forced_dt : cfl_step(s, amb, stage1, cfg);
    dt = std::min(dt, dt_cap);
    StepResult res;
    for (int attempt = 0; attempt <= 10; ++attempt) {
        RadialGraph trial = s;
        try {
            detail::rk4_advance(trial, amb, cfg, dt, stage1);
        } catch (const NonpositiveMeanCurvatureError&) {
            throw;  // flow undefined; not a step-size problem
        } catch (const Error&) {
            dt *= 0.5;
            ++res.halvings;
            continue;
        }
        s = std::move(trial);
        // keep the state itself in the resolved zonal space: unresolved
        // rounding noise in rho is amplified by (m / sin theta)^2 in H at the
        // pole rows and would otherwise accumulate into a convergence floor
        s.grid->filter_longitudinal(s.rho);
        res.dt = dt;
        return res;
    }
    throw StepRejectedError("step rejected after 10 halvings");
}

struct BsigmaFlags {
    bool applicable = false;
    bool radius_ok = false, aring_ok = false, grad_aring_ok = false;
    double max_r_dev = 0.0;      // max |r - sigma|
    double max_aring_s3 = 0.0;   // max|Aring| sigma^3
    double max_grad_s4 = 0.0;    // max|grad Aring| sigma^4
    bool all_ok() const { return radius_ok && aring_ok && grad_aring_ok; }
};

struct MonitorReport {
    double dt = 0.0;
    double area_drift = 0.0;  // relative to the initial record
    double volume = 0.0;
    double max_aring = 0.0, max_grad_aring = 0.0;
    double h = 0.0, h0 = 0.0, h0_over_h_minus_1 = 0.0;
    double min_H = 0.0, max_H = 0.0, max_r = 0.0;
    double max_A2 = 0.0;
    // evolution-equation residuals against the previous record
    double res_area = 0.0;     // |d area/dt - int H f|
    double res_vol = 0.0;      // |d vol/dt - int f|
    double vol_integrand = 0.0;  // int (h0 - H) dmu, nonnegative up to rounding
    double res_dtH = 0.0;      // pointwise max vs Delta H + (|A|^2 + nc)(H - h_k)
    double res_dth = 0.0;      // d h/dt vs its integral formula
    BsigmaFlags bsigma;
};

struct FlowRecord {
    double t = 0.0;
    RadialGraph surface;
    GlobalTerms terms;
    MonitorReport monitor;
};

enum class Termination : std::uint8_t {
    Converged,
    TimeBudget,
    StepBudget,
    ErrorGraphDegeneration,
    ErrorNonpositiveMeanCurvature,
    ErrorStepRejected,
    ErrorNumeric,
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "converged";
        case Termination::TimeBudget: return "time_budget";
        case Termination::StepBudget: return "step_budget";
        case Termination::ErrorGraphDegeneration: return "error_graph_degeneration";
        case Termination::ErrorNonpositiveMeanCurvature:
            return "error_nonpositive_mean_curvature";
        case Termination::ErrorStepRejected: return "error_step_rejected";
        case Termination::ErrorNumeric: return "error_numeric";
    }
    return "?";
}

struct FlowRun {
    std::vector<FlowRecord> records;
    Termination reason = Termination::TimeBudget;
    std::string error_detail;
    long steps = 0;
    double t_final = 0.0;
    RadialGraph final_surface;
    FlowConfig config;
};

namespace detail {

struct RecordCache {
    double t = 0.0;
    double area = 0.0, volume = 0.0, h = 0.0, h_k = 0.0;
    std::vector<double> H, lapH, A2, weight, chart_r;
    std::vector<double> speed;
};

inline double ambient_nc(const AmbientMetric& amb, double chart_r, double /*band_c*/) {
    switch (amb.kind) {
        case AmbientKind::Euclidean: return 0.0;
        case AmbientKind::SphereChart: return 2.0;
        case AmbientKind::HyperbolicChart: return -2.0;
        case AmbientKind::Schwarzschild: {
            const double r3 = chart_r * chart_r * chart_r;
            return -2.0 * amb.m / r3;
        }
    }
    return 0.0;
}

}  // namespace detail

/// Run the flow until convergence, budget exhaustion, or error.  A partial
/// record list is always returned.
inline FlowRun run(const RadialGraph& initial, const AmbientMetric& amb, FlowConfig cfg) {
    cfg.validate();
    initial.validate();

    FlowRun out;
    out.config = cfg;
    out.final_surface = initial;
    if (cfg.t_end <= 0.0) {
        out.reason = Termination::TimeBudget;
        return out;
    }

    RadialGraph s = initial;
    s.grid->filter_longitudinal(s.rho);

    double t = 0.0;
    long steps = 0;
    double area0 = 0.0;
    double last_dt = 0.0;
    detail::RecordCache prev;
    bool have_prev = false;

    auto make_record = [&](const StageEval& e) {
        FlowRecord rec;
        rec.t = t;
        rec.surface = s;
        rec.terms = e.terms;
        rec.terms.volume = enclosed_volume(s, amb, cfg.r_inner);

        MonitorReport& m = rec.monitor;
        m.dt = last_dt;
        if (out.records.empty()) area0 = e.terms.area;
        m.area_drift = (e.terms.area - area0) / area0;
        m.volume = rec.terms.volume;
        m.max_aring = std::sqrt(std::max(0.0, e.second.max_Aring2));
        auto grad = covariant_grad_A_norm(s, e.first, e.second);
        double mg = 0.0;
        for (double v : grad) mg = std::max(mg, v);
        m.max_grad_aring = mg;
        m.h = e.terms.h;
        m.h0 = e.terms.h0;
        m.h0_over_h_minus_1 = e.terms.h0 / e.terms.h - 1.0;
        m.min_H = e.second.min_H;
        m.max_H = e.second.max_H;
        m.max_r = e.first.max_r;
        m.max_A2 = e.second.max_A2;

        // vol-evo integrand int (h0 - H) dmu = h0 |M| - int H
        m.vol_integrand = e.terms.h0 * e.terms.area - e.terms.int_H;

        auto lapH = laplace_beltrami(s, e.first, e.second.H);
        if (have_prev) {
            const double dtm = t - prev.t;
            std::vector<double> buf(s.rho.size());
            for (std::size_t k = 0; k < buf.size(); ++k)
                buf[k] = prev.weight[k] * prev.H[k] * prev.speed[k];
            m.res_area = std::abs((e.terms.area - prev.area) / dtm - pairwise_sum(buf));
            for (std::size_t k = 0; k < buf.size(); ++k)
                buf[k] = prev.weight[k] * prev.speed[k];
            m.res_vol = std::abs((rec.terms.volume - prev.volume) / dtm - pairwise_sum(buf));
            double worst = 0.0;
            for (std::size_t k = 0; k < buf.size(); ++k) {
                const double nc = detail::ambient_nc(amb, prev.chart_r[k], cfg.band_c);
                const double rhs =
                    prev.lapH[k] + (prev.A2[k] + nc) * (-prev.speed[k]);  // H - h_k = -f
                worst = std::max(worst,
                                 std::abs((e.second.H[k] - prev.H[k]) / dtm - rhs));
            }
            m.res_dtH = worst;
            // d h/dt against int [ |Aring|^2 (H - h_k) - 1/2 H (H - h_k)^2 ] / |M|
            for (std::size_t k = 0; k < buf.size(); ++k) {
                const double dev = -prev.speed[k];
                const double aring2 = prev.A2[k] - 0.5 * prev.H[k] * prev.H[k];
                buf[k] = prev.weight[k] * (aring2 * dev - 0.5 * prev.H[k] * dev * dev);
            }
            m.res_dth = std::abs((e.terms.h - prev.h) / dtm - pairwise_sum(buf) / prev.area);
        }

        if (amb.kind == AmbientKind::Schwarzschild && cfg.sigma_ref > 0.0) {
            BsigmaFlags& b = m.bsigma;
            b.applicable = true;
            double rdev = 0.0;
            for (double r : e.first.chart_r) rdev = std::max(rdev, std::abs(r - cfg.sigma_ref));
            const double s3 = std::pow(cfg.sigma_ref, 3);
            b.max_r_dev = rdev;
            b.max_aring_s3 = m.max_aring * s3;
            b.max_grad_s4 = m.max_grad_aring * s3 * cfg.sigma_ref;
            b.radius_ok = rdev <= cfg.B1;
            b.aring_ok = b.max_aring_s3 <= cfg.B2;
            b.grad_aring_ok = b.max_grad_s4 <= cfg.B3;
        }

        prev.t = t;
        prev.area = e.terms.area;
        prev.volume = rec.terms.volume;
        prev.h = e.terms.h;
        prev.h_k = e.h_k;
        prev.H = e.second.H;
        prev.lapH = std::move(lapH);
        prev.A2 = e.second.A2;
        prev.weight = e.first.weight;
        prev.chart_r = e.first.chart_r;
        prev.speed = e.speed;
        have_prev = true;

        out.records.push_back(std::move(rec));
    };

    try {
        StageEval e = eval_stage(s, amb, cfg);
        make_record(e);
        while (true) {
            if (e.max_dev <= cfg.stop_umbilic_rel * std::abs(e.h_k)) {
                out.reason = Termination::Converged;
                if (out.records.back().t < t) make_record(e);
                break;
            }
            if (t >= cfg.t_end) {
                out.reason = Termination::TimeBudget;
                if (out.records.back().t < t) make_record(e);
                break;
            }
            if (steps >= cfg.max_steps) {
                out.reason = Termination::StepBudget;
                if (out.records.back().t < t) make_record(e);
                break;
            }

            const StepResult sr = step(s, amb, cfg, e, cfg.t_end - t);
            t += sr.dt;
            last_dt = sr.dt;
            ++steps;
            e = eval_stage(s, amb, cfg);
            if (steps % cfg.monitor_cadence == 0) make_record(e);
        }
    } catch (const GraphDegenerationError& err) {
        out.reason = Termination::ErrorGraphDegeneration;
        out.error_detail = err.what();
    } catch (const NonpositiveMeanCurvatureError& err) {
        out.reason = Termination::ErrorNonpositiveMeanCurvature;
        out.error_detail = err.what();
    } catch (const StepRejectedError& err) {
        out.reason = Termination::ErrorStepRejected;
        out.error_detail = err.what();
    } catch (const Error& err) {
        out.reason = Termination::ErrorNumeric;
        out.error_detail = err.what();
    }

    out.steps = steps;
    out.t_final = t;
    out.final_surface = s;
    return out;
}

/// Residuals of the evolution equations between two recorded states;
/// pure diagnostic recomputed from the stored surfaces.
struct EvolutionResiduals {
    double res_area = 0.0;
    double res_vol = 0.0;
    double vol_integrand = 0.0;
    double res_dtH = 0.0;
    double res_dth = 0.0;
};

inline EvolutionResiduals evolution_consistency(const FlowRecord& before,
                                                const FlowRecord& after,
                                                const AmbientMetric& amb, const FlowConfig& cfg) {
    const double dt = after.t - before.t;
    if (!(dt > 0.0)) throw ValidationError("evolution_consistency needs increasing times");

    auto eb = eval_stage(before.surface, amb, cfg);
    auto ea = eval_stage(after.surface, amb, cfg);
    const double vol_b = enclosed_volume(before.surface, amb, cfg.r_inner);
    const double vol_a = enclosed_volume(after.surface, amb, cfg.r_inner);
    auto lapH = laplace_beltrami(before.surface, eb.first, eb.second.H);

    EvolutionResiduals r;
    std::vector<double> buf(before.surface.rho.size());
    for (std::size_t k = 0; k < buf.size(); ++k)
        buf[k] = eb.first.weight[k] * eb.second.H[k] * eb.speed[k];
    r.res_area = std::abs((ea.terms.area - eb.terms.area) / dt - pairwise_sum(buf));
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = eb.first.weight[k] * eb.speed[k];
    r.res_vol = std::abs((vol_a - vol_b) / dt - pairwise_sum(buf));
    r.vol_integrand = eb.terms.h0 * eb.terms.area - eb.terms.int_H;
    double worst = 0.0;
    for (std::size_t k = 0; k < buf.size(); ++k) {
        const double nc = detail::ambient_nc(amb, eb.first.chart_r[k], cfg.band_c);
        const double rhs = lapH[k] + (eb.second.A2[k] + nc) * (-eb.speed[k]);
        worst = std::max(worst, std::abs((ea.second.H[k] - eb.second.H[k]) / dt - rhs));
    }
    r.res_dtH = worst;
    for (std::size_t k = 0; k < buf.size(); ++k) {
        const double dev = -eb.speed[k];
        const double aring2 = eb.second.A2[k] - 0.5 * eb.second.H[k] * eb.second.H[k];
        buf[k] = eb.first.weight[k] * (aring2 * dev - 0.5 * eb.second.H[k] * dev * dev);
    }
    r.res_dth = std::abs((ea.terms.h - eb.terms.h) / dt - pairwise_sum(buf) / eb.terms.area);
    return r;
}

}  // namespace apmcf
