#pragma once

/// Post-hoc and in-run analysis: best-fit sphere data, exponential decay-rate
/// fits, the h / h0 bound monitors, and the roundness-class checks used by the
/// Schwarzschild runs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "apmcf/flow.hpp"
#include "apmcf/geometry.hpp"

namespace apmcf {

/// Exact integral identities relating the squared deviations of H to the
/// averaged curvatures, checked at quadrature level.  Near-umbilic states make
/// both sides pure rounding noise, hence the absolute floor at the rounding
/// scale of h (h0 - h) |M|.
inline bool identities_within(const GlobalTerms& t, double rel = 1e-12) {
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * t.h * t.h0 * t.area;
    const double rhs1 = t.h * (t.h0 - t.h) * t.area;
    const double rhs2 = t.h0 * (t.h0 - t.h) * t.area;
    const bool ok1 = std::abs(t.int_dev_h_sq - rhs1) <=
                     rel * std::max(std::abs(t.int_dev_h_sq), std::abs(rhs1)) + floor;
    const bool ok2 = std::abs(t.int_dev_h0_sq - rhs2) <=
                     rel * std::max(std::abs(t.int_dev_h0_sq), std::abs(rhs2)) + floor;
    return ok1 && ok2;
}

struct SphereFit {
    double r0 = 0.0;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double rms_residual = 0.0;  // rms over nodes of |y - center| - r0
};

/// Algebraic least-squares sphere through the nodes (Euclidean background):
/// minimize sum w (|F - a|^2 - r0^2)^2, linear in (a, r0^2 - |a|^2).
inline SphereFit fit_sphere(const RadialGraph& s) {
    s.validate();
    const GridSpec& g = *s.grid;
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j) {
            const Eigen::Vector3d y = s.position(i, j);
            const double w = g.row_weight[i];
            Eigen::Vector4d row(2.0 * y[0], 2.0 * y[1], 2.0 * y[2], 1.0);
            M.noalias() += w * row * row.transpose();
            rhs.noalias() += w * y.squaredNorm() * row;
        }
    Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
    if (lu.rcond() < 1e-12) throw SingularFitError("sphere fit is singular");
    const Eigen::Vector4d sol = lu.solve(rhs);
    SphereFit fit;
    fit.center = sol.head<3>();
    const double r2 = sol[3] + fit.center.squaredNorm();
    if (!(r2 > 0.0)) throw SingularFitError("sphere fit gave nonpositive radius");
    fit.r0 = std::sqrt(r2);
    double acc = 0.0;
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j) {
            const double d = (s.position(i, j) - fit.center).norm() - fit.r0;
            acc += d * d;
        }
    fit.rms_residual = std::sqrt(acc / static_cast<double>(g.size()));
    return fit;
}

/// Max over nodes of |H - 2/r0 + 4m/r0^2 - 6m <a, nu_e> / r0^3| with nu_e the
/// Euclidean unit normal, and the configured comparison band c sigma^-3.
struct CmcExpansionResidual {
    double max_residual = 0.0;
    double band = 0.0;
    bool within_band = false;
};

inline CmcExpansionResidual cmc_expansion_residual(const RadialGraph& s,
                                                   const AmbientMetric& amb,
                                                   const SphereFit& fit,
                                                   const SecondFundamental& second,
                                                   const FirstFundamental& first,
                                                   double sigma, double band_c = 10.0) {
    if (amb.kind != AmbientKind::Schwarzschild)
        throw KindError("CMC expansion residual defined for Schwarzschild only");
    const GridSpec& g = *s.grid;
    const double m = amb.m;
    double worst = 0.0;
    for (int i = 0; i < g.n_theta; ++i)
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            // Euclidean unit normal of the graph
            const Eigen::Vector3d ne = first.Ft[k].cross(first.Fp[k]).normalized();
            const double adote = fit.center.dot(ne);
            const double model = 2.0 / fit.r0 - 4.0 * m / (fit.r0 * fit.r0) +
                                 6.0 * m * adote / std::pow(fit.r0, 3);
            worst = std::max(worst, std::abs(second.H[k] - model));
        }
    CmcExpansionResidual r;
    r.max_residual = worst;
    r.band = band_c / std::pow(sigma, 3);
    r.within_band = worst <= r.band;
    return r;
}

struct DecayFit {
    double rate = 0.0;       // decay rate (minus the log-slope)
    double amplitude = 0.0;  // value extrapolated to t = 0
    double t_begin = 0.0, t_end = 0.0;
    double r_squared = 0.0;
    std::size_t samples = 0;
};

/// Least-squares line through (t, log value) on the window; rate = -slope.
inline DecayFit fit_decay(std::span<const double> t, std::span<const double> value,
                          double t_begin, double t_end) {
    if (t.size() != value.size()) throw ValidationError("decay fit: size mismatch");
    std::vector<double> ts, ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_begin || t[k] > t_end) continue;
        if (!(value[k] > 0.0))
            throw NonpositiveSeriesError("decay fit window contains nonpositive values");
        ts.push_back(t[k]);
        ys.push_back(std::log(value[k]));
    }
    if (ts.size() < 10) throw NonpositiveSeriesError("decay fit needs at least 10 samples");
    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sy += ys[k];
    }
    const double mt = st / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        sxx += (ts[k] - mt) * (ts[k] - mt);
        sxy += (ts[k] - mt) * (ys[k] - my);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    DecayFit f;
    const double slope = sxy / sxx;
    f.rate = -slope;
    f.amplitude = std::exp(my - slope * mt);
    f.t_begin = ts.front();
    f.t_end = ts.back();
    f.samples = ts.size();
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// Default fit window: last `fraction` of the time span where the series sits
/// above its numerical floor (the late tail of a converged run is rounding
/// noise and would poison the fit).
struct FitWindow {
    double t_begin = 0.0, t_end = 0.0;
};

inline FitWindow decay_window(std::span<const double> t, std::span<const double> value,
                              double fraction = 0.6, double abs_floor = 1e-13) {
    double vmax = 0.0;
    for (double v : value) vmax = std::max(vmax, v);
    const double floor = std::max(abs_floor, 1e-12 * vmax);
    double t_hi = t.empty() ? 0.0 : t.front();
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (value[k] > floor)
            t_hi = t[k];
        else
            break;
    }
    FitWindow w;
    w.t_end = t_hi;
    w.t_begin = t_hi * (1.0 - fraction);
    return w;
}

/// Two-sided bounds on the averaged mean curvature h(t) and an upper bound
/// on h0(t), driven by the measured decay of the traceless form.  alpha is
/// the reference decay rate gamma^2 / (4 n) with n = 2 and gamma = min H at
/// t = 0; eps is measured from the run itself as max over records of
/// max(|Aring| e^{alpha t}, |H - h0|^2 e^{alpha t}).
struct AveragedCurvatureBounds {
    double gamma = 0.0, alpha = 0.0, eps = 0.0;
    double h_lower = 0.0, h_upper = 0.0;  // bounds on h(t)
    double h0_upper = 0.0;                // bound on max_t h0(t)
    bool h_within = false, h0_within = false;
    double first_violation_t = -1.0;
};

inline AveragedCurvatureBounds averaged_curvature_bounds(const FlowRun& run_data) {
    if (run_data.records.empty())
        throw ValidationError("curvature bounds need a nonempty run");
    AveragedCurvatureBounds rep;
    const auto& first_rec = run_data.records.front();
    rep.gamma = first_rec.monitor.min_H;
    rep.alpha = rep.gamma * rep.gamma / 8.0;  // gamma^2 / (4 n), n = 2

    double eps = 0.0;
    for (const auto& rec : run_data.records) {
        const double growth = std::exp(rep.alpha * rec.t);
        const double dev = std::max(std::abs(rec.monitor.max_H - rec.terms.h0),
                                    std::abs(rec.monitor.min_H - rec.terms.h0));
        eps = std::max(eps, rec.monitor.max_aring * growth);
        eps = std::max(eps, dev * dev * growth);
    }
    rep.eps = eps;

    const double h_init = first_rec.terms.h;
    const double a = rep.alpha;
    rep.h_lower = h_init * std::exp(-eps / a) - std::pow(eps, 2.5) * (2.0 / (5.0 * a)) *
                                                    std::exp(eps / a);
    rep.h_upper = h_init + 2.0 * std::pow(eps, 2.5) / (5.0 * a);
    const double c1 = rep.h_lower;
    rep.h0_upper = c1 > 0.0
                       ? std::exp(2.0 * std::pow(eps, 2.5) / (5.0 * a * c1) + eps / (2.0 * a)) *
                             (first_rec.terms.h0 + 2.0 * std::pow(eps, 3) / (3.0 * a * c1))
                       : std::numeric_limits<double>::infinity();

    rep.h_within = true;
    rep.h0_within = true;
    double max_h0 = 0.0;
    for (const auto& rec : run_data.records) {
        max_h0 = std::max(max_h0, rec.terms.h0);
        if (rec.terms.h < rep.h_lower - 1e-12 || rec.terms.h > rep.h_upper + 1e-12) {
            rep.h_within = false;
            if (rep.first_violation_t < 0.0) rep.first_violation_t = rec.t;
        }
    }
    if (max_h0 > rep.h0_upper + 1e-12) rep.h0_within = false;
    return rep;
}

/// Per-record roundness-class membership and the radius-pinning bounds.
struct SchwarzschildMonitorReport {
    struct Entry {
        double t = 0.0;
        BsigmaFlags bsigma;
        double r0_dev = 0.0;   // |r0(t) - sigma|
        double max_r = 0.0;
        bool identities_ok = false;  // the exact integral identities, <= 1e-12
    };
    std::vector<Entry> entries;
    bool all_bsigma_ok = true;
    double max_r0_dev = 0.0;
    double max_max_r = 0.0;
    bool m_positive = true;  // m = 0 disables the m^-1 bands
    double r0_band = 0.0;    // c (C0 + B2 + B3)
    double max_r_band = 0.0; // sigma + c (1/m + 1)(C0^2 + B2 + B3)
    bool r0_within = true, max_r_within = true;
};

inline SchwarzschildMonitorReport schwarzschild_monitors(const FlowRun& run_data,
                                                         const AmbientMetric& amb,
                                                         double sigma, double B1, double B2,
                                                         double B3, double band_c = 10.0) {
    if (amb.kind != AmbientKind::Schwarzschild)
        throw KindError("Schwarzschild monitors need a Schwarzschild run");
    SchwarzschildMonitorReport rep;
    rep.m_positive = amb.m > 0.0;
    const double C0 = std::max({1.0, amb.m, std::abs(amb.perturbation.amplitude)});
    rep.r0_band = band_c * (C0 + B2 + B3);
    rep.max_r_band = rep.m_positive
                         ? sigma + band_c * (1.0 / amb.m + 1.0) * (C0 * C0 + B2 + B3)
                         : std::numeric_limits<double>::infinity();

    for (const auto& rec : run_data.records) {
        SchwarzschildMonitorReport::Entry e;
        e.t = rec.t;
        e.bsigma = rec.monitor.bsigma;
        if (!e.bsigma.applicable) {
            // recompute flags when the run was made without sigma_ref
            e.bsigma.applicable = true;
            e.bsigma.max_aring_s3 = rec.monitor.max_aring * std::pow(sigma, 3);
            e.bsigma.max_grad_s4 = rec.monitor.max_grad_aring * std::pow(sigma, 4);
            e.bsigma.max_r_dev = std::abs(rec.monitor.max_r - sigma);
            e.bsigma.radius_ok = e.bsigma.max_r_dev <= B1;
            e.bsigma.aring_ok = e.bsigma.max_aring_s3 <= B2;
            e.bsigma.grad_aring_ok = e.bsigma.max_grad_s4 <= B3;
        }
        auto fit = fit_sphere(rec.surface);
        e.r0_dev = std::abs(fit.r0 - sigma);
        e.max_r = rec.monitor.max_r;
        e.identities_ok = identities_within(rec.terms);

        rep.all_bsigma_ok = rep.all_bsigma_ok && e.bsigma.all_ok();
        rep.max_r0_dev = std::max(rep.max_r0_dev, e.r0_dev);
        rep.max_max_r = std::max(rep.max_max_r, e.max_r);
        rep.entries.push_back(e);
    }
    rep.r0_within = rep.max_r0_dev <= rep.r0_band;
    rep.max_r_within = !rep.m_positive || rep.max_max_r <= rep.max_r_band;
    return rep;
}

}  // namespace apmcf
