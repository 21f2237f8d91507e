#pragma once

/// Discrete extrinsic geometry of a radial graph in an ambient metric.
///
/// Angular derivatives act on the scalar graph function rho through the grid's
/// 4th-order stencils; the angular basis omega and its derivatives are closed
/// form, so a round sphere about the graph center is represented exactly.  The
/// sign convention  h_ij = -< D_i d_j F, nu >  with outward nu makes round
/// Euclidean spheres have H = 2/R > 0.

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "apmcf/ambient.hpp"
#include "apmcf/numerics.hpp"
#include "apmcf/surface.hpp"

namespace apmcf {

struct FirstFundamental {
    // graph-function derivatives (retained for the curvature pass)
    std::vector<double> rho_t, rho_p, rho_tt, rho_tp, rho_pp;
    // embedding and tangents, chart components
    std::vector<Eigen::Vector3d> F, Ft, Fp;
    // induced metric, inverse, area element
    std::vector<double> g11, g12, g22, det_g;
    std::vector<double> gi11, gi12, gi22;
    std::vector<double> weight;  // quadrature weight of the area measure
    // outward ambient-unit normal, raised and lowered components
    std::vector<Eigen::Vector3d> nu, nu_low;
    std::vector<double> margin;  // <nu, omega>_gbar, omega Euclid-unit radial
    // ambient cache
    std::vector<double> psi;
    std::vector<Eigen::Vector3d> conf_u;  // gradient of ln psi
    std::vector<Rank3> gamma;             // full symbols, only when P != 0
    std::vector<double> chart_r;          // |F|
    bool conformal = true;

    double area = 0.0;
    double min_margin = 0.0, min_r = 0.0, max_r = 0.0;
};

struct SecondFundamental {
    std::vector<double> h11, h12, h22;
    std::vector<double> H, A2, Aring2, E2;
    double min_H = 0.0, max_H = 0.0, max_A2 = 0.0, max_Aring2 = 0.0;
};

inline FirstFundamental first_fundamental(const RadialGraph& s, const AmbientMetric& amb) {
    s.validate();
    const GridSpec& g = *s.grid;
    const std::size_t n = g.size();

    FirstFundamental out;
    out.conformal = amb.conformally_flat();
    out.rho_t.resize(n);
    out.rho_p.resize(n);
    out.rho_tt.resize(n);
    out.rho_tp.resize(n);
    out.rho_pp.resize(n);
    g.d_theta(s.rho, Parity::Even, out.rho_t);
    g.d_phi(s.rho, out.rho_p);
    g.d2_theta(s.rho, Parity::Even, out.rho_tt);
    g.d_phi(out.rho_t, out.rho_tp);
    g.d2_phi(s.rho, out.rho_pp);

    out.F.resize(n);
    out.Ft.resize(n);
    out.Fp.resize(n);
    out.g11.resize(n);
    out.g12.resize(n);
    out.g22.resize(n);
    out.det_g.resize(n);
    out.gi11.resize(n);
    out.gi12.resize(n);
    out.gi22.resize(n);
    out.weight.resize(n);
    out.nu.resize(n);
    out.nu_low.resize(n);
    out.margin.resize(n);
    out.psi.resize(n);
    out.conf_u.resize(n);
    if (!out.conformal) out.gamma.resize(n);
    out.chart_r.resize(n);

    double min_margin = std::numeric_limits<double>::infinity();
    double min_r = std::numeric_limits<double>::infinity(), max_r = 0.0;

    AmbientMetric::Eval ev;
    for (int i = 0; i < g.n_theta; ++i) {
        const double st = g.sin_theta[i], ct = g.cos_theta[i];
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            const double sp = g.sin_phi[j], cp = g.cos_phi[j];
            const Eigen::Vector3d w(st * cp, st * sp, ct);
            const Eigen::Vector3d wt(ct * cp, ct * sp, -st);
            const Eigen::Vector3d wp(-st * sp, st * cp, 0.0);

            const double r = s.rho[k];
            const Eigen::Vector3d F = s.center + r * w;
            const Eigen::Vector3d Ft = out.rho_t[k] * w + r * wt;
            const Eigen::Vector3d Fp = out.rho_p[k] * w + r * wp;

            amb.evaluate(F, ev, /*with_symbols=*/!out.conformal);
            out.psi[k] = ev.psi;
            if (out.conformal) {
                // the curvature pass contracts the conformal symbols through
                // grad(ln psi) directly
                double psi;
                Eigen::Vector3d dpsi;
                amb.conformal(F, psi, dpsi);
                out.conf_u[k] = dpsi / psi;
            } else {
                out.gamma[k] = ev.gamma;
                out.conf_u[k].setZero();
            }

            const double g11 = Ft.dot(ev.g * Ft);
            const double g12 = Ft.dot(ev.g * Fp);
            const double g22 = Fp.dot(ev.g * Fp);
            const double det = g11 * g22 - g12 * g12;
            if (!(det > 0.0))
                throw DegenerateSurfaceError("induced metric degenerate (det g <= 0)");

            // conormal covector annihilating the tangent plane
            const Eigen::Vector3d ncov = Ft.cross(Fp);
            const Eigen::Vector3d nraised = ev.g_inv * ncov;
            const double nn = ncov.dot(nraised);
            const double inv_norm = 1.0 / std::sqrt(nn);
            const Eigen::Vector3d nu = nraised * inv_norm;
            const Eigen::Vector3d nu_low = ncov * inv_norm;

            out.F[k] = F;
            out.Ft[k] = Ft;
            out.Fp[k] = Fp;
            out.g11[k] = g11;
            out.g12[k] = g12;
            out.g22[k] = g22;
            out.det_g[k] = det;
            const double inv_det = 1.0 / det;
            out.gi11[k] = g22 * inv_det;
            out.gi12[k] = -g12 * inv_det;
            out.gi22[k] = g11 * inv_det;
            out.weight[k] = g.row_weight[i] * std::sqrt(det) / st;
            out.nu[k] = nu;
            out.nu_low[k] = nu_low;
            out.margin[k] = nu_low.dot(w);  // = <nu, omega>_gbar
            const double cr = F.norm();
            out.chart_r[k] = cr;

            min_margin = std::min(min_margin, out.margin[k]);
            min_r = std::min(min_r, cr);
            max_r = std::max(max_r, cr);
        }
    }
    out.area = pairwise_sum(out.weight);
    out.min_margin = min_margin;
    out.min_r = min_r;
    out.max_r = max_r;
    return out;
}

inline SecondFundamental second_fundamental(const RadialGraph& s, const AmbientMetric& amb,
                                            const FirstFundamental& first) {
    (void)amb;
    const GridSpec& g = *s.grid;
    const std::size_t n = g.size();

    SecondFundamental out;
    out.h11.resize(n);
    out.h12.resize(n);
    out.h22.resize(n);
    out.H.resize(n);
    out.A2.resize(n);
    out.Aring2.resize(n);
    out.E2.resize(n);

    double min_H = std::numeric_limits<double>::infinity(), max_H = -min_H;
    double max_A2 = 0.0, max_Aring2 = 0.0;

    for (int i = 0; i < g.n_theta; ++i) {
        const double st = g.sin_theta[i], ct = g.cos_theta[i];
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            const double sp = g.sin_phi[j], cp = g.cos_phi[j];
            const Eigen::Vector3d w(st * cp, st * sp, ct);
            const Eigen::Vector3d wt(ct * cp, ct * sp, -st);
            const Eigen::Vector3d wp(-st * sp, st * cp, 0.0);
            const Eigen::Vector3d wtp(-ct * sp, ct * cp, 0.0);
            const Eigen::Vector3d wpp(-st * cp, -st * sp, 0.0);

            const double r = s.rho[k];
            const double rt = first.rho_t[k], rp = first.rho_p[k];
            const Eigen::Vector3d Ftt = first.rho_tt[k] * w + 2.0 * rt * wt - r * w;
            const Eigen::Vector3d Ftp = first.rho_tp[k] * w + rt * wp + rp * wt + r * wtp;
            const Eigen::Vector3d Fpp = first.rho_pp[k] * w + 2.0 * rp * wp + r * wpp;

            const Eigen::Vector3d& Ft = first.Ft[k];
            const Eigen::Vector3d& Fp = first.Fp[k];
            const Eigen::Vector3d& nl = first.nu_low[k];

            double h11, h12, h22;
            if (first.conformal) {
                // Gamma(X,Y) = (u.Y) X + (u.X) Y - (X.Y) u  with u = grad ln psi
                const Eigen::Vector3d& u = first.conf_u[k];
                const double ut = u.dot(Ft), up = u.dot(Fp);
                const Eigen::Vector3d c11 = 2.0 * ut * Ft - Ft.dot(Ft) * u;
                const Eigen::Vector3d c12 = up * Ft + ut * Fp - Ft.dot(Fp) * u;
                const Eigen::Vector3d c22 = 2.0 * up * Fp - Fp.dot(Fp) * u;
                h11 = -(Ftt + c11).dot(nl);
                h12 = -(Ftp + c12).dot(nl);
                h22 = -(Fpp + c22).dot(nl);
            } else {
                const Rank3& ga = first.gamma[k];
                Eigen::Vector3d c11, c12, c22;
                for (int c = 0; c < 3; ++c) {
                    c11[c] = Ft.dot(ga[c] * Ft);
                    c12[c] = Ft.dot(ga[c] * Fp);
                    c22[c] = Fp.dot(ga[c] * Fp);
                }
                h11 = -(Ftt + c11).dot(nl);
                h12 = -(Ftp + c12).dot(nl);
                h22 = -(Fpp + c22).dot(nl);
            }

            // shape operator S = g^{-1} h; H = tr S, E2 = det S, |A|^2 = tr S^2
            const double gi11 = first.gi11[k], gi12 = first.gi12[k], gi22 = first.gi22[k];
            const double s00 = gi11 * h11 + gi12 * h12, s01 = gi11 * h12 + gi12 * h22;
            const double s10 = gi12 * h11 + gi22 * h12, s11 = gi12 * h12 + gi22 * h22;
            const double H = s00 + s11;
            const double A2 = s00 * s00 + 2.0 * s01 * s10 + s11 * s11;
            const double E2 = (h11 * h22 - h12 * h12) / first.det_g[k];
            // trace-free square in deviator form: free of the large-term
            // cancellation of tr S^2 - H^2/2, so near-umbilic states resolve
            // down to relative rounding instead of an absolute 1e-16 floor
            const double Aring2 = 0.5 * (s00 - s11) * (s00 - s11) + 2.0 * s01 * s10;

            out.h11[k] = h11;
            out.h12[k] = h12;
            out.h22[k] = h22;
            out.H[k] = H;
            out.A2[k] = A2;
            out.Aring2[k] = Aring2;
            out.E2[k] = E2;
            min_H = std::min(min_H, H);
            max_H = std::max(max_H, H);
            max_A2 = std::max(max_A2, A2);
            max_Aring2 = std::max(max_Aring2, Aring2);
        }
    }
    out.min_H = min_H;
    out.max_H = max_H;
    out.max_A2 = max_A2;
    out.max_Aring2 = max_Aring2;
    return out;
}

/// Integrated quantities of one snapshot.  h1 is NaN when int E2 <= 0.
struct GlobalTerms {
    double area = 0.0;
    double int_H = 0.0, int_H2 = 0.0, int_E2 = 0.0, int_HE2 = 0.0;
    double h = 0.0, h0 = 0.0, h1 = 0.0;
    double volume = 0.0;
    // direct quadratures of the squared deviations (independent route for the
    // exact integral identities)
    double int_dev_h_sq = 0.0, int_dev_h0_sq = 0.0;
};

namespace detail {
// fixed radial rule shared by every volume quadrature
inline const std::pair<std::vector<double>, std::vector<double>>& radial_rule() {
    static const auto rule = [] {
        std::vector<double> x, w;
        gauss_legendre(32, x, w);
        return std::make_pair(x, w);
    }();
    return rule;
}
}  // namespace detail

/// Volume enclosed by the surface, by per-node radial quadrature of sqrt(det g).
/// For Schwarzschild the integral starts on the inner coordinate sphere
/// r = r_inner > 0 (annular volume); r_inner = 0 integrates from the center.
inline double enclosed_volume(const RadialGraph& s, const AmbientMetric& amb, double r_inner) {
    const GridSpec& g = *s.grid;
    if (amb.kind == AmbientKind::Schwarzschild && !(r_inner > 0.0))
        throw ValidationError("Schwarzschild volume requires r_inner > 0");
    const auto& [xs, ws] = detail::radial_rule();
    std::vector<double> contrib(g.size());
    const double a2 = s.center.squaredNorm();
    for (int i = 0; i < g.n_theta; ++i) {
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            const Eigen::Vector3d w = s.omega(i, j);
            double s_lo = 0.0;
            if (r_inner > 0.0) {
                const double b = s.center.dot(w);
                const double disc = b * b + r_inner * r_inner - a2;
                if (disc <= 0.0)
                    throw ValidationError("graph center too far from the inner sphere");
                s_lo = -b + std::sqrt(disc);
            }
            const double hi = s.rho[k];
            if (hi <= s_lo) {
                contrib[k] = 0.0;
                continue;
            }
            const double half = 0.5 * (hi - s_lo), mid = 0.5 * (hi + s_lo);
            double acc = 0.0;
            for (int q = 0; q < 32; ++q) {
                const double t = mid + half * xs[q];
                acc += ws[q] * amb.volume_density(s.center + t * w) * t * t;
            }
            contrib[k] = g.row_weight[i] * half * acc;
        }
    }
    return pairwise_sum(contrib);
}

inline GlobalTerms global_terms(const RadialGraph& s, const AmbientMetric& amb,
                                const FirstFundamental& first, const SecondFundamental& second,
                                double r_inner = 0.0, bool with_volume = true) {
    const std::size_t n = s.grid->size();
    std::vector<double> buf(n);
    GlobalTerms t;
    t.area = first.area;
    for (std::size_t k = 0; k < n; ++k) buf[k] = first.weight[k] * second.H[k];
    t.int_H = pairwise_sum(buf);
    for (std::size_t k = 0; k < n; ++k) buf[k] = first.weight[k] * second.H[k] * second.H[k];
    t.int_H2 = pairwise_sum(buf);
    for (std::size_t k = 0; k < n; ++k) buf[k] = first.weight[k] * second.E2[k];
    t.int_E2 = pairwise_sum(buf);
    for (std::size_t k = 0; k < n; ++k) buf[k] = first.weight[k] * second.H[k] * second.E2[k];
    t.int_HE2 = pairwise_sum(buf);

    t.h = t.int_H / t.area;
    if (!(t.int_H > 0.0))
        throw NonpositiveMeanCurvatureError("integral of H is nonpositive; h0 undefined");
    t.h0 = t.int_H2 / t.int_H;
    t.h1 = t.int_E2 > 0.0 ? t.int_HE2 / t.int_E2 : std::numeric_limits<double>::quiet_NaN();

    for (std::size_t k = 0; k < n; ++k) {
        const double d = second.H[k] - t.h;
        buf[k] = first.weight[k] * d * d;
    }
    t.int_dev_h_sq = pairwise_sum(buf);
    for (std::size_t k = 0; k < n; ++k) {
        const double d = second.H[k] - t.h0;
        buf[k] = first.weight[k] * d * d;
    }
    t.int_dev_h0_sq = pairwise_sum(buf);

    t.volume = with_volume ? enclosed_volume(s, amb, r_inner)
                           : std::numeric_limits<double>::quiet_NaN();
    return t;
}

/// Laplace-Beltrami of a node field in divergence form; exact on constants.
///
/// The density sqrt(det g) = sin(theta) * J carries a |sin| kink across the
/// poles, so the sin(theta) factor of the colatitude flux is differentiated
/// analytically and only the smooth parts J V^theta (theta-odd) and
/// sqrt(det g) V^phi (even) go through the stencils.
inline std::vector<double> laplace_beltrami(const RadialGraph& s, const FirstFundamental& first,
                                            std::span<const double> f) {
    const GridSpec& g = *s.grid;
    const std::size_t n = g.size();
    std::vector<double> ft(n), fp(n), ut(n), up(n), dut(n), dup(n), out(n);
    g.d_theta(f, Parity::Even, ft);
    g.d_phi(f, fp);
    for (int i = 0; i < g.n_theta; ++i) {
        const double st = g.sin_theta[i];
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            const double sq = std::sqrt(first.det_g[k]);
            ut[k] = (sq / st) * (first.gi11[k] * ft[k] + first.gi12[k] * fp[k]);
            up[k] = sq * (first.gi12[k] * ft[k] + first.gi22[k] * fp[k]);
        }
    }
    g.d_theta(ut, Parity::Odd, dut);
    g.d_phi(up, dup);
    for (int i = 0; i < g.n_theta; ++i) {
        const double st = g.sin_theta[i], ct = g.cos_theta[i];
        for (int j = 0; j < g.n_phi; ++j) {
            const std::size_t k = g.idx(i, j);
            out[k] = (st * dut[k] + ct * ut[k] + dup[k]) / std::sqrt(first.det_g[k]);
        }
    }
    return out;
}

/// Pointwise norm |grad Aring| of the surface-covariant derivative of the
/// traceless second fundamental form.  Surface Christoffels come from finite
/// differences of the induced metric with the matching pole parities.
inline std::vector<double> covariant_grad_A_norm(const RadialGraph& s,
                                                 const FirstFundamental& first,
                                                 const SecondFundamental& second) {
    const GridSpec& g = *s.grid;
    const std::size_t n = g.size();

    std::vector<double> a11(n), a12(n), a22(n);
    for (std::size_t k = 0; k < n; ++k) {
        a11[k] = second.h11[k] - 0.5 * second.H[k] * first.g11[k];
        a12[k] = second.h12[k] - 0.5 * second.H[k] * first.g12[k];
        a22[k] = second.h22[k] - 0.5 * second.H[k] * first.g22[k];
    }

    // theta- and phi-derivatives of metric and Aring components
    auto dpair = [&](const std::vector<double>& f, Parity p, std::vector<double>& dt,
                     std::vector<double>& dp) {
        dt.resize(n);
        dp.resize(n);
        g.d_theta(f, p, dt);
        g.d_phi(f, dp);
    };
    std::vector<double> g11t, g11p, g12t, g12p, g22t, g22p;
    dpair(first.g11, Parity::Even, g11t, g11p);
    dpair(first.g12, Parity::Odd, g12t, g12p);
    dpair(first.g22, Parity::Even, g22t, g22p);
    std::vector<double> a11t, a11p, a12t, a12p, a22t, a22p;
    dpair(a11, Parity::Even, a11t, a11p);
    dpair(a12, Parity::Odd, a12t, a12p);
    dpair(a22, Parity::Even, a22t, a22p);

    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double gi[2][2] = {{first.gi11[k], first.gi12[k]}, {first.gi12[k], first.gi22[k]}};
        // dg[c][i][j] = d_c g_ij
        const double dg[2][2][2] = {{{g11t[k], g12t[k]}, {g12t[k], g22t[k]}},
                                    {{g11p[k], g12p[k]}, {g12p[k], g22p[k]}}};
        double chr[2][2][2];  // chr[c][i][j] = Gamma^c_ij
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double acc = 0.0;
                    for (int l = 0; l < 2; ++l)
                        acc += gi[c][l] * (dg[i][l][j] + dg[j][i][l] - dg[l][i][j]);
                    chr[c][i][j] = 0.5 * acc;
                }
        const double A[2][2] = {{a11[k], a12[k]}, {a12[k], a22[k]}};
        const double dA[2][2][2] = {{{a11t[k], a12t[k]}, {a12t[k], a22t[k]}},
                                    {{a11p[k], a12p[k]}, {a12p[k], a22p[k]}}};
        double cov[2][2][2];  // cov[c][i][j] = nabla_c A_ij
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double acc = dA[c][i][j];
                    for (int l = 0; l < 2; ++l)
                        acc -= chr[l][c][i] * A[l][j] + chr[l][c][j] * A[i][l];
                    cov[c][i][j] = acc;
                }
        double norm2 = 0.0;
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int cc = 0; cc < 2; ++cc)
                        for (int ii = 0; ii < 2; ++ii)
                            for (int jj = 0; jj < 2; ++jj)
                                norm2 += gi[c][cc] * gi[i][ii] * gi[j][jj] * cov[c][i][j] *
                                         cov[cc][ii][jj];
        out[k] = std::sqrt(std::max(0.0, norm2));
    }
    return out;
}

}  // namespace apmcf
