#pragma once

/// Ambient 3-manifold geometries evaluated in one Cartesian chart.
///
/// Every supported geometry takes the conformal-plus-deviation form
///     g_ab(x) = psi(x)^2 delta_ab + P_ab(x)
/// with
///     Euclidean        psi = 1
///     SphereChart      psi = 2/(1+|x|^2)        stereographic chart of the round 3-sphere
///     HyperbolicChart  psi = 2/(1-|x|^2)        Poincare ball, |x| < 1
///     Schwarzschild    psi = (1+m/2r)^2, r=|x|  asymptotically flat end, mass m > 0
/// and P either zero or a compactly-cut-off axial deviatoric field decaying
/// like r^-2.  Geodesic spheres about the chart origin of the space forms are
/// Euclidean spheres in the chart, which is what makes closed-form testing of
/// the surface pipeline possible.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <string>

#include "apmcf/errors.hpp"

namespace apmcf {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rank3 = std::array<Mat3, 3>;  // [gamma](alpha, beta)

enum class AmbientKind { Euclidean, SphereChart, HyperbolicChart, Schwarzschild };

inline const char* to_string(AmbientKind k) {
    switch (k) {
        case AmbientKind::Euclidean: return "euclidean";
        case AmbientKind::SphereChart: return "sphere";
        case AmbientKind::HyperbolicChart: return "hyperbolic";
        case AmbientKind::Schwarzschild: return "schwarzschild";
    }
    return "?";
}

/// Deviation field P_ab added to the conformal metric (Schwarzschild only).
///
/// AxialDeviatoric realizes P_ab = beta * chi(r) * r^-2 * (e_a e_b - delta_ab/3)
/// with e = x/r and chi a C^2 quintic ramp vanishing for r <= r_cut and equal
/// to one for r >= 2 r_cut.  Closed-form derivatives are supplied to order 2.
struct PerturbationSpec {
    enum class Family { Zero, AxialDeviatoric };

    Family family = Family::Zero;
    double amplitude = 0.0;  // beta
    double r_cut = 1.0;

    bool is_zero() const { return family == Family::Zero || amplitude == 0.0; }

    static PerturbationSpec zero() { return {}; }

    static PerturbationSpec axial_deviatoric(double beta, double r_cut) {
        if (r_cut <= 0.0) throw ValidationError("perturbation r_cut must be positive");
        PerturbationSpec p;
        p.family = Family::AxialDeviatoric;
        p.amplitude = beta;
        p.r_cut = r_cut;
        // keep g = psi^2 I + P positive definite on r >= r_cut: psi^2 >= 1 there
        // while |eig P| <= (2/3)|beta|/r_cut^2.
        if (2.0 * std::abs(beta) / (3.0 * r_cut * r_cut) >= 0.9)
            throw ValidationError("perturbation amplitude too large for positive definiteness");
        return p;
    }

    // Quintic ramp in q = (r - r_cut)/r_cut on [0,1]; C^2 at both ends.
    void ramp(double r, double& chi, double& dchi, double& d2chi) const {
        if (r <= r_cut) {
            chi = dchi = d2chi = 0.0;
            return;
        }
        const double q = (r - r_cut) / r_cut;
        if (q >= 1.0) {
            chi = 1.0;
            dchi = d2chi = 0.0;
            return;
        }
        const double q2 = q * q;
        chi = q2 * q * (10.0 + q * (-15.0 + 6.0 * q));
        dchi = 30.0 * q2 * (1.0 + q * (-2.0 + q)) / r_cut;
        d2chi = 60.0 * q * (1.0 + q * (-3.0 + 2.0 * q)) / (r_cut * r_cut);
    }

    // radial profile S(r) = beta * chi(r) / r^2 and its first two derivatives
    void profile(double r, double& S, double& dS, double& d2S) const {
        double chi, dchi, d2chi;
        ramp(r, chi, dchi, d2chi);
        const double r2 = r * r;
        S = amplitude * chi / r2;
        dS = amplitude * (dchi / r2 - 2.0 * chi / (r2 * r));
        d2S = amplitude * (d2chi / r2 - 4.0 * dchi / (r2 * r) + 6.0 * chi / (r2 * r2));
    }

    Mat3 value(const Vec3& x) const {
        if (is_zero()) return Mat3::Zero();
        const double r = x.norm();
        double S, dS, d2S;
        profile(r, S, dS, d2S);
        if (S == 0.0) return Mat3::Zero();
        const Vec3 e = x / r;
        return S * (e * e.transpose() - Mat3::Identity() / 3.0);
    }

    Rank3 derivative(const Vec3& x) const {
        Rank3 dP{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
        if (is_zero()) return dP;
        const double r = x.norm();
        double S, dS, d2S;
        profile(r, S, dS, d2S);
        if (S == 0.0 && dS == 0.0) return dP;
        const Vec3 e = x / r;
        const Mat3 T = e * e.transpose() - Mat3::Identity() / 3.0;
        for (int c = 0; c < 3; ++c) {
            Mat3 W;  // W_ab = d_c (e_a e_b)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                    W(a, b) = ((a == c ? e[b] : 0.0) + (b == c ? e[a] : 0.0) -
                               2.0 * e[a] * e[b] * e[c]) /
                              r;
            dP[c] = dS * e[c] * T + S * W;
        }
        return dP;
    }

    /// d_d d_c P_ab, returned as second[d][c].  Test / bound-check use only.
    std::array<Rank3, 3> second_derivative(const Vec3& x) const {
        std::array<Rank3, 3> out;
        for (auto& r3 : out) r3 = {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
        if (is_zero()) return out;
        const double r = x.norm();
        double S, dS, d2S;
        profile(r, S, dS, d2S);
        if (S == 0.0 && dS == 0.0 && d2S == 0.0) return out;
        const Vec3 e = x / r;
        const Mat3 T = e * e.transpose() - Mat3::Identity() / 3.0;
        auto W = [&](int a, int b, int c) {
            return ((a == c ? e[b] : 0.0) + (b == c ? e[a] : 0.0) - 2.0 * e[a] * e[b] * e[c]) / r;
        };
        auto dele = [&](int mu, int d) { return ((mu == d ? 1.0 : 0.0) - e[mu] * e[d]) / r; };
        for (int d = 0; d < 3; ++d)
            for (int c = 0; c < 3; ++c)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        const double dW =
                            ((a == c ? dele(b, d) : 0.0) + (b == c ? dele(a, d) : 0.0) -
                             2.0 * (dele(a, d) * e[b] * e[c] + e[a] * dele(b, d) * e[c] +
                                    e[a] * e[b] * dele(c, d))) /
                                r -
                            W(a, b, c) * e[d] / r;
                        out[d][c](a, b) = d2S * e[d] * e[c] * T(a, b) +
                                          dS * dele(c, d) * T(a, b) + dS * e[c] * W(a, b, d) +
                                          dS * e[d] * W(a, b, c) + S * dW;
                    }
        return out;
    }

    /// Decay constants C_1..C_3 such that |P| <= C_1 r^-2 and
    /// |d^l P| <= C_{l+1} r^{-l-2} for l = 1, 2 (componentwise).
    std::array<double, 3> decay_constants() const {
        const double b = std::abs(amplitude);
        return {b, 8.0 * b, 64.0 * b};
    }
};

struct RicciEstimate {
    double value;  // -2m / sigma^3
    double band;   // c * sigma^-4
};

/// One of the four ambient geometries; all evaluations are pure functions of
/// immutable parameters, safe to call from any thread.
struct AmbientMetric {
    AmbientKind kind = AmbientKind::Euclidean;
    double m = 0.0;  // Schwarzschild mass
    PerturbationSpec perturbation;
    int curvature_c = 0;  // sectional curvature tag of the space-form kinds

    static AmbientMetric euclidean() { return {AmbientKind::Euclidean, 0.0, {}, 0}; }
    static AmbientMetric sphere_chart() { return {AmbientKind::SphereChart, 0.0, {}, +1}; }
    static AmbientMetric hyperbolic_chart() { return {AmbientKind::HyperbolicChart, 0.0, {}, -1}; }

    static AmbientMetric schwarzschild(double mass, PerturbationSpec p = {}) {
        if (mass <= 0.0) throw ValidationError("Schwarzschild mass must satisfy m > 0");
        return {AmbientKind::Schwarzschild, mass, p, 0};
    }

    bool conformally_flat() const {
        return kind != AmbientKind::Schwarzschild || perturbation.is_zero();
    }

    void check_domain(const Vec3& x) const {
        switch (kind) {
            case AmbientKind::Euclidean:
            case AmbientKind::SphereChart:
                return;
            case AmbientKind::HyperbolicChart:
                if (x.squaredNorm() >= 1.0)
                    throw DomainError("point outside the Poincare ball |x| < 1");
                return;
            case AmbientKind::Schwarzschild: {
                const double r = x.norm();
                if (r <= 0.0) throw DomainError("Schwarzschild chart requires |x| > 0");
                if (!perturbation.is_zero() && r <= perturbation.r_cut * (1.0 + 1e-6))
                    throw DomainError("point below the perturbation cutoff radius");
                return;
            }
        }
    }

    /// conformal factor psi and its gradient; second return is d_a psi
    void conformal(const Vec3& x, double& psi, Vec3& dpsi) const {
        switch (kind) {
            case AmbientKind::Euclidean:
                psi = 1.0;
                dpsi.setZero();
                return;
            case AmbientKind::SphereChart: {
                psi = 2.0 / (1.0 + x.squaredNorm());
                dpsi = -psi * psi * x;
                return;
            }
            case AmbientKind::HyperbolicChart: {
                psi = 2.0 / (1.0 - x.squaredNorm());
                dpsi = psi * psi * x;
                return;
            }
            case AmbientKind::Schwarzschild: {
                const double r = x.norm();
                const double phi = 1.0 + 0.5 * m / r;
                psi = phi * phi;
                dpsi = -(m * phi / (r * r * r)) * x;
                return;
            }
        }
    }

    /// Fused evaluation used by the surface pipeline: metric, inverse metric,
    /// Christoffel symbols, conformal data, and the analytic smallest eigenvalue.
    struct Eval {
        Mat3 g;
        Mat3 g_inv;
        Rank3 gamma;  // gamma[c](a,b) = Gamma^c_ab
        double psi = 1.0;
        double min_eig = 1.0;
    };

    void evaluate(const Vec3& x, Eval& out, bool with_symbols = true) const {
        check_domain(x);
        double psi;
        Vec3 dpsi;
        conformal(x, psi, dpsi);
        out.psi = psi;
        const double psi2 = psi * psi;

        if (conformally_flat()) {
            out.g = psi2 * Mat3::Identity();
            out.g_inv = (1.0 / psi2) * Mat3::Identity();
            out.min_eig = psi2;
            if (with_symbols) {
                // Gamma^c_ab = d^c_a u_b + d^c_b u_a - delta_ab u^c, u = ln psi
                const Vec3 u = dpsi / psi;
                for (int c = 0; c < 3; ++c)
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            out.gamma[c](a, b) = (c == a ? u[b] : 0.0) + (c == b ? u[a] : 0.0) -
                                                 (a == b ? u[c] : 0.0);
            }
        } else {
            const Mat3 P = perturbation.value(x);
            out.g = psi2 * Mat3::Identity() + P;
            // analytic extreme eigenvalues of psi^2 I + P (P has eigenvalues
            // {2s/3, -s/3, -s/3} with s the radial profile)
            const double r = x.norm();
            double S, dS, d2S;
            perturbation.profile(r, S, dS, d2S);
            out.min_eig = psi2 - std::abs(S) * (S > 0.0 ? 1.0 / 3.0 : 2.0 / 3.0);
            out.g_inv = out.g.inverse();
            const Rank3 dP = perturbation.derivative(x);
            Rank3 dg;
            for (int c = 0; c < 3; ++c)
                dg[c] = (2.0 * psi * dpsi[c]) * Mat3::Identity() + dP[c];
            for (int c = 0; c < 3; ++c)
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        double s = 0.0;
                        for (int d = 0; d < 3; ++d)
                            s += out.g_inv(c, d) * (dg[a](d, b) + dg[b](a, d) - dg[d](a, b));
                        out.gamma[c](a, b) = 0.5 * s;
                    }
        }
        if (out.min_eig <= 1e-12)
            throw DegenerateMetricError("ambient metric lost positive definiteness");
    }

    Mat3 metric_at(const Vec3& x) const {
        Eval e;
        evaluate(x, e);
        return e.g;
    }

    Rank3 metric_derivatives_at(const Vec3& x) const {
        check_domain(x);
        double psi;
        Vec3 dpsi;
        conformal(x, psi, dpsi);
        Rank3 dg = perturbation.is_zero()
                       ? Rank3{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}
                       : perturbation.derivative(x);
        for (int c = 0; c < 3; ++c) dg[c] += (2.0 * psi * dpsi[c]) * Mat3::Identity();
        // positive definiteness is still asserted at the base point
        Eval e;
        evaluate(x, e);
        return dg;
    }

    Rank3 christoffel_at(const Vec3& x) const {
        Eval e;
        evaluate(x, e);
        return e.gamma;
    }

    /// Expected R̄ic(nu, nu) on the coordinate sphere |x| = sigma, with the
    /// configured error band.  Monitor reference only.
    RicciEstimate ricci_normal_estimate(double sigma, double band_c = 10.0) const {
        if (kind != AmbientKind::Schwarzschild)
            throw KindError("Ricci normal estimate defined for Schwarzschild only");
        if (sigma <= std::max(1.0, 2.0 * perturbation.r_cut))
            throw DomainError("Ricci estimate requires sigma > max(1, 2 r_cut)");
        const double s3 = sigma * sigma * sigma;
        return {-2.0 * m / s3, band_c / (s3 * sigma)};
    }

    /// Upper bound for |Ric(nu,nu)| over chart radii >= min_r; CFL bookkeeping.
    double ricci_bound(double min_r, double band_c = 10.0) const {
        switch (kind) {
            case AmbientKind::Euclidean: return 0.0;
            case AmbientKind::SphereChart:
            case AmbientKind::HyperbolicChart: return 2.0;
            case AmbientKind::Schwarzschild: {
                const double r3 = min_r * min_r * min_r;
                return 2.0 * m / r3 + band_c / (r3 * min_r);
            }
        }
        return 0.0;
    }

    /// sqrt(det g) at x; volume quadrature integrand.
    double volume_density(const Vec3& x) const {
        double psi;
        Vec3 dpsi;
        conformal(x, psi, dpsi);
        const double psi2 = psi * psi;
        if (conformally_flat()) return psi2 * psi;
        const Mat3 g = psi2 * Mat3::Identity() + perturbation.value(x);
        return std::sqrt(g.determinant());
    }
};

}  // namespace apmcf
