#pragma once

/// Quadrature grid over S^2: Gauss-Legendre colatitudes x uniform longitudes.
///
/// Nodes exclude the poles.  Quadrature weights integrate solid angle exactly
/// for band-limited integrands (sum of weights is 4 pi to rounding).  Finite
/// differences are 4th-order centered stencils; colatitude stencils reaching
/// past a pole continue the field along the meridian with a half-turn shift in
/// longitude, with a sign that depends on the tensor character of the field
/// (scalars and theta-even components continue evenly, theta-odd components
/// flip).
///
/// The grid also owns a longitudinal spectral filter.  Uniform-longitude grids
/// over-resolve the zonal direction near the poles; explicit time stepping is
/// only stable (at time steps set by the isotropic resolution) if zonal modes
/// beyond the locally resolvable wavenumber  m <= (Nphi/2) sin(theta)  are
/// projected out.  The filter is an exact orthogonal projection per latitude
/// circle and leaves resolved smooth fields unchanged to rounding.

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "apmcf/errors.hpp"
#include "apmcf/numerics.hpp"

namespace apmcf {

enum class Parity { Even, Odd };

struct GridSpec {
    int n_theta = 0;
    int n_phi = 0;
    double dphi = 0.0;

    std::vector<double> theta, sin_theta, cos_theta;  // per row
    std::vector<double> gl_weight;                    // per row, sums to 2
    std::vector<double> row_weight;                   // gl_weight * dphi (solid-angle weight)
    std::vector<double> phi, sin_phi, cos_phi;        // per column
    std::vector<double> row_spacing;                  // min colatitude gap to a neighbor row

    // colatitude stencils for d/dtheta and d2/dtheta2: symmetric 7-point
    // neighborhoods.  Gauss-Legendre colatitudes are only asymptotically
    // uniform; near the poles the spacing asymmetry at the k-th row is O(1/k^2)
    // independent of resolution, so a 5-point stencil leaves a 3rd-order
    // second-derivative residual there.  Seven nodes keep every row at order
    // >= 4 structurally.
    struct Tap {
        int row;
        bool mirrored;  // value taken at (row, j + n_phi/2), sign by parity
        double c1;
        double c2;
    };
    std::vector<std::vector<Tap>> theta_taps;  // per row

    // longitudinal filter: per-row orthonormal basis of kept zonal modes;
    // empty matrix means the row is left untouched
    std::vector<Eigen::MatrixXd> filter_basis;

    std::size_t size() const { return static_cast<std::size_t>(n_theta) * n_phi; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_phi + j; }

    static std::shared_ptr<const GridSpec> create(int n_theta, int n_phi) {
        if (n_theta < 16) throw ValidationError("grid requires n_theta >= 16");
        if (n_phi < 2 * n_theta) throw ValidationError("grid requires n_phi >= 2*n_theta");
        if (n_phi % 2 != 0) throw ValidationError("grid requires even n_phi");

        auto g = std::make_shared<GridSpec>();
        g->n_theta = n_theta;
        g->n_phi = n_phi;
        g->dphi = 2.0 * std::numbers::pi / n_phi;

        std::vector<double> x, w;
        gauss_legendre(n_theta, x, w);
        g->theta.resize(n_theta);
        g->sin_theta.resize(n_theta);
        g->cos_theta.resize(n_theta);
        g->gl_weight.resize(n_theta);
        g->row_weight.resize(n_theta);
        for (int i = 0; i < n_theta; ++i) {
            // descending x gives ascending colatitude
            const double xi = x[n_theta - 1 - i];
            g->theta[i] = std::acos(xi);
            g->cos_theta[i] = xi;
            g->sin_theta[i] = std::sqrt(1.0 - xi * xi);
            g->gl_weight[i] = w[n_theta - 1 - i];
            g->row_weight[i] = g->gl_weight[i] * g->dphi;
        }

        g->phi.resize(n_phi);
        g->sin_phi.resize(n_phi);
        g->cos_phi.resize(n_phi);
        for (int j = 0; j < n_phi; ++j) {
            g->phi[j] = g->dphi * j;
            g->sin_phi[j] = std::sin(g->phi[j]);
            g->cos_phi[j] = std::cos(g->phi[j]);
        }

        g->row_spacing.resize(n_theta);
        for (int i = 0; i < n_theta; ++i) {
            double lo = (i > 0) ? g->theta[i] - g->theta[i - 1] : 2.0 * g->theta[0];
            double hi = (i + 1 < n_theta) ? g->theta[i + 1] - g->theta[i]
                                          : 2.0 * (std::numbers::pi - g->theta[n_theta - 1]);
            g->row_spacing[i] = std::min(lo, hi);
        }

        g->build_theta_stencils();
        g->build_filter();
        return g;
    }

    // ---- finite differences -------------------------------------------------

    void build_theta_stencils() {
        theta_taps.assign(n_theta, {});
        std::vector<std::vector<double>> wts;
        for (int i = 0; i < n_theta; ++i) {
            const int lo = i - 3, hi = i + 3;
            std::vector<Tap> taps;
            std::vector<double> pos;
            for (int k = lo; k <= hi; ++k) {
                Tap t{};
                if (k < 0) {
                    t.row = -1 - k;  // mirror across the north pole
                    t.mirrored = true;
                    pos.push_back(-theta[t.row]);
                } else if (k >= n_theta) {
                    t.row = 2 * n_theta - 1 - k;  // mirror across the south pole
                    t.mirrored = true;
                    pos.push_back(2.0 * std::numbers::pi - theta[t.row]);
                } else {
                    t.row = k;
                    t.mirrored = false;
                    pos.push_back(theta[k]);
                }
                taps.push_back(t);
            }
            fd_weights(theta[i], pos, 2, wts);
            for (std::size_t s = 0; s < taps.size(); ++s) {
                taps[s].c1 = wts[s][1];
                taps[s].c2 = wts[s][2];
            }
            theta_taps[i] = std::move(taps);
        }
    }

    double tap_value(std::span<const double> f, const Tap& t, int j, double sign) const {
        const int jj = t.mirrored ? (j + n_phi / 2) % n_phi : j;
        const double v = f[idx(t.row, jj)];
        return t.mirrored ? sign * v : v;
    }

    /// d f / d theta.  Parity: how the field continues across the poles.
    void d_theta(std::span<const double> f, Parity p, std::span<double> out) const {
        const double sign = (p == Parity::Even) ? 1.0 : -1.0;
        for (int i = 0; i < n_theta; ++i) {
            const auto& taps = theta_taps[i];
            for (int j = 0; j < n_phi; ++j) {
                double acc = 0.0;
                for (const Tap& t : taps) acc += t.c1 * tap_value(f, t, j, sign);
                out[idx(i, j)] = acc;
            }
        }
    }

    void d2_theta(std::span<const double> f, Parity p, std::span<double> out) const {
        const double sign = (p == Parity::Even) ? 1.0 : -1.0;
        for (int i = 0; i < n_theta; ++i) {
            const auto& taps = theta_taps[i];
            for (int j = 0; j < n_phi; ++j) {
                double acc = 0.0;
                for (const Tap& t : taps) acc += t.c2 * tap_value(f, t, j, sign);
                out[idx(i, j)] = acc;
            }
        }
    }

    /// d f / d phi (periodic, uniform 4th order).
    void d_phi(std::span<const double> f, std::span<double> out) const {
        const double c = 1.0 / (12.0 * dphi);
        for (int i = 0; i < n_theta; ++i) {
            const std::size_t base = idx(i, 0);
            for (int j = 0; j < n_phi; ++j) {
                const int jm2 = (j - 2 + n_phi) % n_phi, jm1 = (j - 1 + n_phi) % n_phi;
                const int jp1 = (j + 1) % n_phi, jp2 = (j + 2) % n_phi;
                out[base + j] = c * (-f[base + jp2] + 8.0 * f[base + jp1] -
                                     8.0 * f[base + jm1] + f[base + jm2]);
            }
        }
    }

    void d2_phi(std::span<const double> f, std::span<double> out) const {
        const double c = 1.0 / (12.0 * dphi * dphi);
        for (int i = 0; i < n_theta; ++i) {
            const std::size_t base = idx(i, 0);
            for (int j = 0; j < n_phi; ++j) {
                const int jm2 = (j - 2 + n_phi) % n_phi, jm1 = (j - 1 + n_phi) % n_phi;
                const int jp1 = (j + 1) % n_phi, jp2 = (j + 2) % n_phi;
                out[base + j] = c * (-f[base + jp2] + 16.0 * f[base + jp1] - 30.0 * f[base + j] +
                                     16.0 * f[base + jm1] - f[base + jm2]);
            }
        }
    }

    // ---- longitudinal filter ------------------------------------------------

    int zonal_cap(int i) const {
        return std::max(2, static_cast<int>(std::floor(0.5 * n_phi * sin_theta[i])));
    }

    void build_filter() {
        filter_basis.assign(n_theta, Eigen::MatrixXd());
        for (int i = 0; i < n_theta; ++i) {
            const int mc = zonal_cap(i);
            if (mc >= n_phi / 2) continue;  // fully resolved row
            Eigen::MatrixXd B(n_phi, 2 * mc + 1);
            const double c0 = 1.0 / std::sqrt(static_cast<double>(n_phi));
            const double cm = std::sqrt(2.0 / n_phi);
            for (int j = 0; j < n_phi; ++j) {
                B(j, 0) = c0;
                for (int m = 1; m <= mc; ++m) {
                    B(j, 2 * m - 1) = cm * std::cos(m * phi[j]);
                    B(j, 2 * m) = cm * std::sin(m * phi[j]);
                }
            }
            filter_basis[i] = std::move(B);
        }
    }

    /// Project every latitude circle onto its resolvable zonal modes (in place).
    void filter_longitudinal(std::span<double> f) const {
        for (int i = 0; i < n_theta; ++i) {
            const Eigen::MatrixXd& B = filter_basis[i];
            if (B.size() == 0) continue;
            Eigen::Map<Eigen::VectorXd> row(f.data() + idx(i, 0), n_phi);
            row = B * (B.transpose() * row);
        }
    }
};

using GridPtr = std::shared_ptr<const GridSpec>;

}  // namespace apmcf
