#pragma once

/// Closed surfaces as radial graphs over S^2:
///   F(theta, phi) = a + rho(theta, phi) * omega(theta, phi)
/// with omega the Euclidean unit radial direction of the parameter sphere.
/// Star-shapedness about the center a is automatic from the representation.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "apmcf/errors.hpp"
#include "apmcf/grid.hpp"

namespace apmcf {

struct RadialGraph {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    std::vector<double> rho;  // row-major [i * n_phi + j], strictly positive
    GridPtr grid;

    void validate() const {
        if (!grid) throw ValidationError("radial graph has no grid");
        if (rho.size() != grid->size()) throw ValidationError("rho size does not match grid");
        for (double r : rho)
            if (!(r > 0.0)) throw ValidationError("radial graph requires rho > 0 everywhere");
    }

    Eigen::Vector3d omega(int i, int j) const {
        const GridSpec& g = *grid;
        return {g.sin_theta[i] * g.cos_phi[j], g.sin_theta[i] * g.sin_phi[j], g.cos_theta[i]};
    }

    Eigen::Vector3d position(int i, int j) const {
        return center + rho[grid->idx(i, j)] * omega(i, j);
    }

    /// Sphere of radius R about the graph center.
    static RadialGraph sphere(GridPtr grid, const Eigen::Vector3d& center, double radius) {
        if (radius <= 0.0) throw ValidationError("sphere radius must be positive");
        RadialGraph s;
        s.center = center;
        s.grid = std::move(grid);
        s.rho.assign(s.grid->size(), radius);
        return s;
    }

    /// Round sphere of radius R centered at c, seen as a graph about a != c.
    /// Requires |c - a| < R so every ray from a crosses the sphere once.
    static RadialGraph offset_sphere(GridPtr grid, const Eigen::Vector3d& graph_center,
                                     const Eigen::Vector3d& sphere_center, double radius) {
        const Eigen::Vector3d d = sphere_center - graph_center;
        if (d.norm() >= radius)
            throw ValidationError("offset sphere: graph center must lie inside the sphere");
        RadialGraph s;
        s.center = graph_center;
        s.grid = std::move(grid);
        s.rho.resize(s.grid->size());
        for (int i = 0; i < s.grid->n_theta; ++i)
            for (int j = 0; j < s.grid->n_phi; ++j) {
                const Eigen::Vector3d w = s.omega(i, j);
                const double b = d.dot(w);
                s.rho[s.grid->idx(i, j)] =
                    b + std::sqrt(b * b + radius * radius - d.squaredNorm());
            }
        return s;
    }
};

struct Embedding {
    std::vector<Eigen::Vector3d> position;
    std::vector<Eigen::Vector3d> radial;  // omega per node
};

/// Chart points and radial directions for every node.
inline Embedding embed(const RadialGraph& s) {
    s.validate();
    Embedding e;
    e.position.resize(s.grid->size());
    e.radial.resize(s.grid->size());
    for (int i = 0; i < s.grid->n_theta; ++i)
        for (int j = 0; j < s.grid->n_phi; ++j) {
            const auto k = s.grid->idx(i, j);
            e.radial[k] = s.omega(i, j);
            e.position[k] = s.center + s.rho[k] * e.radial[k];
        }
    return e;
}

}  // namespace apmcf
