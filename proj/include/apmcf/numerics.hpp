#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace apmcf {

/// Pairwise (cascade) summation with a fixed reduction order.
/// Used for every quadrature so that reductions are bit-stable regardless of
/// how callers partition work.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

/// Finite-difference weights on arbitrary nodes (Fornberg's algorithm).
/// Fills w[k][d] = weight of node k for the d-th derivative at x0,
/// for derivative orders d = 0..max_order.
inline void fd_weights(double x0, std::span<const double> x, int max_order,
                       std::vector<std::vector<double>>& w) {
    const int n = static_cast<int>(x.size()) - 1;
    const int m = max_order;
    w.assign(x.size(), std::vector<double>(m + 1, 0.0));

    double c1 = 1.0;
    double c4 = x[0] - x0;
    w[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j <= i - 1; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    w[i][k] = c1 * (k * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
                w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                w[j][k] = (c4 * w[j][k] - k * w[j][k - 1]) / c3;
            w[j][0] = c4 * w[j][0] / c3;
        }
        c1 = c2;
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
/// Newton iteration on the Legendre polynomial; deterministic.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < (n + 1) / 2; ++k) {
        // root of P_n nearest cos(pi*(k+3/4)/(n+1/2)), counted from x = +1
        double x = std::cos(pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // evaluate P_n(x) and P_n'(x) by the three-term recurrence
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = -p1 / dp;
            x += dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // refresh derivative at the converged root
        {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - k] = x;   // near +1 end
        nodes[k] = -x;          // mirror near -1
        weights[n - 1 - k] = wgt;
        weights[k] = wgt;
    }
    if (n % 2 == 1) {
        // middle node is exactly 0
        double p0 = 1.0, p1 = 0.0;  // P_j(0)
        for (int j = 2; j <= n; ++j) {
            const double p2 = (-(j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (-p0) / (-1.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (dp * dp);
    }
}

}  // namespace apmcf
