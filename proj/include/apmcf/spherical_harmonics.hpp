#pragma once

/// Real spherical harmonics, orthonormal over the whole sphere:
///   integral over S^2 of Y_{lm} Y_{l'm'} dOmega = delta_{ll'} delta_{mm'}.
/// m > 0 pairs with cos(m phi), m < 0 with sin(|m| phi).

#include <cmath>
#include <numbers>

namespace apmcf {

/// Associated Legendre P_l^m(x) without the Condon-Shortley phase.
inline double legendre_plm(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double somx2 = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int i = 1; i <= m; ++i) {
            pmm *= fact * somx2;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmmp1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmmp1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = (x * (2.0 * ll - 1.0) * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmmp1;
        pmmp1 = pll;
    }
    return pll;
}

inline double real_sph_harmonic(int l, int m, double theta, double phi) {
    const int am = m < 0 ? -m : m;
    double norm = (2.0 * l + 1.0) / (4.0 * std::numbers::pi);
    for (int k = l - am + 1; k <= l + am; ++k) norm /= k;
    norm = std::sqrt(norm);
    const double p = legendre_plm(l, am, std::cos(theta));
    if (m == 0) return norm * p;
    const double a = std::numbers::sqrt2 * norm * p;
    return m > 0 ? a * std::cos(am * phi) : a * std::sin(am * phi);
}

}  // namespace apmcf
