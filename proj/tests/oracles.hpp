#pragma once

// Test-side oracles, kept independent of the library implementation paths
// they check: plain quadrature, closed-form Gaussian identities and frozen
// statistical critical values.

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

// Composite Simpson rule.
inline double quad(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Standard normal CDF by quadrature of the density (no erf).
inline double normal_cdf(double z) {
    if (z < -12) return 0.0;
    if (z > 12) return 1.0;
    const double lo = -12.0;
    auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); };
    return quad(pdf, lo, z, 4000);
}

// Overlap squared of two centered amplitude Gaussians psi_i ~ exp(-x^2/(4 s_i^2)),
// where s_i is the position std of |psi_i|^2.
inline double gaussian_fidelity(double s1, double s2) {
    const double r = 2.0 * s1 * s2 / (s1 * s1 + s2 * s2);
    return r;  // |<psi1|psi2>|^2 = 2 s1 s2 / (s1^2 + s2^2)
}

// Free-packet dispersion (hbar = 1): position std of |psi_t|^2 for an initial
// width sigma0.
inline double free_dispersion(double sigma0, double mass, double t) {
    const double u = t / (2.0 * mass * sigma0 * sigma0);
    return sigma0 * std::sqrt(1.0 + u * u);
}

// chi^2 critical values at the 0.1% significance level (upper tail), frozen
// from standard tables for the dof used in tests.
inline double chi2_crit_999(int dof) {
    switch (dof) {
        case 9: return 27.88;
        case 14: return 36.12;
        case 19: return 43.82;
        case 29: return 58.30;
        default: return -1.0;  // force an explicit table entry
    }
}

// Binomial standard error.
inline double binom_se(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace oracles
