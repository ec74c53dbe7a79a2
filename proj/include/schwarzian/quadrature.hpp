#pragma once

// Gauss-Legendre nodes/weights, the k-grid used by the correlator evaluators,
// and a composite-panel integrator for the oscillatory appendix identities.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "specfun.hpp"

namespace schw {

/// Nodes and weights on (-1,1); Newton iteration on the Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

enum class QuadRule { GaussLegendre, Trapezoid };

/// Per-evaluation quadrature settings.  k_max <= 0 or n_nodes <= 0 means
/// "derive from the diagram" (see auto_config).
struct QuadratureConfig {
    double k_max = 0.0;
    int n_nodes = 0;
    QuadRule rule = QuadRule::GaussLegendre;
};

/// A correlator evaluation together with the difference between two
/// quadrature refinement levels, as an absolute error estimate.
struct Value {
    double estimate = 0.0;
    double quadrature_error = 0.0;
};

struct Grid {
    std::vector<double> k, w;
};

inline Grid k_grid(double k_max, int n, QuadRule rule) {
    Grid g;
    if (rule == QuadRule::Trapezoid) {
        if (n < 2) throw std::invalid_argument("k_grid: trapezoid needs n >= 2");
        double h = k_max / (n - 1);
        g.k.resize(n);
        g.w.assign(n, h);
        for (int i = 0; i < n; ++i) g.k[i] = i * h;
        g.w.front() = 0.5 * h;
        g.w.back() = 0.5 * h;
        return g;
    }
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    g.k.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        g.k[i] = 0.5 * k_max * (x[i] + 1.0);
        g.w[i] = 0.5 * k_max * w[i];
    }
    return g;
}

// Tail bound for the face integrals.  The joint maximum of the integrand sits
// on the diagonal near k = 2pi/sigma^2 (sinh growth against the total Gaussian),
// and each face spreads by 1/(sigma sqrt(tau)) around it; 12 widths past the
// peak puts the truncated mass below 1e-12 relative in all tested regimes.
inline double default_k_max(double sigma, double tau_min) {
    return std::max(10.0, 2.0 * pi / (sigma * sigma) + 12.0 / (sigma * std::sqrt(tau_min)));
}

/// Fill in unset config fields from the face-length scale of the problem.
inline QuadratureConfig auto_config(QuadratureConfig cfg, double sigma, double tau_min) {
    if (cfg.k_max <= 0.0) cfg.k_max = default_k_max(sigma, tau_min);
    if (cfg.n_nodes <= 0) cfg.n_nodes = std::max(400, int(std::ceil(3.0 * cfg.k_max)));
    return cfg;
}

/// Composite Gauss-Legendre: fixed-width panels resolve oscillation without
/// adaptive machinery.  16 nodes per panel.
template <class F>
double integrate_panels(F&& f, double a, double b, double panel_width) {
    static const auto rule = [] {
        std::vector<double> x, w;
        gauss_legendre(16, x, w);
        return std::pair(x, w);
    }();
    if (!(b > a)) return 0.0;
    int np = std::max(1, int(std::ceil((b - a) / panel_width)));
    double h = (b - a) / np;
    double total = 0.0;
    for (int p = 0; p < np; ++p) {
        double lo = a + p * h;
        double s = 0.0;
        for (int i = 0; i < 16; ++i) {
            double t = lo + 0.5 * h * (rule.first[i] + 1.0);
            s += rule.second[i] * f(t);
        }
        total += 0.5 * h * s;
    }
    return total;
}

} // namespace schw
