#pragma once

// Stress-energy tensor correlators: the exact limiting formula (per-face k^2
// insertions), spectral moments, the epsilon-regularised pre-limit via
// inclusion-exclusion over counterterms, and the expansion integral that
// fixes the 1/240 and k^2/12 constants.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "correlator.hpp"

namespace schw {

/// Insertion points on top of a base circle diagram.
struct StressSpec {
    CircleDiagram base;
    std::vector<double> insertion_points; // distinct, away from all chord endpoints
    double sigma = 1.0;
};

namespace detail {

inline void validate_stress(const StressSpec& s) {
    for (std::size_t p = 0; p < s.insertion_points.size(); ++p) {
        double rp = frac(s.insertion_points[p]);
        for (std::size_t q = p + 1; q < s.insertion_points.size(); ++q)
            if (std::abs(frac(s.insertion_points[q]) - rp) < position_tol)
                throw std::invalid_argument("insertion points must be distinct");
        for (std::size_t j = 0; j < s.base.chords.size(); ++j) {
            const Chord& c = s.base.chords[j];
            if (std::abs(frac(c.s) - rp) < position_tol || std::abs(frac(c.t) - rp) < position_tol)
                throw std::invalid_argument("insertion point " + std::to_string(p) +
                                            " coincides with an endpoint of chord " + std::to_string(j));
        }
    }
}

} // namespace detail

/// Correlator with the extra factor sigma^{4M} prod_p k^2(r_p), k(r_p) being
/// the Fourier variable of the face whose boundary arc contains r_p.
inline Value stress_correlator(const StressSpec& spec, QuadratureConfig cfg = {}) {
    detail::validate_stress(spec);
    FaceDecomposition fd = decompose_circle(spec.base);
    detail::check_zero_tau(fd, false);
    auto faces = detail::nodes_from(fd, spec.base.chords, FaceWeightKind::Sinh, 0.0);
    if (spec.base.chords.empty()) {
        faces[0].k2_insertions = int(spec.insertion_points.size());
    } else {
        for (double r : spec.insertion_points) faces[face_of_point(spec.base, r)].k2_insertions++;
    }
    return evaluate_faces_value(faces, spec.sigma, cfg);
}

/// int_0^inf sigma^{4M} exp(-sigma^2 k^2/2) sinh(2 pi k) 2 k^{2M+1} dk.
inline Value spectral_moment(int M, double sigma, QuadratureConfig cfg = {}) {
    if (M < 1) throw std::domain_error("spectral_moment: M >= 1");
    std::vector<FaceNode> faces(1);
    faces[0].tau = 1.0;
    faces[0].k2_insertions = M;
    return evaluate_faces_value(faces, sigma, cfg);
}

/// 6^M sum over insertion subsets S of prod_{p not in S}(-eps_p^{-2} - sigma^4/240)
/// times the correlator on the diagram augmented with a power-2 chord
/// (r_p, r_p + eps_p) for each p in S.
inline Value regularized_stress_lhs(const StressSpec& spec, const std::vector<double>& epsilons,
                                    QuadratureConfig cfg = {}) {
    detail::validate_stress(spec);
    const int M = int(spec.insertion_points.size());
    if (int(epsilons.size()) != M)
        throw std::invalid_argument("need one epsilon per insertion point");
    double s4 = std::pow(spec.sigma, 4);
    double six_m = std::pow(6.0, M);

    // the grid scale is set by the smallest augmented face
    double eps_min = 1.0;
    for (double e : epsilons) {
        if (!(e > 0.0)) throw std::domain_error("epsilons must be positive");
        eps_min = std::min(eps_min, e);
    }
    {
        CircleDiagram all = spec.base;
        for (int p = 0; p < M; ++p)
            all.chords.push_back({spec.insertion_points[p],
                                  detail::frac(spec.insertion_points[p] + epsilons[p]), 2});
        if (!check_non_interlaced(all.chords, Geometry::Circle))
            throw std::invalid_argument(
                "augmented diagram is interlaced; shrink the epsilons so each (r_p, r_p+eps_p) "
                "chord stays inside its face");
        FaceDecomposition fd = decompose_circle(all);
        double tmin = fd.faces[0].tau > 1e-9 ? fd.faces[0].tau : 1.0;
        for (const auto& f : fd.faces)
            if (f.tau > 1e-9) tmin = std::min(tmin, f.tau);
        cfg = auto_config(cfg, spec.sigma, tmin);
    }

    auto eval_level = [&](QuadratureConfig level_cfg) {
        double total = 0.0;
        for (int mask = 0; mask < (1 << M); ++mask) {
            CircleDiagram d = spec.base;
            double coeff = 1.0;
            for (int p = 0; p < M; ++p) {
                if (mask & (1 << p))
                    d.chords.push_back({spec.insertion_points[p],
                                        detail::frac(spec.insertion_points[p] + epsilons[p]), 2});
                else
                    coeff *= -(1.0 / (epsilons[p] * epsilons[p]) + s4 / 240.0);
            }
            Grid g = k_grid(level_cfg.k_max, level_cfg.n_nodes, level_cfg.rule);
            FaceDecomposition fd = decompose_circle(d);
            auto faces = detail::nodes_from(fd, d.chords, FaceWeightKind::Sinh, 0.0);
            total += coeff * evaluate_faces(faces, spec.sigma, g);
        }
        return six_m * total;
    };
    double v = eval_level(cfg);
    QuadratureConfig half = cfg;
    half.n_nodes = std::max(64, cfg.n_nodes / 2);
    double v2 = eval_level(half);
    return {v, std::abs(v - v2)};
}

/// exp(eps s^2 k2^2/2) int_0^inf exp(-eps s^2 k1^2/2) sinh(2 pi k1)
///   * Gamma(1 +- i k1 +- i k2)/(2 pi^2 Gamma(2)) * (sigma^2/2)^2 * 2 k1 dk1.
/// The (sigma^2/2)^2 kernel factor follows the proof's concluding display
/// (the statement alone omits it); with it the expansion reads
///   eps^-2 + sigma^4/240 + sigma^4 k2^2/12 + remainder.
inline double lemma51_value(double eps, double k2, double sigma, QuadratureConfig cfg = {}) {
    if (!(eps > 0.0)) throw std::domain_error("lemma51_value: eps > 0");
    double s2 = sigma * sigma;
    double k_max = cfg.k_max > 0.0 ? cfg.k_max : std::abs(k2) + 14.0 / (sigma * std::sqrt(eps)) + 10.0;
    double c = 2.0 * std::log(0.5 * s2) - std::log(2.0 * pi * pi);
    double integral = integrate_panels(
        [&](double k1) {
            double lg = -0.5 * eps * s2 * k1 * k1 + detail::log_sinh(2.0 * pi * k1) +
                        log_gamma_abs_sq_int(0, k1 + k2) + log_gamma_abs_sq_int(0, k1 - k2) + c +
                        std::log(2.0 * k1);
            return std::exp(lg);
        },
        0.0, k_max, 0.25);
    return std::exp(0.5 * eps * s2 * k2 * k2) * integral;
}

// ---------------------------------------------------------------------------
// epsilon-sweep fitting.

/// Least-squares fit of samples against a*eps^-2 + b + c*sqrt(eps).
struct EpsFit {
    double a = 0.0, b = 0.0, c = 0.0;
};

inline EpsFit fit_eps_model(const std::vector<double>& eps, const std::vector<double>& values) {
    const int n = int(eps.size());
    if (n < 3 || int(values.size()) != n) throw std::invalid_argument("fit_eps_model: need >= 3 samples");
    // normal equations on column-scaled basis [eps^-2, 1, sqrt(eps)]
    double col[3];
    std::vector<double> X(std::size_t(n) * 3);
    for (int j = 0; j < 3; ++j) col[j] = 0.0;
    for (int i = 0; i < n; ++i) {
        X[i * 3 + 0] = 1.0 / (eps[i] * eps[i]);
        X[i * 3 + 1] = 1.0;
        X[i * 3 + 2] = std::sqrt(eps[i]);
        for (int j = 0; j < 3; ++j) col[j] += X[i * 3 + j] * X[i * 3 + j];
    }
    for (int j = 0; j < 3; ++j) col[j] = std::sqrt(col[j]);
    long double A[3][3] = {}, rhs[3] = {};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) {
            double xj = X[i * 3 + j] / col[j];
            rhs[j] += (long double)xj * values[i];
            for (int m = 0; m < 3; ++m) A[j][m] += (long double)xj * (X[i * 3 + m] / col[m]);
        }
    // 3x3 Gaussian elimination with partial pivoting
    int piv[3] = {0, 1, 2};
    for (int cidx = 0; cidx < 3; ++cidx) {
        int best = cidx;
        for (int r = cidx + 1; r < 3; ++r)
            if (std::abs((double)A[piv[r]][cidx]) > std::abs((double)A[piv[best]][cidx])) best = r;
        std::swap(piv[cidx], piv[best]);
        for (int r = cidx + 1; r < 3; ++r) {
            long double f = A[piv[r]][cidx] / A[piv[cidx]][cidx];
            for (int m = cidx; m < 3; ++m) A[piv[r]][m] -= f * A[piv[cidx]][m];
            rhs[piv[r]] -= f * rhs[piv[cidx]];
        }
    }
    long double sol[3];
    for (int cidx = 2; cidx >= 0; --cidx) {
        long double v = rhs[piv[cidx]];
        for (int m = cidx + 1; m < 3; ++m) v -= A[piv[cidx]][m] * sol[m];
        sol[cidx] = v / A[piv[cidx]][cidx];
    }
    return {double(sol[0] / col[0]), double(sol[1] / col[1]), double(sol[2] / col[2])};
}

/// Slope of log|residual| against log(eps); the observed remainder exponent.
inline double fit_exponent(const std::vector<double>& eps, const std::vector<double>& residuals) {
    const int n = int(eps.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (residuals[i] == 0.0) continue;
        double x = std::log(eps[i]), y = std::log(std::abs(residuals[i]));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++m;
    }
    if (m < 2) throw std::invalid_argument("fit_exponent: need >= 2 nonzero residuals");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Geometric epsilon grid from lo to hi (inclusive).
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    if (n < 2) return {lo};
    std::vector<double> g(n);
    double r = std::pow(hi / lo, 1.0 / (n - 1));
    for (int i = 0; i < n; ++i) g[i] = lo * std::pow(r, i);
    return g;
}

} // namespace schw
