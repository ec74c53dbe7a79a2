#pragma once

// Exact correlator evaluation: the chord kernel, tree message passing over
// the face forest, the brute-force tensor oracle for small diagrams, closed
// forms (partition function, exponential moments), the interval variants,
// and the alpha-regularised pipeline.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "diagram.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace schw {

/// Diagram plus coupling: everything an exact evaluation needs.
struct CorrelatorSpec {
    Geometry geometry = Geometry::Circle;
    CircleDiagram circle;
    IntervalDiagram interval;
    double sigma = 1.0;
};

/// log of the face weight exp(-tau sigma^2 k^2 / 2) sinh(2 pi k) 2k.
inline double log_face_weight(double k, double tau, double sigma) {
    if (k <= 0.0) return -std::numeric_limits<double>::infinity();
    return -0.5 * tau * sigma * sigma * k * k + detail::log_sinh(2.0 * pi * k) + std::log(2.0 * k);
}

/// Face weight in linear scale (small-k and test use).
inline double face_weight(double k, double tau, double sigma) {
    if (k <= 0.0) return 0.0;
    return std::exp(-0.5 * tau * sigma * sigma * k * k) * std::sinh(2.0 * pi * k) * 2.0 * k;
}

/// log of the chord kernel Gamma(l/2 +- ik +- iw) / (2 pi^2 Gamma(l)) * (sigma^2/2)^l.
inline double log_chord_kernel(int l, double k, double w, double sigma) {
    if (l < 1) throw std::domain_error("chord kernel: power must be >= 1");
    return log_gamma_quad(0.5 * l, k, w) - std::log(2.0 * pi * pi) - std::lgamma(double(l)) +
           l * std::log(0.5 * sigma * sigma);
}

inline double chord_kernel(int l, double k, double w, double sigma) {
    return std::exp(log_chord_kernel(l, k, w, sigma));
}

// ---------------------------------------------------------------------------
// Face-system evaluator.

enum class FaceWeightKind {
    Sinh,     // exp(-tau s^2 k^2/2) sinh(2 pi k) 2k            (standard face)
    RegSinh,  // exp(...) 2k sinh(2 alpha k)/pi                 (regularised face)
    CoshExp,  // exp(...) cosh(2 alpha k)/pi                    (exp-insertion root)
    Cos,      // exp(...) cos(a k)/pi                           (interval root; signed)
};

struct FaceNode {
    double tau = 0.0;
    int parent = -1; // -1 at the root
    int power = 0;   // power of the chord connecting to the parent
    FaceWeightKind kind = FaceWeightKind::Sinh;
    double param = 0.0;  // alpha (RegSinh/CoshExp) or a (Cos)
    int k2_insertions = 0;
};

namespace detail {

inline double log_node_weight(const FaceNode& f, double k, double sigma) {
    double lg = -0.5 * f.tau * sigma * sigma * k * k;
    if (f.k2_insertions > 0) {
        if (k <= 0.0) return -std::numeric_limits<double>::infinity();
        lg += f.k2_insertions * (4.0 * std::log(sigma) + 2.0 * std::log(k));
    }
    switch (f.kind) {
    case FaceWeightKind::Sinh:
        if (k <= 0.0) return -std::numeric_limits<double>::infinity();
        return lg + log_sinh(2.0 * pi * k) + std::log(2.0 * k);
    case FaceWeightKind::RegSinh:
        if (k <= 0.0) return -std::numeric_limits<double>::infinity();
        return lg + std::log(2.0 * k) + log_sinh(2.0 * f.param * k) - std::log(pi);
    case FaceWeightKind::CoshExp:
        return lg + log_cosh(2.0 * f.param * k) - std::log(pi);
    case FaceWeightKind::Cos:
        return lg; // the signed cos(a k)/pi factor is applied at the root sum
    }
    return lg;
}

// Symmetric G x G matrix of log kernel values for one power.
inline std::vector<double> kernel_matrix(int l, const Grid& g, double sigma) {
    const int G = int(g.k.size());
    std::vector<double> K(std::size_t(G) * G);
    for (int i = 0; i < G; ++i)
        for (int j = 0; j <= i; ++j) {
            double v = log_chord_kernel(l, g.k[i], g.k[j], sigma);
            K[std::size_t(i) * G + j] = v;
            K[std::size_t(j) * G + i] = v;
        }
    return K;
}

} // namespace detail

/// Sum-product evaluation of the (N+1)-dimensional face integral on a shared
/// k-grid: leaf-to-root messages through the quadrature-weighted kernel
/// matrices, O(N G^2).  Log-domain throughout; only a Cos root carries sign.
inline double evaluate_faces(const std::vector<FaceNode>& faces, double sigma, const Grid& g) {
    const int G = int(g.k.size());
    const double neg_inf = -std::numeric_limits<double>::infinity();
    int root = -1;
    std::vector<std::vector<int>> children(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        if (faces[i].parent < 0) {
            if (root >= 0) throw std::logic_error("face system has two roots");
            root = int(i);
        } else {
            children[faces[i].parent].push_back(int(i));
        }
    }
    if (root < 0) throw std::logic_error("face system has no root");

    std::vector<double> logw(G);
    for (int i = 0; i < G; ++i) logw[i] = std::log(g.w[i]);

    std::map<int, std::vector<double>> kernels; // one matrix per distinct power
    std::vector<std::vector<double>> msg(faces.size());

    auto source_vector = [&](int f) {
        std::vector<double> src(G);
        for (int i = 0; i < G; ++i) {
            double v = logw[i] + detail::log_node_weight(faces[f], g.k[i], sigma);
            for (int c : children[f]) v += msg[c][i];
            src[i] = v;
        }
        return src;
    };

    std::function<void(int)> process = [&](int f) {
        for (int c : children[f]) process(c);
        if (faces[f].parent < 0) return;
        auto it = kernels.find(faces[f].power);
        if (it == kernels.end())
            it = kernels.emplace(faces[f].power, detail::kernel_matrix(faces[f].power, g, sigma)).first;
        const std::vector<double>& K = it->second;
        std::vector<double> src = source_vector(f);
        std::vector<double> out(G, neg_inf);
        for (int j = 0; j < G; ++j) {
            const double* col = K.data() + std::size_t(j) * G; // symmetric: row j
            double m = neg_inf;
            for (int i = 0; i < G; ++i) {
                double v = src[i] + col[i];
                if (v > m) m = v;
            }
            if (m == neg_inf) continue;
            double s = 0.0;
            for (int i = 0; i < G; ++i) s += std::exp(src[i] + col[i] - m);
            out[j] = m + std::log(s);
        }
        msg[f] = std::move(out);
    };
    for (int c : children[root]) process(c);

    std::vector<double> top = source_vector(root);
    double m = neg_inf;
    for (double v : top) m = std::max(m, v);
    if (m == neg_inf) return 0.0;
    double total = 0.0;
    if (faces[root].kind == FaceWeightKind::Cos) {
        double a = faces[root].param;
        for (int i = 0; i < G; ++i)
            total += std::cos(a * g.k[i]) / pi * std::exp(top[i] - m);
    } else {
        for (int i = 0; i < G; ++i) total += std::exp(top[i] - m);
    }
    return std::exp(m) * total;
}

namespace detail {

inline double min_positive_tau(const std::vector<FaceNode>& faces) {
    double t = std::numeric_limits<double>::infinity();
    for (const auto& f : faces)
        if (f.tau > 1e-9) t = std::min(t, f.tau);
    if (!std::isfinite(t)) throw std::logic_error("all faces have zero length");
    return t;
}

} // namespace detail

/// Evaluate with an error estimate: the difference between the configured
/// grid and a half-resolution grid.
inline Value evaluate_faces_value(const std::vector<FaceNode>& faces, double sigma,
                                  QuadratureConfig cfg) {
    cfg = auto_config(cfg, sigma, detail::min_positive_tau(faces));
    Grid fine = k_grid(cfg.k_max, cfg.n_nodes, cfg.rule);
    Grid coarse = k_grid(cfg.k_max, std::max(32, cfg.n_nodes / 2), cfg.rule);
    double v = evaluate_faces(faces, sigma, fine);
    double v2 = evaluate_faces(faces, sigma, coarse);
    return {v, std::abs(v - v2)};
}

namespace detail {

// Exact-formula admissibility of zero-length faces: the Gamma kernels alone
// must carry the integrability (three chords on a bounded face; the
// unbounded cos-weighted face is fine with any chord for real a).
inline void check_zero_tau(const FaceDecomposition& fd, bool interval_root) {
    std::vector<int> degree(fd.faces.size(), 0);
    for (std::size_t m = 0; m < fd.faces.size(); ++m)
        if (fd.faces[m].parent >= 0) {
            degree[m] += 1;
            degree[fd.faces[m].parent] += 1;
        }
    for (std::size_t m = 0; m < fd.faces.size(); ++m) {
        if (fd.faces[m].tau > 1e-9) continue;
        if (int(m) == fd.root_face && interval_root) continue;
        if (degree[m] < 3)
            throw std::invalid_argument("face " + std::to_string(m) +
                                        " has zero arc length and too few chords for the integral to converge");
    }
}

inline std::vector<FaceNode> nodes_from(const FaceDecomposition& fd, const std::vector<Chord>& chords,
                                        FaceWeightKind root_kind, double root_param) {
    std::vector<FaceNode> faces(fd.faces.size());
    for (std::size_t m = 0; m < fd.faces.size(); ++m) {
        faces[m].tau = fd.faces[m].tau;
        faces[m].parent = fd.faces[m].parent;
        if (m > 0) faces[m].power = chords[m - 1].l;
    }
    faces[fd.root_face].kind = root_kind;
    faces[fd.root_face].param = root_param;
    return faces;
}

} // namespace detail

/// Theorem-style circle correlator: integral over one Fourier variable per
/// face with sinh weights and one Gamma kernel per chord.
inline Value correlator_circle(const CircleDiagram& d, double sigma, QuadratureConfig cfg = {}) {
    FaceDecomposition fd = decompose_circle(d);
    detail::check_zero_tau(fd, /*interval_root=*/false);
    auto faces = detail::nodes_from(fd, d.chords, FaceWeightKind::Sinh, 0.0);
    return evaluate_faces_value(faces, sigma, cfg);
}

/// Brute-force tensor-product quadrature over the same grid; the independent
/// oracle for the message-passing evaluator.  N <= 2 only.
inline Value correlator_circle_direct(const CircleDiagram& d, double sigma, QuadratureConfig cfg = {}) {
    const int n = int(d.chords.size());
    if (n > 2) throw std::invalid_argument("direct tensor quadrature is limited to N <= 2");
    FaceDecomposition fd = decompose_circle(d);
    detail::check_zero_tau(fd, false);
    auto faces = detail::nodes_from(fd, d.chords, FaceWeightKind::Sinh, 0.0);
    cfg = auto_config(cfg, sigma, detail::min_positive_tau(faces));

    auto eval = [&](const Grid& g) {
        const int G = int(g.k.size());
        // per-face weight arrays, max-shifted so products stay in range
        auto shifted = [&](const FaceNode& f, double& shift) {
            std::vector<double> lw(G);
            shift = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < G; ++i) {
                lw[i] = std::log(g.w[i]) + detail::log_node_weight(f, g.k[i], sigma);
                shift = std::max(shift, lw[i]);
            }
            std::vector<double> out(G);
            for (int i = 0; i < G; ++i) out[i] = std::exp(lw[i] - shift);
            return out;
        };
        auto shifted_kernel = [&](int l, double& shift) {
            std::vector<double> K = detail::kernel_matrix(l, g, sigma);
            shift = -std::numeric_limits<double>::infinity();
            for (double v : K) shift = std::max(shift, v);
            for (double& v : K) v = std::exp(v - shift);
            return K;
        };
        if (n == 0) {
            double s0;
            auto w0 = shifted(faces[0], s0);
            double acc = 0.0;
            for (double v : w0) acc += v;
            return std::exp(s0) * acc;
        }
        if (n == 1) {
            double s0, s1, sk;
            auto w0 = shifted(faces[0], s0);
            auto w1 = shifted(faces[1], s1);
            auto K = shifted_kernel(faces[1].power, sk);
            double acc = 0.0;
            for (int i = 0; i < G; ++i)
                for (int j = 0; j < G; ++j) acc += w0[i] * w1[j] * K[std::size_t(i) * G + j];
            return std::exp(s0 + s1 + sk) * acc;
        }
        // n == 2: fork (both chords hang off the root face) or chain; for the
        // chain put the middle face second so K2 is indexed off it.
        int mid = 1, leaf = 2;
        bool chain = faces[1].parent == 2 || faces[2].parent == 1;
        if (faces[1].parent == 2) std::swap(mid, leaf);
        double s0, s1, s2, sk1, sk2;
        auto w0 = shifted(faces[0], s0);
        auto w1 = shifted(faces[mid], s1);
        auto w2 = shifted(faces[leaf], s2);
        auto K1 = shifted_kernel(faces[mid].power, sk1);
        auto K2 = shifted_kernel(faces[leaf].power, sk2);
        double acc = 0.0;
        for (int i = 0; i < G; ++i)
            for (int j = 0; j < G; ++j) {
                double base = w0[i] * w1[j] * K1[std::size_t(i) * G + j];
                if (base == 0.0) continue;
                const double* k2row = K2.data() + std::size_t(chain ? j : i) * G;
                double inner = 0.0;
                for (int m = 0; m < G; ++m) inner += w2[m] * k2row[m];
                acc += base * inner;
            }
        return std::exp(s0 + s1 + s2 + sk1 + sk2) * acc;
    };
    double v = eval(k_grid(cfg.k_max, cfg.n_nodes, cfg.rule));
    double v2 = eval(k_grid(cfg.k_max, std::max(32, cfg.n_nodes / 2), cfg.rule));
    return {v, std::abs(v - v2)};
}

/// Total mass of the Schwarzian measure, (2 pi / sigma^2)^{3/2} exp(2 pi^2 / sigma^2).
inline double partition_function(double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("partition_function: sigma > 0 required");
    double s2 = sigma * sigma;
    return std::pow(2.0 * pi / s2, 1.5) * std::exp(2.0 * pi * pi / s2);
}

/// The same mass by quadrature of the N = 0 integrand (the closed form's audit).
inline Value partition_function_quadrature(double sigma, QuadratureConfig cfg = {}) {
    std::vector<FaceNode> faces(1);
    faces[0].tau = 1.0;
    return evaluate_faces_value(faces, sigma, cfg);
}

/// Single-observable moment: the two-face integral with tau = {gap, 1-gap}.
inline Value moment(int l, double gap, double sigma, QuadratureConfig cfg = {}) {
    if (!(gap > 0.0 && gap < 1.0)) throw std::domain_error("moment: gap must lie in (0,1)");
    CircleDiagram d;
    d.chords.push_back({0.0, gap, l});
    return correlator_circle(d, sigma, cfg);
}

/// Interval correlator: same integral with the unbounded face weighted by
/// exp(-tau0 sigma^2 k^2/2) cos(a k)/pi instead of the sinh weight.
inline Value correlator_interval(const IntervalDiagram& d, double sigma, QuadratureConfig cfg = {}) {
    FaceDecomposition fd = decompose_interval(d);
    detail::check_zero_tau(fd, /*interval_root=*/true);
    auto faces = detail::nodes_from(fd, d.chords, FaceWeightKind::Cos, d.a);
    return evaluate_faces_value(faces, sigma, cfg);
}

/// Expectation with the insertion exp{(8 sin^2(alpha/2)/sigma^2) chi0(0,T)}:
/// the unbounded face weight becomes cosh(2 alpha k)/pi.  Requires a = 0 and
/// chords strictly inside (0,T).
inline Value correlator_interval_with_exp(const IntervalDiagram& d, double sigma, double alpha,
                                          QuadratureConfig cfg = {}) {
    if (!(alpha >= 0.0 && alpha < pi))
        throw std::domain_error("correlator_interval_with_exp: alpha must lie in [0, pi)");
    if (std::abs(d.a) > position_tol)
        throw std::domain_error("correlator_interval_with_exp: requires endpoint datum a = 0");
    for (std::size_t j = 0; j < d.chords.size(); ++j)
        if (d.chords[j].s < position_tol || d.chords[j].t > d.T - position_tol)
            throw std::domain_error("correlator_interval_with_exp: chord " + std::to_string(j) +
                                    " must lie strictly inside (0,T)");
    FaceDecomposition fd = decompose_interval(d);
    detail::check_zero_tau(fd, true);
    auto faces = detail::nodes_from(fd, d.chords, FaceWeightKind::CoshExp, alpha);
    return evaluate_faces_value(faces, sigma, cfg);
}

/// Closed-form exponential moment of chi0(0,T) against the unnormalised
/// bridge measure with datum a:
///   (1/(sqrt(2 pi T) sigma)) exp(-(2/(T sigma^2)) arccosh^2[cosh(a/2) - z/4]).
inline double exp_moment_interval(double z, double a, double T, double sigma) {
    if (!(T > 0.0) || !(sigma > 0.0)) throw std::domain_error("exp_moment_interval: T, sigma > 0");
    double arg = std::cosh(0.5 * a) - 0.25 * z;
    double om = arccosh_sq_real(arg); // throws if arg < -1
    return 1.0 / (std::sqrt(2.0 * pi * T) * sigma) * std::exp(-2.0 / (T * sigma * sigma) * om);
}

inline std::complex<double> exp_moment_interval(std::complex<double> z, double a, double T,
                                                double sigma) {
    std::complex<double> om = arccosh_sq(std::cosh(0.5 * a) - 0.25 * z);
    return 1.0 / (std::sqrt(2.0 * pi * T) * sigma) *
           std::exp(-2.0 / (T * sigma * sigma) * om);
}

// ---------------------------------------------------------------------------
// alpha-regularised circle pipeline.

/// The finite-alpha sum  (pi (pi-alpha)/sin alpha) * sum_m tau_m I_m(alpha),
/// where I_m replaces face m's weight by exp(-tau_m s^2 k^2/2) 2k sinh(2 alpha k)/pi.
/// This is the general code path, defined up to and including alpha = pi
/// (prefactor taken as its limit pi).  Exposed for the reassociation tests.
inline Value regularized_circle_sum(const CircleDiagram& d, double sigma, double alpha,
                                    QuadratureConfig cfg = {}) {
    FaceDecomposition fd = decompose_circle(d);
    for (std::size_t m = 0; m < fd.faces.size(); ++m)
        if (fd.faces[m].tau <= 1e-9)
            throw std::domain_error("regularised evaluation requires every face to have positive arc length");
    auto base = detail::nodes_from(fd, d.chords, FaceWeightKind::Sinh, 0.0);
    cfg = auto_config(cfg, sigma, detail::min_positive_tau(base));
    double pref = (std::abs(alpha - pi) < 1e-15) ? pi : pi * (pi - alpha) / std::sin(alpha);

    auto eval = [&](const Grid& g) {
        double total = 0.0;
        for (std::size_t m = 0; m < base.size(); ++m) {
            auto faces = base;
            faces[m].kind = FaceWeightKind::RegSinh;
            faces[m].param = alpha;
            total += fd.faces[m].tau * evaluate_faces(faces, sigma, g);
        }
        return pref * total;
    };
    double v = eval(k_grid(cfg.k_max, cfg.n_nodes, cfg.rule));
    double v2 = eval(k_grid(cfg.k_max, std::max(32, cfg.n_nodes / 2), cfg.rule));
    return {v, std::abs(v - v2)};
}

/// Regularised circle correlator for alpha in (0, pi].  At alpha = pi the
/// weights reassemble the standard ones exactly (1/pi * 2k sinh(2 pi k) * pi,
/// sum tau_m = 1), so the exact evaluator is used there.
inline Value regularized_circle_correlator(const CircleDiagram& d, double sigma, double alpha,
                                           QuadratureConfig cfg = {}) {
    if (!(alpha > 0.0 && alpha <= pi + 1e-15))
        throw std::domain_error("regularized_circle_correlator: alpha must lie in (0, pi]");
    if (std::abs(alpha - pi) < 1e-15) return correlator_circle(d, sigma, cfg);
    return regularized_circle_sum(d, sigma, alpha, cfg);
}

/// Dispatch on the spec's geometry.
inline Value correlator(const CorrelatorSpec& spec, QuadratureConfig cfg = {}) {
    if (spec.geometry == Geometry::Circle) return correlator_circle(spec.circle, spec.sigma, cfg);
    return correlator_interval(spec.interval, spec.sigma, cfg);
}

} // namespace schw
