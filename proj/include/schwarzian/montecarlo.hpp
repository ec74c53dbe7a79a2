#pragma once

// Monte Carlo side: exact Brownian-bridge sampling on dyadic grids, the
// exponential map Q and its normalisation P, pathwise observables, seeded
// deterministic expectations against the unnormalised bridge measures, and
// the measure/observable self-consistency checks.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "diagram.hpp"
#include "quadrature.hpp"
#include "specfun.hpp"

namespace schw {

// ---------------------------------------------------------------------------
// Splittable deterministic RNG: one xoshiro256++ stream per sample, seeded
// through splitmix64 so streams are independent of thread scheduling.

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed ^ (stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL);
        for (auto& si : s_) si = splitmix64(x);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }
    std::uint64_t next() {
        auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    double uniform() { // in (0,1)
        return (double(next() >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() { // Box-Muller, platform-independent
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = uniform(), v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double th = 2.0 * pi * v;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

  private:
    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------

/// A bridge sample on the uniform grid t_i = i T / n_steps, pinned to
/// xi(0) = 0 and xi(T) = a.
struct BridgePath {
    double T = 1.0;
    double a = 0.0;
    std::vector<double> xi; // n_steps + 1 values

    int n_steps() const { return int(xi.size()) - 1; }
    double dt() const { return T / n_steps(); }
    double time(int i) const { return T * double(i) / n_steps(); }
};

struct SamplerConfig {
    int n_steps = 1024; // power of two
    long long n_samples = 100000;
    std::uint64_t seed = 1;
    int threads = 0; // 0 = hardware concurrency
};

/// Mean, standard error and sample count of a Monte Carlo expectation,
/// already scaled by the total mass of the unnormalised measure.
struct MCEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long long n = 0;
    long long excluded = 0;
};

/// Total mass of the unnormalised bridge measure W^{a,T}_{sigma^2}.
inline double bridge_mass(double a, double T, double sigma) {
    return std::exp(-a * a / (2.0 * T * sigma * sigma)) / (std::sqrt(2.0 * pi * T) * sigma);
}

/// Levy midpoint construction: exact Gaussian marginals at every dyadic
/// time, drawn coarse-to-fine so refinement studies share coarse levels.
inline BridgePath sample_bridge(double a, double T, double sigma, int n_steps, RandomStream& rng) {
    if (n_steps < 2 || (n_steps & (n_steps - 1)) != 0)
        throw std::invalid_argument("sample_bridge: n_steps must be a power of two >= 2");
    BridgePath p;
    p.T = T;
    p.a = a;
    p.xi.assign(n_steps + 1, 0.0);
    p.xi[n_steps] = a;
    double h = T / n_steps;
    for (int half = n_steps / 2; half >= 1; half /= 2) {
        double sd = sigma * std::sqrt(0.5 * half * h); // span/4 variance
        for (int mid = half; mid < n_steps; mid += 2 * half)
            p.xi[mid] = 0.5 * (p.xi[mid - half] + p.xi[mid + half]) + sd * rng.normal();
    }
    return p;
}

/// Q(t_i) = int_0^{t_i} e^xi, trapezoid rule; strictly increasing.
inline std::vector<double> q_map(const BridgePath& p) {
    std::vector<double> q(p.xi.size());
    q[0] = 0.0;
    double h = p.dt();
    double prev = std::exp(p.xi[0]);
    for (std::size_t i = 1; i < p.xi.size(); ++i) {
        double cur = std::exp(p.xi[i]);
        q[i] = q[i - 1] + 0.5 * h * (prev + cur);
        prev = cur;
    }
    return q;
}

/// P = Q / Q(T); P(T) = 1 exactly.
inline std::vector<double> p_map(const BridgePath& p) {
    std::vector<double> q = q_map(p);
    double qt = q.back();
    for (auto& v : q) v /= qt;
    q.back() = 1.0;
    return q;
}

/// Nearest grid index for a time; observable endpoints are snapped rather
/// than interpolated (test positions are chosen dyadic so this is exact).
inline int grid_index(const BridgePath& p, double t) {
    int i = int(std::llround(t / p.T * p.n_steps()));
    if (i < 0 || i > p.n_steps()) throw std::invalid_argument("time outside [0,T]");
    return i;
}

/// chi(Q; s, t)_0 = exp((xi(s)+xi(t))/2) / (Q(t) - Q(s)), s < t.
inline double chi0(const BridgePath& p, const std::vector<double>& q, double s, double t) {
    if (!(t > s)) throw std::domain_error("chi0: needs s < t");
    int i = grid_index(p, s), j = grid_index(p, t);
    if (i == j) throw std::domain_error("chi0: s and t snap to the same grid time");
    return std::exp(0.5 * (p.xi[i] + p.xi[j])) / (q[j] - q[i]);
}

inline double chi0(const BridgePath& p, double s, double t) { return chi0(p, q_map(p), s, t); }

/// chi(phi; s, t)_alpha = alpha sqrt(phi'(t) phi'(s)) / sin(alpha [phi(t)-phi(s)])
/// for phi = P(xi), with the convention chi(phi; 0, 1)_alpha = alpha phi'(0)/sin(alpha).
/// alpha = 0 falls back to the linear cross-ratio, alpha = pi is the main observable.
inline double chi_alpha(const BridgePath& p, double s, double t, double alpha) {
    if (!(alpha >= 0.0 && alpha <= pi)) throw std::domain_error("chi_alpha: alpha in [0, pi]");
    std::vector<double> q = q_map(p);
    double qt = q.back();
    int i = grid_index(p, s), j = grid_index(p, t);
    if (i == 0 && j == p.n_steps()) { // phi(1)-phi(0) = 1 by convention
        double dphi0 = std::exp(p.xi[0]) / qt;
        return alpha == 0.0 ? dphi0 : alpha * dphi0 / std::sin(alpha);
    }
    if (i == j) throw std::domain_error("chi_alpha: s and t snap to the same grid time");
    double dps = std::exp(p.xi[i]) / qt, dpt = std::exp(p.xi[j]) / qt;
    double gap = (q[j] - q[i]) / qt;
    if (alpha == 0.0) return std::sqrt(dpt * dps) / gap;
    double sn = std::sin(alpha * gap);
    if (sn == 0.0) throw std::domain_error("chi_alpha: sin(alpha [phi(t)-phi(s)]) vanishes");
    return alpha * std::sqrt(dpt * dps) / sn;
}

inline double chi_pi(const BridgePath& p, double s, double t) { return chi_alpha(p, s, t, pi); }

// ---------------------------------------------------------------------------
// Seeded deterministic expectations.

/// Functional of a path; the cumulative Q is precomputed once per sample.
using PathFunctional = std::function<double(const BridgePath&, const std::vector<double>&)>;

namespace detail {

struct ChunkSums {
    std::vector<double> sum, sumsq;
    std::vector<long long> excluded;
};

inline constexpr long long mc_chunk = 4096;

} // namespace detail

/// Sample mean and standard error for several functionals over one set of
/// bridges, times the unnormalised mass.  Bitwise deterministic for a fixed
/// seed and config: per-sample substreams, chunked fixed-order reduction.
inline std::vector<MCEstimate> mc_expectation_many(const std::vector<PathFunctional>& fs, double a,
                                                   double T, double sigma, const SamplerConfig& cfg) {
    const int nf = int(fs.size());
    const long long n_chunks = (cfg.n_samples + detail::mc_chunk - 1) / detail::mc_chunk;
    std::vector<detail::ChunkSums> chunks(n_chunks);

    auto run_chunk = [&](long long c) {
        detail::ChunkSums acc;
        acc.sum.assign(nf, 0.0);
        acc.sumsq.assign(nf, 0.0);
        acc.excluded.assign(nf, 0);
        long long lo = c * detail::mc_chunk;
        long long hi = std::min(cfg.n_samples, lo + detail::mc_chunk);
        for (long long i = lo; i < hi; ++i) {
            RandomStream rng(cfg.seed, std::uint64_t(i));
            BridgePath p = sample_bridge(a, T, sigma, cfg.n_steps, rng);
            std::vector<double> q = q_map(p);
            for (int j = 0; j < nf; ++j) {
                double v = fs[j](p, q);
                if (std::isfinite(v)) {
                    acc.sum[j] += v;
                    acc.sumsq[j] += v * v;
                } else {
                    acc.excluded[j]++;
                }
            }
        }
        chunks[c] = std::move(acc);
    };

    int threads = cfg.threads > 0 ? cfg.threads : int(std::thread::hardware_concurrency());
    if (threads <= 1 || n_chunks == 1) {
        for (long long c = 0; c < n_chunks; ++c) run_chunk(c);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (long long c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) run_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    double mass = bridge_mass(a, T, sigma);
    std::vector<MCEstimate> out(nf);
    for (int j = 0; j < nf; ++j) {
        double sum = 0.0, sumsq = 0.0;
        long long excl = 0;
        for (const auto& c : chunks) { // fixed chunk order
            sum += c.sum[j];
            sumsq += c.sumsq[j];
            excl += c.excluded[j];
        }
        long long n = cfg.n_samples - excl;
        if (n < 1) throw std::runtime_error("mc_expectation: every sample was non-finite");
        double mean = sum / double(n);
        double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / double(n - 1)) : 0.0;
        out[j].mean = mass * mean;
        out[j].std_err = mass * std::sqrt(var / double(n));
        out[j].n = n;
        out[j].excluded = excl;
    }
    return out;
}

/// Single-functional expectation against W^{a,T}_{sigma^2}.
inline MCEstimate mc_expectation(const PathFunctional& f, double a, double T, double sigma,
                                 const SamplerConfig& cfg) {
    return mc_expectation_many({f}, a, T, sigma, cfg)[0];
}

/// Product of chi0 powers over the chords of an interval diagram.
inline PathFunctional chord_product_functional(const std::vector<Chord>& chords) {
    return [chords](const BridgePath& p, const std::vector<double>& q) {
        double v = 1.0;
        for (const auto& c : chords) {
            double x = chi0(p, q, c.s, c.t);
            for (int e = 0; e < c.l; ++e) v *= x;
        }
        return v;
    };
}

// ---------------------------------------------------------------------------
// Self-consistency checks of the measure calculus.

struct CheckRow {
    std::string label;
    MCEstimate lhs;
    MCEstimate rhs; // std_err = 0 when the side is exact
    double z_score = 0.0;
};

namespace detail {

inline double combined_z(const MCEstimate& l, const MCEstimate& r) {
    double se = std::hypot(l.std_err, r.std_err);
    return se > 0.0 ? (l.mean - r.mean) / se : 0.0;
}

} // namespace detail

/// Lemma-style endpoint shift: an exp{(z/sigma^2) chi0(0,T)} insertion at
/// datum a equals the plain expectation at b = 2 arccosh(cosh(a/2) - z/4).
/// Requires z < 0 so b stays real.
inline CheckRow mc_endpoint_shift_check(double z, double a, double T, double sigma,
                                        const std::vector<Chord>& chords, const SamplerConfig& cfg) {
    if (!(z < 0.0)) throw std::domain_error("mc_endpoint_shift_check: z < 0 required");
    double b = 2.0 * std::acosh(std::cosh(0.5 * a) - 0.25 * z);
    auto prod = chord_product_functional(chords);
    double s2 = sigma * sigma;
    PathFunctional lhs = [prod, z, s2, T](const BridgePath& p, const std::vector<double>& q) {
        return std::exp(z / s2 * chi0(p, q, 0.0, T)) * prod(p, q);
    };
    SamplerConfig rcfg = cfg;
    rcfg.seed = cfg.seed + 1;
    CheckRow row;
    row.label = "endpoint_shift(z=" + std::to_string(z) + ",a=" + std::to_string(a) + ")";
    row.lhs = mc_expectation(lhs, a, T, sigma, cfg);
    row.rhs = mc_expectation(prod, b, T, sigma, rcfg);
    row.z_score = detail::combined_z(row.lhs, row.rhs);
    return row;
}

/// Change-of-variables audit for the fractional-linear test map with
/// S_f = 0:  f(t) = e^{-lambda} t / ((e^{-lambda} - 1) t + 1), so that
/// b = log f'(1) - log f'(0) = 2 lambda.  Expectations under the pushforward
/// (left composition with f^{-1} in reparametrisation coordinates) must
/// match reweighted expectations at the shifted datum a - b with density
/// (f'(0) f'(1))^{-1/2} exp{(1/sigma^2)[ (f''(0)/f'(0)) P'(0) - (f''(1)/f'(1)) P'(1) ]}.
inline std::vector<CheckRow> mc_girsanov_check(double lambda, double a, double sigma,
                                               const SamplerConfig& cfg) {
    const double em = std::exp(-lambda);
    const double b = 2.0 * lambda;
    const double c0 = 2.0 - 2.0 * std::exp(-lambda);
    const double c1 = 2.0 * std::exp(lambda) - 2.0;
    const double pref = 1.0 / std::sqrt(em * std::exp(lambda)); // f'(0) f'(1) = 1 for this f
    const double s2 = sigma * sigma;

    // battery evaluated on (phi, phi') pairs
    struct Obs {
        std::string name;
        std::function<double(const std::vector<double>&, const std::vector<double>&, int, int)> f;
    };
    std::vector<Obs> battery = {
        {"unit", [](const std::vector<double>&, const std::vector<double>&, int, int) { return 1.0; }},
        {"chi0(1/4,3/4)",
         [](const std::vector<double>& phi, const std::vector<double>& dphi, int i, int j) {
             return std::sqrt(dphi[i] * dphi[j]) / (phi[j] - phi[i]);
         }},
        {"dphi(0)", [](const std::vector<double>&, const std::vector<double>& dphi, int, int) {
             return dphi[0];
         }},
    };

    auto phi_pair = [](const BridgePath& p, const std::vector<double>& q, std::vector<double>& phi,
                       std::vector<double>& dphi) {
        double qt = q.back();
        phi.resize(q.size());
        dphi.resize(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) {
            phi[i] = q[i] / qt;
            dphi[i] = std::exp(p.xi[i]) / qt;
        }
    };

    std::vector<PathFunctional> lhs_fs, rhs_fs;
    for (const auto& obs : battery) {
        auto fn = obs.f;
        lhs_fs.push_back([fn, em, phi_pair](const BridgePath& p, const std::vector<double>& q) {
            std::vector<double> phi, dphi;
            phi_pair(p, q, phi, dphi);
            // transport through f^{-1}(y) = y / (em - (em-1) y)
            for (std::size_t i = 0; i < phi.size(); ++i) {
                double den = em - (em - 1.0) * phi[i];
                dphi[i] = dphi[i] * em / (den * den);
                phi[i] = phi[i] / den;
            }
            int n = p.n_steps();
            return fn(phi, dphi, n / 4, 3 * n / 4);
        });
        rhs_fs.push_back([fn, pref, c0, c1, s2, phi_pair](const BridgePath& p,
                                                          const std::vector<double>& q) {
            std::vector<double> phi, dphi;
            phi_pair(p, q, phi, dphi);
            int n = p.n_steps();
            double rho = pref * std::exp((c0 * dphi[0] - c1 * dphi[n]) / s2);
            return fn(phi, dphi, n / 4, 3 * n / 4) * rho;
        });
    }
    SamplerConfig rcfg = cfg;
    rcfg.seed = cfg.seed + 1;
    auto lhs = mc_expectation_many(lhs_fs, a, 1.0, sigma, cfg);
    auto rhs = mc_expectation_many(rhs_fs, a - b, 1.0, sigma, rcfg);
    std::vector<CheckRow> rows;
    for (std::size_t i = 0; i < battery.size(); ++i) {
        CheckRow r;
        r.label = "girsanov(" + battery[i].name + ")";
        r.lhs = lhs[i];
        r.rhs = rhs[i];
        r.z_score = detail::combined_z(r.lhs, r.rhs);
        rows.push_back(r);
    }
    return rows;
}

/// Concatenation identity: E_{W^{a,T1+T2}}[ g(xi(T1)) ] equals
/// int g(b) mass(b,T1) mass(a-b,T2) db for the Gaussian bump g(x) = e^{-x^2}.
inline CheckRow mc_concatenation_check(double T1, double T2, double a, double sigma,
                                       const SamplerConfig& cfg) {
    double T = T1 + T2;
    PathFunctional g = [T1](const BridgePath& p, const std::vector<double>&) {
        double x = p.xi[grid_index(p, T1)];
        return std::exp(-x * x);
    };
    CheckRow row;
    row.label = "concatenation(T1=" + std::to_string(T1) + ",T2=" + std::to_string(T2) + ")";
    row.lhs = mc_expectation(g, a, T, sigma, cfg);
    double w = sigma * std::sqrt(std::max(T1, T2));
    double L = 10.0 * w + std::abs(a) + 6.0;
    row.rhs.mean = integrate_panels(
        [&](double b) {
            return std::exp(-b * b) * bridge_mass(b, T1, sigma) * bridge_mass(a - b, T2, sigma);
        },
        -L, L, std::min(0.25, w / 4.0));
    row.rhs.std_err = 0.0;
    row.rhs.n = 0;
    row.z_score = detail::combined_z(row.lhs, row.rhs);
    return row;
}

// ---------------------------------------------------------------------------
// Gauge fixing and observable-based reconstruction.

/// phi(t_i), phi'(t_i) for the gauge-fixed representative of P(xi): the
/// Moebius postcomposition enforcing phi(0) = 0, phi'(0) = 1, phi(1/2) = 1/2.
struct GaugeFixedDiffeo {
    std::vector<double> phi, dphi;
};

inline GaugeFixedDiffeo gauge_fix(const BridgePath& p) {
    int n = p.n_steps();
    if (n % 2 != 0) throw std::invalid_argument("gauge_fix: even n_steps required");
    std::vector<double> q = q_map(p);
    double qt = q.back();
    double scale = qt / std::exp(p.xi[0]); // 1/phi0'(0)
    double phalf = q[n / 2] / qt;
    double ch = std::cos(pi * phalf), sh = std::sin(pi * phalf);
    double cot_half = ch / sh;

    GaugeFixedDiffeo out;
    out.phi.resize(n + 1);
    out.dphi.resize(n + 1);
    double prev = 0.0;
    for (int i = 0; i <= n; ++i) {
        double ph0 = q[i] / qt;
        double c = std::cos(pi * ph0), s = std::sin(pi * ph0);
        double num = scale * s, den = c - cot_half * s;
        double raw = std::atan2(num, den) / pi; // in (-1, 1]
        if (i == 0) raw = 0.0;
        double v = raw - std::floor(raw); // mod 1
        while (v < prev - 1e-9) v += 1.0;
        out.phi[i] = v;
        prev = v;
        double dph0 = std::exp(p.xi[i]) / qt;
        out.dphi[i] = dph0 * scale / (den * den + scale * scale * s * s);
    }
    out.phi[n] = 1.0;
    return out;
}

/// chi(phi; t_i, t_j) from gauge-fixed values.
inline double chi_of(const GaugeFixedDiffeo& g, int i, int j) {
    return pi * std::sqrt(g.dphi[i] * g.dphi[j]) / std::sin(pi * (g.phi[j] - g.phi[i]));
}

/// Observable data on the uniform grid t_j = j/(2M), with t_M = 1/2:
/// chi(phi; 0, t_j) for 1 <= j <= 2M-1 and chi(phi; t_j, t_{j+1}) for
/// 0 <= j <= 2M-1.
struct ReconstructionInput {
    std::vector<double> chi_from_zero; // size 2M, index 0 unused
    std::vector<double> chi_adjacent;  // size 2M
};

struct ReconstructionResult {
    std::vector<double> phi, dphi; // indices 0..2M-1; phi[0] = 0, dphi[0] = 1
};

/// Recover phi(t_j) and phi'(t_j) for a gauge-fixed diffeomorphism from the
/// observables alone, telescoping
///   cot(pi phi(t_j)) - cot(pi phi(t_{j+1}))
///     = chi(0,t_j) chi(0,t_{j+1}) / (pi chi(t_j,t_{j+1}))
/// away from cot(pi phi(t_M)) = 0, then phi' = (chi(0,t_j) sin(pi phi(t_j))/pi)^2.
inline ReconstructionResult reconstruct_phi(const ReconstructionInput& in) {
    const int twoM = int(in.chi_adjacent.size());
    if (twoM < 4 || twoM % 2 != 0 || int(in.chi_from_zero.size()) != twoM)
        throw std::invalid_argument("reconstruct_phi: need matching even-sized observable grids");
    const int M = twoM / 2;
    auto term = [&](int j) {
        return in.chi_from_zero[j] * in.chi_from_zero[j + 1] / (pi * in.chi_adjacent[j]);
    };
    std::vector<double> cot(twoM, 0.0);
    for (int j = M - 1; j >= 1; --j) cot[j] = cot[j + 1] + term(j);
    for (int j = M + 1; j < twoM; ++j) cot[j] = cot[j - 1] - term(j - 1);

    ReconstructionResult out;
    out.phi.assign(twoM, 0.0);
    out.dphi.assign(twoM, 1.0);
    for (int j = 1; j < twoM; ++j) {
        out.phi[j] = std::atan2(1.0, cot[j]) / pi; // arccot into (0,1)
        double sn = std::sin(pi * out.phi[j]);
        out.dphi[j] = std::pow(in.chi_from_zero[j] * sn / pi, 2);
        if (out.phi[j] <= out.phi[j - 1])
            throw std::runtime_error("reconstruct_phi: recovered phi is not increasing");
    }
    return out;
}

} // namespace schw
