#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "schwarzian/correlator.hpp"
#include "schwarzian/montecarlo.hpp"

using namespace schw;

namespace {

SamplerConfig quick(long long n = 20000, std::uint64_t seed = 1) {
    SamplerConfig c;
    c.n_samples = n;
    c.n_steps = 512;
    c.seed = seed;
    return c;
}

} // namespace

TEST_CASE("bridge sampling marginals") {
    RandomStream rng(5, 0);
    SUBCASE("endpoints are pinned exactly") {
        for (int i = 0; i < 50; ++i) {
            BridgePath p = sample_bridge(1.7, 2.0, 0.8, 256, rng);
            CHECK(p.xi.front() == 0.0);
            CHECK(p.xi.back() == 1.7);
        }
    }
    SUBCASE("variance at T/2 is sigma^2 T/4") {
        const int n = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < n; ++i) {
            RandomStream r(9, i);
            BridgePath p = sample_bridge(0.0, 1.0, 1.0, 64, r);
            double x = p.xi[32];
            sum += x;
            sumsq += x * x;
        }
        double var = sumsq / n - (sum / n) * (sum / n);
        // var of the variance estimator of a Gaussian: 2 var^2 / n
        double se = std::sqrt(2.0 / n) * 0.25;
        CHECK(std::abs(var - 0.25) < 3.0 * se);
    }
    SUBCASE("datum shift is the linear ramp in distribution") {
        const int n = 40000;
        double a = 1.2;
        for (int idx : {16, 32, 48}) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                RandomStream r(13, i);
                BridgePath p = sample_bridge(a, 1.0, 1.0, 64, r);
                sum += p.xi[idx];
            }
            double mean = sum / n;
            double t = idx / 64.0;
            double sd = std::sqrt(t * (1.0 - t)); // marginal sd
            CHECK(std::abs(mean - a * t) < 3.0 * sd / std::sqrt(double(n)));
        }
    }
    SUBCASE("power-of-two step count is required") {
        CHECK_THROWS_AS((void)sample_bridge(0.0, 1.0, 1.0, 300, rng), std::invalid_argument);
    }
}

TEST_CASE("Q and P maps") {
    BridgePath flat{1.0, 0.0, std::vector<double>(257, 0.0)};
    SUBCASE("zero path gives the identity") {
        auto q = q_map(flat);
        CHECK(q[128] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(q.back() == doctest::Approx(1.0).epsilon(1e-12));
        auto P = p_map(flat);
        CHECK(P[64] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(P.back() == 1.0);
    }
    SUBCASE("linear path closed form") {
        double a = 0.9;
        BridgePath lin{1.0, a, {}};
        lin.xi.resize(1025);
        for (int i = 0; i <= 1024; ++i) lin.xi[i] = a * i / 1024.0;
        auto q = q_map(lin);
        CHECK(q.back() == doctest::Approx((std::exp(a) - 1.0) / a).epsilon(1e-6));
        for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] > q[i - 1]);
    }
    SUBCASE("P is invariant under constant shifts of xi") {
        RandomStream rng(3, 1);
        BridgePath p = sample_bridge(0.4, 1.0, 1.0, 128, rng);
        BridgePath shifted = p;
        for (auto& v : shifted.xi) v += 2.3;
        auto p1 = p_map(p), p2 = p_map(shifted);
        for (std::size_t i = 0; i < p1.size(); ++i)
            CHECK(p1[i] == doctest::Approx(p2[i]).epsilon(1e-12));
    }
}

TEST_CASE("pathwise observables") {
    BridgePath flat{1.0, 0.0, std::vector<double>(1025, 0.0)};
    SUBCASE("chi0 of the identity") {
        CHECK(chi0(flat, 0.25, 0.75) == doctest::Approx(2.0).epsilon(1e-10));
        CHECK_THROWS_AS((void)chi0(flat, 0.5, 0.5), std::domain_error);
    }
    SUBCASE("chi0 from q_map equals chi0 from p_map values") {
        RandomStream rng(8, 2);
        BridgePath p = sample_bridge(0.0, 1.0, 1.0, 512, rng);
        auto q = q_map(p);
        auto P = p_map(p);
        int i = 128, j = 384;
        double from_q = chi0(p, q, 0.25, 0.75);
        double dps = std::exp(p.xi[i]) / q.back(), dpt = std::exp(p.xi[j]) / q.back();
        double from_p = std::sqrt(dps * dpt) / (P[j] - P[i]);
        CHECK(from_q == doctest::Approx(from_p).epsilon(1e-12));
    }
    SUBCASE("chi0 endpoint chord uses exp(a/2)/Q(T)") {
        RandomStream rng(8, 3);
        BridgePath p = sample_bridge(0.6, 1.0, 1.0, 256, rng);
        auto q = q_map(p);
        CHECK(chi0(p, q, 0.0, 1.0) == doctest::Approx(std::exp(0.3) / q.back()).epsilon(1e-12));
    }
    SUBCASE("chi0 is invariant under fractional-linear postcomposition") {
        RandomStream rng(8, 4);
        BridgePath p = sample_bridge(0.0, 1.0, 1.0, 512, rng);
        auto P = p_map(p);
        double lam = 0.8, el = std::exp(lam);
        // f(u) = e^l u / ((e^l - 1) u + 1), f' = e^l / ((e^l-1)u+1)^2
        int i = 128, j = 384;
        auto f = [&](double u) { return el * u / ((el - 1.0) * u + 1.0); };
        auto fp = [&](double u) { double d = (el - 1.0) * u + 1.0; return el / (d * d); };
        double dphi_i = std::exp(p.xi[i]) / q_map(p).back();
        double dphi_j = std::exp(p.xi[j]) / q_map(p).back();
        double before = std::sqrt(dphi_i * dphi_j) / (P[j] - P[i]);
        double after = std::sqrt(fp(P[i]) * dphi_i * fp(P[j]) * dphi_j) / (f(P[j]) - f(P[i]));
        CHECK(after == doctest::Approx(before).epsilon(1e-10));
    }
    SUBCASE("chi_alpha conventions") {
        CHECK(chi_alpha(flat, 0.25, 0.5, pi) == doctest::Approx(pi / std::sin(pi * 0.25)).epsilon(1e-10));
        // full-circle convention
        CHECK(chi_alpha(flat, 0.0, 1.0, 2.0) == doctest::Approx(2.0 / std::sin(2.0)).epsilon(1e-10));
        RandomStream rng(8, 5);
        BridgePath p = sample_bridge(0.0, 1.0, 1.0, 512, rng);
        // alpha = pi is symmetric under swapping the endpoints, alpha < pi is not
        CHECK(chi_alpha(p, 0.25, 0.75, pi) == doctest::Approx(chi_alpha(p, 0.75, 0.25, pi)).epsilon(1e-10));
        CHECK(chi_alpha(p, 0.25, 0.75, 2.0) != doctest::Approx(chi_alpha(p, 0.75, 0.25, 2.0)).epsilon(1e-6));
    }
}

TEST_CASE("mc_expectation basics") {
    SUBCASE("constant functional returns the mass with zero error") {
        auto est = mc_expectation([](const BridgePath&, const std::vector<double>&) { return 1.0; },
                                  0.7, 2.0, 1.1, quick(5000));
        CHECK(est.mean == doctest::Approx(bridge_mass(0.7, 2.0, 1.1)).epsilon(1e-13));
        CHECK(est.std_err == doctest::Approx(0.0));
        CHECK(est.n == 5000);
    }
    SUBCASE("bitwise determinism across thread counts") {
        auto f = chord_product_functional({{0.25, 0.75, 1}});
        SamplerConfig c1 = quick(30000);
        c1.threads = 1;
        SamplerConfig c4 = quick(30000);
        c4.threads = 4;
        auto e1 = mc_expectation(f, 0.0, 1.0, 1.0, c1);
        auto e4 = mc_expectation(f, 0.0, 1.0, 1.0, c4);
        CHECK(e1.mean == e4.mean);
        CHECK(e1.std_err == e4.std_err);
    }
    SUBCASE("interval moment matches the exact formula") {
        auto est = mc_expectation(chord_product_functional({{0.25, 0.75, 1}}), 0.0, 1.0, 1.0,
                                  quick(40000, 3));
        double exact = correlator_interval({1.0, 0.0, {{0.25, 0.75, 1}}}, 1.0).estimate;
        CHECK(std::abs(est.mean - exact) < 3.0 * est.std_err);
    }
    SUBCASE("exponential moment matches the closed form") {
        PathFunctional f = [](const BridgePath& p, const std::vector<double>& q) {
            return std::exp(-1.0 * chi0(p, q, 0.0, 1.0));
        };
        auto est = mc_expectation(f, 0.0, 1.0, 1.0, quick(40000, 5));
        double exact = exp_moment_interval(-1.0, 0.0, 1.0, 1.0);
        CHECK(std::abs(est.mean - exact) < 3.0 * est.std_err);
    }
    SUBCASE("doubling the step count moves the estimate by less than a standard error") {
        auto f = chord_product_functional({{0.25, 0.75, 1}});
        SamplerConfig c = quick(60000, 11);
        c.n_steps = 1024;
        auto e1 = mc_expectation(f, 0.0, 1.0, 1.0, c);
        c.n_steps = 2048;
        auto e2 = mc_expectation(f, 0.0, 1.0, 1.0, c);
        CHECK(std::abs(e1.mean - e2.mean) < e1.std_err);
    }
    SUBCASE("insertions up to z = 7.5 stay finite (no exclusions)") {
        PathFunctional f = [](const BridgePath& p, const std::vector<double>& q) {
            return std::exp(7.5 * chi0(p, q, 0.0, 1.0));
        };
        auto est = mc_expectation(f, 0.0, 1.0, 1.0, quick(20000, 2));
        CHECK(est.excluded == 0);
        CHECK(std::isfinite(est.mean));
    }
}

TEST_CASE("endpoint shift check") {
    SUBCASE("b formula") {
        double a = 0.0, z = -4.0;
        double b = 2.0 * std::acosh(std::cosh(a / 2) - z / 4);
        CHECK(b == doctest::Approx(2.0 * std::acosh(2.0)).epsilon(1e-14));
    }
    SUBCASE("z to 0 limit collapses both sides") {
        auto row = mc_endpoint_shift_check(-1e-9, 0.4, 1.0, 1.0, {}, quick(5000, 21));
        CHECK(row.lhs.mean == doctest::Approx(row.rhs.mean).epsilon(5e-2));
    }
    SUBCASE("one-chord agreement within 3 combined errors") {
        auto row = mc_endpoint_shift_check(-4.0, 0.0, 1.0, 1.0, {{0.25, 0.75, 1}}, quick(50000, 23));
        CHECK(std::abs(row.z_score) < 3.0);
    }
}

TEST_CASE("change-of-variables check") {
    SUBCASE("lambda = 0 is the identity map") {
        auto rows = mc_girsanov_check(0.0, 0.3, 1.0, quick(20000, 31));
        for (const auto& r : rows) CHECK(std::abs(r.z_score) < 3.0);
    }
    SUBCASE("lambda = 1 battery agrees within 3 combined errors") {
        auto rows = mc_girsanov_check(1.0, 0.5, 1.0, quick(60000, 33));
        REQUIRE(rows.size() >= 2);
        for (const auto& r : rows) CHECK(std::abs(r.z_score) < 3.0);
    }
}

TEST_CASE("concatenation check") {
    SUBCASE("unit functional: masses compose") {
        double lhs = bridge_mass(0.4, 1.5, 1.0);
        double rhs = integrate_panels(
            [&](double b) { return bridge_mass(b, 0.9, 1.0) * bridge_mass(0.4 - b, 0.6, 1.0); },
            -14.0, 14.0, 0.2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
    SUBCASE("Gaussian bump within 3 errors") {
        auto row = mc_concatenation_check(0.5, 0.5, 0.3, 1.0, quick(40000, 41));
        CHECK(std::abs(row.z_score) < 3.0);
        // symmetry of both sides under T1 <-> T2 at a = 0
        auto r1 = mc_concatenation_check(0.25, 0.75, 0.0, 1.0, quick(20000, 43));
        auto r2 = mc_concatenation_check(0.75, 0.25, 0.0, 1.0, quick(20000, 44));
        CHECK(r1.rhs.mean == doctest::Approx(r2.rhs.mean).epsilon(1e-10));
        CHECK(std::abs(r1.lhs.mean - r2.lhs.mean) < 3.0 * std::hypot(r1.lhs.std_err, r2.lhs.std_err));
    }
}

TEST_CASE("gauge fixing and reconstruction") {
    SUBCASE("identity diffeomorphism reconstructs exactly") {
        const int twoM = 8;
        ReconstructionInput in;
        in.chi_from_zero.assign(twoM, 0.0);
        in.chi_adjacent.assign(twoM, 0.0);
        for (int j = 1; j < twoM; ++j)
            in.chi_from_zero[j] = pi / std::sin(pi * j / double(twoM));
        for (int j = 0; j < twoM; ++j) in.chi_adjacent[j] = pi / std::sin(pi / double(twoM));
        auto rec = reconstruct_phi(in);
        for (int j = 1; j < twoM; ++j) {
            CHECK(rec.phi[j] == doctest::Approx(j / double(twoM)).epsilon(1e-13));
            CHECK(rec.dphi[j] == doctest::Approx(1.0).epsilon(1e-13));
        }
    }
    SUBCASE("gauge-fixed sampled diffeomorphisms round-trip") {
        const int twoM = 8;
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            RandomStream rng(77, rep);
            BridgePath p = sample_bridge(0.0, 1.0, 1.0, 1024, rng);
            auto g = gauge_fix(p);
            CHECK(g.phi[0] == doctest::Approx(0.0));
            CHECK(g.dphi[0] == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(g.phi[512] == doctest::Approx(0.5).epsilon(1e-10));
            ReconstructionInput in;
            in.chi_from_zero.assign(twoM, 0.0);
            in.chi_adjacent.assign(twoM, 0.0);
            auto idx = [&](int j) { return j * 1024 / twoM; };
            for (int j = 1; j < twoM; ++j) in.chi_from_zero[j] = chi_of(g, 0, idx(j));
            for (int j = 0; j < twoM; ++j) in.chi_adjacent[j] = chi_of(g, idx(j), idx(j + 1));
            auto rec = reconstruct_phi(in);
            for (int j = 1; j < twoM; ++j) {
                worst = std::max(worst, std::abs(rec.phi[j] - g.phi[idx(j)]));
                worst = std::max(worst,
                                 std::abs(rec.dphi[j] - g.dphi[idx(j)]) / std::abs(g.dphi[idx(j)]));
            }
        }
        CHECK(worst < 1e-8);
    }
    SUBCASE("midpoint anchor") {
        RandomStream rng(78, 0);
        BridgePath p = sample_bridge(0.0, 1.0, 1.0, 256, rng);
        auto g = gauge_fix(p);
        CHECK(std::cos(pi * g.phi[128]) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("inconsistent observables are rejected") {
        ReconstructionInput in;
        in.chi_from_zero = {0.0, 5.0, -4.0, 5.0};
        in.chi_adjacent = {4.0, 4.0, 4.0, 4.0};
        CHECK_THROWS_AS((void)reconstruct_phi(in), std::runtime_error);
    }
}

TEST_CASE("PSL invariance of chi under the gauge fix") {
    // chi values computed from the raw reparametrisation equal those of the
    // gauge-fixed representative
    RandomStream rng(91, 0);
    BridgePath p = sample_bridge(0.0, 1.0, 1.0, 512, rng);
    auto g = gauge_fix(p);
    for (auto [s, t] : std::vector<std::pair<double, double>>{{0.25, 0.5}, {0.125, 0.875}}) {
        int i = grid_index(p, s), j = grid_index(p, t);
        CHECK(chi_pi(p, s, t) == doctest::Approx(chi_of(g, i, j)).epsilon(1e-9));
    }
}
