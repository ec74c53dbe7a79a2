#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "schwarzian/correlator.hpp"
#include "schwarzian/montecarlo.hpp" // RandomStream

using namespace schw;

namespace {

// grid-converged reference values (independent tree evaluation, composite
// 16-point panels, checked at two resolutions to ~1e-15)
constexpr double ref_interval_moment = 0.7897493362595648;   // chord (1/4,3/4), l=1, T=1, a=0, s=1
constexpr double ref_circle_moment = 18386509243.21925;      // l=1, gap 1/2, sigma=1
constexpr double ref_fig4a = 134.93472604893793;             // dyadic 4-chord interval diagram
constexpr double ref_nested2 = 217309586251.16916;           // (0.2,0.8,l1),(0.3,0.7,l2), sigma=1
constexpr double ref_fork2 = 253492780116.21927;             // (0.1,0.4,l1),(0.5,0.9,l2), sigma=1
constexpr double ref_fig2a_sig2_2 = 34041413.08840195;       // 4-chord circle, sigma^2=2
constexpr double ref_interval_exp_a2 = 2780.668102070176;    // alpha=2 insertion, chord (1/4,3/4)

CircleDiagram nested2() { return {{{0.2, 0.8, 1}, {0.3, 0.7, 2}}}; }
CircleDiagram fork2() { return {{{0.1, 0.4, 1}, {0.5, 0.9, 2}}}; }

IntervalDiagram fig4a() {
    return {1.0, 0.0, {{0.125, 0.875, 1}, {0.25, 0.5, 1}, {0.625, 0.75, 1}, {0.25, 0.375, 1}}};
}

} // namespace

TEST_CASE("face weight examples") {
    CHECK(face_weight(0.0, 1.0, 1.0) == 0.0);
    CHECK(face_weight(1.0, 0.0, 1.0) == doctest::Approx(2.0 * std::sinh(2.0 * pi)).epsilon(1e-13));
    double sigma = std::sqrt(2.0);
    CHECK(face_weight(2.0, 1.0, sigma) ==
          doctest::Approx(std::exp(-4.0) * std::sinh(4.0 * pi) * 4.0).epsilon(1e-13));
    for (double k : {0.1, 1.0, 7.0, 30.0})
        CHECK(std::log(face_weight(k, 0.3, 1.2)) ==
              doctest::Approx(log_face_weight(k, 0.3, 1.2)).epsilon(1e-12));
}

TEST_CASE("chord kernel examples") {
    double sigma = std::sqrt(2.0);
    CHECK(chord_kernel(2, 0.0, 0.0, sigma) == doctest::Approx(1.0 / (2.0 * pi * pi)).epsilon(1e-13));
    // l = 2 closed form through |Gamma(1+ix)|^2
    double k = 0.7, w = 1.9, s1 = 1.3;
    double expect = gamma_abs_sq_int(0, k + w) * gamma_abs_sq_int(0, k - w) / (2.0 * pi * pi) *
                    std::pow(0.5 * s1 * s1, 2);
    CHECK(chord_kernel(2, k, w, s1) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(chord_kernel(3, 0.4, 1.1, 0.9) == doctest::Approx(chord_kernel(3, 1.1, 0.4, 0.9)).epsilon(1e-13));
    CHECK_THROWS_AS((void)chord_kernel(0, 1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("partition function against quadrature") {
    for (double s2 : {0.5, 1.0, 2.0, 4.0}) {
        double sigma = std::sqrt(s2);
        double closed = partition_function(sigma);
        Value q = partition_function_quadrature(sigma);
        CHECK(std::abs(q.estimate - closed) / closed < 1e-10);
    }
    // sigma^2 = 2 closed value
    CHECK(partition_function(std::sqrt(2.0)) ==
          doctest::Approx(std::pow(pi, 1.5) * std::exp(pi * pi)).epsilon(1e-14));
    // Z(sigma) sigma^3 exp(-2 pi^2/sigma^2) is constant
    auto scaled = [](double s) {
        return partition_function(s) * s * s * s * std::exp(-2.0 * pi * pi / (s * s));
    };
    CHECK(scaled(0.5) == doctest::Approx(scaled(1.0)).epsilon(1e-12));
    CHECK(scaled(2.0) == doctest::Approx(scaled(1.0)).epsilon(1e-12));
}

TEST_CASE("circle correlator") {
    SUBCASE("N = 0 reduces to the partition function") {
        Value v = correlator_circle({}, 1.0);
        CHECK(v.estimate == doctest::Approx(partition_function(1.0)).epsilon(1e-10));
    }
    SUBCASE("N = 1 equals the moment formula and the reference value") {
        Value m = moment(1, 0.5, 1.0);
        CHECK(m.estimate == doctest::Approx(ref_circle_moment).epsilon(1e-9));
        CircleDiagram d{{{0.3, 0.8, 1}}};
        Value v = correlator_circle(d, 1.0);
        CHECK(v.estimate == doctest::Approx(m.estimate).epsilon(1e-11));
    }
    SUBCASE("frozen two-chord references") {
        CHECK(correlator_circle(nested2(), 1.0).estimate ==
              doctest::Approx(ref_nested2).epsilon(1e-9));
        CHECK(correlator_circle(fork2(), 1.0).estimate == doctest::Approx(ref_fork2).epsilon(1e-9));
    }
    SUBCASE("four-chord diagram at sigma^2 = 2") {
        CircleDiagram d{{{340.0 / 360, 60.0 / 360, 1},
                         {70.0 / 360, 155.0 / 360, 1},
                         {325.0 / 360, 190.0 / 360, 1},
                         {190.0 / 360, 290.0 / 360, 1}}};
        CHECK(correlator_circle(d, std::sqrt(2.0)).estimate ==
              doctest::Approx(ref_fig2a_sig2_2).epsilon(1e-9));
    }
    SUBCASE("rotation invariance") {
        RandomStream rng(3, 0);
        CircleDiagram d = nested2();
        Value base = correlator_circle(d, 1.0);
        for (int i = 0; i < 3; ++i) {
            Value v = correlator_circle(rotate_circle(d, rng.uniform()), 1.0);
            CHECK(v.estimate == doctest::Approx(base.estimate).epsilon(1e-10));
        }
    }
    SUBCASE("positivity and tail truncation") {
        Value v = correlator_circle(nested2(), 1.0);
        CHECK(v.estimate > 0.0);
        QuadratureConfig wide;
        wide.k_max = 2.0 * default_k_max(1.0, 0.2);
        wide.n_nodes = 1200;
        Value v2 = correlator_circle(nested2(), 1.0, wide);
        CHECK(std::abs(v2.estimate - v.estimate) / v.estimate < 1e-10);
    }
    SUBCASE("interlaced input is rejected") {
        CircleDiagram d{{{0.25, 0.75, 1}, {0.5, 0.0, 1}}};
        CHECK_THROWS_AS((void)correlator_circle(d, 1.0), std::invalid_argument);
    }
}

TEST_CASE("message passing equals the tensor oracle") {
    QuadratureConfig cfg; // shared grid
    SUBCASE("N = 0") {
        Value a = correlator_circle({}, 1.0, cfg);
        Value b = correlator_circle_direct({}, 1.0, cfg);
        CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-12));
    }
    SUBCASE("N = 1") {
        CircleDiagram d{{{0.1, 0.6, 2}}};
        Value a = correlator_circle(d, 1.3, cfg);
        Value b = correlator_circle_direct(d, 1.3, cfg);
        CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-8));
    }
    SUBCASE("N = 2 nested and fork") {
        for (const CircleDiagram& d : {nested2(), fork2()}) {
            Value a = correlator_circle(d, 1.0, cfg);
            Value b = correlator_circle_direct(d, 1.0, cfg);
            CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-6));
        }
    }
    SUBCASE("N = 3 is rejected") {
        CircleDiagram d{{{0.0, 0.1, 1}, {0.2, 0.3, 1}, {0.4, 0.5, 1}}};
        CHECK_THROWS_AS((void)correlator_circle_direct(d, 1.0), std::invalid_argument);
    }
}

TEST_CASE("moment domain and symmetry") {
    CHECK_THROWS_AS((void)moment(1, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS((void)moment(1, 1.0, 1.0), std::domain_error);
    Value a = moment(2, 0.3, 1.0);
    Value b = moment(2, 0.7, 1.0);
    CHECK(a.estimate == doctest::Approx(b.estimate).epsilon(1e-10));
}

TEST_CASE("interval correlator") {
    SUBCASE("N = 0 closed form") {
        for (double a : {0.0, 0.7, -1.3}) {
            IntervalDiagram d{2.0, a, {}};
            double expect = std::exp(-a * a / (2.0 * 2.0)) / std::sqrt(2.0 * pi * 2.0);
            CHECK(correlator_interval(d, 1.0).estimate == doctest::Approx(expect).epsilon(1e-10));
        }
    }
    SUBCASE("reference moment") {
        IntervalDiagram d{1.0, 0.0, {{0.25, 0.75, 1}}};
        CHECK(correlator_interval(d, 1.0).estimate ==
              doctest::Approx(ref_interval_moment).epsilon(1e-10));
    }
    SUBCASE("four-chord reference") {
        CHECK(correlator_interval(fig4a(), 1.0).estimate == doctest::Approx(ref_fig4a).epsilon(1e-9));
    }
    SUBCASE("full-span chord (zero-length unbounded face)") {
        IntervalDiagram d{1.0, 0.0, {{0.0, 1.0, 1}}};
        Value v = correlator_interval(d, 1.0);
        CHECK(v.estimate > 0.0);
        CHECK(std::isfinite(v.estimate));
    }
    SUBCASE("a = 0 dominates a != 0") {
        IntervalDiagram d0{1.0, 0.0, {{0.25, 0.75, 1}}};
        IntervalDiagram d1 = d0;
        d1.a = 0.9;
        CHECK(correlator_interval(d1, 1.0).estimate < correlator_interval(d0, 1.0).estimate);
    }
}

TEST_CASE("interval correlator with exponential insertion") {
    IntervalDiagram d{1.0, 0.0, {{0.25, 0.75, 1}}};
    SUBCASE("alpha = 0 is the plain interval correlator") {
        CHECK(correlator_interval_with_exp(d, 1.0, 0.0).estimate ==
              doctest::Approx(correlator_interval(d, 1.0).estimate).epsilon(1e-12));
    }
    SUBCASE("alpha = 2 reference") {
        CHECK(correlator_interval_with_exp(d, 1.0, 2.0).estimate ==
              doctest::Approx(ref_interval_exp_a2).epsilon(1e-9));
    }
    SUBCASE("N = 0 equals the closed exponential moment") {
        IntervalDiagram empty{1.0, 0.0, {}};
        for (double alpha : {0.5, 1.5, 3.0}) {
            double z = 8.0 * std::pow(std::sin(0.5 * alpha), 2);
            CHECK(correlator_interval_with_exp(empty, 1.0, alpha).estimate ==
                  doctest::Approx(exp_moment_interval(z, 0.0, 1.0, 1.0)).epsilon(1e-10));
        }
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS((void)correlator_interval_with_exp(d, 1.0, pi), std::domain_error);
        IntervalDiagram bad{1.0, 0.5, {{0.25, 0.75, 1}}};
        CHECK_THROWS_AS((void)correlator_interval_with_exp(bad, 1.0, 1.0), std::domain_error);
        IntervalDiagram spanning{1.0, 0.0, {{0.0, 0.5, 1}}};
        CHECK_THROWS_AS((void)correlator_interval_with_exp(spanning, 1.0, 1.0), std::domain_error);
    }
}

TEST_CASE("closed exponential moment") {
    // z = 0: the bare mass
    CHECK(exp_moment_interval(0.0, 0.7, 2.0, 1.1) ==
          doctest::Approx(std::exp(-0.49 / (2 * 2.0 * 1.21)) / (std::sqrt(2 * pi * 2.0) * 1.1))
              .epsilon(1e-13));
    // z = 8, a = 0 hits arccosh_sq(-1) = -pi^2
    CHECK(exp_moment_interval(8.0, 0.0, 1.0, 1.0) ==
          doctest::Approx(std::exp(2.0 * pi * pi) / std::sqrt(2.0 * pi)).epsilon(1e-12));
    CHECK_THROWS_AS((void)exp_moment_interval(9.0, 0.0, 1.0, 1.0), std::domain_error);
    // complex overload agrees on the real axis
    auto c = exp_moment_interval(std::complex<double>(-1.0, 0.0), 0.3, 1.0, 1.0);
    CHECK(c.real() == doctest::Approx(exp_moment_interval(-1.0, 0.3, 1.0, 1.0)).epsilon(1e-13));
    CHECK(std::abs(c.imag()) < 1e-15);
}

TEST_CASE("regularised circle correlator") {
    CircleDiagram d{{{0.0, 0.5, 1}}};
    Value exact = correlator_circle(d, 1.0);
    SUBCASE("alpha = pi reproduces the exact evaluator") {
        Value v = regularized_circle_correlator(d, 1.0, pi);
        CHECK(v.estimate == exact.estimate); // same code path by the weight identity
        // and the general finite-alpha sum reassembles it on the same grid
        Value w = regularized_circle_sum(d, 1.0, pi);
        CHECK(w.estimate == doctest::Approx(exact.estimate).epsilon(1e-12));
    }
    SUBCASE("N = 0 against the closed Gaussian integral") {
        for (double alpha : {1.0, 2.0, pi - 0.1}) {
            Value v = regularized_circle_sum({}, 1.0, alpha);
            double pref = pi * (pi - alpha) / std::sin(alpha);
            double gauss = (2.0 * alpha) * std::sqrt(2.0 * pi) * std::exp(2.0 * alpha * alpha);
            CHECK(v.estimate == doctest::Approx(pref / pi * gauss).epsilon(1e-10));
        }
    }
    SUBCASE("error decreases towards alpha = pi") {
        double e1 = std::abs(regularized_circle_correlator(d, 1.0, pi - 0.2).estimate - exact.estimate);
        double e2 = std::abs(regularized_circle_correlator(d, 1.0, pi - 0.1).estimate - exact.estimate);
        double e3 = std::abs(regularized_circle_correlator(d, 1.0, pi - 0.05).estimate - exact.estimate);
        CHECK(e1 > e2);
        CHECK(e2 > e3);
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS((void)regularized_circle_correlator(d, 1.0, 0.0), std::domain_error);
        CircleDiagram squeezed{{{0.0, 0.5, 1}, {0.0, 0.25, 1}, {0.25, 0.5, 1}}};
        CHECK_THROWS_AS((void)regularized_circle_correlator(squeezed, 1.0, 2.0), std::domain_error);
    }
}

TEST_CASE("zero-length bounded faces need three chords") {
    // identical chords squeeze a two-chord face: rejected
    CircleDiagram d{{{0.1, 0.6, 1}, {0.1, 0.6, 1}}};
    CHECK_THROWS_AS((void)correlator_circle(d, 1.0), std::invalid_argument);
}
