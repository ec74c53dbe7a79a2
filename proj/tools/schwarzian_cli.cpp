// Batch front end: reads diagram JSON, dispatches the exact, Monte Carlo,
// regularised, stress and verification computations, writes CSV.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schwarzian/correlator.hpp"
#include "schwarzian/identities.hpp"
#include "schwarzian/io.hpp"
#include "schwarzian/montecarlo.hpp"
#include "schwarzian/stress.hpp"

namespace {

struct Options {
    std::string input;
    std::string output;
    double sigma_sq = 0.0;
    std::vector<double> alphas;
    std::uint64_t seed = 1;
    long long samples = 100000;
    int steps = 1024;
    double k_max = 0.0;
    int nodes = 0;
    std::string eps_sweep = "1e-2:1e-4:5";
    double tolerance = 0.0;
};

std::vector<double> parse_eps_sweep(const std::string& s) {
    double lo = 0, hi = 0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(s);
    if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || lo <= 0 || hi <= 0)
        throw CLI::ValidationError("--eps-sweep expects a:b:n with positive a, b");
    return schw::geometric_grid(lo, hi, n);
}

// --output wins; otherwise SCHWARZIAN_OUTPUT_DIR/<sub>.csv; otherwise stdout.
std::unique_ptr<std::ostream> open_output(const Options& opt, const std::string& sub,
                                          std::ostream*& ref) {
    std::string path = opt.output;
    if (path.empty()) {
        if (const char* dir = std::getenv("SCHWARZIAN_OUTPUT_DIR"))
            path = std::string(dir) + "/" + sub + ".csv";
    }
    if (path.empty()) {
        ref = &std::cout;
        return nullptr;
    }
    auto f = std::make_unique<std::ofstream>(path);
    if (!*f) throw std::runtime_error("cannot open output file: " + path);
    ref = f.get();
    return f;
}

std::string meta(const schw::DiagramFile& d, const schw::QuadratureConfig& cfg) {
    std::ostringstream os;
    os << "sigma=" << schw::CsvWriter::num(d.spec.sigma) << ";hash=" << schw::diagram_hash(d)
       << ";k_max=" << schw::CsvWriter::num(cfg.k_max) << ";nodes=" << cfg.n_nodes;
    return os.str();
}

schw::QuadratureConfig quad_config(const Options& opt) {
    schw::QuadratureConfig cfg;
    cfg.k_max = opt.k_max;
    cfg.n_nodes = opt.nodes;
    return cfg;
}

int run_exact(const Options& opt) {
    auto d = schw::load_diagram(opt.input);
    auto cfg = quad_config(opt);
    schw::Value v = schw::correlator(d.spec, cfg);
    std::ostream* os = nullptr;
    auto hold = open_output(opt, "exact", os);
    schw::CsvWriter csv(*os);
    auto resolved = schw::auto_config(cfg, d.spec.sigma, 1.0);
    csv.row("exact", "correlator", v.estimate, v.quadrature_error, meta(d, resolved));
    return 0;
}

int run_partition(const Options& opt) {
    if (!(opt.sigma_sq > 0.0)) throw CLI::ValidationError("partition requires --sigma-sq > 0");
    double sigma = std::sqrt(opt.sigma_sq);
    double closed = schw::partition_function(sigma);
    schw::Value quad = schw::partition_function_quadrature(sigma, quad_config(opt));
    std::ostream* os = nullptr;
    auto hold = open_output(opt, "partition", os);
    schw::CsvWriter csv(*os);
    std::ostringstream extra;
    extra << "sigma_sq=" << schw::CsvWriter::num(opt.sigma_sq)
          << ";quadrature=" << schw::CsvWriter::num(quad.estimate);
    csv.row("partition", "mass", closed, std::abs(closed - quad.estimate), extra.str());
    double rel = std::abs(closed - quad.estimate) / closed;
    return rel <= 1e-8 ? 0 : 1;
}

int run_mc(const Options& opt) {
    auto d = schw::load_diagram(opt.input);
    if (d.spec.geometry != schw::Geometry::Interval)
        throw std::runtime_error(
            "mc samples the pinned interval measures only; provide an interval diagram "
            "(circle-measure sampling is out of scope)");
    const auto& iv = d.spec.interval;
    schw::SamplerConfig scfg;
    scfg.seed = opt.seed;
    scfg.n_samples = opt.samples;
    scfg.n_steps = opt.steps;
    auto est = schw::mc_expectation(schw::chord_product_functional(iv.chords), iv.a, iv.T,
                                    d.spec.sigma, scfg);
    schw::Value exact = schw::correlator_interval(iv, d.spec.sigma, quad_config(opt));

    std::ostream* os = nullptr;
    auto hold = open_output(opt, "mc", os);
    schw::CsvWriter csv(*os);
    std::ostringstream extra;
    extra << "n=" << est.n << ";excluded=" << est.excluded << ";seed=" << opt.seed
          << ";steps=" << opt.steps << ";hash=" << schw::diagram_hash(d);
    csv.row("mc", "estimate", est.mean, est.std_err, extra.str());
    csv.row("mc", "exact_reference", exact.estimate, exact.quadrature_error,
            "hash=" + schw::diagram_hash(d));
    double z = (est.mean - exact.estimate) / est.std_err;
    bool pass = std::abs(z) <= 3.0;
    std::ostringstream cmp;
    cmp << "z=" << schw::CsvWriter::num(z) << ";pass=" << (pass ? 1 : 0);
    csv.row("mc", "cross_check", std::abs(est.mean - exact.estimate), 3.0 * est.std_err, cmp.str());
    if (est.excluded > est.n / 1000)
        std::cerr << "warning: " << est.excluded << " non-finite samples excluded\n";
    return pass ? 0 : 1;
}

int run_reg_sweep(const Options& opt) {
    auto d = schw::load_diagram(opt.input);
    if (d.spec.geometry != schw::Geometry::Circle)
        throw std::runtime_error("reg-sweep applies to circle diagrams");
    std::vector<double> alphas = opt.alphas;
    if (alphas.empty()) alphas = {schw::pi - 0.2, schw::pi - 0.1, schw::pi - 0.05, schw::pi};
    auto cfg = quad_config(opt);
    schw::Value exact = schw::correlator_circle(d.spec.circle, d.spec.sigma, cfg);

    std::ostream* os = nullptr;
    auto hold = open_output(opt, "reg-sweep", os);
    schw::CsvWriter csv(*os);
    csv.row("reg-sweep", "exact", exact.estimate, exact.quadrature_error,
            "hash=" + schw::diagram_hash(d));
    for (double a : alphas) {
        schw::Value v = schw::regularized_circle_correlator(d.spec.circle, d.spec.sigma, a, cfg);
        std::ostringstream extra;
        extra << "alpha=" << schw::CsvWriter::num(a)
              << ";rel_err=" << schw::CsvWriter::num(std::abs(v.estimate - exact.estimate) /
                                                     std::abs(exact.estimate));
        csv.row("reg-sweep", "regularized", v.estimate, v.quadrature_error, extra.str());
    }
    return 0;
}

int run_stress(const Options& opt) {
    auto d = schw::load_diagram(opt.input);
    if (d.spec.geometry != schw::Geometry::Circle)
        throw std::runtime_error("stress applies to circle diagrams");
    schw::StressSpec spec;
    spec.base = d.spec.circle;
    spec.insertion_points = d.insertions;
    spec.sigma = d.spec.sigma;
    if (spec.insertion_points.empty())
        throw std::runtime_error("stress needs an \"insertions\" array in the diagram file");

    auto cfg = quad_config(opt);
    schw::Value exact = schw::stress_correlator(spec, cfg);
    std::vector<double> eps = parse_eps_sweep(opt.eps_sweep);

    std::ostream* os = nullptr;
    auto hold = open_output(opt, "stress", os);
    schw::CsvWriter csv(*os);
    csv.row("stress", "limit_formula", exact.estimate, exact.quadrature_error,
            "hash=" + schw::diagram_hash(d));
    std::vector<double> values;
    for (double e : eps) {
        std::vector<double> es(spec.insertion_points.size(), e);
        schw::Value v = schw::regularized_stress_lhs(spec, es, cfg);
        values.push_back(v.estimate);
        csv.row("stress", "pre_limit", v.estimate, v.quadrature_error,
                "eps=" + schw::CsvWriter::num(e));
    }
    if (values.size() >= 3) {
        schw::EpsFit fit = schw::fit_eps_model(eps, values);
        csv.row("stress", "fit_eps^-2", fit.a, 0.0, "model=a*eps^-2+b+c*sqrt(eps)");
        csv.row("stress", "fit_constant", fit.b, 0.0,
                "limit_formula_ratio=" + schw::CsvWriter::num(fit.b / exact.estimate));
        csv.row("stress", "fit_sqrt_eps", fit.c, 0.0, "");
    }
    return 0;
}

int run_verify(const Options& opt) {
    auto reports = schw::identity_suite();
    std::ostream* os = nullptr;
    auto hold = open_output(opt, "verify", os);
    schw::CsvWriter csv(*os);
    int failures = 0;
    for (auto r : reports) {
        if (opt.tolerance > 0.0) {
            r.tolerance = opt.tolerance;
            r.pass = r.rel_diff <= r.tolerance ||
                     (std::max(std::abs(r.lhs), std::abs(r.rhs)) <= 1e-10 && r.abs_diff <= r.tolerance);
        }
        std::ostringstream extra;
        extra << "lhs=" << schw::CsvWriter::num(r.lhs) << ";rhs=" << schw::CsvWriter::num(r.rhs)
              << ";tol=" << schw::CsvWriter::num(r.tolerance) << ";pass=" << (r.pass ? 1 : 0);
        csv.row("verify", r.name, r.rel_diff, r.abs_diff, extra.str());
        if (!r.pass) failures++;
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact and Monte Carlo correlators of the Schwarzian field theory"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", opt.input, "diagram JSON file");
        sub->add_option("--output", opt.output, "CSV output path (default: stdout or $SCHWARZIAN_OUTPUT_DIR)");
        sub->add_option("--k-max", opt.k_max, "quadrature grid truncation");
        sub->add_option("--nodes", opt.nodes, "quadrature nodes per face variable");
    };

    auto* exact = app.add_subcommand("exact", "exact correlator of a diagram file");
    add_common(exact);
    exact->get_option("--input")->required();

    auto* partition = app.add_subcommand("partition", "partition function: closed form vs quadrature");
    add_common(partition);
    partition->add_option("--sigma-sq", opt.sigma_sq, "variance sigma^2")->required();

    auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of an interval diagram vs exact");
    add_common(mc);
    mc->get_option("--input")->required();
    mc->add_option("--seed", opt.seed, "master seed");
    mc->add_option("--samples", opt.samples, "sample count");
    mc->add_option("--steps", opt.steps, "path steps (power of two)");

    auto* reg = app.add_subcommand("reg-sweep", "alpha-regularised correlator sweep");
    add_common(reg);
    reg->get_option("--input")->required();
    reg->add_option("--alpha", opt.alphas, "alpha values (default pi-0.2, pi-0.1, pi-0.05, pi)");

    auto* stress = app.add_subcommand("stress", "stress-energy correlator and epsilon sweep");
    add_common(stress);
    stress->get_option("--input")->required();
    stress->add_option("--eps-sweep", opt.eps_sweep, "geometric epsilon grid a:b:n");

    auto* verify = app.add_subcommand("verify", "run the identity suite");
    verify->add_option("--output", opt.output, "CSV output path");
    verify->add_option("--tolerance", opt.tolerance, "override the per-identity tolerances");

    CLI11_PARSE(app, argc, argv);

    try {
        if (exact->parsed()) return run_exact(opt);
        if (partition->parsed()) return run_partition(opt);
        if (mc->parsed()) return run_mc(opt);
        if (reg->parsed()) return run_reg_sweep(opt);
        if (stress->parsed()) return run_stress(opt);
        if (verify->parsed()) return run_verify(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
