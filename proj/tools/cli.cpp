#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hartogskit/continuation.hpp"
#include "hartogskit/dbar.hpp"
#include "hartogskit/error.hpp"
#include "hartogskit/hartogs.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/loopspace.hpp"
#include "hartogskit/parallel.hpp"
#include "hartogskit/royden.hpp"

namespace hk::cli {

void RunConfig::set(const std::string& key, const std::string& value)
{
    if (!values_.emplace(key, value).second)
        fail(ErrorCode::ConfigError, "duplicate key '" + key + "'");
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const
{
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key, double fallback) const
{
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const double v = parse_double(it->second);
    if (!std::isfinite(v))
        fail(ErrorCode::ConfigError, "key '" + key + "' must be finite");
    return v;
}

double RunConfig::positive(const std::string& key, double fallback) const
{
    const double v = number(key, fallback);
    if (!(v > 0))
        fail(ErrorCode::ConfigError, "key '" + key + "' must be positive, got " + format_double(v));
    return v;
}

double RunConfig::open_range(const std::string& key, double fallback, double lo, double hi) const
{
    const double v = number(key, fallback);
    if (!(v > lo && v < hi))
        fail(ErrorCode::ConfigError, "key '" + key + "' must lie in (" + format_double(lo) + ", " + format_double(hi) +
                                         "), got " + format_double(v));
    return v;
}

int RunConfig::integer(const std::string& key, int fallback, int lo, int hi) const
{
    used_.insert(key);
    const auto it = values_.find(key);
    const int v = it == values_.end() ? fallback : parse_int(it->second);
    if (v < lo || v > hi)
        fail(ErrorCode::ConfigError, "key '" + key + "' must lie in [" + std::to_string(lo) + ", " +
                                         std::to_string(hi) + "], got " + std::to_string(v));
    return v;
}

int RunConfig::power_of_two(const std::string& key, int fallback, int lo, int hi) const
{
    const int v = integer(key, fallback, lo, hi);
    if ((v & (v - 1)) != 0)
        fail(ErrorCode::ConfigError, "key '" + key + "' must be a power of two, got " + std::to_string(v));
    return v;
}

void RunConfig::reject_unused() const
{
    std::string unknown;
    for (const auto& [k, v] : values_)
        if (!used_.count(k))
            unknown += (unknown.empty() ? "" : ", ") + k;
    if (!unknown.empty())
        fail(ErrorCode::ConfigError, "unknown keys for '" + subcommand + "': " + unknown);
}

RunConfig parse_config(std::istream& is)
{
    RunConfig cfg;
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string_view body = trim(std::string_view(line).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            fail(ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected key = value");
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (key.empty() || value.empty())
            fail(ErrorCode::ConfigError, "line " + std::to_string(number) + ": empty key or value");
        cfg.set(key, value);
    }
    return cfg;
}

void Summary::add(const std::string& key, double value)
{
    add(key, format_double(value));
}

void Summary::write(std::ostream& os) const
{
    for (const auto& [k, v] : rows_)
        os << k << '=' << v << '\n';
}

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names = {"extend", "dbar", "cousin", "normalize", "continue", "loopspace"};
    return names;
}

namespace {

std::ofstream open_output(const RunConfig& cfg, const std::string& name)
{
    std::ofstream os(cfg.out_dir / name);
    if (!os)
        fail(ErrorCode::ConfigError, "cannot write " + (cfg.out_dir / name).string());
    return os;
}

VectorXc scalar(Complex v)
{
    VectorXc out(1);
    out[0] = v;
    return out;
}

void write_point(std::ostream& os, const VectorXc& z)
{
    for (Eigen::Index i = 0; i < z.size(); ++i)
        os << ',' << format_double(z[i].real()) << ',' << format_double(z[i].imag());
}

void point_header(std::ostream& os, int dims)
{
    for (int i = 1; i <= dims; ++i)
        os << ",z" << i << "_re,z" << i << "_im";
}

// extend ---------------------------------------------------------------------

HoloMap extend_fixture(const std::string& id, int dims)
{
    const int last = dims - 1;
    if (id == "inv_2_minus_zlast")
        return [last](const VectorXc& z) { return scalar(1.0 / (2.0 - z[last])); };
    if (id == "inv_4_minus_z1zlast")
        return [last](const VectorXc& z) { return scalar(1.0 / (4.0 - z[0] * z[last])); };
    if (id == "inv_1p3_minus_z1")
        return [](const VectorXc& z) { return scalar(1.0 / (1.3 - z[0])); };
    if (id == "polynomial")
        return [last](const VectorXc& z) {
            return scalar(z[0] * z[0] * z[0] * z[last] * z[last] + 2.0 * z[0] - z[last] + 1.0);
        };
    fail(ErrorCode::ConfigError, "unknown extend fixture '" + id + "'");
}

void run_extend(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "inv_2_minus_zlast");
    const int q = cfg.integer("q", 1, 1, 4);
    const int n = cfg.integer("n", 1, 1, 8);
    const double r = cfg.open_range("r", 0.2, 0.0, 1.0);
    const std::string model = cfg.text("model", "polydisk");
    if (model != "polydisk" && model != "ball")
        fail(ErrorCode::ConfigError, "model must be polydisk or ball");
    const bool infinite = cfg.integer("infinite", 0, 0, 1) == 1;
    ExtensionOptions opt;
    opt.node_count = cfg.power_of_two("node_count", 256, 16, 1024);
    opt.line_node_count = cfg.power_of_two("line_node_count", 64, 16, 512);
    opt.overlap_samples = cfg.integer("overlap_samples", 100, 1, 100000);
    opt.overlap_tolerance = cfg.positive("overlap_tolerance", 1e-9);
    opt.negative_tolerance = cfg.positive("negative_tolerance", 1e-9);
    opt.decay_tolerance = cfg.positive("decay_tolerance", 1e-9);
    opt.cr_tolerance = cfg.positive("cr_tolerance", 1e-5);
    opt.seed = static_cast<std::uint64_t>(cfg.integer("seed", 24301, 0, 2147483647));
    const int grid = cfg.integer("grid", 8, 1, 40);
    const double grid_radius = cfg.open_range("grid_radius", 0.9, 0.0, 1.0);
    cfg.reject_unused();

    const HartogsFigure fig(q, n, r, model == "ball" ? FigureModel::Ball : FigureModel::Polydisk, infinite);
    const HoloMap f = extend_fixture(id, fig.dim());
    std::vector<VectorXc> targets = interior_grid(fig.dim(), grid, grid_radius);
    if (model == "ball") {
        std::vector<VectorXc> inside;
        for (const auto& z : targets)
            if (fig.target_contains(z))
                inside.push_back(z);
        targets = inside;
    }
    const ExtensionResult res = extend(f, fig, targets, opt);

    double err = 0;
    auto values = open_output(cfg, "values.csv");
    values << "index";
    point_header(values, fig.dim());
    values << ",value_re,value_im,exact_re,exact_im,abs_error\n";
    for (std::size_t i = 0; i < res.targets.size(); ++i) {
        const Complex v = res.values[i][0], e = f(res.targets[i])[0];
        err = std::max(err, std::abs(v - e));
        values << i;
        write_point(values, res.targets[i]);
        values << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << ',' << format_double(e.real())
               << ',' << format_double(e.imag()) << ',' << format_double(std::abs(v - e)) << '\n';
    }
    auto coeffs = open_output(cfg, "extension.csv");
    write_extension_csv(coeffs, res);

    s.add("fixture", id);
    s.add("targets", res.targets.size());
    s.add("max_overlap_residual", res.overlap_residual);
    s.add("max_abs_error", err);
    s.add("sup_bound", res.sup_bound);
    s.add("negative_coefficient_max", res.negative_coefficient_max);
    s.add("top_band_max", res.top_band_max);
    s.add("cr_residual_max", res.cr_residual_max);
    s.add("certification_residual", res.certification_residual);
    s.add("max_principle_ratio", res.max_principle_ratio);
    s.add("planes_built", res.planes_built);
}

// dbar -----------------------------------------------------------------------

std::function<Complex(Complex)> dbar_fixture(const std::string& id)
{
    if (id == "constant")
        return [](Complex) { return Complex(1.0, 0.0); };
    if (id == "z")
        return [](Complex z) { return z; };
    if (id == "conj_z")
        return [](Complex z) { return std::conj(z); };
    if (id == "quadratic")
        return [](Complex z) { return z * z + 0.5 * std::conj(z); };
    if (id == "exp")
        return [](Complex z) { return std::exp(z); };
    fail(ErrorCode::ConfigError, "unknown dbar fixture '" + id + "'");
}

void run_dbar(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "quadratic");
    const int resolution = cfg.integer("resolution", 256, 16, 1024);
    const double radius = cfg.positive("radius", 1.0);
    cfg.reject_unused();

    const auto g = dbar_fixture(id);
    const PlanarDomain dom = PlanarDomain::disk(0.0, radius, resolution);
    const GridFunction data = GridFunction::sample(make_grid(dom), g);
    const CauchyResult res = cauchy_transform(data);
    const double gamma = sup_constant(dom);
    auto out = open_output(cfg, "solution.csv");
    write_grid_csv(out, res.u);

    s.add("fixture", id);
    s.add("resolution", resolution);
    s.add("dbar_residual", res.dbar_residual);
    s.add("expected_bound", res.expected_bound);
    s.add("sup_u", res.u.sup());
    s.add("sup_g", data.sup());
    s.add("sup_constant", gamma);
    s.add("estimate_ratio", res.u.sup() / std::max(gamma * data.sup(), 1e-300));
}

// cousin ---------------------------------------------------------------------

void run_cousin(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "laurent_inv_z");
    CousinOptions opt;
    opt.resolution = cfg.integer("resolution", 256, 32, 1024);
    opt.cocycle_tolerance = cfg.positive("cocycle_tolerance", 1e-8);
    opt.cr_tolerance = cfg.positive("cr_tolerance", 2e-2);
    const int samples = cfg.integer("trace_samples", 64, 4, 4096);
    cfg.reject_unused();

    std::function<Complex(Complex)> f12;
    if (id == "laurent_inv_z")
        f12 = [](Complex z) { return 1.0 / z; };
    else if (id == "z")
        f12 = [](Complex z) { return z; };
    else if (id == "laurent_mixed")
        f12 = [](Complex z) { return 1.0 / (z * z) + 0.5 / z + z * z; };
    else
        fail(ErrorCode::ConfigError, "unknown cousin fixture '" + id + "'");
    AdditiveCocycle c;
    c.charts = 2;
    c.set(0, 1, [f12](Complex z) { return scalar(f12(z)); });
    const CousinSolution sol = solve_cousin(Cover::standard_two_chart(), c, opt);

    auto out = open_output(cfg, "cousin.csv");
    out << "index,z_re,z_im,c1_re,c1_im,c2_re,c2_im,delta_error\n";
    for (int j = 0; j < samples; ++j) {
        const Complex z = std::polar(0.9, 2.0 * kPi * j / samples);
        const Complex a = sol.c[0](z)[0], b = sol.c[1](z)[0];
        out << j << ',' << format_double(z.real()) << ',' << format_double(z.imag()) << ',' << format_double(a.real())
            << ',' << format_double(a.imag()) << ',' << format_double(b.real()) << ',' << format_double(b.imag()) << ','
            << format_double(std::abs(a - b - f12(z))) << '\n';
    }

    s.add("fixture", id);
    s.add("resolution", opt.resolution);
    s.add("delta_residual", sol.delta_residual);
    s.add("constant", sol.constant);
    s.add("gamma", sol.gamma);
    s.add("dbar_rho_sup", sol.dbar_rho_sup);
    s.add("measured_ratio", sol.measured_ratio);
    s.add("cr_residual", sol.cr_residual);
    s.add("cocycle_residual", sol.cocycle_residual);
    s.add("dbar_residual", sol.dbar_residual);
}

// normalize ------------------------------------------------------------------

void run_normalize(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "round_trip");
    const int nodes = cfg.power_of_two("circle_nodes", 128, 32, 1024);
    const int fiber_dim = cfg.integer("fiber_dim", 2, 1, 4);
    const int degree = cfg.integer("degree", 12, 2, 24);
    RoundTripFixture fx;
    fx.fiber_dim = fiber_dim;
    fx.degree = degree;
    fx.a = cfg.positive("a", fx.a);
    fx.b = cfg.positive("b", fx.b);
    fx.twist = cfg.number("twist", fx.twist);
    fx.shear = cfg.number("shear", fx.shear);
    fx.chart_degree = cfg.integer("chart_degree", 0, 0, 24);
    const std::string transitions = cfg.text("transitions_csv", "");
    NormalizeOptions opt;
    opt.cocycle_tolerance = cfg.positive("cocycle_tolerance", opt.cocycle_tolerance);
    opt.identity_tolerance = cfg.positive("identity_tolerance", opt.identity_tolerance);
    opt.min_epsilon = cfg.positive("min_epsilon", opt.min_epsilon);
    const double tubular_tolerance = cfg.positive("tubular_tolerance", 1e-8);
    cfg.reject_unused();

    const auto circle = std::make_shared<SampledCircle>(0.9, nodes);
    ChartAtlas atlas;
    if (id == "identity") {
        atlas = identity_atlas(fiber_dim, degree, circle);
    } else if (id == "round_trip") {
        atlas = round_trip_atlas(fx, circle);
    } else if (id == "csv") {
        std::ifstream is(transitions);
        if (transitions.empty() || !is)
            fail(ErrorCode::ConfigError, "fixture csv needs a readable transitions_csv");
        atlas = trivialize_linear_part(atlas_from_transition(read_fibered_csv(is, circle, fiber_dim, degree)));
    } else {
        fail(ErrorCode::ConfigError, "unknown normalize fixture '" + id + "'");
    }

    const RoydenResult res = normalize_transitions(atlas, degree, opt);
    const TubularMap tub = assemble_tubular_map(res, tubular_tolerance);

    auto deg = open_output(cfg, "degrees.csv");
    deg << "degree,a_norm_1,a_norm_2,b_norm_1,b_norm_2,cocycle_norm,cocycle_residual,locality_residual,"
           "composition_residual\n";
    for (const auto& d : res.degrees)
        deg << d.degree << ',' << format_double(d.a_norm[0]) << ',' << format_double(d.a_norm[1]) << ','
            << format_double(d.b_norm[0]) << ',' << format_double(d.b_norm[1]) << ',' << format_double(d.cocycle_norm)
            << ',' << format_double(d.cocycle_residual) << ',' << format_double(d.locality_residual) << ','
            << format_double(d.composition_residual) << '\n';
    auto tr = open_output(cfg, "transitions.csv");
    write_fibered_csv(tr, res.atlas.t12);

    s.add("fixture", id);
    s.add("degree", degree);
    s.add("epsilon", res.epsilon);
    s.add("epsilon_lower", res.epsilon_lower);
    s.add("growth_rate", res.growth_rate);
    s.add("identity_residual", res.identity_residual);
    s.add("chart_disagreement", tub.chart_disagreement);
    s.add("disk_leak", tub.disk_leak);
    if (id == "round_trip")
        s.add("fixture_epsilon", round_trip_epsilon(fx));
}

// continue -------------------------------------------------------------------

void run_continue(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "swept_bidisk");
    const Complex c(cfg.number("c_re", 0.5), cfg.number("c_im", 0.0));
    if (!(std::abs(c) < 1))
        fail(ErrorCode::ConfigError, "|c| must be below 1");
    const double t_star = cfg.open_range("t_star", 0.9, 0.0, 1.0 + 1e-12);
    const double inner = cfg.positive("inner", 0.35);
    const double outer = cfg.positive("outer_margin", 0.3);
    ContinuationOptions opt;
    opt.r = cfg.open_range("r", opt.r, 0.0, 1.0);
    opt.tube_radius = cfg.positive("tube_radius", opt.tube_radius);
    opt.max_step = cfg.positive("max_step", opt.max_step);
    opt.min_step = cfg.positive("min_step", opt.min_step);
    opt.table_nodes = cfg.power_of_two("table_nodes", opt.table_nodes, 16, 64);
    opt.coherence_tolerance = cfg.positive("coherence_tolerance", opt.coherence_tolerance);
    opt.frame_rotation = cfg.number("frame_rotation", 0.0);
    opt.extension.line_node_count = cfg.power_of_two("line_node_count", opt.extension.line_node_count, 16, 256);
    opt.extension.overlap_tolerance = cfg.positive("overlap_tolerance", opt.extension.overlap_tolerance);
    cfg.reject_unused();

    ContinuationFixture fx;
    if (id == "swept_bidisk")
        fx = swept_bidisk_fixture(c, inner, outer);
    else if (id == "polynomial")
        fx = polynomial_fixture(c);
    else if (id == "pole")
        fx = pole_fixture(c, t_star, outer);
    else
        fail(ErrorCode::ConfigError, "unknown continue fixture '" + id + "'");

    std::vector<FunctionElement> partial;
    ContinuationResult res;
    const auto write_trace = [&](const std::vector<FunctionElement>& els) {
        ContinuationResult tmp;
        tmp.elements = els;
        auto out = open_output(cfg, "continuation.csv");
        write_continuation_csv(out, tmp);
    };
    try {
        res = continue_along(fx.f, fx.region, fx.family, opt, &partial);
    } catch (const Error&) {
        write_trace(partial);
        throw;
    }
    write_trace(res.elements);

    const auto& last = res.elements.back();
    const Complex v = last.center_value()[0];
    double coherence = 0, overlap = 0;
    for (const auto& e : res.elements) {
        coherence = std::max(coherence, e.coherence);
        overlap = std::max(overlap, e.overlap_residual);
    }
    const Complex exact = fx.f(last.map(last.t, last.center))[0];

    s.add("fixture", id);
    s.add("reached_t", last.t);
    s.add("elements", res.elements.size());
    s.add("halvings", res.halvings);
    s.add("final_value_re", v.real());
    s.add("final_value_im", v.imag());
    s.add("closed_form_re", exact.real());
    s.add("closed_form_im", exact.imag());
    s.add("abs_error", std::abs(v - exact));
    s.add("max_coherence", coherence);
    s.add("max_overlap_residual", overlap);
    s.add("initial_margin", res.family.initial_margin);
    s.add("boundary_margin", res.family.boundary_margin);
    s.add("lipschitz", res.family.lipschitz);
    s.add("tubular_deviation", res.tubular_deviation);
}

// loopspace ------------------------------------------------------------------

struct LoopFixture {
    LoopFamily family;
    // Closed-form coefficient c_m(z), when known.
    std::function<VectorXc(const VectorXc&, int)> exact;
};

LoopFixture loop_fixture(const std::string& id, int k, int modes, int nodes)
{
    LoopFixture fx;
    if (id == "two_mode") {
        fx.family = LoopFamily::from_pointwise(
            [](const VectorXc& z, double s) { return scalar(std::polar(1.0, s) / (2.0 - z[1]) + std::polar(1.0, -s) * z[0]); },
            2, 1, k, modes, nodes);
        fx.exact = [](const VectorXc& z, int m) {
            return scalar(m == 1 ? 1.0 / (2.0 - z[1]) : (m == -1 ? z[0] : Complex(0.0, 0.0)));
        };
    } else if (id == "rational_constant") {
        fx.family = LoopFamily::from_pointwise(
            [](const VectorXc& z, double) { return scalar(Complex(1.0, 0.5) / (3.0 - z[0] - z[1])); }, 2, 1, k, modes,
            nodes);
        fx.exact = [](const VectorXc& z, int m) {
            return scalar(m == 0 ? Complex(1.0, 0.5) / (3.0 - z[0] - z[1]) : Complex(0.0, 0.0));
        };
    } else if (id == "constant") {
        fx.family = LoopFamily::from_pointwise(
            [](const VectorXc&, double s) { return scalar(0.3 + std::polar(0.5, 2 * s)); }, 2, 1, k, modes, nodes);
        fx.exact = [](const VectorXc&, int m) {
            return scalar(m == 0 ? Complex(0.3, 0.0) : (m == 2 ? Complex(0.5, 0.0) : Complex(0.0, 0.0)));
        };
    } else {
        fail(ErrorCode::ConfigError, "unknown loopspace fixture '" + id + "'");
    }
    return fx;
}

void run_loopspace(const RunConfig& cfg, Summary& s)
{
    const std::string id = cfg.text("fixture", "two_mode");
    const int k = cfg.integer("k", 1, 1, 8);
    const int modes = cfg.integer("modes", 8, 1, 64);
    const int nodes = cfg.power_of_two("loop_nodes", 64, 16, 1024);
    if (nodes < 4 * modes)
        fail(ErrorCode::ConfigError, "loop_nodes must be at least 4 * modes");
    const double r = cfg.open_range("r", 0.2, 0.0, 1.0);
    LoopExtensionOptions opt;
    opt.extension.node_count = cfg.power_of_two("node_count", 128, 16, 1024);
    opt.extension.overlap_tolerance = cfg.positive("overlap_tolerance", opt.extension.overlap_tolerance);
    opt.certificate_slack = cfg.positive("certificate_slack", opt.certificate_slack);
    const int grid = cfg.integer("grid", 4, 1, 20);
    cfg.reject_unused();

    const LoopFixture fx = loop_fixture(id, k, modes, nodes);
    const HartogsFigure fig(1, 1, r);
    const double rho = (2.0 - r) / 2.0;
    opt.targets = interior_grid(2, grid, rho);
    VectorXc probe(2);
    probe << 0.0, rho;
    opt.targets.push_back(probe);
    const LoopExtensionResult res = extend_loop_family(fx.family, fig, opt);

    double mode_error = 0;
    auto norms = open_output(cfg, "norms.csv");
    norms << "index";
    point_header(norms, 2);
    norms << ",sobolev_norm\n";
    for (std::size_t i = 0; i < res.targets.size(); ++i) {
        const SobolevLoop l = res.extended.loop(res.targets[i]);
        for (int m = -modes; m <= modes; ++m)
            mode_error = std::max(mode_error, (l.coefficient(m) - fx.exact(res.targets[i], m)).norm());
        norms << i;
        write_point(norms, res.targets[i]);
        norms << ',' << format_double(res.target_norms[i]) << '\n';
    }
    auto loop = open_output(cfg, "loop.csv");
    write_loop_csv(loop, res.extended.loop(probe));

    s.add("fixture", id);
    s.add("k", k);
    s.add("modes", modes);
    s.add("targets", res.targets.size());
    s.add("max_mode_error", mode_error);
    s.add("certificate_ratio", res.certificate_ratio);
    s.add("boundary_max_norm", res.boundary_max_norm);
    s.add("continuity_modulus", res.continuity_modulus);
    s.add("mode_cr_residual", res.mode_cr_residual);
    s.add("probe_norm", res.target_norms.back());
    s.add("max_overlap_residual", res.extension.overlap_residual);
}

} // namespace

void run(const RunConfig& cfg, Summary& s)
{
    s.add("subcommand", cfg.subcommand);
    if (cfg.subcommand == "extend")
        run_extend(cfg, s);
    else if (cfg.subcommand == "dbar")
        run_dbar(cfg, s);
    else if (cfg.subcommand == "cousin")
        run_cousin(cfg, s);
    else if (cfg.subcommand == "normalize")
        run_normalize(cfg, s);
    else if (cfg.subcommand == "continue")
        run_continue(cfg, s);
    else if (cfg.subcommand == "loopspace")
        run_loopspace(cfg, s);
    else
        fail(ErrorCode::ConfigError, "unknown subcommand '" + cfg.subcommand + "'");
    s.add("status", "ok");
}

namespace {

std::string one_line(std::string text)
{
    for (char& ch : text)
        if (ch == '\n' || ch == '\r')
            ch = ' ';
    return text;
}

int report(const std::filesystem::path& out_dir, Summary& s, ErrorCode code, const std::string& message)
{
    const int status = exit_code(code);
    s.add("status", "error");
    s.add("error", std::string(error_name(code)));
    s.add("exit_code", status);
    s.add("message", one_line(message));
    if (!out_dir.empty()) {
        std::ofstream os(out_dir / "summary.txt");
        if (os)
            s.write(os);
    }
    std::cerr << "hartogskit: error=" << error_name(code) << " exit_code=" << status << " message=" << one_line(message)
              << '\n';
    return status;
}

} // namespace

int main_entry(int argc, char** argv)
{
    CLI::App app("Numerical Hartogs-type extension and continuation toolkit", "hartogskit");
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int threads = 0;
    for (const auto& name : subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key=value configuration file")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--threads", threads, "cap on worker threads (0 = hardware)");
    }

    Summary summary;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report({}, summary, ErrorCode::ConfigError, e.what());
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    std::filesystem::path out(out_dir);
    try {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec || !std::filesystem::is_directory(out))
            fail(ErrorCode::ConfigError, "cannot create output directory " + out.string());
        std::ifstream is(config_path);
        if (!is)
            fail(ErrorCode::ConfigError, "cannot read config " + config_path);
        RunConfig cfg = parse_config(is);
        cfg.subcommand = sub;
        cfg.out_dir = out;
        if (threads < 0)
            fail(ErrorCode::ConfigError, "--threads must be nonnegative");
        cfg.threads = threads;
        if (threads > 0)
            set_thread_limit(threads);
        run(cfg, summary);
        std::ofstream os(out / "summary.txt");
        if (!os)
            fail(ErrorCode::ConfigError, "cannot write summary.txt");
        summary.write(os);
        return 0;
    } catch (const Error& e) {
        return report(out, summary, e.code(), e.what());
    } catch (const std::exception& e) {
        return report(out, summary, ErrorCode::InvalidArgument, e.what());
    }
}

} // namespace hk::cli
