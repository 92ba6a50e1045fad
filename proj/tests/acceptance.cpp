// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance <path to hartogskit binary> <scratch directory>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hartogskit/continuation.hpp"
#include "hartogskit/dbar.hpp"
#include "hartogskit/error.hpp"
#include "hartogskit/hartogs.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/loopspace.hpp"
#include "hartogskit/royden.hpp"

using namespace hk;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail)
{
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
    if (!ok)
        ++failures;
}

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

VectorXc scalar(Complex v)
{
    VectorXc out(1);
    out[0] = v;
    return out;
}

VectorXc v2(Complex a, Complex b)
{
    VectorXc z(2);
    z << a, b;
    return z;
}

// Rational functions on C^2 whose poles stay at distance >= 0.3 from the closed unit bidisk.
struct Rational {
    std::string name;
    std::function<Complex(const VectorXc&)> f;
};

std::vector<Rational> rational_fixtures()
{
    const Complex i(0, 1);
    return {
        {"1/(1.3 - z1)", [](const VectorXc& z) { return 1.0 / (1.3 - z[0]); }},
        {"1/(1.3 - z2)", [](const VectorXc& z) { return 1.0 / (1.3 - z[1]); }},
        {"1/(z2 - 2)", [](const VectorXc& z) { return 1.0 / (z[1] - 2.0); }},
        {"1/(1.5 i - z1)", [i](const VectorXc& z) { return 1.0 / (1.5 * i - z[0]); }},
        {"1/((1.4 - z1)(1.6 + z2))", [](const VectorXc& z) { return 1.0 / ((1.4 - z[0]) * (1.6 + z[1])); }},
        {"1/(4 - z1 z2)", [](const VectorXc& z) { return 1.0 / (4.0 - z[0] * z[1]); }},
        {"1/(1.4 - z2)^2", [](const VectorXc& z) { return 1.0 / ((1.4 - z[1]) * (1.4 - z[1])); }},
        {"z1^2 / (1.5 + 1.3 i - z2)", [i](const VectorXc& z) { return z[0] * z[0] / (1.5 + 1.3 * i - z[1]); }},
        {"(1 + z1 z2) / (1.3 + z1)", [](const VectorXc& z) { return (1.0 + z[0] * z[1]) / (1.3 + z[0]); }},
        {"1/(1.35 - z1) + 1/(1.35 + i z2)",
         [i](const VectorXc& z) { return 1.0 / (1.35 - z[0]) + 1.0 / (1.35 + i * z[1]); }},
    };
}

void criteria_1_2()
{
    const HartogsFigure fig(1, 1, 0.2);
    const double rho = (2.0 - 0.2) / 2.0;
    const std::vector<VectorXc> grid = interior_grid(2, 20, rho);
    ExtensionOptions opt;
    opt.overlap_samples = 100;
    opt.overlap_tolerance = 1e-9;
    double worst_err = 0, worst_time = 0, worst_overlap = 0;
    std::string failed;
    for (const auto& fx : rational_fixtures()) {
        const HoloMap f = [&fx](const VectorXc& z) { return scalar(fx.f(z)); };
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const ExtensionResult res = extend_bidim_q1(f, fig, grid, opt);
            worst_time = std::max(worst_time, seconds_since(t0));
            for (std::size_t j = 0; j < grid.size(); ++j)
                worst_err = std::max(worst_err, std::abs(res.values[j][0] - fx.f(grid[j])));
            worst_overlap = std::max(worst_overlap, res.overlap_residual);
        } catch (const Error& e) {
            failed += (failed.empty() ? "" : "; ") + fx.name + ": " + e.what();
        }
    }
    report(1, failed.empty() && worst_err <= 1e-7 && worst_time <= 10.0,
           "10 rational functions on a 20x20 grid (radius " + sci(rho) + "), max abs error " + sci(worst_err) +
               " (<= 1e-7), slowest run " + sci(worst_time) + " s (<= 10 s)" + (failed.empty() ? "" : ", errors: " + failed));
    report(2, failed.empty() && worst_overlap <= 1e-9,
           "overlap residual on 100 figure samples " + sci(worst_overlap) + " (<= 1e-9)");
}

void criterion_3()
{
    const PlanarDomain dom = PlanarDomain::disk(0.0, 1.0, 256);
    const auto grid = make_grid(dom);
    const double gamma = sup_constant(dom);
    const std::vector<std::function<Complex(Complex)>> inputs = {
        [](Complex) { return Complex(1.0, 0.0); },
        [](Complex z) { return z; },
        [](Complex z) { return std::conj(z) * z; },
        [](Complex z) { return std::exp(z) - 0.5 * std::conj(z); },
        [](Complex z) { return 1.0 / (z - 2.0) + Complex(0, 1) * z * z; },
    };
    double residual = 0, ratio = 0;
    std::string failed;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        try {
            const GridFunction g = GridFunction::sample(grid, inputs[i]);
            const CauchyResult res = cauchy_transform(g);
            residual = std::max(residual, res.dbar_residual);
            ratio = std::max(ratio, res.u.sup() / (gamma * g.sup()));
        } catch (const Error& e) {
            failed += "input " + std::to_string(i) + ": " + e.what() + " ";
        }
    }
    report(3, failed.empty() && residual <= 1e-3 && ratio <= 1 + 1e-2 && gamma >= 1.9 && gamma <= 2.1,
           "5 inputs at 256^2: dbar residual " + sci(residual) + " (<= 1e-3), max |u|/(gamma |g|) " + sci(ratio) +
               " (<= 1.01), sup_constant " + sci(gamma) + " (in [1.9, 2.1])" + (failed.empty() ? "" : ", errors: " + failed));
}

void criterion_4()
{
    try {
        AdditiveCocycle c;
        c.charts = 2;
        c.set(0, 1, [](Complex z) { return scalar(1.0 / z); });
        const CousinSolution sol = solve_cousin(Cover::standard_two_chart(), c);

        RoundTripFixture fx;
        fx.degree = 8;
        fx.twist = 0.3;
        NormalizeOptions opt;
        opt.crosscheck_degrees = {2, 3, 4, 5, 6, 7, 8};
        opt.crosscheck_resolution = 512;
        const RoydenResult r = normalize_transitions(round_trip_atlas(fx), fx.degree, opt);
        double lo = kInf, hi = 0;
        for (const auto& d : r.degrees)
            if (d.cousin_constant > 0) {
                lo = std::min(lo, d.cousin_constant);
                hi = std::max(hi, d.cousin_constant);
            }
        const double spread = hi / lo - 1;
        report(4, sol.delta_residual <= 1e-7 && spread <= 0.20,
               "1/z delta residual " + sci(sol.delta_residual) + " (<= 1e-7), constant over degrees 2..8 in [" +
                   sci(lo) + ", " + sci(hi) + "], spread " + sci(spread) + " (<= 0.2)");
    } catch (const Error& e) {
        report(4, false, std::string("error ") + e.what());
    }
}

void criterion_5()
{
    try {
        const auto t0 = std::chrono::steady_clock::now();
        // Charts truncated at degree 5: the conjugating change is a known polynomial.
        RoundTripFixture poly;
        poly.degree = 8;
        poly.chart_degree = 5;
        poly.twist = 0.3;
        const ChartAtlas atlas = round_trip_atlas(poly);
        const RoydenResult r = normalize_transitions(atlas, poly.degree);
        const TubularMap tub = assemble_tubular_map(r);
        const FiberedMap global = round_trip_global(poly, atlas.circle);
        double map_err = 0;
        const double wr = 0.9 * tub.safety * std::min(r.epsilon, 1.0);
        for (int i = 0; i < 40; ++i) {
            const Complex z = std::polar(0.05 + 0.022 * i, 0.9 * i);
            const VectorXc w = v2(std::polar(wr * 0.7, 0.4 * i), std::polar(wr * 0.5, -1.1 * i));
            const auto [gz, gw] = global(z, w);
            const VectorXc p = tub(z, w);
            map_err = std::max({map_err, std::abs(p[0] - gz), (p.tail(2) - gw).norm()});
        }

        // Radius check on the untruncated fixture, whose change series has the known radius.
        RoundTripFixture geo;
        const RoydenResult rg = normalize_transitions(round_trip_atlas(geo), geo.degree);
        const double known = round_trip_epsilon(geo);
        const double factor = std::max(rg.epsilon / known, known / rg.epsilon);
        const double elapsed = seconds_since(t0);

        report(5, r.identity_residual <= 1e-8 && map_err <= 1e-8 && tub.chart_disagreement <= 1e-8 && factor <= 2 &&
                      elapsed <= 60,
               "degree-5 polynomial conjugation: identity through degree 8 to " + sci(r.identity_residual) +
                   " (<= 1e-8), tubular vs global map " + sci(map_err) + " (<= 1e-8), chart disagreement " +
                   sci(tub.chart_disagreement) + "; epsilon " + sci(rg.epsilon) + " vs known " + sci(known) +
                   " (factor " + sci(factor) + " <= 2); " + sci(elapsed) + " s (<= 60 s)");
    } catch (const Error& e) {
        report(5, false, std::string("error ") + e.what());
    }
}

void criterion_6()
{
    try {
        const Complex c(0.5, 0.0);
        const ContinuationFixture fx = swept_bidisk_fixture(c);
        ContinuationOptions coarse;
        const ContinuationResult a = continue_along(fx.f, fx.region, fx.family, coarse);
        // Halve the step the coarse run actually took (the controller may have shrunk max_step).
        double taken = 1.0;
        for (std::size_t i = 1; i < a.elements.size(); ++i)
            taken = std::min(taken, a.elements[i].t - a.elements[i - 1].t);
        ContinuationOptions fine = coarse;
        fine.max_step = taken / 2;
        fine.min_step = coarse.min_step / 2;
        const ContinuationResult b = continue_along(fx.f, fx.region, fx.family, fine);
        const Complex exact = 1.0 / (c - 2.0);
        const Complex va = a.elements.back().center_value()[0], vb = b.elements.back().center_value()[0];
        const double err = std::abs(va - exact), drift = std::abs(va - vb);
        report(6, a.elements.back().t == 1.0 && err <= 1e-7 && drift <= 1e-9,
               "1/(z2 - 2) sweep reached t = " + sci(a.elements.back().t) + ", centre error " + sci(err) +
                   " (<= 1e-7), step " + sci(taken) + " vs " + sci(fine.max_step) + " (" + std::to_string(a.elements.size()) +
                   " vs " + std::to_string(b.elements.size()) + " elements), drift " + sci(drift) + " (<= 1e-9)");
    } catch (const Error& e) {
        report(6, false, std::string("error ") + e.what());
    }
}

void criterion_7()
{
    try {
        const int modes = 8;
        const LoopFamily fam = LoopFamily::from_pointwise(
            [](const VectorXc& z, double s) {
                return scalar(std::polar(1.0, s) / (2.0 - z[1]) + std::polar(1.0, -s) * z[0]);
            },
            2, 1, 1, modes, 64);
        const HartogsFigure fig(1, 1, 0.2);
        LoopExtensionOptions opt;
        opt.extension.node_count = 128;
        opt.extension.line_node_count = 32;
        opt.targets = interior_grid(2, 6, 0.9);
        const LoopExtensionResult res = extend_loop_family(fam, fig, opt);
        double mode_err = 0;
        for (const auto& z : res.targets) {
            const SobolevLoop l = res.extended.loop(z);
            for (int m = -modes; m <= modes; ++m) {
                const Complex want = m == 1 ? 1.0 / (2.0 - z[1]) : (m == -1 ? z[0] : Complex(0.0));
                mode_err = std::max(mode_err, std::abs(l.coefficient(m)[0] - want));
            }
        }
        bool pointwise = true;
        for (double n : res.target_norms)
            pointwise = pointwise && n <= res.boundary_max_norm * (1 + opt.certificate_slack);

        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-0.45, 0.45);
        double mobius = 0;
        for (int q = 1; q <= 3; ++q)
            for (int trial = 0; trial < 20; ++trial) {
                VectorXc a(q), z(q);
                for (int j = 0; j < q; ++j) {
                    a[j] = Complex(u(rng), u(rng));
                    z[j] = Complex(u(rng), u(rng));
                }
                mobius = std::max({mobius, ball_automorphism(a, a).norm(), (ball_automorphism(a, VectorXc::Zero(q)) - a).norm(),
                                   (ball_automorphism(a, ball_automorphism(a, z)) - z).norm()});
            }
        report(7, mode_err <= 1e-9 && pointwise && res.certificate_ratio <= 1 + opt.certificate_slack && mobius <= 1e-12,
               "two-mode family: mode error " + sci(mode_err) + " (<= 1e-9), certificate ratio " +
                   sci(res.certificate_ratio) + (pointwise ? " holding" : " violated") + " at all " +
                   std::to_string(res.targets.size()) + " grid points; Mobius interchange/involution " + sci(mobius) +
                   " (<= 1e-12)");
    } catch (const Error& e) {
        report(7, false, std::string("error ") + e.what());
    }
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void criterion_8(const std::string& cli, const fs::path& scratch)
{
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"extend", "fixture = inv_4_minus_z1zlast\ngrid = 10\n"},
        {"dbar", "fixture = quadratic\nresolution = 128\n"},
        {"cousin", "fixture = laurent_inv_z\n"},
        {"normalize", "fixture = round_trip\ndegree = 8\ntwist = 0.3\n"},
        {"continue", "fixture = polynomial\nc_re = 0.25\n"},
        {"loopspace", "fixture = two_mode\n"},
    };
    std::string mismatch;
    int files = 0;
    for (const auto& [sub, cfg] : runs) {
        const fs::path dir = scratch / sub;
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "run.cfg") << cfg;
        for (const char* tag : {"a", "b"}) {
            const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" + (dir / "run.cfg").string() +
                                    "\" --out \"" + (dir / tag).string() + "\"";
            if (std::system(cmd.c_str()) != 0)
                mismatch += sub + " run " + tag + " failed; ";
        }
        for (const auto& entry : fs::directory_iterator(dir / "a")) {
            const fs::path other = dir / "b" / entry.path().filename();
            ++files;
            if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
                mismatch += sub + "/" + entry.path().filename().string() + " differs; ";
        }
    }
    report(8, mismatch.empty() && files > 0,
           "6 subcommands run twice, " + std::to_string(files) + " output files " +
               (mismatch.empty() ? "byte-identical" : "with differences: " + mismatch));
}

} // namespace

int main(int argc, char** argv)
{
    if (argc != 3) {
        std::cerr << "usage: acceptance <hartogskit binary> <scratch dir>\n";
        return 2;
    }
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8(argv[1], argv[2]);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
