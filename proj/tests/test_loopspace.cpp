#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "hartogskit/error.hpp"
#include "hartogskit/loopspace.hpp"

using namespace hk;

namespace {

VectorXc vec(std::initializer_list<Complex> v)
{
    VectorXc out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (Complex c : v)
        out[i++] = c;
    return out;
}

SobolevLoop random_loop(int dim, int k, int modes, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SobolevLoop l(dim, k, modes);
    for (int m = -modes; m <= modes; ++m)
        for (int c = 0; c < dim; ++c)
            l.coefficient(m)[c] = Complex(g(rng), g(rng));
    return l;
}

ExtensionOptions fast_extension()
{
    ExtensionOptions e;
    e.node_count = 128;
    e.line_node_count = 32;
    return e;
}

} // namespace

TEST_CASE("sobolev_norm of constant and single-mode loops")
{
    const VectorXc c = vec({Complex(0.3, 0.4), Complex(-1.2, 0.0)});
    for (int k : {1, 2, 5})
        CHECK(sobolev_norm(SobolevLoop::constant(c, k)) == doctest::Approx(c.norm()).epsilon(1e-15));
    SobolevLoop one(1, 2, 4);
    one.coefficient(1)[0] = 1.0;
    CHECK(sobolev_norm(one) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("sobolev_norm matches an independent summation")
{
    // Second code path: pair the modes +-m, which share the weight, and sum per component.
    const SobolevLoop l = random_loop(3, 2, 8, 17);
    long double acc = 0;
    for (int c = 0; c < 3; ++c) {
        acc += std::norm(l.coefficient(0)[c]);
        for (int m = 1; m <= 8; ++m) {
            const long double w = std::pow(static_cast<long double>(1 + m), 4);
            acc += w * (std::norm(l.coefficient(m)[c]) + std::norm(l.coefficient(-m)[c]));
        }
    }
    CHECK(sobolev_norm(l) == doctest::Approx(static_cast<double>(std::sqrt(acc))).epsilon(1e-12));
}

TEST_CASE("Parseval: k = 0 is the trapezoidal L2 norm")
{
    const SobolevLoop l = random_loop(2, 1, 8, 5);
    const int nodes = 64;
    double s = 0;
    for (int j = 0; j < nodes; ++j)
        s += l(2 * kPi * j / nodes).squaredNorm();
    CHECK(sobolev_norm(l, 0) == doctest::Approx(std::sqrt(s / nodes)).epsilon(1e-10));
}

TEST_CASE("adding modes never decreases the norm")
{
    const SobolevLoop full = random_loop(2, 3, 12, 9);
    double prev = 0;
    for (int m = 0; m <= 12; ++m) {
        const double n = sobolev_norm(full.with_modes(m));
        CHECK(n >= prev);
        prev = n;
    }
    CHECK(prev == doctest::Approx(sobolev_norm(full)));
}

TEST_CASE("from_function resolves a trigonometric polynomial and records the tail")
{
    const auto f = [](double s) { return vec({std::polar(1.0, 2 * s) + 0.5 * std::polar(1.0, -3 * s)}); };
    const SobolevLoop l = SobolevLoop::from_function(f, 1, 1, 8, 64);
    CHECK(std::abs(l.coefficient(2)[0] - 1.0) < 1e-15);
    CHECK(std::abs(l.coefficient(-3)[0] - 0.5) < 1e-15);
    CHECK(l.tail_bound() < 1e-12);
    CHECK((l(0.7) - f(0.7)).norm() < 1e-14);

    // exp(cos s) has coefficients I_m(1) ~ 1/(2^m m!): the tail past 4 modes is visible.
    const auto g = [](double s) { return vec({std::exp(std::cos(s))}); };
    const SobolevLoop short_loop = SobolevLoop::from_function(g, 1, 1, 4, 64);
    CHECK(short_loop.tail_bound() > 1e-5);
    CHECK((short_loop(1.1) - g(1.1)).norm() <= short_loop.sup_tail_bound() * (1 + 1e-9));
    CHECK(SobolevLoop::from_function(g, 1, 1, 16, 128).tail_bound() < 1e-14);
}

TEST_CASE("loop validation and CSV round trip")
{
    CHECK_THROWS_AS(SobolevLoop(1, 0, 4), Error);
    const SobolevLoop l = random_loop(2, 2, 3, 4);
    std::stringstream ss;
    write_loop_csv(ss, l);
    const SobolevLoop back = read_loop_csv(ss, 2);
    CHECK(back.modes() == 3);
    CHECK(back.dim() == 2);
    CHECK((back.flatten() - l.flatten()).norm() == 0.0);
    std::stringstream bad("m,component,re,im\n1,0,x,0\n");
    try {
        read_loop_csv(bad, 1);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
    }
}

TEST_CASE("extend: rational factor times a constant loop")
{
    const VectorXc loop_value = vec({Complex(1.0, 0.5), Complex(-0.25, 0.0)});
    const auto g = [](const VectorXc& z) { return 1.0 / (2.0 - z[1]) + z[0] * z[0] / (3.0 + z[0]); };
    const auto fam = LoopFamily::from_pointwise(
        [&](const VectorXc& z, double) { return VectorXc(g(z) * loop_value); }, 2, 2, 1, 4, 32);
    LoopExtensionOptions opt;
    opt.extension = fast_extension();
    const auto res = extend_loop_family(fam, HartogsFigure(1, 1, 0.2), opt);
    for (const auto& z : interior_grid(2, 4, 0.9)) {
        const SobolevLoop l = res.extended.loop(z);
        CHECK((l.coefficient(0) - g(z) * loop_value).norm() < 1e-8);
        for (int m = 1; m <= 4; ++m)
            CHECK(l.coefficient(m).norm() + l.coefficient(-m).norm() < 1e-8);
    }
    CHECK(res.certificate_ratio <= 1 + 1e-6);
    CHECK(res.continuity_modulus > 0);
}

TEST_CASE("extend: z-independent family is unchanged with constant norm")
{
    const SobolevLoop base = random_loop(2, 2, 3, 23);
    const auto fam = LoopFamily::from_pointwise([&](const VectorXc&, double s) { return base(s); }, 2, 2, 2, 3, 32);
    LoopExtensionOptions opt;
    opt.extension = fast_extension();
    const auto res = extend_loop_family(fam, HartogsFigure(1, 1, 0.3), opt);
    for (std::size_t i = 0; i < res.targets.size(); ++i) {
        CHECK((res.extended.loop(res.targets[i]).flatten() - base.flatten()).norm() < 1e-10);
        CHECK(res.target_norms[i] == doctest::Approx(sobolev_norm(base)).epsilon(1e-10));
    }
    CHECK(res.certificate_ratio == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.continuity_modulus < 1e-8);
}

TEST_CASE("extend: two-mode closed form")
{
    // F(z1, z2, s) = e^{is} / (2 - z2) + e^{-is} z1 with k = 1.
    const auto fam = LoopFamily::from_pointwise(
        [](const VectorXc& z, double s) { return vec({std::polar(1.0, s) / (2.0 - z[1]) + std::polar(1.0, -s) * z[0]}); },
        2, 1, 1, 4, 32);
    LoopExtensionOptions opt;
    opt.extension = fast_extension();
    opt.targets = interior_grid(2, 3, 0.9);
    opt.targets.push_back(vec({0.0, 0.9}));
    const auto res = extend_loop_family(fam, HartogsFigure(1, 1, 0.2), opt);
    for (const auto& z : opt.targets) {
        const SobolevLoop l = res.extended.loop(z);
        CHECK(std::abs(l.coefficient(1)[0] - 1.0 / (2.0 - z[1])) < 1e-9);
        CHECK(std::abs(l.coefficient(-1)[0] - z[0]) < 1e-9);
        CHECK(std::abs(l.coefficient(0)[0]) < 1e-9);
    }
    const double norm = sobolev_norm(res.extended.loop(vec({0.0, 0.9})));
    CHECK(norm == doctest::Approx(std::sqrt(4.0 / (1.1 * 1.1))).epsilon(1e-9));
    CHECK(res.target_norms.back() == doctest::Approx(2.0 / 1.1).epsilon(1e-9));
}

TEST_CASE("maximum principle holds for holomorphic test families")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 3; ++trial) {
        const Complex a(u(rng), u(rng)), b(u(rng), u(rng)), p(2.2 + u(rng) * 0.2, u(rng) * 0.2);
        const auto fam = LoopFamily::from_pointwise(
            [=](const VectorXc& z, double s) {
                return vec({a * z[0] * std::polar(1.0, 2 * s) + b / (p - z[1]) + z[0] * z[1] * std::polar(1.0, -s)});
            },
            2, 1, 2, 4, 32);
        LoopExtensionOptions opt;
        opt.extension = fast_extension();
        const auto res = extend_loop_family(fam, HartogsFigure(1, 1, 0.25), opt);
        CHECK(res.certificate_ratio <= 1 + 1e-6);
        for (std::size_t i = 0; i < res.targets.size(); ++i)
            CHECK(res.target_norms[i] <= res.boundary_max_norm * (1 + 1e-6));
    }
}

TEST_CASE("certificate rejects a family peaking inside")
{
    // (1 - |z1|^2) is superharmonic: the norm peaks at the centre.
    const auto fam = LoopFamily::from_pointwise(
        [](const VectorXc& z, double s) { return vec({(1.0 - std::norm(z[0])) * std::polar(1.0, s)}); }, 2, 1, 1, 2, 16);
    std::vector<VectorXc> boundary;
    for (int j = 0; j < 16; ++j)
        boundary.push_back(vec({std::polar(0.9, 2 * kPi * j / 16), std::polar(0.9, kPi * j / 8)}));
    try {
        certify_max_principle(fam, {vec({0.0, 0.0})}, boundary);
        FAIL("expected NormBlowup");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NormBlowup);
    }
    // Its modes fail the holomorphy check before any extension is attempted.
    try {
        extend_loop_family(fam, HartogsFigure(1, 1, 0.2));
        FAIL("expected NotHolomorphic");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotHolomorphic);
        CHECK(std::string(e.what()).find("mode m = 1") != std::string::npos);
    }
}

TEST_CASE("extension errors are tagged with the failing mode")
{
    // A pole of the m = 2 coefficient inside the target.
    const auto fam = LoopFamily::from_pointwise(
        [](const VectorXc& z, double s) { return vec({std::polar(1.0, 2 * s) / (z[1] - 0.3) + z[0]}); }, 2, 1, 1, 3, 16);
    LoopExtensionOptions opt;
    opt.extension = fast_extension();
    opt.extension.check_holomorphy = false;
    opt.mode_cr_tolerance = kInf;
    try {
        extend_loop_family(fam, HartogsFigure(1, 1, 0.2), opt);
        FAIL("expected SlowDecay");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SlowDecay);
        CHECK(std::string(e.what()).find("mode m = 2") != std::string::npos);
    }
}

TEST_CASE("Mobius automorphism: interchange and involution")
{
    const VectorXc a = vec({0.5});
    CHECK(std::abs(ball_automorphism(a, a)[0]) < 1e-14);
    CHECK(std::abs(ball_automorphism(a, vec({0.0}))[0] - 0.5) < 1e-14);
    CHECK(std::abs(ball_automorphism(vec({0.0}), vec({0.3}))[0] + 0.3) < 1e-15);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.55, 0.55);
    for (int q : {1, 2, 3})
        for (int i = 0; i < 100; ++i) {
            VectorXc c(q), z(q);
            for (int j = 0; j < q; ++j) {
                c[j] = Complex(u(rng), u(rng));
                z[j] = Complex(u(rng), u(rng));
            }
            c *= 0.9 / std::max(1.0, c.norm() / 0.9);
            z *= 0.99 / std::max(1.0, z.norm() / 0.99);
            CHECK((ball_automorphism(c, ball_automorphism(c, z)) - z).norm() < 1e-12);
            if (q > 1) {
                CHECK(ball_automorphism(c, c).norm() < 1e-14);
                CHECK((ball_automorphism(c, VectorXc::Zero(q)) - c).norm() < 1e-14);
            }
        }
}

TEST_CASE("Mobius disk family contracts")
{
    SobolevLoop fq(1, 1, 4), fn(1, 1, 4);
    fq.coefficient(0)[0] = 0.2;
    fq.coefficient(1)[0] = Complex(0.1, 0.2);
    fn.coefficient(-1)[0] = 0.4;
    fn.coefficient(2)[0] = Complex(0.0, 0.3);
    const auto fam = mobius_disk_family(fq, fn, 64);
    CHECK(fam.ball_margin > 0);

    // phi_1(0, .) is the input loop.
    const SobolevLoop at_zero = fam.loop(1.0, vec({0.0}));
    for (int m = -4; m <= 4; ++m) {
        CHECK(std::abs(at_zero.coefficient(m)[0] - fq.coefficient(m)[0]) < 1e-14);
        CHECK(std::abs(at_zero.coefficient(m)[1] - fn.coefficient(m)[0]) < 1e-14);
    }
    // phi_0 lies in B^q x {0}.
    for (double s : {0.0, 1.3, 4.1})
        CHECK(fam(0.0, vec({Complex(0.3, -0.2)}), s)[1] == Complex(0.0, 0.0));
    // Boundary loops: first component on the unit sphere, second strictly inside the ball.
    CHECK(fam.shell_deviation() < 1e-14);
    CHECK(fam.fiber_margin(1.0) >= fam.ball_margin - 1e-15);

    SobolevLoop zq(1, 1, 4);
    const auto trivial = mobius_disk_family(zq, fn, 64);
    CHECK(std::abs(trivial(0.5, vec({Complex(0.3, 0.1)}), 2.0)[0] + Complex(0.3, 0.1)) < 1e-15);

    SobolevLoop big(1, 1, 4);
    big.coefficient(0)[0] = 0.7;
    big.coefficient(3)[0] = 0.5;
    try {
        mobius_disk_family(big, fn, 64);
        FAIL("expected LoopEscapesBall");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LoopEscapesBall);
    }
}
