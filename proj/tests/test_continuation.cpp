#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "hartogskit/continuation.hpp"
#include "hartogskit/error.hpp"

using namespace hk;

namespace {

VectorXc sample_zw(int n, int s)
{
    VectorXc zw(n + 1);
    zw[0] = std::polar(0.85 * std::sqrt((s % 7 + 1) / 7.0), 2.3 * s);
    for (int i = 1; i <= n; ++i)
        zw[i] = std::polar(0.8 * ((s * i) % 5 + 1) / 5.0, 1.7 * s + i);
    return zw;
}

// max |element - g| over tube samples, in ambient coordinates.
double element_error(const FunctionElement& e, const HoloMap& g, int count = 40)
{
    const int n = static_cast<int>(e.frame.rows());
    double worst = 0;
    for (int s = 0; s < count; ++s) {
        const VectorXc zw = sample_zw(n, s);
        const VectorXc p = e.point(zw[0], zw.tail(n));
        worst = std::max(worst, (e.value_local(zw) - g(p.tail(n))).norm());
    }
    return worst;
}

double reported_t(const std::string& msg)
{
    std::smatch m;
    const std::regex re("t = ([-0-9.eE+]+)");
    REQUIRE(std::regex_search(msg, m, re));
    return std::stod(m[1].str());
}

Region bidisk(double a, double b)
{
    return Region{[a, b](const VectorXc& x) { return std::min(a - std::abs(x[0]), b - std::abs(x[1])); }};
}

VectorXc scalar(Complex v)
{
    VectorXc out(1);
    out[0] = v;
    return out;
}

} // namespace

TEST_CASE("element coordinates round trip and cover the tube")
{
    const auto fx = swept_bidisk_fixture(Complex(0.5, 0.0));
    FunctionElement e;
    e.t = 0.3;
    e.center = Complex(0.1, -0.2);
    e.scale = 1.1;
    e.tube_radius = 0.2;
    e.frame = std::polar(1.0, 0.4) * MatrixXc::Identity(2, 2);
    e.map = fx.family.map;
    for (int s = 0; s < 10; ++s) {
        const VectorXc zw = sample_zw(2, s);
        const VectorXc p = e.point(zw[0], zw.tail(2));
        CHECK((e.local(p[0], p.tail(2)) - zw).norm() < 1e-14);
        CHECK(e.covers(p[0], p.tail(2)));
    }
    VectorXc far(2);
    far << 0.0, 2.0;
    CHECK_FALSE(e.covers(e.center, far));
}

TEST_CASE("check_family: constant family inside U has positive margins")
{
    DiskFamily fam;
    fam.map = [](double, Complex lam) {
        VectorXc x(2);
        x << 0.5 * lam, 0.1;
        return x;
    };
    const auto rep = check_family(fam, bidisk(1.0, 1.0));
    CHECK(rep.initial_margin == doctest::Approx(0.5));
    CHECK(rep.boundary_margin == doctest::Approx(0.5));
    CHECK(rep.lipschitz == 0.0);
    CHECK(rep.cr_residual < 1e-12);
}

TEST_CASE("check_family: boundary circle touching the edge of U reports margin near zero")
{
    DiskFamily fam;
    fam.map = [](double t, Complex lam) {
        VectorXc x(2);
        x << 0.5 * lam, 0.8 * t * lam;
        return x;
    };
    const auto rep = check_family(fam, bidisk(1.0, 0.8));
    CHECK(std::abs(rep.boundary_margin) < 1e-12);
    CHECK(rep.worst_t == doctest::Approx(1.0));
    CHECK(rep.initial_margin > 0.4);
}

TEST_CASE("check_family: continuity modulus matches the fixture's Lipschitz constant")
{
    // phi_t(lambda) = (lambda, a t lambda): sup_{|lambda| <= 1} |d_t phi| = a exactly.
    const double a = 0.37;
    DiskFamily lin;
    lin.map = [a](double t, Complex lam) {
        VectorXc x(2);
        x << lam, a * t * lam;
        return x;
    };
    FamilyCheckOptions opt;
    opt.t_samples = 21;
    const auto rep = check_family(lin, bidisk(2, 2), opt);
    CHECK(rep.lipschitz == doctest::Approx(a).epsilon(1e-12));
    CHECK(rep.max_jump == doctest::Approx(a / 20).epsilon(1e-12));

    // Random smooth family: the bound sum |a_k| w_k holds and is nearly attained.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::vector<double> coef(4), freq(4);
    double bound = 0;
    for (int k = 0; k < 4; ++k) {
        coef[k] = u(rng);
        freq[k] = 1.0 + k;
        bound += std::abs(coef[k]) * freq[k];
    }
    DiskFamily rnd;
    rnd.map = [coef, freq](double t, Complex lam) {
        VectorXc x(2);
        x[0] = lam;
        x[1] = 0.0;
        for (int k = 0; k < 4; ++k)
            x[1] += coef[k] * std::sin(freq[k] * t) * std::pow(lam, k);
        return x;
    };
    opt.t_samples = 201;
    const auto r2 = check_family(rnd, bidisk(5, 5), opt);
    CHECK(r2.lipschitz <= bound * (1 + 1e-12));
    CHECK(r2.lipschitz > 0.1 * bound);
    CHECK(r2.cr_residual < 1e-4);
}

TEST_CASE("check_family: a non-holomorphic family fails the Cauchy-Riemann probe")
{
    DiskFamily fam;
    fam.map = [](double, Complex lam) {
        VectorXc x(2);
        x << lam, 0.3 * std::conj(lam);
        return x;
    };
    CHECK(check_family(fam, bidisk(2, 2)).cr_residual > 0.1);
}

TEST_CASE("swept bidisk: final element equals the closed form")
{
    const Complex c(0.5, 0.0);
    const auto fx = swept_bidisk_fixture(c);
    const auto res = continue_along(fx.f, fx.region, fx.family);
    REQUIRE(!res.elements.empty());
    const auto& last = res.elements.back();
    CHECK(last.t == 1.0);
    CHECK(std::abs(last.center_value()[0] - 1.0 / (c - 2.0)) < 1e-7);
    // The centre (0, c) is outside U; the value comes from the continued chain.
    VectorXc x(2);
    x << 0.0, c;
    CHECK_FALSE(fx.region.contains(x));
    CHECK(res.tubular_deviation < 1e-12);
    for (const auto& e : res.elements) {
        CHECK(e.coherence <= 1e-8);
        CHECK(e.step_size < 0.2 / 4);
        CHECK(element_error(e, fx.f) < 1e-7);
    }

    std::ostringstream csv;
    write_continuation_csv(csv, res);
    const std::string s = csv.str();
    CHECK(s.rfind("t,step_size,overlap_residual,coherence,sup_bound,value_re,value_im\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(res.elements.size()) + 1);

    SUBCASE("a rotated adapted frame gives the same values")
    {
        ContinuationOptions opt;
        opt.frame_rotation = 0.7;
        const auto rot = continue_along(fx.f, fx.region, fx.family, opt);
        CHECK(std::abs(rot.elements.back().center_value()[0] - last.center_value()[0]) <= 1e-8);
        // Same ambient points evaluated through the rotated chain.
        for (int s = 0; s < 20; ++s) {
            const VectorXc zw = sample_zw(2, s) * 0.6;
            const VectorXc p = last.point(zw[0], zw.tail(2));
            const auto& e = rot.elements.back();
            CHECK((e.value(p[0], p.tail(2)) - last.value(p[0], p.tail(2))).norm() <= 1e-8);
        }
    }
}

TEST_CASE("polynomial: every element is the polynomial and halving the step changes nothing")
{
    const auto fx = polynomial_fixture(Complex(0.25, 0.0));
    ContinuationOptions coarse;
    coarse.max_step = 1.0 / 32;
    ContinuationOptions fine = coarse;
    fine.max_step = 1.0 / 64;
    const auto a = continue_along(fx.f, fx.region, fx.family, coarse);
    const auto b = continue_along(fx.f, fx.region, fx.family, fine);
    REQUIRE(a.elements.size() == 33);
    REQUIRE(b.elements.size() == 65);
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        CHECK(a.elements[i].t == doctest::Approx(i / 32.0));
        CHECK(a.elements[i].overlap_residual <= 1e-12);
        CHECK(element_error(a.elements[i], fx.f) <= 1e-12);
        const auto& ea = a.elements[i];
        const auto& eb = b.elements[2 * i];
        REQUIRE(eb.t == ea.t);
        for (int s = 0; s < 20; ++s) {
            const VectorXc zw = sample_zw(2, s);
            const VectorXc p = ea.point(zw[0], zw.tail(2));
            CHECK((ea.value(p[0], p.tail(2)) - eb.value(p[0], p.tail(2))).norm() <= 1e-9);
        }
    }
    for (const auto& e : b.elements)
        CHECK(e.overlap_residual <= 1e-12);
}

TEST_CASE("one-dimensional ambient space")
{
    DiskFamily fam;
    fam.ambient_dim = 1;
    const Complex c(0.3, 0.1);
    fam.map = [c](double t, Complex lam) { return scalar(t * c + 0.2 * lam); };
    const Region u{[](const VectorXc& x) { return 1.5 - std::abs(x[0]); }};
    const HoloMap f = [](const VectorXc& x) { return scalar(std::exp(x[0]) / (x[0] - 2.0)); };
    const auto res = continue_along(f, u, fam);
    CHECK(res.elements.back().t == 1.0);
    CHECK(std::abs(res.elements.back().center_value()[0] - f(scalar(c))[0]) < 1e-9);
    CHECK(element_error(res.elements.back(), f) < 1e-9);
}

TEST_CASE("a pole crossed by the swept disks is flagged, not continued through")
{
    const Complex c(0.9, 0.0);
    const double t_star = 0.9;
    const auto fx = pole_fixture(c, t_star);
    ContinuationOptions opt;
    opt.extension.line_node_count = 64;
    // Hypotheses hold on every sample, though the pole (0, t_star c) lies on the disk at t_star.
    const auto rep = check_family(fx.family, fx.region);
    CHECK(rep.initial_margin > 0);
    CHECK(rep.boundary_margin > 0);

    std::vector<FunctionElement> partial;
    std::string msg;
    ErrorCode code = ErrorCode::InvalidArgument;
    try {
        continue_along(fx.f, fx.region, fx.family, opt, &partial);
        FAIL("continuation through a pole must fail");
    } catch (const Error& e) {
        code = e.code();
        msg = e.what();
    }
    CHECK(code == ErrorCode::SlowDecay);
    const double t_fail = reported_t(msg);
    // Flagged before the fiber circles of the tube reach the pole.
    CHECK(t_fail > 0);
    CHECK(t_fail <= t_star - 0.9 * 0.2 / std::abs(c));
    REQUIRE(!partial.empty());
    CHECK(partial.back().t < t_fail);
    for (const auto& e : partial)
        CHECK(element_error(e, fx.f) < 1e-7);
}

TEST_CASE("BoundaryEscape when a boundary circle leaves U")
{
    auto fx = swept_bidisk_fixture(Complex(0.5, 0.0));
    const auto base = fx.family.map;
    fx.family.map = [base](double t, Complex lam) {
        VectorXc x = base(t, lam);
        x[1] += (t > 0.5 ? 1.0 : 0.0) * lam;
        return x;
    };
    try {
        continue_along(fx.f, fx.region, fx.family);
        FAIL("expected BoundaryEscape");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BoundaryEscape);
        CHECK(reported_t(e.what()) > 0.5);
    }

    auto shifted = swept_bidisk_fixture(Complex(0.5, 0.0));
    shifted.family.center = [](double) { return Complex(0.0, 0.0); };
    shifted.family.radius = [](double) { return 1.5; };
    try {
        continue_along(shifted.f, shifted.region, shifted.family);
        FAIL("expected BoundaryEscape");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BoundaryEscape);
    }
}

TEST_CASE("StepCollapse on a discontinuous family")
{
    DiskFamily fam;
    fam.map = [](double t, Complex lam) {
        VectorXc x(2);
        x << lam, t < 0.5 ? 0.0 : 0.3;
        return x;
    };
    const auto poly = polynomial_fixture(Complex(0.5, 0.0));
    ContinuationOptions opt;
    opt.max_step = 0.25;
    opt.min_step = 1.0 / 256;
    try {
        continue_along(poly.f, bidisk(1.45, 0.9), fam, opt);
        FAIL("expected StepCollapse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StepCollapse);
        CHECK(reported_t(e.what()) == doctest::Approx(0.5).epsilon(0.02));
    }
}
