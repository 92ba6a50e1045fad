#include <doctest.h>

#include <chrono>
#include <cmath>

#include "hartogskit/error.hpp"
#include "hartogskit/hartogs.hpp"

using namespace hk;

namespace {

VectorXc point(std::initializer_list<Complex> v)
{
    VectorXc out(v.size());
    int i = 0;
    for (auto c : v)
        out[i++] = c;
    return out;
}

VectorXc scalar(Complex c)
{
    VectorXc v(1);
    v[0] = c;
    return v;
}

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("figure membership")
{
    HartogsFigure h(1, 1, 0.1);
    CHECK(h.contains(point({0.0, 0.05})));
    CHECK_FALSE(h.contains(point({0.0, 0.5})));
    CHECK(h.contains(point({0.95, 0.9})));
    CHECK_FALSE(h.contains(point({1.0, 0.0})));
    CHECK(h.target_contains(point({0.0, 0.9})));

    HartogsFigure ball(2, 1, 0.2, FigureModel::Ball);
    CHECK(ball.contains(point({0.6, 0.6, 0.9})));  // |z'| = 0.849 lies in the shell
    CHECK_FALSE(ball.contains(point({0.5, 0.5, 0.9})));
    HartogsFigure poly(2, 1, 0.2, FigureModel::Polydisk);
    CHECK_FALSE(poly.contains(point({0.6, 0.6, 0.9})));
    CHECK(poly.contains(point({0.85, 0.0, 0.9})));

    CHECK(in_infinite_infinite_figure(point({0.1, 0.1, 0.1}), point({0.1, 0.1}), 0.3));
    CHECK_FALSE(in_infinite_infinite_figure(point({0.1, 0.1, 0.1}), point({0.5, 0.1}), 0.3));
    CHECK(in_infinite_infinite_figure(point({0.6, 0.6, 0.3}), point({0.5, 0.5}), 0.3));
    CHECK_THROWS_AS(HartogsFigure(1, 1, 1.0), Error);
}

TEST_CASE("q1 extension of 1/(2 - z2) at (0, 0.9)")
{
    HartogsFigure fig(1, 1, 0.1);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (2.0 - z[1])); };
    auto res = extend_bidim_q1(f, fig, {point({0.0, 0.9})});
    CHECK(std::abs(res.values[0][0] - 1.0 / 1.1) <= 1e-9);
    CHECK(res.overlap_residual <= 1e-9);
    CHECK(res.negative_coefficient_max <= 1e-9);
    CHECK(res.max_principle_ratio <= 1 + 1e-6);
}

TEST_CASE("q1 extension of 1/(4 - z1 z2) at (0.9, 0.9)")
{
    HartogsFigure fig(1, 1, 0.1);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (4.0 - z[0] * z[1])); };
    auto res = extend_bidim_q1(f, fig, {point({0.9, 0.9})});
    CHECK(std::abs(res.values[0][0] - 1.0 / 3.19) <= 1e-8);
}

TEST_CASE("polynomial of bidegree (3,3) is reproduced on the bidisk")
{
    HartogsFigure fig(1, 1, 0.2);
    auto p = [](const VectorXc& z) {
        const Complex a = z[0], b = z[1];
        return scalar(1.0 + 2.0 * a - Complex(0, 1) * b + a * a * a * b * b * b - 0.5 * a * b * b + 3.0 * a * a * b);
    };
    const auto grid = interior_grid(2, 12, 0.97);
    auto res = extend_bidim_q1(p, fig, grid);
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(res.values[i][0] - p(grid[i])[0]));
    CHECK(worst <= 1e-12);
}

TEST_CASE("vector-valued maps and q = 2")
{
    HartogsFigure fig(2, 1, 0.3, FigureModel::Ball);
    auto f = [](const VectorXc& z) {
        VectorXc v(2);
        v[0] = 1.0 / (2.8 - z[0] - z[2]);
        v[1] = z[1] * z[1] / (3.0 + z[2]);
        return v;
    };
    const VectorXc t = point({0.3, Complex(0, 0.4), 0.7});
    auto res = extend_bidim_q1(f, fig, {t});
    CHECK((res.values[0] - f(t)).norm() <= 1e-9);
    HartogsFigure poly(2, 1, 0.3, FigureModel::Polydisk);
    const VectorXc t2 = point({0.6, Complex(0, -0.6), 0.7});
    auto res2 = extend_bidim_q1(f, poly, {t2});
    CHECK((res2.values[0] - f(t2)).norm() <= 1e-9);
}

TEST_CASE("maximum principle on the closed target")
{
    HartogsFigure fig(1, 1, 0.25);
    auto f = [](const VectorXc& z) { return scalar(std::exp(z[0] * z[1]) / (2.5 - z[0])); };
    const auto grid = interior_grid(2, 10, 0.85);
    auto res = extend_bidim_q1(f, fig, grid);
    double worst = 0;
    for (const auto& v : res.values)
        worst = std::max(worst, v.norm());
    CHECK(worst <= res.sup_bound * (1 + 1e-6));
    CHECK(res.max_principle_ratio <= 1 + 1e-6);
}

TEST_CASE("errors: non-holomorphic input, singular input")
{
    HartogsFigure fig(1, 1, 0.2);
    CHECK(code_of([&] {
              extend_bidim_q1([](const VectorXc& z) { return scalar(std::conj(z[0]) + z[1]); }, fig, {});
          }) == ErrorCode::NotHolomorphic);
    // Pole at z2 = 0.5 lies in the shell part of the figure and inside the target.
    CHECK(code_of([&] {
              ExtensionOptions o;
              o.check_holomorphy = false;
              extend_bidim_q1([](const VectorXc& z) { return scalar(1.0 / (z[1] - 0.5)); }, fig, {}, o);
          }) == ErrorCode::SlowDecay);
    // Holomorphic only on the shell: 1/z1 has no extension into the disk.
    CHECK(code_of([&] {
              ExtensionOptions o;
              o.check_holomorphy = false;
              extend_bidim_q1([](const VectorXc& z) { return scalar(1.0 / z[0]); }, fig, {}, o);
          }) == ErrorCode::SlowDecay);
    CHECK(code_of([&] {
              extend_bidim_q1([](const VectorXc& z) { return scalar(z[1]); }, fig, {point({0.0, 1.2})});
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("qn: closed form 1/(3 - z2 - z3)")
{
    HartogsFigure fig(1, 2, 0.2, FigureModel::Polydisk);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (3.0 - z[1] - z[2])); };
    const VectorXc t = point({0.5, 0.8, 0.8});
    auto res = extend_bidim_qn(f, fig, {t});
    CHECK(std::abs(res.values[0][0] - 1.0 / 1.4) <= 1e-8);
    CHECK(res.oscillation_ratio <= 1.0);
}

TEST_CASE("qn: maps independent of the fiber prolong trivially")
{
    HartogsFigure fig(1, 3, 0.2, FigureModel::Polydisk);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (1.7 - z[0])); };
    const auto targets = std::vector<VectorXc>{point({0.3, 0.8, -0.7, Complex(0, 0.9)}),
                                               point({Complex(-0.5, 0.2), 0.1, 0.9, 0.0})};
    auto res = extend_bidim_qn(f, fig, targets);
    for (std::size_t i = 0; i < targets.size(); ++i)
        CHECK(std::abs(res.values[i][0] - f(targets[i])[0]) <= 1e-13);
}

TEST_CASE("qn with n = 1 is the q1 path")
{
    HartogsFigure fig(1, 1, 0.2);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (2.0 - z[1] * z[0])); };
    const auto grid = interior_grid(2, 5, 0.9);
    auto a = extend_bidim_q1(f, fig, grid);
    auto b = extend_bidim_qn(f, fig, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK((a.values[i] - b.values[i]).norm() == 0.0);
}

TEST_CASE("qn: ball and polydisk models agree on their common target")
{
    auto f = [](const VectorXc& z) { return scalar(1.0 / (4.0 - z[0] - z[1] + z[2] * z[1])); };
    HartogsFigure ball(1, 2, 0.3, FigureModel::Ball), poly(1, 2, 0.3, FigureModel::Polydisk);
    const std::vector<VectorXc> targets = {point({0.2, 0.5, 0.5}), point({-0.6, Complex(0, 0.3), 0.6}),
                                           point({Complex(0.4, 0.4), -0.2, 0.1})};
    auto a = extend_bidim_qn(f, ball, targets);
    auto b = extend_bidim_qn(f, poly, targets);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        CHECK((a.values[i] - b.values[i]).norm() <= 1e-8);
        CHECK((a.values[i] - f(targets[i])).norm() <= 1e-8);
    }
}

TEST_CASE("qn: depth limit")
{
    HartogsFigure fig(1, 9, 0.2, FigureModel::Polydisk);
    CHECK(code_of([&] { extend_bidim_qn([](const VectorXc&) { return scalar(1.0); }, fig, {}); }) ==
          ErrorCode::InductionDepthExceeded);
}

TEST_CASE("q-infinity: closed form with a two-variable pole")
{
    HartogsFigure fig(1, 2, 0.3, FigureModel::Ball, true);
    auto f = [](const VectorXc& z) { return scalar(1.0 / (2.0 - z[1] - z[2])); };
    const VectorXc t = point({0.4, 0.4, Complex(0.3, 0.2)});
    auto res = extend_q_infty(f, fig, {t});
    CHECK(std::abs(res.values[0][0] - f(t)[0]) <= 1e-8);
    CHECK(res.direction_mismatch <= 1e-9);
    CHECK(res.gateaux_error <= 1e-6);
}

TEST_CASE("q-infinity: maps of z' only are constant along fibers")
{
    HartogsFigure fig(2, 3, 0.3, FigureModel::Ball, true);
    auto f = [](const VectorXc& z) { return scalar(std::exp(z[0]) * (1.0 + z[1])); };
    const std::vector<VectorXc> targets = {point({0.2, 0.1, 0.0, 0.0, 0.0}), point({0.2, 0.1, 0.5, 0.1, 0.3}),
                                           point({0.2, 0.1, 0.0, Complex(0, 0.8), 0.0})};
    auto res = extend_q_infty(f, fig, targets);
    CHECK(res.direction_mismatch <= 1e-14);
    for (const auto& v : res.values)
        CHECK(std::abs(v[0] - res.values[0][0]) <= 1e-13);
}

TEST_CASE("q-infinity: Gateaux derivative of a quadratic at its critical point")
{
    HartogsFigure fig(1, 2, 0.3, FigureModel::Ball, true);
    auto f = [](const VectorXc& z) { return scalar(z[1] * z[1]); };
    auto res = extend_q_infty(f, fig, {});
    const VectorXc d = gateaux_derivative(res, VectorXc::Zero(3), point({0.0, 1.0, 0.0}));
    CHECK(std::abs(d[0]) <= 1e-12);
    const VectorXc d2 = gateaux_derivative(res, point({0.0, 0.3, 0.0}), point({0.0, 1.0, 0.0}));
    CHECK(std::abs(d2[0] - 0.6) <= 1e-10);
}

TEST_CASE("identity on overlap for rational functions")
{
    HartogsFigure fig(1, 1, 0.15);
    const std::vector<HoloMap> fs = {
        [](const VectorXc& z) { return scalar(1.0 / (1.3 - z[0])); },
        [](const VectorXc& z) { return scalar(1.0 / ((1.4 + z[1]) * (z[0] - Complex(0, 1.5)))); },
        [](const VectorXc& z) { return scalar((z[0] + z[1]) / (3.0 - z[0] * z[1] - z[1])); },
    };
    for (const auto& f : fs) {
        auto res = extend_bidim_q1(f, fig, {});
        CHECK(res.overlap_residual <= 1e-9);
    }
}
