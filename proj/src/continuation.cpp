#include "hartogskit/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/royden.hpp"

namespace hk {

namespace {

std::string at_t(double t)
{
    std::ostringstream os;
    os.precision(6);
    os << "t = " << t;
    return os.str();
}

double sup_norm(const VectorXc& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

MatrixXc adapted_frame(int n, double theta)
{
    MatrixXc u = MatrixXc::Identity(n, n);
    if (n >= 2) {
        u(0, 0) = std::cos(theta);
        u(0, 1) = -std::sin(theta);
        u(1, 0) = std::sin(theta);
        u(1, 1) = std::cos(theta);
    }
    return std::polar(1.0, theta) * u;
}

// Disk radius in lambda: the figure's shell 1 - r < |zeta| < 1 straddles the boundary circle.
double disk_scale(double radius, double r)
{
    return radius / (1.0 - 0.5 * r);
}

} // namespace

FamilyReport check_family(const DiskFamily& family, const Region& region, const FamilyCheckOptions& options)
{
    FamilyReport rep;
    rep.initial_margin = kInf;
    rep.boundary_margin = kInf;
    const int nb = std::max(options.boundary_samples, 4);
    const int nt = std::max(options.t_samples, 2);
    const int rings = std::max(options.interior_rings, 1);

    const auto circle_point = [&](double t, double frac, int k) {
        return family.center(t) + std::polar(frac * family.radius(t), 2.0 * kPi * k / nb);
    };

    for (int j = 0; j <= rings; ++j)
        for (int k = 0; k < (j == 0 ? 1 : nb); ++k)
            rep.initial_margin =
                std::min(rep.initial_margin, region.margin(family.map(0.0, circle_point(0.0, double(j) / rings, k))));

    std::vector<double> ts(nt);
    for (int i = 0; i < nt; ++i)
        ts[i] = double(i) / (nt - 1);

    for (double t : ts)
        for (int k = 0; k < nb; ++k) {
            const double m = region.margin(family.map(t, circle_point(t, 1.0, k)));
            if (m < rep.boundary_margin) {
                rep.boundary_margin = m;
                rep.worst_t = t;
            }
        }

    // Continuity modulus on the closed disk of the earlier parameter.
    for (int i = 0; i + 1 < nt; ++i) {
        double jump = 0;
        for (int j = 0; j <= rings; ++j)
            for (int k = 0; k < (j == 0 ? 1 : nb); ++k) {
                const Complex lam = circle_point(ts[i], double(j) / rings, k);
                jump = std::max(jump, sup_norm(family.map(ts[i + 1], lam) - family.map(ts[i], lam)));
            }
        rep.max_jump = std::max(rep.max_jump, jump);
        rep.lipschitz = std::max(rep.lipschitz, jump / (ts[i + 1] - ts[i]));
    }

    // Cauchy-Riemann on a square inscribed in each disk.
    const int g = 65;
    for (double t : ts) {
        const double half = family.radius(t) / std::sqrt(2.0);
        const double h = 2.0 * half / (g - 1);
        const Complex c0 = family.center(t) - Complex(half, half);
        std::vector<MatrixXc> comp(family.ambient_dim, MatrixXc(g, g));
        double sup = 0;
        for (int iy = 0; iy < g; ++iy)
            for (int ix = 0; ix < g; ++ix) {
                const VectorXc v = family.map(t, c0 + Complex(ix * h, iy * h));
                sup = std::max(sup, sup_norm(v));
                for (int c = 0; c < family.ambient_dim; ++c)
                    comp[c](iy, ix) = v[c];
            }
        for (const auto& m : comp)
            rep.cr_residual = std::max(rep.cr_residual, cr_residual(m, h, h) / std::max(1.0, sup));
    }
    return rep;
}

VectorXc FunctionElement::local(Complex lambda, const VectorXc& x) const
{
    VectorXc zw(1 + x.size());
    zw[0] = (lambda - center) / scale;
    zw.tail(x.size()) = frame.adjoint() * (x - map(t, lambda)) / tube_radius;
    return zw;
}

VectorXc FunctionElement::point(Complex zeta, const VectorXc& w) const
{
    const Complex lambda = center + scale * zeta;
    VectorXc out(1 + w.size());
    out[0] = lambda;
    out.tail(w.size()) = map(t, lambda) + tube_radius * (frame * w);
    return out;
}

bool FunctionElement::covers(Complex lambda, const VectorXc& x, double margin) const
{
    const VectorXc zw = local(lambda, x);
    return sup_norm(zw) <= 1.0 - margin;
}

VectorXc FunctionElement::value(Complex lambda, const VectorXc& x) const
{
    return table.evaluate(local(lambda, x));
}

VectorXc FunctionElement::value_local(const VectorXc& zw) const
{
    return table.evaluate(zw);
}

VectorXc FunctionElement::center_value() const
{
    return value_local(VectorXc::Zero(frame.rows() + 1));
}

namespace {

PolytorusCoefficients tabulate(const HoloMap& g, int vars, const FunctionElement& e, int nodes)
{
    return polytorus_coefficients(g, std::vector<double>(vars, e.table_radius), std::vector<int>(vars, 0),
                                  std::vector<int>(vars, nodes - 1), nodes);
}

// Taylor table of a polydisk extension in (zeta, w_1, w_2..w_n): the (zeta, w_1) coefficients
// are read off the slice planes, the frozen variables w_2..w_n are resolved on a torus.
PolytorusCoefficients tabulate_extension(const ExtensionResult& ext, int n, const FunctionElement& e, int nodes)
{
    const auto ref = ext.reference_plane;
    const int order = ref->order();
    const int outputs = ref->output_dim();
    const std::size_t block = static_cast<std::size_t>(order + 1) * (order + 1) * outputs;
    const auto flatten = [&](const std::shared_ptr<const PlaneExtension>& p) {
        VectorXc v(block);
        std::size_t i = 0;
        for (int j = 0; j <= order; ++j)
            for (int k = 0; k <= order; ++k)
                for (int o = 0; o < outputs; ++o)
                    v[i++] = p->coefficient(j, k)[o];
        return v;
    };

    PolytorusCoefficients out;
    out.lo.assign(n + 1, 0);
    out.hi.assign(n + 1, nodes - 1);
    out.hi[0] = out.hi[1] = order;
    out.radii.assign(n + 1, e.table_radius);
    out.radii[0] = ref->shell_radius();
    out.radii[1] = ref->fiber_radius();

    PolytorusCoefficients frozen;
    const int m = n - 1;
    if (m == 0) {
        frozen.coeffs.push_back(flatten(ref));
    } else {
        const HoloMap sampled = [&](const VectorXc& w) {
            VectorXc z = VectorXc::Zero(n + 1);
            z.tail(m) = w;
            return VectorXc(flatten(ext.plane_at(z)));
        };
        frozen = tabulate(sampled, m, e, nodes);
        out.sample_max = frozen.sample_max;
    }
    const std::size_t per = frozen.coeffs.size();
    out.coeffs.assign(block / outputs * per, VectorXc());
    // Storage is row-major (j, k, l) with l the frozen multi-index, fastest.
    for (std::size_t jk = 0; jk < block / outputs; ++jk)
        for (std::size_t l = 0; l < per; ++l)
            out.coeffs[jk * per + l] = frozen.coeffs[l].segment(static_cast<Eigen::Index>(jk * outputs), outputs);
    out.sample_max = std::max(out.sample_max, ref->sup_bound());
    return out;
}

// Largest normalized displacement of the disk at t in the coordinates of `prev`.
double step_measure(const FunctionElement& prev, const DiskFamily& family, double t, double r, int samples)
{
    double mu = 0;
    for (int k = 0; k < samples; ++k) {
        const Complex lam = prev.center + prev.scale * std::polar(1.0, 2.0 * kPi * k / samples);
        const VectorXc psi = prev.frame.adjoint() * (family.map(t, lam) - family.map(prev.t, lam)) / prev.tube_radius;
        mu = std::max(mu, sup_norm(psi));
    }
    const double disk = std::abs(family.center(t) - prev.center) + std::abs(disk_scale(family.radius(t), r) - prev.scale);
    return std::max(mu, disk / prev.scale);
}

double tubular_identity_check(int fiber_dim)
{
    const auto circle = std::make_shared<SampledCircle>(0.9, 64);
    const auto res = normalize_transitions(identity_atlas(fiber_dim, 3, circle), 3);
    const auto tub = assemble_tubular_map(res);
    const FiberedMap id = FiberedMap::identity(circle, fiber_dim, 3);
    return std::max(tub.chart[0].difference(id, 1, 3), tub.chart[1].difference(id, 1, 3));
}

} // namespace

ContinuationResult continue_along(const HoloMap& f, const Region& region, const DiskFamily& family,
                                  const ContinuationOptions& options, std::vector<FunctionElement>* partial)
{
    const int n = family.ambient_dim;
    if (n < 1 || n > 4)
        fail(ErrorCode::InvalidArgument, "ambient dimension must be between 1 and 4");
    if (!(options.r > 0 && options.r < 1) || !(options.tube_radius > 0))
        fail(ErrorCode::InvalidArgument, "figure parameter and tube radius must be positive");
    if (!(options.min_step > 0) || options.max_step < options.min_step)
        fail(ErrorCode::InvalidArgument, "step bounds must satisfy 0 < min_step <= max_step");

    ContinuationResult out;
    out.family = check_family(family, region);
    if (!(out.family.initial_margin > 0))
        fail(ErrorCode::BoundaryEscape, "initial disk leaves U (" + at_t(0) + ", margin " +
                                            format_double(out.family.initial_margin) + ")");
    if (!(out.family.boundary_margin > 0))
        fail(ErrorCode::BoundaryEscape, "boundary circle leaves U at " + at_t(out.family.worst_t) + " (margin " +
                                            format_double(out.family.boundary_margin) + ")");

    // Graphs over the disk straighten to (lambda, x - phi_t(lambda)); their normal bundle is
    // trivial, which the normalization confirms before the affine form is used.
    out.tubular_deviation = tubular_identity_check(n);
    if (out.tubular_deviation > 1e-10)
        fail(ErrorCode::ChartDisagreement, "tubular map of a graph is not the identity (deviation " +
                                               format_double(out.tubular_deviation) + ")");

    const MatrixXc frame = adapted_frame(n, options.frame_rotation);
    const auto make_element = [&](double t) {
        FunctionElement e;
        e.t = t;
        e.center = family.center(t);
        e.scale = disk_scale(family.radius(t), options.r);
        e.tube_radius = options.tube_radius;
        e.frame = frame;
        e.map = family.map;
        return e;
    };
    const auto split_point = [n](const VectorXc& p) { return std::make_pair(p[0], VectorXc(p.tail(n))); };

    std::vector<FunctionElement> scratch;
    std::vector<FunctionElement>& chain = partial ? *partial : scratch;
    chain.clear();

    {
        FunctionElement e0 = make_element(0.0);
        const HoloMap g0 = [&](const VectorXc& zw) {
            const auto [lam, x] = split_point(e0.point(zw[0], zw.tail(n)));
            (void)lam;
            if (!region.contains(x))
                fail(ErrorCode::BoundaryEscape, "tube around the initial disk leaves U (" + at_t(0) + ")");
            return f(x);
        };
        // Membership sampling of the closed tube (condition i for the neighbourhood used).
        for (int j = 0; j <= 4; ++j)
            for (int k = 0; k < options.boundary_samples; k += 4) {
                const double a = 2.0 * kPi * k / options.boundary_samples;
                VectorXc zw(n + 1);
                zw[0] = std::polar(0.25 * j, a);
                for (int i = 1; i <= n; ++i)
                    zw[i] = std::polar(1.0, a * (i + 1) + i);
                g0(zw);
            }
        e0.table = tabulate(g0, n + 1, e0, options.table_nodes);
        e0.sup_bound = e0.table.sample_max;
        chain.push_back(std::move(e0));
    }

    const std::vector<VectorXc> none;
    double dt = options.max_step;
    std::mt19937_64 rng(0xc0ffee);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    while (chain.back().t < 1.0) {
        const FunctionElement& prev = chain.back();
        const double t = std::min(1.0, prev.t + dt);
        const double mu = step_measure(prev, family, t, options.r, options.boundary_samples);
        if (mu >= options.r / 4) {
            dt *= 0.5;
            ++out.halvings;
            if (dt < options.min_step)
                fail(ErrorCode::StepCollapse, "step below " + format_double(options.min_step) + " at " + at_t(prev.t) +
                                                  " (displacement " + format_double(mu) + ")");
            continue;
        }

        FunctionElement next = make_element(t);
        next.step_size = mu;
        const HoloMap g = [&](const VectorXc& zw) -> VectorXc {
            const auto [lam, x] = split_point(next.point(zw[0], zw.tail(n)));
            if (region.contains(x))
                return f(x);
            if (prev.covers(lam, x))
                return prev.value(lam, x);
            fail(ErrorCode::BoundaryEscape, "figure point outside U and the previous element at " + at_t(t));
        };

        ExtensionResult ext;
        try {
            ext = extend(g, HartogsFigure(1, n, options.r, FigureModel::Polydisk), none, options.extension);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + " (" + at_t(t) + ")");
        }
        next.overlap_residual = ext.overlap_residual;
        next.sup_bound = ext.sup_bound;
        next.table = tabulate_extension(ext, n, next, options.table_nodes);

        // Coherence on samples of the new tube that the previous element also covers.
        double coherence = 0;
        int compared = 0;
        for (int s = 0; s < options.coherence_samples; ++s) {
            VectorXc zw(n + 1);
            zw[0] = std::polar(0.8 * std::sqrt(unif(rng)), 2.0 * kPi * unif(rng));
            for (int i = 1; i <= n; ++i)
                zw[i] = std::polar(0.5 * unif(rng), 2.0 * kPi * unif(rng));
            const auto [lam, x] = split_point(next.point(zw[0], zw.tail(n)));
            if (!prev.covers(lam, x))
                continue;
            ++compared;
            coherence = std::max(coherence, (next.value_local(zw) - prev.value(lam, x)).norm());
        }
        next.coherence = coherence / std::max(1.0, next.sup_bound);
        if (compared == 0)
            fail(ErrorCode::OverlapMismatch, "consecutive elements share no samples at " + at_t(t));
        if (next.coherence > options.coherence_tolerance)
            fail(ErrorCode::OverlapMismatch, "consecutive elements disagree by " + format_double(next.coherence) +
                                                 " at " + at_t(t));

        chain.push_back(std::move(next));
        dt = std::min(options.max_step, 2.0 * dt);
    }

    out.elements = chain;
    return out;
}

namespace {

constexpr double kReach = 1.45;
constexpr double kHole = 0.6;

ContinuationFixture swept_family(Complex c, std::string name)
{
    ContinuationFixture fx;
    fx.name = std::move(name);
    fx.family.ambient_dim = 2;
    fx.family.map = [c](double t, Complex lam) {
        VectorXc x(2);
        x << lam, t * c;
        return x;
    };
    return fx;
}

Region swept_region(Complex c, double inner, double outer_margin)
{
    const double top = std::abs(c) + outer_margin;
    return Region{[inner, top](const VectorXc& x) {
        const double a = std::abs(x[0]), b = std::abs(x[1]);
        const double core = std::min(kReach - a, inner - b);
        const double ring = std::min({a - kHole, kReach - a, top - b});
        return std::max(core, ring);
    }};
}

} // namespace

ContinuationFixture swept_bidisk_fixture(Complex c, double inner, double outer_margin)
{
    auto fx = swept_family(c, "swept_bidisk");
    fx.region = swept_region(c, inner, outer_margin);
    fx.f = [](const VectorXc& x) {
        VectorXc v(1);
        v[0] = 1.0 / (x[1] - 2.0);
        return v;
    };
    return fx;
}

ContinuationFixture pole_fixture(Complex c, double t_star, double outer_margin)
{
    auto fx = swept_family(c, "pole");
    const double top = std::abs(c) + outer_margin;
    fx.region = Region{[top](const VectorXc& x) { return std::min(kReach - std::abs(x[0]), top - std::abs(x[1])); }};
    const Complex pole = t_star * c;
    fx.f = [pole](const VectorXc& x) {
        VectorXc v(1);
        v[0] = 1.0 / (x[1] - pole);
        return v;
    };
    return fx;
}

ContinuationFixture polynomial_fixture(Complex c)
{
    auto fx = swept_family(c, "polynomial");
    fx.region = swept_region(c, 0.35, 0.3);
    fx.f = [](const VectorXc& x) {
        VectorXc v(1);
        v[0] = x[0] * x[0] * x[1] + 0.5 * x[1] * x[1] * x[1] - x[0] + 2.0;
        return v;
    };
    return fx;
}

void write_continuation_csv(std::ostream& os, const ContinuationResult& result)
{
    os << "t,step_size,overlap_residual,coherence,sup_bound,value_re,value_im\n";
    for (const auto& e : result.elements) {
        const VectorXc v = e.center_value();
        os << format_double(e.t) << ',' << format_double(e.step_size) << ',' << format_double(e.overlap_residual)
           << ',' << format_double(e.coherence) << ',' << format_double(e.sup_bound) << ','
           << format_double(v[0].real()) << ',' << format_double(v[0].imag()) << '\n';
    }
}

} // namespace hk
