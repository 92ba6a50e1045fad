#include "hartogskit/loopspace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>

#include <unsupported/Eigen/FFT>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/parallel.hpp"
#include "hartogskit/quadrature.hpp"

namespace hk {

SobolevLoop::SobolevLoop(int dim, int k, int modes) : dim_(dim), k_(k), modes_(modes)
{
    if (dim < 1 || k < 1 || modes < 0)
        fail(ErrorCode::InvalidArgument, "loops need dim >= 1, smoothness k >= 1 and a nonnegative mode cutoff");
    coeffs_.assign(2 * static_cast<std::size_t>(modes) + 1, VectorXc::Zero(dim));
}

std::size_t SobolevLoop::index(int m) const
{
    if (m < -modes_ || m > modes_)
        fail(ErrorCode::InvalidArgument, "mode " + std::to_string(m) + " beyond the cutoff " + std::to_string(modes_));
    return static_cast<std::size_t>(m + modes_);
}

SobolevLoop SobolevLoop::constant(const VectorXc& value, int k, int modes)
{
    SobolevLoop out(static_cast<int>(value.size()), k, modes);
    out.coefficient(0) = value;
    return out;
}

SobolevLoop SobolevLoop::from_function(const std::function<VectorXc(double)>& f, int dim, int k, int modes, int nodes)
{
    SobolevLoop out(dim, k, modes);
    if (nodes < 4 * std::max(modes, 1))
        fail(ErrorCode::InvalidArgument, "loop sampling needs at least 4 nodes per mode");
    MatrixXc samples(dim, nodes);
    for (int j = 0; j < nodes; ++j) {
        const VectorXc v = f(2.0 * kPi * j / nodes);
        if (v.size() != dim || !all_finite(v))
            fail(ErrorCode::NonFiniteSample, "loop sample is non-finite or has the wrong dimension");
        samples.col(j) = v;
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> row(nodes), spec;
    MatrixXc hat(dim, nodes);
    for (int c = 0; c < dim; ++c) {
        for (int j = 0; j < nodes; ++j)
            row[j] = samples(c, j);
        fft.fwd(spec, row);
        for (int j = 0; j < nodes; ++j)
            hat(c, j) = spec[j] / static_cast<double>(nodes);
    }
    double tail2 = 0;
    for (int m = -nodes / 2 + 1; m < nodes / 2; ++m) {
        const VectorXc cm = hat.col(m >= 0 ? m : nodes + m);
        if (std::abs(m) <= modes)
            out.coefficient(m) = cm;
        else
            tail2 += std::pow(1.0 + std::abs(m), 2.0 * k) * cm.squaredNorm();
    }
    out.tail_ = std::sqrt(tail2);
    return out;
}

VectorXc SobolevLoop::operator()(double s) const
{
    VectorXc v = VectorXc::Zero(dim_);
    for (int m = -modes_; m <= modes_; ++m)
        v += coefficient(m) * std::polar(1.0, m * s);
    return v;
}

double SobolevLoop::sup_tail_bound() const
{
    // sum_{|m| > M} (1 + |m|)^{-2k} <= 2 (1 + M)^{1 - 2k} / (2k - 1).
    const double w = 2.0 * std::pow(1.0 + modes_, 1.0 - 2.0 * k_) / (2.0 * k_ - 1.0);
    return tail_ * std::sqrt(w);
}

SobolevLoop SobolevLoop::with_modes(int modes) const
{
    SobolevLoop out(dim_, k_, modes);
    for (int m = -std::min(modes, modes_); m <= std::min(modes, modes_); ++m)
        out.coefficient(m) = coefficient(m);
    out.tail_ = tail_;
    return out;
}

VectorXc SobolevLoop::flatten() const
{
    VectorXc v(static_cast<Eigen::Index>(coeffs_.size()) * dim_);
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        v.segment(static_cast<Eigen::Index>(i) * dim_, dim_) = coeffs_[i];
    return v;
}

SobolevLoop SobolevLoop::unflatten(const VectorXc& v, int dim, int k, int modes)
{
    SobolevLoop out(dim, k, modes);
    if (v.size() != static_cast<Eigen::Index>(out.coeffs_.size()) * dim)
        fail(ErrorCode::InvalidArgument, "flattened loop has the wrong length");
    for (std::size_t i = 0; i < out.coeffs_.size(); ++i)
        out.coeffs_[i] = v.segment(static_cast<Eigen::Index>(i) * dim, dim);
    return out;
}

double sobolev_norm(const SobolevLoop& loop)
{
    return sobolev_norm(loop, loop.order());
}

double sobolev_norm(const SobolevLoop& loop, int k)
{
    if (k < 0)
        fail(ErrorCode::InvalidArgument, "Sobolev weight order must be nonnegative");
    double s = 0;
    for (int m = -loop.modes(); m <= loop.modes(); ++m)
        s += std::pow(1.0 + std::abs(m), 2.0 * k) * loop.coefficient(m).squaredNorm();
    return std::sqrt(s);
}

double sobolev_distance(const SobolevLoop& a, const SobolevLoop& b)
{
    if (a.dim() != b.dim() || a.order() != b.order())
        fail(ErrorCode::InvalidArgument, "loops live in different Sobolev spaces");
    const int modes = std::max(a.modes(), b.modes());
    const SobolevLoop pa = a.with_modes(modes), pb = b.with_modes(modes);
    SobolevLoop d(a.dim(), a.order(), modes);
    for (int m = -modes; m <= modes; ++m)
        d.coefficient(m) = pa.coefficient(m) - pb.coefficient(m);
    return sobolev_norm(d);
}

LoopFamily LoopFamily::from_pointwise(const std::function<VectorXc(const VectorXc&, double)>& f, int base_dim,
                                      int dim, int k, int modes, int nodes, double tail_tolerance)
{
    LoopFamily fam;
    fam.base_dim = base_dim;
    fam.dim = dim;
    fam.k = k;
    fam.modes = modes;
    fam.loop = [f, dim, k, modes, nodes, tail_tolerance](const VectorXc& z) {
        SobolevLoop l = SobolevLoop::from_function([&](double s) { return f(z, s); }, dim, k, modes, nodes);
        if (l.tail_bound() > tail_tolerance * std::max(1.0, sobolev_norm(l)))
            fail(ErrorCode::InsufficientTerms, "loop tail " + format_double(l.tail_bound()) + " beyond " +
                                                   std::to_string(modes) + " modes");
        return l;
    };
    return fam;
}

HoloMap LoopFamily::mode(int m) const
{
    const auto l = loop;
    return [l, m](const VectorXc& z) { return VectorXc(l(z).coefficient(m)); };
}

HoloMap LoopFamily::flattened() const
{
    const auto l = loop;
    return [l](const VectorXc& z) { return l(z).flatten(); };
}

VectorXc ball_automorphism(const VectorXc& a, const VectorXc& z)
{
    const double a2 = a.squaredNorm();
    if (a2 >= 1.0)
        fail(ErrorCode::LoopEscapesBall, "automorphism centre outside the unit ball");
    if (a2 == 0.0)
        return -z;
    const Complex za = a.dot(z); // <z, a> = sum z_i conj(a_i)
    const VectorXc pz = (za / a2) * a;
    const VectorXc qz = z - pz;
    return (a - pz - std::sqrt(1.0 - a2) * qz) / (1.0 - za);
}

namespace {

// Torus grid of the closed polydisk with the given per-variable radii.
std::vector<VectorXc> torus_grid(const std::vector<double>& radii, int nodes)
{
    const int d = static_cast<int>(radii.size());
    std::vector<VectorXc> out;
    std::vector<int> idx(d, 0);
    while (true) {
        VectorXc z(d);
        for (int j = 0; j < d; ++j)
            z[j] = std::polar(radii[j], 2.0 * kPi * (idx[j] + 0.5 * j) / nodes);
        out.push_back(z);
        int j = d - 1;
        while (j >= 0 && idx[j] == nodes - 1)
            idx[j--] = 0;
        if (j < 0)
            return out;
        ++idx[j];
    }
}

// Product of spheres of the two blocks, random directions.
std::vector<VectorXc> sphere_samples(const HartogsFigure& fig, double rs, double rb, int count)
{
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g;
    std::vector<VectorXc> out;
    for (int i = 0; i < count; ++i) {
        VectorXc z(fig.dim());
        for (int j = 0; j < fig.dim(); ++j)
            z[j] = Complex(g(rng), g(rng));
        z.head(fig.q) *= rs / z.head(fig.q).norm();
        z.tail(fig.n) *= rb / z.tail(fig.n).norm();
        out.push_back(z);
    }
    return out;
}

// Projection of a target onto the sampled distinguished boundary.
VectorXc boundary_projection(const HartogsFigure& fig, const VectorXc& z, double rs, double rb)
{
    VectorXc p = z;
    const auto project = [](auto block, double radius, bool ball) {
        if (ball) {
            const double nrm = block.norm();
            if (nrm > 0)
                block *= radius / nrm;
            else
                block[0] = radius;
            return;
        }
        for (Eigen::Index i = 0; i < block.size(); ++i)
            block[i] = std::abs(block[i]) > 0 ? radius * block[i] / std::abs(block[i]) : Complex(radius, 0.0);
    };
    const bool ball = fig.model == FigureModel::Ball;
    project(p.head(fig.q), rs, ball);
    project(p.tail(fig.n), rb, ball);
    return p;
}

bool in_closed_sampled(const HartogsFigure& fig, const VectorXc& z, double rs, double rb)
{
    const double eps = 1e-12;
    if (fig.model == FigureModel::Ball)
        return z.head(fig.q).norm() <= rs + eps && z.tail(fig.n).norm() <= rb + eps;
    return max_norm(z.head(fig.q)) <= rs + eps && max_norm(z.tail(fig.n)) <= rb + eps;
}

double mode_cr_check(const LoopFamily& fam, const HartogsFigure& fig, const LoopExtensionOptions& opt, int* worst_mode)
{
    const auto points = figure_samples(fig, 2 * opt.mode_cr_points, opt.extension.seed ^ 0x1007ULL);
    const double h = 1e-4;
    const int g = 6;
    double worst = 0;
    *worst_mode = 0;
    const int nm = 2 * fam.modes + 1;
    for (const auto& p : points)
        for (int var = 0; var < fig.dim(); ++var) {
            std::vector<MatrixXc> grids(static_cast<std::size_t>(nm) * fam.dim, MatrixXc(g, g));
            double sup = 0;
            for (int iy = 0; iy < g; ++iy)
                for (int ix = 0; ix < g; ++ix) {
                    VectorXc z = p;
                    z[var] += Complex((ix - g / 2) * h, (iy - g / 2) * h);
                    const SobolevLoop l = fam.loop(z);
                    sup = std::max(sup, sobolev_norm(l, 0));
                    for (int m = -fam.modes; m <= fam.modes; ++m)
                        for (int c = 0; c < fam.dim; ++c)
                            grids[static_cast<std::size_t>(m + fam.modes) * fam.dim + c](iy, ix) = l.coefficient(m)[c];
                }
            for (std::size_t i = 0; i < grids.size(); ++i) {
                const double r = cr_residual(grids[i], h, h) / std::max(1.0, sup);
                if (r > worst) {
                    worst = r;
                    *worst_mode = static_cast<int>(i / fam.dim) - fam.modes;
                }
            }
        }
    return worst;
}

} // namespace

double certify_max_principle(const LoopFamily& family, const std::vector<VectorXc>& targets,
                             const std::vector<VectorXc>& boundary, double slack)
{
    if (boundary.empty())
        fail(ErrorCode::InvalidArgument, "maximum-principle certificate needs boundary samples");
    std::vector<double> bn(boundary.size()), tn(targets.size());
    parallel_for(boundary.size(), [&](std::size_t i) { bn[i] = sobolev_norm(family.loop(boundary[i])); });
    parallel_for(targets.size(), [&](std::size_t i) { tn[i] = sobolev_norm(family.loop(targets[i])); });
    const double bmax = *std::max_element(bn.begin(), bn.end());
    double tmax = 0;
    for (double v : tn)
        tmax = std::max(tmax, v);
    const double ratio = bmax > 0 ? tmax / bmax : (tmax > 0 ? kInf : 0.0);
    if (ratio > 1.0 + slack)
        fail(ErrorCode::NormBlowup, "interior Sobolev norm exceeds the boundary maximum (ratio " +
                                        format_double(ratio) + ")");
    return ratio;
}

LoopExtensionResult extend_loop_family(const LoopFamily& family, const HartogsFigure& figure,
                                       const LoopExtensionOptions& options)
{
    if (family.base_dim != figure.dim())
        fail(ErrorCode::InvalidArgument, "loop family base dimension does not match the figure");
    if (figure.infinite)
        fail(ErrorCode::InvalidArgument, "loop families extend over finite figures");

    LoopExtensionResult res;
    int bad_mode = 0;
    res.mode_cr_residual = mode_cr_check(family, figure, options, &bad_mode);
    if (res.mode_cr_residual > options.mode_cr_tolerance)
        fail(ErrorCode::NotHolomorphic, "mode m = " + std::to_string(bad_mode) + " fails the Cauchy-Riemann check (" +
                                            format_double(res.mode_cr_residual) + ")");

    // All modes go through one engine run (the plane tables are linear in the data); a failure
    // is localized by rerunning the modes one at a time.
    try {
        res.extension = extend(family.flattened(), figure, {}, options.extension);
    } catch (const Error& joint) {
        for (int m = 0; m <= family.modes; ++m)
            for (int sign : {1, -1}) {
                if (m == 0 && sign < 0)
                    continue;
                try {
                    extend(family.mode(sign * m), figure, {}, options.extension);
                } catch (const Error& e) {
                    throw Error(e.code(), "mode m = " + std::to_string(sign * m) + ": " + e.what());
                }
            }
        throw Error(joint.code(), std::string("modes jointly: ") + joint.what());
    }

    res.extended = family;
    {
        const HoloMap ev = res.extension.evaluate;
        const int dim = family.dim, k = family.k, modes = family.modes;
        res.extended.loop = [ev, dim, k, modes](const VectorXc& z) { return SobolevLoop::unflatten(ev(z), dim, k, modes); };
    }

    const double rs = res.extension.shell_radius, rb = res.extension.fiber_radius;
    res.targets = options.targets.empty() ? interior_grid(figure.dim(), 4, std::min(rs, rb)) : options.targets;
    res.target_norms.resize(res.targets.size());
    std::vector<SobolevLoop> loops;
    for (const auto& z : res.targets)
        loops.push_back(res.extended.loop(z));
    for (std::size_t i = 0; i < loops.size(); ++i)
        res.target_norms[i] = sobolev_norm(loops[i]);

    std::vector<VectorXc> boundary;
    if (figure.model == FigureModel::Polydisk) {
        std::vector<double> radii(figure.dim(), rb);
        std::fill(radii.begin(), radii.begin() + figure.q, rs);
        const int per = std::max(2, std::min(options.boundary_nodes,
                                             static_cast<int>(std::pow(4096.0, 1.0 / figure.dim()))));
        boundary = torus_grid(radii, per);
    } else {
        boundary = sphere_samples(figure, rs, rb, 512);
    }
    std::vector<VectorXc> certified;
    for (const auto& z : res.targets)
        if (in_closed_sampled(figure, z, rs, rb)) {
            certified.push_back(z);
            boundary.push_back(boundary_projection(figure, z, rs, rb));
        }

    // Boundary samples lie in the shell, where the data is the given family.
    double bmax = 0;
    for (const auto& z : boundary)
        bmax = std::max(bmax, sobolev_norm(family.loop(z)));
    res.boundary_max_norm = bmax;
    double tmax = 0;
    for (std::size_t i = 0; i < res.targets.size(); ++i)
        if (in_closed_sampled(figure, res.targets[i], rs, rb))
            tmax = std::max(tmax, res.target_norms[i]);
    res.certificate_ratio = bmax > 0 ? tmax / bmax : (tmax > 0 ? kInf : 0.0);
    if (res.certificate_ratio > 1.0 + options.certificate_slack)
        fail(ErrorCode::NormBlowup, "extended family violates the maximum principle (ratio " +
                                        format_double(res.certificate_ratio) + ")");

    for (std::size_t i = 0; i < loops.size(); ++i)
        for (std::size_t j = i + 1; j < loops.size(); ++j) {
            const double dz = (res.targets[i] - res.targets[j]).norm();
            if (dz > 0)
                res.continuity_modulus = std::max(res.continuity_modulus, sobolev_distance(loops[i], loops[j]) / dz);
        }
    return res;
}

VectorXc MobiusDiskFamily::operator()(double t, const VectorXc& z, double s) const
{
    VectorXc out(q() + n());
    out.head(q()) = ball_automorphism(fq(s), z);
    out.tail(n()) = t * fn(s);
    return out;
}

SobolevLoop MobiusDiskFamily::loop(double t, const VectorXc& z) const
{
    return SobolevLoop::from_function([&](double s) { return (*this)(t, z, s); }, q() + n(), fq.order(), fq.modes(),
                                      nodes);
}

namespace {

VectorXc sphere_point(int q, int i, int count)
{
    VectorXc z = VectorXc::Zero(q);
    const double a = 2.0 * kPi * i / count;
    if (q == 1) {
        z[0] = std::polar(1.0, a);
        return z;
    }
    for (int j = 0; j < q; ++j)
        z[j] = std::polar(1.0 + 0.5 * std::cos(a * (j + 1) + j), a * (2 * j + 1));
    return z / z.norm();
}

} // namespace

double MobiusDiskFamily::shell_deviation(int z_samples) const
{
    double worst = 0;
    for (int i = 0; i < z_samples; ++i) {
        const VectorXc z = sphere_point(q(), i, z_samples);
        for (int j = 0; j < nodes; ++j) {
            const double s = 2.0 * kPi * j / nodes;
            worst = std::max(worst, std::abs(ball_automorphism(fq(s), z).norm() - 1.0));
        }
    }
    return worst;
}

double MobiusDiskFamily::fiber_margin(double t) const
{
    double worst = kInf;
    for (int j = 0; j < nodes; ++j)
        worst = std::min(worst, 1.0 - std::abs(t) * fn(2.0 * kPi * j / nodes).norm());
    return worst;
}

MobiusDiskFamily mobius_disk_family(const SobolevLoop& fq, const SobolevLoop& fn, int nodes)
{
    if (fq.order() != fn.order() || fq.modes() != fn.modes())
        fail(ErrorCode::InvalidArgument, "the two loop components need the same k and mode cutoff");
    if (nodes < 4 * std::max(fq.modes(), 1))
        fail(ErrorCode::InvalidArgument, "Mobius family sampling needs at least 4 nodes per mode");
    MobiusDiskFamily fam{fq, fn, nodes, 0.0};
    double worst = 0;
    for (int j = 0; j < nodes; ++j) {
        const double s = 2.0 * kPi * j / nodes;
        worst = std::max({worst, fq(s).norm(), fn(s).norm()});
    }
    fam.ball_margin = 1.0 - worst;
    if (!(fam.ball_margin > 0))
        fail(ErrorCode::LoopEscapesBall, "loop leaves B^q x B^n (max norm " + format_double(worst) + ")");
    return fam;
}

void write_loop_csv(std::ostream& os, const SobolevLoop& loop)
{
    os << "m,component,re,im\n";
    for (int m = -loop.modes(); m <= loop.modes(); ++m)
        for (int c = 0; c < loop.dim(); ++c) {
            const Complex v = loop.coefficient(m)[c];
            os << m << ',' << c << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
        }
}

SobolevLoop read_loop_csv(std::istream& is, int k)
{
    std::string line;
    if (!std::getline(is, line) || trim(line) != "m,component,re,im")
        fail(ErrorCode::ConfigError, "loop CSV is missing its header");
    std::map<std::pair<int, int>, Complex> rows;
    int modes = 0, dim = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty())
            continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 4)
            fail(ErrorCode::ConfigError, "loop CSV row needs 4 columns: " + line);
        const int m = parse_int(cols[0]), c = parse_int(cols[1]);
        if (c < 0)
            fail(ErrorCode::ConfigError, "loop CSV component must be nonnegative: " + line);
        rows[{m, c}] += Complex(parse_double(cols[2]), parse_double(cols[3]));
        modes = std::max(modes, std::abs(m));
        dim = std::max(dim, c + 1);
    }
    if (dim == 0)
        fail(ErrorCode::ConfigError, "loop CSV has no rows");
    SobolevLoop out(dim, k, modes);
    for (const auto& [key, v] : rows)
        out.coefficient(key.first)[key.second] = v;
    return out;
}

} // namespace hk
