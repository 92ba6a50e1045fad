#include "hartogskit/hartogs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <string>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/parallel.hpp"

namespace hk {

HartogsFigure::HartogsFigure(int q_, int n_, double r_, FigureModel model_, bool infinite_)
    : q(q_), n(n_), infinite(infinite_), r(r_), model(infinite_ ? FigureModel::Ball : model_)
{
    if (q < 1 || n < 1)
        fail(ErrorCode::InvalidArgument, "Hartogs figure needs q >= 1 and n >= 1");
    if (!(r > 0 && r < 1))
        fail(ErrorCode::InvalidArgument, "Hartogs figure needs 0 < r < 1");
}

double HartogsFigure::norm(const VectorXc& v) const
{
    if (v.size() == 0)
        return 0.0;
    return model == FigureModel::Ball ? v.norm() : v.cwiseAbs().maxCoeff();
}

bool HartogsFigure::contains(const VectorXc& z) const
{
    if (z.size() != dim())
        return false;
    const double a = norm(z.head(q)), b = norm(z.tail(n));
    return (a < 1 && b < r) || (a > 1 - r && a < 1 && b < 1);
}

bool HartogsFigure::target_contains(const VectorXc& z) const
{
    return z.size() == dim() && norm(z.head(q)) < 1 && norm(z.tail(n)) < 1;
}

bool in_infinite_infinite_figure(const VectorXc& z_prime, const VectorXc& z_second, double r)
{
    const double a = z_prime.norm(), b = z_second.norm();
    return (a < 1 && b < r) || (a > 1 - r && a < 1 && b < 1);
}

PlaneExtension::PlaneExtension(const PlaneMap& g, double rho_s, double rho_b, int node_count)
    : rho_s_(rho_s), rho_b_(rho_b)
{
    const int n = node_count;
    const auto table = polytorus_coefficients(
        [&g](const VectorXc& z) { return g(z[0], z[1]); }, {rho_s, rho_b}, {-n / 2, -n / 2}, {n / 2 - 1, n / 2 - 1}, n);
    order_ = n / 2 - 1;
    outputs_ = static_cast<int>(table.coeffs.front().size());
    sup_ = table.sample_max;
    table_.assign(static_cast<std::size_t>(order_ + 1) * (order_ + 1), VectorXc());
    const int band = (3 * n) / 8;
    for (const auto& k : table.indices()) {
        const VectorXc& c = table.at(k);
        const double size = c.norm() * std::pow(rho_s, k[0]) * std::pow(rho_b, k[1]);
        if (k[0] < 0 || k[1] < 0) {
            negative_ = std::max(negative_, size);
            continue;
        }
        if (std::max(k[0], k[1]) >= band)
            top_band_ = std::max(top_band_, size);
        table_[static_cast<std::size_t>(k[0]) * (order_ + 1) + k[1]] = c;
    }
    // Coefficients at the rounding floor carry no information; left in, they would be
    // amplified by (|lambda|/rho_s)^j when evaluating outside the sampled torus.
    const double floor = 1e-14 * std::max(sup_, std::numeric_limits<double>::min());
    for (int j = 0; j <= order_; ++j)
        for (int k = 0; k <= order_; ++k) {
            VectorXc& c = table_[static_cast<std::size_t>(j) * (order_ + 1) + k];
            if (c.norm() * std::pow(rho_s, j) * std::pow(rho_b, k) < floor)
                c.setZero();
        }
}

VectorXc PlaneExtension::operator()(Complex lambda, Complex mu) const
{
    VectorXc out = VectorXc::Zero(outputs_);
    for (int j = order_; j >= 0; --j) {
        VectorXc inner = VectorXc::Zero(outputs_);
        for (int k = order_; k >= 0; --k)
            inner = inner * mu + coefficient(j, k);
        out = out * lambda + inner;
    }
    return out;
}

std::vector<VectorXc> PlaneExtension::fiber_coefficients(Complex lambda) const
{
    std::vector<VectorXc> out(order_ + 1, VectorXc::Zero(outputs_));
    for (int k = 0; k <= order_; ++k)
        for (int j = order_; j >= 0; --j)
            out[k] = out[k] * lambda + coefficient(j, k);
    return out;
}

std::vector<VectorXc> interior_grid(int dims, int per_axis, double radius)
{
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Complex> axis(per_axis);
    for (int i = 0; i < per_axis; ++i)
        axis[i] = std::polar(radius * (i + 1) / per_axis, golden * i);
    std::vector<VectorXc> out;
    std::vector<int> idx(dims, 0);
    while (true) {
        VectorXc z(dims);
        for (int d = 0; d < dims; ++d)
            z[d] = axis[idx[d]];
        out.push_back(z);
        int d = dims - 1;
        while (d >= 0 && idx[d] == per_axis - 1)
            idx[d--] = 0;
        if (d < 0)
            return out;
        ++idx[d];
    }
}

namespace {

/// Point of the given model norm: random direction, prescribed norm.
VectorXc random_with_norm(int dim, double norm_value, FigureModel model, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXc v(dim);
    if (model == FigureModel::Ball) {
        for (int i = 0; i < dim; ++i)
            v[i] = Complex(gauss(rng), gauss(rng));
        return v * (norm_value / v.norm());
    }
    // Polydisk: one coordinate attains the norm, the others stay below it.
    std::uniform_int_distribution<int> pick(0, dim - 1);
    const int top = pick(rng);
    for (int i = 0; i < dim; ++i) {
        const double m = i == top ? norm_value : norm_value * unit(rng);
        v[i] = std::polar(m, 2 * kPi * unit(rng));
    }
    return v;
}

} // namespace

std::vector<VectorXc> figure_samples(const HartogsFigure& figure, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double margin = figure.r / 4;
    std::vector<VectorXc> out;
    for (int i = 0; i < count; ++i) {
        double a, b;
        if (i % 2 == 0) {
            a = (1 - margin) * unit(rng);
            b = (figure.r - margin) * unit(rng);
        } else {
            a = 1 - figure.r + margin + (figure.r - 2 * margin) * unit(rng);
            b = (1 - margin) * unit(rng);
        }
        VectorXc z(figure.dim());
        z.head(figure.q) = random_with_norm(figure.q, a, figure.model, rng);
        z.tail(figure.n) = random_with_norm(figure.n, b, figure.model, rng);
        out.push_back(z);
    }
    return out;
}

namespace {

/// A complex plane through the figure: (lambda, mu) -> (lambda u, base + mu v).
struct PlaneSpec {
    VectorXc u, base, v;

    VectorXc point(int q, Complex lambda, Complex mu) const
    {
        VectorXc z(q + base.size());
        z.head(q) = lambda * u;
        z.tail(base.size()) = base + mu * v;
        return z;
    }
    std::vector<double> key() const
    {
        std::vector<double> k;
        for (const VectorXc* p : {&u, &base, &v})
            for (Eigen::Index i = 0; i < p->size(); ++i) {
                k.push_back((*p)[i].real());
                k.push_back((*p)[i].imag());
            }
        return k;
    }
};

/// Plane coordinates of a target: the plane and the (lambda, mu) at which to evaluate.
struct PlaneTarget {
    PlaneSpec spec;
    Complex lambda, mu;
};

class Engine {
public:
    Engine(const HoloMap& f, const HartogsFigure& figure, const ExtensionOptions& options, bool shared_plane)
        : f_(f), figure_(figure), options_(options),
          rho_s_(options.shell_radius > 0 ? options.shell_radius : (2 - figure.r) / 2),
          rho_b_(options.fiber_radius > 0 ? options.fiber_radius : (2 - figure.r) / 2),
          nodes_(shared_plane ? options.node_count : options.line_node_count)
    {
        if (!(rho_s_ > 1 - figure.r && rho_s_ < 1))
            fail(ErrorCode::InvalidArgument, "shell circle must lie inside the shell (1-r, 1)");
        if (!(rho_b_ > 0 && rho_b_ < 1))
            fail(ErrorCode::InvalidArgument, "fiber circle must lie inside the unit disk");
    }

    double rho_s() const { return rho_s_; }
    double rho_b() const { return rho_b_; }
    int planes_built() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return static_cast<int>(cache_.size());
    }
    double worst_certification() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return certification_;
    }
    double worst_negative() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return negative_;
    }
    double worst_top_band() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return top_band_;
    }
    double sup_bound() const
    {
        std::lock_guard<std::mutex> lock(mutex_);
        return sup_;
    }

    std::shared_ptr<const PlaneExtension> plane(const PlaneSpec& spec) const
    {
        const auto key = spec.key();
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end())
                return it->second;
        }
        const int q = figure_.q;
        const HoloMap& f = f_;
        PlaneExtension::PlaneMap g = [&f, spec, q](Complex lambda, Complex mu) { return f(spec.point(q, lambda, mu)); };
        auto built = std::make_shared<const PlaneExtension>(g, rho_s_, rho_b_, nodes_);
        const double scale = std::max(1.0, built->sup_bound());
        if (built->negative_magnitude() > options_.negative_tolerance * scale)
            fail(ErrorCode::SlowDecay, "negative-index torus coefficients of size " +
                                           format_double(built->negative_magnitude()) +
                                           ": singularity inside the target");
        if (built->top_band_magnitude() > options_.decay_tolerance * scale)
            fail(ErrorCode::SlowDecay, "torus coefficients do not decay (top band " +
                                           format_double(built->top_band_magnitude()) +
                                           "): singularity inside the target");
        const double cert = certify(*built, g, scale);
        std::lock_guard<std::mutex> lock(mutex_);
        auto [it, inserted] = cache_.emplace(key, built);
        if (inserted) {
            certification_ = std::max(certification_, cert);
            negative_ = std::max(negative_, built->negative_magnitude());
            top_band_ = std::max(top_band_, built->top_band_magnitude());
            sup_ = std::max(sup_, built->sup_bound());
        }
        return it->second;
    }

    VectorXc value(const PlaneTarget& t) const { return (*plane(t.spec))(t.lambda, t.mu); }

private:
    /// On shell points, small-circle Taylor coefficients in mu must match the plane's
    /// fiber coefficients; both are holomorphic in lambda and agree on the shell.
    double certify(const PlaneExtension& p, const PlaneExtension::PlaneMap& g, double scale) const
    {
        const double small = options_.small_circle_factor * figure_.r;
        const CircleSampler sampler(small, 64);
        double worst = 0.0;
        for (int s = 0; s < 8; ++s) {
            const Complex lambda = std::polar(rho_s_, 2 * kPi * (s + 0.25) / 8);
            const auto lc = circle_coefficients(CurveMap([&](Complex mu) { return g(lambda, mu); }), 0,
                                                options_.certification_orders, sampler);
            const auto fiber = p.fiber_coefficients(lambda);
            for (int k = 0; k <= options_.certification_orders && k <= p.order(); ++k)
                worst = std::max(worst, (lc.at(k) - fiber[k]).norm() * std::pow(rho_b_, k) / scale);
        }
        if (worst > options_.certification_tolerance)
            fail(ErrorCode::OverlapMismatch, "small-circle and shell coefficients disagree by " + format_double(worst));
        return worst;
    }

    HoloMap f_;
    HartogsFigure figure_;
    ExtensionOptions options_;
    double rho_s_, rho_b_;
    int nodes_;
    mutable std::mutex mutex_;
    mutable std::map<std::vector<double>, std::shared_ptr<const PlaneExtension>> cache_;
    mutable double certification_ = 0, negative_ = 0, top_band_ = 0, sup_ = 0;
};

VectorXc unit_vector(int dim, int i)
{
    VectorXc e = VectorXc::Zero(dim);
    e[i] = 1.0;
    return e;
}

/// Split a block into (direction, coordinate) for the given norm. q = 1 blocks keep the
/// complex coordinate itself so that a single plane serves every target.
void split_block(const VectorXc& block, FigureModel model, VectorXc& dir, Complex& coord)
{
    if (block.size() == 1) {
        dir = VectorXc::Ones(1);
        coord = block[0];
        return;
    }
    const double nrm = model == FigureModel::Ball ? block.norm() : block.cwiseAbs().maxCoeff();
    if (nrm == 0.0) {
        dir = unit_vector(static_cast<int>(block.size()), 0);
        coord = 0.0;
        return;
    }
    dir = block / nrm;
    coord = nrm;
}

/// Plane through the target: z' along its own direction, z'' along its own direction.
PlaneTarget line_target(const HartogsFigure& fig, const VectorXc& z)
{
    PlaneTarget t;
    split_block(z.head(fig.q), fig.model, t.spec.u, t.lambda);
    split_block(z.tail(fig.n), FigureModel::Ball, t.spec.v, t.mu);
    t.spec.base = VectorXc::Zero(fig.n);
    return t;
}

/// Plane with mu on fiber variable `var` and the other fiber coordinates frozen.
PlaneTarget slice_target(const HartogsFigure& fig, const VectorXc& z, int var)
{
    PlaneTarget t;
    split_block(z.head(fig.q), fig.model, t.spec.u, t.lambda);
    t.spec.base = z.tail(fig.n);
    t.mu = t.spec.base[var];
    t.spec.base[var] = 0.0;
    t.spec.v = unit_vector(fig.n, var);
    return t;
}

double overlap_residual(const HoloMap& f, const HoloMap& ext, const std::vector<VectorXc>& samples)
{
    std::vector<double> res(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { res[i] = (ext(samples[i]) - f(samples[i])).norm(); });
    double worst = 0.0;
    for (double r : res)
        worst = std::max(worst, r);
    return worst;
}

double probe_holomorphy(const HoloMap& f, const HartogsFigure& fig, const ExtensionOptions& opt)
{
    if (!opt.check_holomorphy)
        return 0.0;
    const auto points = figure_samples(fig, 2 * opt.cr_probe_points, opt.seed ^ 0xc0ffeeULL);
    const double h = 1e-4;
    const int g = 8;
    double worst = 0.0;
    for (const auto& p : points)
        for (int var = 0; var < fig.dim(); ++var) {
            std::vector<VectorXc> vals(g * g);
            double scale = 1.0;
            for (int iy = 0; iy < g; ++iy)
                for (int ix = 0; ix < g; ++ix) {
                    VectorXc z = p;
                    z[var] += Complex((ix - 3.5) * h, (iy - 3.5) * h);
                    vals[iy * g + ix] = f(z);
                    scale = std::max(scale, vals[iy * g + ix].norm());
                }
            for (Eigen::Index c = 0; c < vals[0].size(); ++c) {
                MatrixXc grid(g, g);
                for (int i = 0; i < g * g; ++i)
                    grid(i / g, i % g) = vals[i][c];
                worst = std::max(worst, cr_residual(grid, h, h) / scale);
            }
        }
    if (worst > opt.cr_tolerance)
        fail(ErrorCode::NotHolomorphic, "Cauchy-Riemann residual " + format_double(worst) + " on figure slices");
    return worst;
}

void require_in_target(const HartogsFigure& fig, const VectorXc& z)
{
    if (!fig.target_contains(z))
        fail(ErrorCode::InvalidArgument, "extension requested outside the open target polydisk/ball");
}

void evaluate_targets(ExtensionResult& res, const std::vector<VectorXc>& grid)
{
    res.targets = grid;
    res.values.assign(grid.size(), VectorXc());
    parallel_for(grid.size(), [&](std::size_t i) { res.values[i] = res.evaluate(grid[i]); });
}

void finish(ExtensionResult& res, const Engine& engine, const std::vector<PlaneTarget>& plane_targets,
            const HoloMap& f, const ExtensionOptions& opt)
{
    res.shell_radius = engine.rho_s();
    res.fiber_radius = engine.rho_b();
    const auto samples = figure_samples(res.figure, opt.overlap_samples, opt.seed);
    res.overlap_residual = overlap_residual(f, res.evaluate, samples);
    res.sup_bound = engine.sup_bound();
    double ratio = 0.0;
    for (std::size_t i = 0; i < res.values.size(); ++i) {
        const auto& t = plane_targets[i];
        if (std::abs(t.lambda) <= engine.rho_s() && std::abs(t.mu) <= engine.rho_b()) {
            const double sup = engine.plane(t.spec)->sup_bound();
            if (sup > 0)
                ratio = std::max(ratio, res.values[i].norm() / sup);
        }
    }
    res.max_principle_ratio = ratio;
    res.negative_coefficient_max = engine.worst_negative();
    res.top_band_max = engine.worst_top_band();
    res.certification_residual = engine.worst_certification();
    res.planes_built = engine.planes_built();
    const double scale = std::max(1.0, res.sup_bound);
    if (res.overlap_residual > opt.overlap_tolerance * scale)
        fail(ErrorCode::OverlapMismatch,
             "extension differs from the input on the figure by " + format_double(res.overlap_residual));
}

} // namespace

ExtensionResult extend_bidim_q1(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                                const ExtensionOptions& options)
{
    if (figure.n != 1 || figure.infinite)
        fail(ErrorCode::InvalidArgument, "extend_bidim_q1 needs a figure with n = 1");
    ExtensionResult res;
    res.figure = figure;
    res.cr_residual_max = probe_holomorphy(f, figure, options);
    auto engine = std::make_shared<Engine>(f, figure, options, figure.q == 1);
    const HartogsFigure fig = figure;
    res.evaluate = [engine, fig](const VectorXc& z) {
        require_in_target(fig, z);
        return engine->value(line_target(fig, z));
    };
    res.plane_at = [engine, fig](const VectorXc& z) { return engine->plane(line_target(fig, z).spec); };
    res.reference_plane = engine->plane(line_target(fig, VectorXc::Zero(fig.dim())).spec);
    evaluate_targets(res, eval_grid);
    std::vector<PlaneTarget> pts;
    for (const auto& z : eval_grid)
        pts.push_back(line_target(fig, z));
    finish(res, *engine, pts, f, options);
    return res;
}

ExtensionResult extend_bidim_qn(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                                const ExtensionOptions& options)
{
    if (figure.infinite)
        fail(ErrorCode::InvalidArgument, "extend_bidim_qn needs a finite figure");
    if (figure.n > 8)
        fail(ErrorCode::InductionDepthExceeded, "bidimension n = " + std::to_string(figure.n) + " exceeds depth 8");
    if (figure.n == 1)
        return extend_bidim_q1(f, figure, eval_grid, options);

    ExtensionResult res;
    res.figure = figure;
    res.cr_residual_max = probe_holomorphy(f, figure, options);
    auto engine = std::make_shared<Engine>(f, figure, options, false);
    const HartogsFigure fig = figure;
    const int last = fig.n - 1;

    if (fig.model == FigureModel::Ball) {
        // Each complex line through the fiber origin meets the figure in an (q,1) figure.
        res.evaluate = [engine, fig](const VectorXc& z) {
            require_in_target(fig, z);
            return engine->value(line_target(fig, z));
        };
        res.plane_at = [engine, fig](const VectorXc& z) { return engine->plane(line_target(fig, z).spec); };
        res.reference_plane = engine->plane(line_target(fig, VectorXc::Zero(fig.dim())).spec);
        evaluate_targets(res, eval_grid);
        std::vector<PlaneTarget> pts;
        for (const auto& z : eval_grid)
            pts.push_back(line_target(fig, z));
        finish(res, *engine, pts, f, options);
        return res;
    }

    // Polydisk model, by induction on n. Stage 2 freezes t = w_n and extends over
    // (z, w_1..w_{n-1}) from H_q^{n-1}(r); peeling down to the base case leaves the plane
    // in (z, w_1) with w_2..w_n frozen. Stage 1 is the plane in (z, w_n) with w_1..w_{n-1}
    // frozen, valid on E = H_q^{n-1}(r) x disk.
    res.evaluate = [engine, fig](const VectorXc& z) {
        require_in_target(fig, z);
        return engine->value(slice_target(fig, z, 0));
    };
    res.plane_at = [engine, fig](const VectorXc& z) { return engine->plane(slice_target(fig, z, 0).spec); };
    const auto stage1 = [engine, fig, last](const VectorXc& z) { return engine->value(slice_target(fig, z, last)); };
    res.reference_plane = engine->plane(slice_target(fig, VectorXc::Zero(fig.dim()), 0).spec);
    evaluate_targets(res, eval_grid);
    std::vector<PlaneTarget> pts;
    for (const auto& z : eval_grid)
        pts.push_back(slice_target(fig, z, 0));
    finish(res, *engine, pts, f, options);

    // Coherence of the two stages on E minus the figure: the frozen fiber coordinates are
    // small, w_n ranges over the disk.
    std::mt19937_64 rng(options.seed ^ 0xe5e7ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double margin = fig.r / 4;
    double coherence = 0.0;
    const double scale = std::max(1.0, res.sup_bound);
    for (int i = 0; i < 8; ++i) {
        VectorXc z(fig.dim());
        for (int j = 0; j < fig.q; ++j)
            z[j] = std::polar((1 - fig.r) * unit(rng), 2 * kPi * unit(rng));
        for (int j = 0; j < last; ++j)
            z[fig.q + j] = std::polar((fig.r - margin) * unit(rng), 2 * kPi * unit(rng));
        z[fig.q + last] = std::polar(fig.r + (1 - fig.r - margin) * unit(rng), 2 * kPi * unit(rng));
        coherence = std::max(coherence, (res.evaluate(z) - stage1(z)).norm() / scale);
    }
    if (coherence > options.overlap_tolerance)
        fail(ErrorCode::OverlapMismatch, "induction stages disagree on E by " + format_double(coherence));

    // Continuity across slices: coefficient tables for neighbouring frozen values of w_n
    // must differ by no more than the Cauchy estimate allows.
    const int slices = 12;
    double worst_ratio = 0.0;
    std::shared_ptr<const PlaneExtension> prev;
    Complex prev_t;
    for (int s = 0; s <= slices; ++s) {
        const Complex t = std::polar(0.8 * s / slices, 0.7 * s);
        VectorXc z = VectorXc::Zero(fig.dim());
        z[fig.q + last] = t;
        auto cur = engine->plane(slice_target(fig, z, 0).spec);
        if (prev) {
            double osc = 0.0;
            const int order = std::min(cur->order(), 24);
            for (int j = 0; j <= order; ++j)
                for (int k = 0; k <= order; ++k)
                    osc = std::max(osc, (cur->coefficient(j, k) - prev->coefficient(j, k)).norm() *
                                            std::pow(engine->rho_s(), j) * std::pow(engine->rho_b(), k));
            const double reach = 1.0 - std::max(std::abs(t), std::abs(prev_t));
            const double bound = 4 * std::max(cur->sup_bound(), prev->sup_bound()) * std::abs(t - prev_t) / reach;
            if (bound > 0)
                worst_ratio = std::max(worst_ratio, osc / bound);
        }
        prev = cur;
        prev_t = t;
    }
    res.oscillation_ratio = worst_ratio;
    res.planes_built = engine->planes_built();
    if (worst_ratio > 1.0)
        fail(ErrorCode::OverlapMismatch, "coefficient families oscillate between slices (ratio " +
                                             format_double(worst_ratio) + " of the Cauchy bound)");
    return res;
}

namespace {

VectorXc random_unit(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss;
    VectorXc v(dim);
    for (int i = 0; i < dim; ++i)
        v[i] = Complex(gauss(rng), gauss(rng));
    return v / v.norm();
}

} // namespace

ExtensionResult extend_q_infty(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                               const ExtensionOptions& options)
{
    if (!figure.infinite)
        fail(ErrorCode::InvalidArgument, "extend_q_infty needs a figure marked infinite");
    ExtensionResult res;
    res.figure = figure;
    res.cr_residual_max = probe_holomorphy(f, figure, options);
    auto engine = std::make_shared<Engine>(f, figure, options, false);
    const HartogsFigure fig = figure;
    res.evaluate = [engine, fig](const VectorXc& z) {
        require_in_target(fig, z);
        return engine->value(line_target(fig, z));
    };
    res.plane_at = [engine, fig](const VectorXc& z) { return engine->plane(line_target(fig, z).spec); };
    res.reference_plane = engine->plane(line_target(fig, VectorXc::Zero(fig.dim())).spec);
    evaluate_targets(res, eval_grid);
    std::vector<PlaneTarget> pts;
    for (const auto& z : eval_grid)
        pts.push_back(line_target(fig, z));
    finish(res, *engine, pts, f, options);

    // Directions: the fiber frame plus seeded random unit vectors.
    std::mt19937_64 rng(options.seed ^ 0xd1ec7ULL);
    std::vector<VectorXc> dirs;
    for (int i = 0; i < fig.n; ++i)
        dirs.push_back(unit_vector(fig.n, i));
    for (int i = 0; i < options.random_directions; ++i)
        dirs.push_back(random_unit(fig.n, rng));
    const auto base_points = figure_samples(fig, 8, options.seed ^ 0xba5eULL);
    const double scale = std::max(1.0, res.sup_bound);
    double mismatch = 0.0;
    for (const auto& p : base_points) {
        PlaneTarget t = line_target(fig, p);
        t.mu = 0.0;
        t.spec.v = dirs[0];
        const VectorXc ref = engine->value(t);
        for (std::size_t d = 1; d < dirs.size(); ++d) {
            t.spec.v = dirs[d];
            mismatch = std::max(mismatch, (engine->value(t) - ref).norm() / scale);
        }
    }
    res.direction_mismatch = mismatch;
    if (mismatch > options.direction_tolerance)
        fail(ErrorCode::DirectionInconsistency,
             "line extensions disagree on C^q x {0} by " + format_double(mismatch));

    // Gateaux check: Cauchy-integral directional derivative against centred differences.
    double worst = 0.0;
    for (int i = 0; i < options.gateaux_points; ++i) {
        VectorXc z0(fig.dim());
        z0.head(fig.q) = random_unit(fig.q, rng) * 0.3;
        z0.tail(fig.n) = random_unit(fig.n, rng) * 0.3;
        const VectorXc v = random_unit(fig.dim(), rng);
        const VectorXc cauchy = gateaux_derivative(res, z0, v);
        const double h = 1e-4;
        const VectorXc fd = (res.evaluate(z0 + h * v) - res.evaluate(z0 - h * v)) / (2 * h);
        worst = std::max(worst, (cauchy - fd).norm() / std::max(1.0, cauchy.norm()));
    }
    res.gateaux_error = worst;
    res.planes_built = engine->planes_built();
    if (worst > options.gateaux_tolerance)
        fail(ErrorCode::NotHolomorphic, "directional derivatives disagree by " + format_double(worst));
    return res;
}

VectorXc gateaux_derivative(const ExtensionResult& result, const VectorXc& z0, const VectorXc& v, double radius)
{
    const CircleSampler sampler(radius, 16);
    const auto lc = circle_coefficients(CurveMap([&](Complex s) { return result.evaluate(z0 + s * v); }), 1, 1, sampler);
    return lc.at(1);
}

ExtensionResult extend(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                       const ExtensionOptions& options)
{
    if (figure.infinite)
        return extend_q_infty(f, figure, eval_grid, options);
    if (figure.n == 1)
        return extend_bidim_q1(f, figure, eval_grid, options);
    return extend_bidim_qn(f, figure, eval_grid, options);
}

void write_extension_csv(std::ostream& os, const ExtensionResult& result)
{
    os << "degree,multi_index,component,re,im\n";
    const auto& p = *result.reference_plane;
    for (int d = 0; d <= 2 * p.order(); ++d)
        for (int j = std::max(0, d - p.order()); j <= std::min(d, p.order()); ++j) {
            const VectorXc& c = p.coefficient(j, d - j);
            for (Eigen::Index i = 0; i < c.size(); ++i)
                os << d << ',' << j << ';' << d - j << ',' << i << ',' << format_double(c[i].real()) << ','
                   << format_double(c[i].imag()) << '\n';
        }
}

} // namespace hk
