#include "hartogskit/dbar.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <string>

#include <unsupported/Eigen/FFT>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"
#include "hartogskit/parallel.hpp"

namespace hk {

namespace {

constexpr int kExactCells = 4;
constexpr int kBoundarySubsamples = 32;

/// integral over [ax, bx] x [ay, by] of dA / (zeta - z), from Green's theorem applied to
/// conj(zeta - z) / (zeta - z), whose dbar is 1 / (zeta - z).
Complex cell_integral(double ax, double bx, double ay, double by, Complex z)
{
    const Complex corners[4] = {{ax, ay}, {bx, ay}, {bx, by}, {ax, by}};
    Complex acc(0.0);
    for (int e = 0; e < 4; ++e) {
        const Complex w1 = corners[e] - z, w2 = corners[(e + 1) % 4] - z;
        const Complex dw = w2 - w1;
        const Complex alpha = std::conj(dw) / dw;
        const Complex beta = std::conj(w1) - alpha * w1;
        acc += alpha * dw;
        if (std::abs(beta) > 1e-15 * std::abs(dw) && std::abs(w1) > 0 && std::abs(w2) > 0)
            acc += beta * std::log(w2 / w1);
    }
    return acc / Complex(0.0, 2.0);
}

/// 2-D FFT of a row-major (rows, cols) array in place.
void fft2(std::vector<Complex>& a, int rows, int cols, bool inverse)
{
    Eigen::FFT<double> fft;
    std::vector<Complex> in, out;
    in.resize(cols);
    for (int r = 0; r < rows; ++r) {
        std::copy(a.begin() + static_cast<std::ptrdiff_t>(r) * cols, a.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols,
                  in.begin());
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        std::copy(out.begin(), out.end(), a.begin() + static_cast<std::ptrdiff_t>(r) * cols);
    }
    in.resize(rows);
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r)
            in[r] = a[static_cast<std::size_t>(r) * cols + c];
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (int r = 0; r < rows; ++r)
            a[static_cast<std::size_t>(r) * cols + c] = out[r];
    }
}

/// Linear convolution out(i) = sum_j kernel(i - j) in(j) on an (ny, nx) grid.
MatrixXc convolve(const MatrixXc& in, const std::function<Complex(int, int)>& kernel)
{
    const int ny = static_cast<int>(in.rows()), nx = static_cast<int>(in.cols());
    const int py = 2 * ny, px = 2 * nx;
    std::vector<Complex> k(static_cast<std::size_t>(py) * px, Complex(0.0));
    for (int dy = -(ny - 1); dy <= ny - 1; ++dy)
        for (int dx = -(nx - 1); dx <= nx - 1; ++dx)
            k[static_cast<std::size_t>((dy + py) % py) * px + (dx + px) % px] = kernel(dx, dy);
    std::vector<Complex> g(static_cast<std::size_t>(py) * px, Complex(0.0));
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            g[static_cast<std::size_t>(iy) * px + ix] = in(iy, ix);
    fft2(k, py, px, false);
    fft2(g, py, px, false);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= k[i];
    fft2(g, py, px, true);
    MatrixXc out(ny, nx);
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            out(iy, ix) = g[static_cast<std::size_t>(iy) * px + ix];
    return out;
}

/// (1/pi) integral over the cell at offset -d (in cells) of dA / (z - zeta), z at the origin.
Complex cauchy_kernel(int dx, int dy, double h)
{
    if (std::max(std::abs(dx), std::abs(dy)) <= kExactCells) {
        const double cx = -dx * h, cy = -dy * h;
        return -cell_integral(cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2, Complex(0.0)) / kPi;
    }
    return h / (kPi * Complex(dx, dy));
}

/// (1/pi) integral over the same cell of dA / |z - zeta|.
double modulus_kernel(int dx, int dy, double h)
{
    if (dx == 0 && dy == 0)
        return 4.0 * h * std::log(1.0 + std::sqrt(2.0)) / kPi;
    if (std::max(std::abs(dx), std::abs(dy)) <= kExactCells) {
        constexpr int m = 8;
        double acc = 0.0;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                acc += 1.0 / std::hypot(dx + (a + 0.5) / m - 0.5, dy + (b + 0.5) / m - 0.5);
        return acc * h / (m * m * kPi);
    }
    return h / (kPi * std::hypot(dx, dy));
}

double max_deep(const MatrixXc& m, const PlanarGrid& grid)
{
    double best = 0.0;
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            if (grid.deep(iy, ix))
                best = std::max(best, std::abs(m(iy, ix)));
    return best;
}

} // namespace

PlanarDomain PlanarDomain::disk(Complex c, double r, int resolution)
{
    PlanarDomain d;
    d.kind = DomainKind::Disk;
    d.center = c;
    d.radius = r;
    d.resolution = resolution;
    return d;
}

PlanarDomain PlanarDomain::annulus(Complex c, double inner, double outer, int resolution)
{
    PlanarDomain d;
    d.kind = DomainKind::Annulus;
    d.center = c;
    d.inner = inner;
    d.outer = outer;
    d.resolution = resolution;
    return d;
}

PlanarDomain PlanarDomain::rectangle(double x0, double x1, double y0, double y1, int resolution)
{
    PlanarDomain d;
    d.kind = DomainKind::Rectangle;
    d.x0 = x0;
    d.x1 = x1;
    d.y0 = y0;
    d.y1 = y1;
    d.resolution = resolution;
    return d;
}

double PlanarDomain::signed_distance(Complex z) const
{
    switch (kind) {
    case DomainKind::Disk:
        return radius - std::abs(z - center);
    case DomainKind::Annulus: {
        const double s = std::abs(z - center);
        return std::min(s - inner, outer - s);
    }
    case DomainKind::Rectangle: {
        const double x = z.real(), y = z.imag();
        const double ox = std::max({x0 - x, 0.0, x - x1}), oy = std::max({y0 - y, 0.0, y - y1});
        if (ox > 0 || oy > 0)
            return -std::hypot(ox, oy);
        return std::min({x - x0, x1 - x, y - y0, y1 - y});
    }
    }
    return -1.0;
}

double PlanarDomain::area() const
{
    switch (kind) {
    case DomainKind::Disk:
        return radius > 0 ? kPi * radius * radius : 0.0;
    case DomainKind::Annulus:
        return (inner >= 0 && outer > inner) ? kPi * (outer * outer - inner * inner) : 0.0;
    case DomainKind::Rectangle:
        return (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0.0;
    }
    return 0.0;
}

double PlanarDomain::smallest_feature() const
{
    switch (kind) {
    case DomainKind::Disk:
        return radius;
    case DomainKind::Annulus:
        return outer - inner;
    case DomainKind::Rectangle:
        return std::min(x1 - x0, y1 - y0);
    }
    return 0.0;
}

bool PlanarGrid::interior(int iy, int ix, int radius) const
{
    if (iy < radius || ix < radius || iy >= ny - radius || ix >= nx - radius)
        return false;
    for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b)
            if (weight(iy + a, ix + b) < 1.0)
                return false;
    return true;
}

std::shared_ptr<const PlanarGrid> make_grid(const PlanarDomain& d)
{
    const double area = d.area();
    if (!(area > 0) || !std::isfinite(area))
        fail(ErrorCode::DegenerateDomain, "planar domain has zero area");
    if (d.resolution < 1)
        fail(ErrorCode::InvalidArgument, "grid resolution must be positive");

    double bx0, bx1, by0, by1;
    if (d.kind == DomainKind::Rectangle) {
        bx0 = d.x0, bx1 = d.x1, by0 = d.y0, by1 = d.y1;
    } else {
        const double r = d.kind == DomainKind::Disk ? d.radius : d.outer;
        bx0 = d.center.real() - r, bx1 = d.center.real() + r;
        by0 = d.center.imag() - r, by1 = d.center.imag() + r;
    }
    const double h = std::max(bx1 - bx0, by1 - by0) / d.resolution;
    if (h > d.smallest_feature() / 32.0)
        fail(ErrorCode::ResolutionTooCoarse, "grid spacing " + format_double(h) + " exceeds 1/32 of the smallest feature " +
                                                 format_double(d.smallest_feature()));

    auto grid = std::make_shared<PlanarGrid>();
    grid->h = h;
    grid->nx = static_cast<int>(std::ceil((bx1 - bx0) / h - 1e-9));
    grid->ny = static_cast<int>(std::ceil((by1 - by0) / h - 1e-9));
    grid->x0 = 0.5 * (bx0 + bx1) - 0.5 * grid->nx * h;
    grid->y0 = 0.5 * (by0 + by1) - 0.5 * grid->ny * h;
    grid->weight = Eigen::ArrayXXd::Zero(grid->ny, grid->nx);
    grid->depth = Eigen::ArrayXXd::Zero(grid->ny, grid->nx);
    grid->feature = d.smallest_feature();

    const double half_diag = h * std::sqrt(0.5);
    parallel_for(static_cast<std::size_t>(grid->ny), [&](std::size_t row) {
        const int iy = static_cast<int>(row);
        for (int ix = 0; ix < grid->nx; ++ix) {
            const Complex c = grid->point(iy, ix);
            const double s = d.signed_distance(c);
            grid->depth(iy, ix) = s;
            if (s >= half_diag) {
                grid->weight(iy, ix) = 1.0;
            } else if (s > -half_diag) {
                int inside = 0;
                for (int a = 0; a < kBoundarySubsamples; ++a)
                    for (int b = 0; b < kBoundarySubsamples; ++b) {
                        const Complex p = c + h * Complex((a + 0.5) / kBoundarySubsamples - 0.5,
                                                          (b + 0.5) / kBoundarySubsamples - 0.5);
                        inside += d.contains(p) ? 1 : 0;
                    }
                grid->weight(iy, ix) = static_cast<double>(inside) / (kBoundarySubsamples * kBoundarySubsamples);
            }
        }
    });
    return grid;
}

GridFunction GridFunction::sample(std::shared_ptr<const PlanarGrid> grid, const std::function<Complex(Complex)>& g)
{
    GridFunction out;
    out.values = MatrixXc::Zero(grid->ny, grid->nx);
    for (int iy = 0; iy < grid->ny; ++iy)
        for (int ix = 0; ix < grid->nx; ++ix)
            if (grid->weight(iy, ix) > 0)
                out.values(iy, ix) = g(grid->point(iy, ix));
    out.grid = std::move(grid);
    return out;
}

double GridFunction::sup() const
{
    double best = 0.0;
    for (int iy = 0; iy < grid->ny; ++iy)
        for (int ix = 0; ix < grid->nx; ++ix)
            if (grid->weight(iy, ix) > 0)
                best = std::max(best, std::abs(values(iy, ix)));
    return best;
}

MatrixXc dbar_grid(const GridFunction& u)
{
    const PlanarGrid& grid = *u.grid;
    MatrixXc out = MatrixXc::Zero(grid.ny, grid.nx);
    const double h = grid.h;
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (!grid.interior(iy, ix, 1))
                continue;
            const Complex fx = (u.values(iy, ix + 1) - u.values(iy, ix - 1)) / (2 * h);
            const Complex fy = (u.values(iy + 1, ix) - u.values(iy - 1, ix)) / (2 * h);
            out(iy, ix) = 0.5 * (fx + Complex(0, 1) * fy);
        }
    return out;
}

CauchyResult cauchy_transform(const GridFunction& g, const CauchyOptions& options)
{
    const PlanarGrid& grid = *g.grid;
    const double h = grid.h;
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            if (grid.weight(iy, ix) > 0 &&
                (!std::isfinite(g.values(iy, ix).real()) || !std::isfinite(g.values(iy, ix).imag())))
                fail(ErrorCode::NonFinite, "non-finite value in the cauchy transform input");

    MatrixXc weighted(grid.ny, grid.nx);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            weighted(iy, ix) = g.values(iy, ix) * grid.weight(iy, ix);

    CauchyResult res;
    res.u.grid = g.grid;
    res.u.values = convolve(weighted, [h](int dx, int dy) { return cauchy_kernel(dx, dy, h); });

    if (options.self_cell_correction) {
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                if (!grid.interior(iy, ix, 1))
                    continue;
                const Complex gx = (g.values(iy, ix + 1) - g.values(iy, ix - 1)) / (2 * h);
                const Complex gy = (g.values(iy + 1, ix) - g.values(iy - 1, ix)) / (2 * h);
                const Complex dg = 0.5 * (gx - Complex(0, 1) * gy);
                res.u.values(iy, ix) -= h * h * dg / kPi;
            }
    }
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            if (grid.weight(iy, ix) <= 0)
                res.u.values(iy, ix) = 0.0;

    const MatrixXc dbar = dbar_grid(res.u);
    double second = 0.0;
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            if (!grid.deep(iy, ix))
                continue;
            res.dbar_residual = std::max(res.dbar_residual, std::abs(dbar(iy, ix) - g.values(iy, ix)));
            const auto& v = g.values;
            const double gxx = std::abs(v(iy, ix + 1) - 2.0 * v(iy, ix) + v(iy, ix - 1));
            const double gyy = std::abs(v(iy + 1, ix) - 2.0 * v(iy, ix) + v(iy - 1, ix));
            const double gxy = std::abs(v(iy + 1, ix + 1) - v(iy + 1, ix - 1) - v(iy - 1, ix + 1) + v(iy - 1, ix - 1)) / 4;
            second = std::max(second, (gxx + gyy + 2 * gxy) / (h * h));
        }
    res.expected_bound = h * h * (max_deep(g.values, grid) + second);
    if (options.check_residual && res.dbar_residual > options.residual_factor * res.expected_bound &&
        res.dbar_residual > 1e-13 * std::max(1.0, g.sup()))
        fail(ErrorCode::ResolutionTooCoarse, "dbar residual " + format_double(res.dbar_residual) +
                                                 " exceeds the grid-order bound " + format_double(res.expected_bound));
    return res;
}

Complex cauchy_transform_at(const GridFunction& g, Complex z)
{
    const PlanarGrid& grid = *g.grid;
    const double h = grid.h;
    Complex acc(0.0);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double w = grid.weight(iy, ix);
            if (w <= 0 || g.values(iy, ix) == Complex(0.0))
                continue;
            const Complex zeta = grid.point(iy, ix);
            const Complex d = z - zeta;
            Complex k;
            if (std::max(std::abs(d.real()), std::abs(d.imag())) <= (kExactCells + 0.5) * h)
                k = -cell_integral(zeta.real() - h / 2, zeta.real() + h / 2, zeta.imag() - h / 2, zeta.imag() + h / 2, z);
            else
                k = h * h / d;
            acc += w * g.values(iy, ix) * k;
        }
    return acc / kPi;
}

void write_grid_csv(std::ostream& os, const GridFunction& g)
{
    os << "degree,multi_index,component,re,im\n";
    for (int iy = 0; iy < g.grid->ny; ++iy)
        for (int ix = 0; ix < g.grid->nx; ++ix) {
            if (g.grid->weight(iy, ix) <= 0)
                continue;
            const Complex v = g.values(iy, ix);
            os << ix + iy << ',' << ix << ';' << iy << ",0," << format_double(v.real()) << ','
               << format_double(v.imag()) << '\n';
        }
}

double sup_constant(const PlanarDomain& d)
{
    const auto grid = make_grid(d);
    const double h = grid->h;
    MatrixXc w(grid->ny, grid->nx);
    for (int iy = 0; iy < grid->ny; ++iy)
        for (int ix = 0; ix < grid->nx; ++ix)
            w(iy, ix) = grid->weight(iy, ix);
    const MatrixXc pot = convolve(w, [h](int dx, int dy) { return Complex(modulus_kernel(dx, dy, h)); });
    double best = 0.0;
    for (int iy = 0; iy < grid->ny; ++iy)
        for (int ix = 0; ix < grid->nx; ++ix)
            if (grid->weight(iy, ix) > 0)
                best = std::max(best, pot(iy, ix).real());
    return best;
}

// Covers and partitions of unity.

CoverSet CoverSet::disk(Complex c, double r)
{
    CoverSet s;
    s.kind = DomainKind::Disk;
    s.center = c;
    s.radius = r;
    return s;
}

CoverSet CoverSet::annulus(Complex c, double inner, double outer)
{
    CoverSet s;
    s.kind = DomainKind::Annulus;
    s.center = c;
    s.inner = inner;
    s.outer = outer;
    return s;
}

double CoverSet::t(Complex z) const
{
    const double s = std::abs(z - center);
    if (kind == DomainKind::Disk)
        return s / radius;
    return std::abs(s - 0.5 * (inner + outer)) / (0.5 * (outer - inner));
}

bool CoverSet::contains(Complex z) const { return t(z) < 1.0; }

double CoverSet::bump(Complex z) const
{
    const double tt = t(z);
    if (tt >= 1.0)
        return 0.0;
    const double a = 1.0 - tt * tt;
    return a * a * a;
}

Complex CoverSet::bump_dbar(Complex z) const
{
    const double tt = t(z);
    if (tt >= 1.0)
        return 0.0;
    const double a = 1.0 - tt * tt;
    const Complex w = z - center;
    if (kind == DomainKind::Disk)
        return -3.0 * a * a * w / (radius * radius);
    const double s = std::abs(w);
    const double m = 0.5 * (inner + outer), hw = 0.5 * (outer - inner);
    return -3.0 * a * a * (s - m) * w / (s * hw * hw);
}

double CoverSet::reach() const { return std::abs(center) + (kind == DomainKind::Disk ? radius : outer); }

Cover Cover::standard_two_chart()
{
    Cover c;
    c.sets = {CoverSet::disk(0.0, 1.1), CoverSet::annulus(0.0, 0.7, 1.3)};
    return c;
}

Cover Cover::standard_three_chart()
{
    Cover c = standard_two_chart();
    c.sets.push_back(CoverSet::disk(0.9, 0.3));
    return c;
}

void Cover::validate() const
{
    if (sets.empty())
        fail(ErrorCode::InvalidArgument, "cover has no sets");
    double reach = 0.0;
    for (const auto& s : sets) {
        const bool ok = s.kind == DomainKind::Disk ? s.radius > 0 : (s.inner >= 0 && s.outer > s.inner);
        if (!ok || s.kind == DomainKind::Rectangle)
            fail(ErrorCode::InvalidArgument, "cover sets must be disks or annuli with positive size");
        reach = std::max(reach, s.reach());
    }
    constexpr int n = 240;
    const double h = 2.0 * reach / n;
    const int k = size();
    std::vector<std::vector<char>> member(k, std::vector<char>(static_cast<std::size_t>(n) * n, 0));
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const Complex z(-reach + (ix + 0.5) * h, -reach + (iy + 0.5) * h);
            int count = 0;
            for (int a = 0; a < k; ++a)
                if (sets[a].contains(z)) {
                    member[a][static_cast<std::size_t>(iy) * n + ix] = 1;
                    ++count;
                }
            if (count > 3)
                fail(ErrorCode::InvalidArgument, "cover multiplicity exceeds 3");
            if (count == 0 && std::abs(z) <= base_radius + margin)
                fail(ErrorCode::InvalidArgument, "cover misses the closed disk of radius " +
                                                     format_double(base_radius + margin));
        }
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            std::vector<char> both(static_cast<std::size_t>(n) * n);
            for (std::size_t i = 0; i < both.size(); ++i)
                both[i] = member[a][i] && member[b][i];
            int components = 0;
            for (std::size_t start = 0; start < both.size(); ++start) {
                if (!both[start])
                    continue;
                if (++components > 1)
                    fail(ErrorCode::InvalidArgument, "cover sets " + std::to_string(a) + " and " + std::to_string(b) +
                                                         " have a disconnected intersection");
                std::deque<std::size_t> queue{start};
                both[start] = 0;
                while (!queue.empty()) {
                    const std::size_t i = queue.front();
                    queue.pop_front();
                    const int iy = static_cast<int>(i / n), ix = static_cast<int>(i % n);
                    const int nb[4][2] = {{iy + 1, ix}, {iy - 1, ix}, {iy, ix + 1}, {iy, ix - 1}};
                    for (const auto& p : nb) {
                        if (p[0] < 0 || p[1] < 0 || p[0] >= n || p[1] >= n)
                            continue;
                        const std::size_t j = static_cast<std::size_t>(p[0]) * n + p[1];
                        if (both[j]) {
                            both[j] = 0;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
}

double PartitionOfUnity::sum(Complex z) const
{
    double s = 0.0;
    for (const auto& set : cover_.sets)
        s += set.bump(z);
    return s;
}

double PartitionOfUnity::rho(int alpha, Complex z) const
{
    const double s = sum(z);
    return s > 0 ? cover_.sets.at(alpha).bump(z) / s : 0.0;
}

Complex PartitionOfUnity::rho_dbar(int alpha, Complex z) const
{
    const double s = sum(z);
    if (!(s > 0))
        return 0.0;
    Complex ds(0.0);
    for (const auto& set : cover_.sets)
        ds += set.bump_dbar(z);
    const CoverSet& a = cover_.sets.at(alpha);
    return (a.bump_dbar(z) * s - a.bump(z) * ds) / (s * s);
}

void AdditiveCocycle::set(int alpha, int beta, ChartFunction f)
{
    if (alpha == beta || alpha < 0 || beta < 0 || alpha >= charts || beta >= charts)
        fail(ErrorCode::InvalidArgument, "cocycle pieces need two distinct chart indices");
    if (alpha < beta) {
        pieces[{alpha, beta}] = std::move(f);
    } else {
        pieces[{beta, alpha}] = [g = std::move(f)](Complex z) -> VectorXc { return -g(z); };
    }
}

VectorXc AdditiveCocycle::operator()(int alpha, int beta, Complex z) const
{
    if (alpha == beta)
        return VectorXc::Zero(dim);
    const bool flip = alpha > beta;
    auto it = pieces.find(flip ? std::make_pair(beta, alpha) : std::make_pair(alpha, beta));
    if (it == pieces.end())
        return VectorXc::Zero(dim);
    const VectorXc v = it->second(z);
    if (v.size() != dim)
        fail(ErrorCode::InvalidArgument, "cocycle piece returned the wrong length");
    return flip ? VectorXc(-v) : v;
}

namespace {

/// Cauchy transform of the dbar-closed form off the grid, from its nonzero cells.
struct SparseTransform {
    double h = 0;
    std::vector<Complex> points;
    std::vector<VectorXc> values; // already multiplied by the cell weight

    VectorXc operator()(Complex z, int dim) const
    {
        VectorXc acc = VectorXc::Zero(dim);
        for (std::size_t j = 0; j < points.size(); ++j) {
            const Complex zeta = points[j];
            const Complex d = z - zeta;
            Complex k;
            if (std::max(std::abs(d.real()), std::abs(d.imag())) <= (kExactCells + 0.5) * h)
                k = -cell_integral(zeta.real() - h / 2, zeta.real() + h / 2, zeta.imag() - h / 2, zeta.imag() + h / 2, z);
            else
                k = h * h / d;
            acc += values[j] * k;
        }
        return acc / kPi;
    }
};

} // namespace

CousinSolution solve_cousin(const Cover& cover, const AdditiveCocycle& cocycle, const CousinOptions& options)
{
    cover.validate();
    if (cocycle.charts != cover.size())
        fail(ErrorCode::InvalidArgument, "cocycle chart count does not match the cover");
    const int k = cover.size();
    const int dim = cocycle.dim;
    const PartitionOfUnity pu(cover);

    double reach = 0.0;
    for (const auto& s : cover.sets)
        reach = std::max(reach, s.reach());
    const auto grid = make_grid(PlanarDomain::disk(0.0, reach, options.resolution));
    const int ny = grid->ny, nx = grid->nx;
    const std::size_t cells = static_cast<std::size_t>(ny) * nx;

    CousinSolution sol;
    sol.cover = cover;

    // Cocycle data, smooth split and the global form on every cell.
    std::vector<std::vector<char>> in(k, std::vector<char>(cells, 0));
    std::vector<std::vector<VectorXc>> tilde(k, std::vector<VectorXc>(cells));
    std::vector<VectorXc> form(cells, VectorXc::Zero(dim));
    std::vector<double> sup_f(cells, 0.0), cocycle_err(cells, 0.0), drho(cells, 0.0);
    parallel_for(cells, [&](std::size_t i) {
        const int iy = static_cast<int>(i / nx), ix = static_cast<int>(i % nx);
        if (grid->weight(iy, ix) <= 0)
            return;
        const Complex z = grid->point(iy, ix);
        std::vector<int> charts;
        for (int a = 0; a < k; ++a)
            if (cover.sets[a].contains(z)) {
                in[a][i] = 1;
                charts.push_back(a);
            }
        if (charts.empty())
            return;
        std::vector<std::vector<VectorXc>> f(k, std::vector<VectorXc>(k));
        for (int a : charts)
            for (int b : charts) {
                f[a][b] = cocycle(a, b, z);
                if (!all_finite(f[a][b]))
                    fail(ErrorCode::NonFinite, "non-finite cocycle value");
                sup_f[i] = std::max(sup_f[i], max_norm(f[a][b]));
            }
        for (std::size_t x = 0; x < charts.size(); ++x)
            for (std::size_t y = x + 1; y < charts.size(); ++y)
                for (std::size_t w = y + 1; w < charts.size(); ++w) {
                    const int a = charts[x], b = charts[y], c = charts[w];
                    cocycle_err[i] = std::max(cocycle_err[i], max_norm(f[a][b] + f[b][c] + f[c][a]));
                }
        for (int b : charts)
            drho[i] += std::abs(pu.rho_dbar(b, z));
        for (int a : charts) {
            VectorXc acc = VectorXc::Zero(dim);
            for (int b : charts)
                acc += pu.rho(b, z) * f[a][b];
            tilde[a][i] = acc;
        }
        const int a0 = charts.front();
        for (int b : charts)
            form[i] += pu.rho_dbar(b, z) * f[a0][b];
    });
    for (std::size_t i = 0; i < cells; ++i) {
        sol.input_sup = std::max(sol.input_sup, sup_f[i]);
        sol.cocycle_residual = std::max(sol.cocycle_residual, cocycle_err[i]);
        sol.dbar_rho_sup = std::max(sol.dbar_rho_sup, drho[i]);
    }
    const double scale = std::max(sol.input_sup, 1e-300);
    if (sol.cocycle_residual > options.cocycle_tolerance * std::max(1.0, sol.input_sup))
        fail(ErrorCode::CocycleViolation, "cocycle relation fails by " + format_double(sol.cocycle_residual) +
                                              " on a triple overlap");

    // u = T[form], componentwise.
    std::vector<MatrixXc> u(dim);
    SparseTransform sparse;
    sparse.h = grid->h;
    for (int c = 0; c < dim; ++c) {
        GridFunction g;
        g.grid = grid;
        g.values = MatrixXc::Zero(ny, nx);
        for (std::size_t i = 0; i < cells; ++i)
            g.values(static_cast<int>(i / nx), static_cast<int>(i % nx)) = form[i][c];
        const CauchyResult r = cauchy_transform(g);
        sol.dbar_residual = std::max(sol.dbar_residual, r.dbar_residual);
        u[c] = r.u.values;
    }
    for (std::size_t i = 0; i < cells; ++i) {
        const int iy = static_cast<int>(i / nx), ix = static_cast<int>(i % nx);
        if (form[i].cwiseAbs().maxCoeff() > 0 && grid->weight(iy, ix) > 0) {
            sparse.points.push_back(grid->point(iy, ix));
            sparse.values.push_back(form[i] * grid->weight(iy, ix));
        }
    }

    auto grid_c = [&](int a, std::size_t i) {
        VectorXc v = tilde[a][i];
        for (int c = 0; c < dim; ++c)
            v[c] -= u[c](static_cast<int>(i / nx), static_cast<int>(i % nx));
        return v;
    };

    // Holomorphy of c_a on U_a, size on the closed base disk, and delta c on grid overlaps.
    const double h = grid->h;
    double sup_c = 0.0;
    for (int a = 0; a < k; ++a) {
        for (int iy = 1; iy + 1 < ny; ++iy)
            for (int ix = 1; ix + 1 < nx; ++ix) {
                const std::size_t i = static_cast<std::size_t>(iy) * nx + ix;
                if (!in[a][i])
                    continue;
                if (std::abs(grid->point(iy, ix)) <= cover.base_radius)
                    sup_c = std::max(sup_c, max_norm(grid_c(a, i)));
                for (int b = a + 1; b < k; ++b)
                    if (in[b][i])
                        sol.delta_residual = std::max(
                            sol.delta_residual, max_norm(grid_c(a, i) - grid_c(b, i) - cocycle(a, b, grid->point(iy, ix))));
                if (!grid->interior(iy, ix, 1) || !in[a][i - 1] || !in[a][i + 1] || !in[a][i - nx] || !in[a][i + nx])
                    continue;
                const VectorXc fx = (grid_c(a, i + 1) - grid_c(a, i - 1)) / (2 * h);
                const VectorXc fy = (grid_c(a, i + nx) - grid_c(a, i - nx)) / (2 * h);
                sol.cr_residual = std::max(sol.cr_residual, max_norm(VectorXc(0.5 * (fx + Complex(0, 1) * fy))));
            }
    }
    sol.cr_residual /= scale;
    sol.measured_ratio = sup_c / scale;
    sol.gamma = sup_constant(PlanarDomain::disk(0.0, reach, options.resolution));
    sol.constant = 1.0 + sol.gamma * sol.dbar_rho_sup;
    if (sol.cr_residual > options.cr_tolerance)
        fail(ErrorCode::ResolutionTooCoarse, "cochain CR residual " + format_double(sol.cr_residual) +
                                                 " exceeds tolerance; raise the grid resolution");

    auto shared = std::make_shared<const SparseTransform>(std::move(sparse));
    for (int a = 0; a < k; ++a) {
        sol.c.push_back([shared, pu, cocycle, cover, a, dim](Complex z) -> VectorXc {
            VectorXc v = -(*shared)(z, dim);
            for (int b = 0; b < cover.size(); ++b)
                if (cover.sets[b].contains(z))
                    v += pu.rho(b, z) * cocycle(a, b, z);
            return v;
        });
    }
    return sol;
}

} // namespace hk
