#include "hartogskit/quadrature.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include "hartogskit/error.hpp"
#include "hartogskit/parallel.hpp"

namespace hk {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int wrap(int k, int n) { return ((k % n) + n) % n; }

/// Forward DFT along the rows of `samples`: out(c, k) = sum_j samples(c, j) e^{-2 pi i jk/N}.
MatrixXc dft_rows(const MatrixXc& samples)
{
    Eigen::FFT<double> fft;
    MatrixXc out(samples.rows(), samples.cols());
    std::vector<Complex> in(samples.cols()), res;
    for (Eigen::Index c = 0; c < samples.rows(); ++c) {
        for (Eigen::Index j = 0; j < samples.cols(); ++j)
            in[j] = samples(c, j);
        fft.fwd(res, in);
        for (Eigen::Index j = 0; j < samples.cols(); ++j)
            out(c, j) = res[j];
    }
    return out;
}

} // namespace

CircleSampler::CircleSampler(double radius, int node_count) : radius_(radius), node_count_(node_count)
{
    if (!(radius > 0) || !std::isfinite(radius))
        fail(ErrorCode::InvalidArgument, "circle radius must be positive and finite");
    if (node_count < 16 || !is_power_of_two(node_count))
        fail(ErrorCode::InvalidArgument, "node count must be a power of two >= 16, got " + std::to_string(node_count));
}

Complex CircleSampler::node(int j) const { return std::polar(radius_, 2 * kPi * j / node_count_); }

std::vector<Complex> CircleSampler::nodes() const
{
    std::vector<Complex> out(node_count_);
    for (int j = 0; j < node_count_; ++j)
        out[j] = node(j);
    return out;
}

MatrixXc CircleSampler::sample(const CurveMap& f) const
{
    MatrixXc out;
    for (int j = 0; j < node_count_; ++j) {
        const VectorXc v = f(node(j));
        if (j == 0)
            out.resize(v.size(), node_count_);
        else if (v.size() != out.rows())
            fail(ErrorCode::InvalidArgument, "sampled function changed its output length");
        if (!all_finite(v))
            fail(ErrorCode::NonFiniteSample, "non-finite value at circle node " + std::to_string(j));
        out.col(j) = v;
    }
    return out;
}

LaurentCoefficients coefficients_from_samples(const MatrixXc& samples, int k_lo, int k_hi, double radius)
{
    const int n = static_cast<int>(samples.cols());
    if (k_hi < k_lo)
        fail(ErrorCode::InvalidArgument, "empty coefficient band");
    if (k_hi - k_lo + 1 > n)
        fail(ErrorCode::InvalidArgument, "coefficient band wider than the node count");
    for (Eigen::Index c = 0; c < samples.rows(); ++c)
        if (!all_finite(samples.row(c).transpose()))
            fail(ErrorCode::NonFiniteSample, "non-finite circle sample");
    const MatrixXc out = dft_rows(samples);

    LaurentCoefficients lc;
    lc.k_min = k_lo;
    lc.inner_radius = radius;
    lc.outer_radius = radius;
    for (int k = k_lo; k <= k_hi; ++k)
        lc.coeffs.push_back(out.col(wrap(k, n)) / (n * std::pow(radius, k)));
    // The remaining residues of the aliasing window, measured on the circle.
    double dropped = 0.0;
    for (int k = -n / 2; k < n / 2; ++k) {
        bool in_band = false;
        for (int b = k_lo; b <= k_hi && !in_band; ++b)
            in_band = wrap(b, n) == wrap(k, n);
        if (!in_band)
            dropped = std::max(dropped, out.col(wrap(k, n)).norm() / n);
    }
    lc.discarded_bound = dropped;
    return lc;
}

LaurentCoefficients circle_coefficients(const CurveMap& f, int k_lo, int k_hi, const CircleSampler& sampler)
{
    return coefficients_from_samples(sampler.sample(f), k_lo, k_hi, sampler.radius());
}

LaurentCoefficients circle_coefficients(const std::function<Complex(Complex)>& f, int k_lo, int k_hi,
                                        const CircleSampler& sampler)
{
    return circle_coefficients(CurveMap([&f](Complex z) {
                                   VectorXc v(1);
                                   v[0] = f(z);
                                   return v;
                               }),
                               k_lo, k_hi, sampler);
}

std::size_t PolytorusCoefficients::flat(const std::vector<int>& k) const
{
    std::size_t idx = 0;
    for (int j = 0; j < vars(); ++j)
        idx = idx * static_cast<std::size_t>(hi[j] - lo[j] + 1) + static_cast<std::size_t>(k[j] - lo[j]);
    return idx;
}

bool PolytorusCoefficients::contains(const std::vector<int>& k) const
{
    if (static_cast<int>(k.size()) != vars())
        return false;
    for (int j = 0; j < vars(); ++j)
        if (k[j] < lo[j] || k[j] > hi[j])
            return false;
    return true;
}

std::vector<std::vector<int>> PolytorusCoefficients::indices() const
{
    std::vector<std::vector<int>> out;
    std::vector<int> k = lo;
    if (vars() == 0)
        return out;
    while (true) {
        out.push_back(k);
        int j = vars() - 1;
        while (j >= 0 && k[j] == hi[j]) {
            k[j] = lo[j];
            --j;
        }
        if (j < 0)
            return out;
        ++k[j];
    }
}

VectorXc PolytorusCoefficients::evaluate(const VectorXc& zeta) const
{
    VectorXc out = VectorXc::Zero(coeffs.empty() ? 0 : coeffs.front().size());
    const int q = vars();
    if (q == 0 || coeffs.empty())
        return out;
    std::vector<std::vector<Complex>> powers(q);
    for (int j = 0; j < q; ++j)
        for (int k = lo[j]; k <= hi[j]; ++k)
            powers[j].push_back(std::pow(zeta[j], k));
    // Odometer over the box with running prefix products, last variable fastest.
    std::vector<int> k(q, 0);
    std::vector<Complex> prefix(q + 1, Complex(1.0));
    for (int j = 0; j < q; ++j)
        prefix[j + 1] = prefix[j] * powers[j][0];
    for (std::size_t idx = 0; idx < coeffs.size(); ++idx) {
        out += coeffs[idx] * prefix[q];
        int j = q - 1;
        while (j >= 0 && k[j] + 1 == static_cast<int>(powers[j].size())) {
            k[j] = 0;
            --j;
        }
        if (j < 0)
            break;
        ++k[j];
        for (int i = j; i < q; ++i)
            prefix[i + 1] = prefix[i] * powers[i][k[i]];
    }
    return out;
}

PolytorusCoefficients polytorus_coefficients(const HoloMap& f, const std::vector<double>& radii,
                                             const std::vector<int>& lo, const std::vector<int>& hi, int node_count)
{
    const int q = static_cast<int>(radii.size());
    if (q < 1 || lo.size() != radii.size() || hi.size() != radii.size())
        fail(ErrorCode::InvalidArgument, "polytorus box must match the number of radii");
    for (int j = 0; j < q; ++j) {
        CircleSampler check(radii[j], node_count);
        if (hi[j] < lo[j] || hi[j] - lo[j] + 1 > node_count)
            fail(ErrorCode::InvalidArgument, "polytorus band must be nonempty and fit the node count");
    }
    const int n = node_count;
    std::size_t total = 1;
    for (int j = 0; j < q; ++j)
        total *= static_cast<std::size_t>(n);

    // Sample the torus; grid index is row-major with the last variable fastest.
    std::vector<VectorXc> grid(total);
    parallel_for(total, [&](std::size_t flat) {
        VectorXc z(q);
        std::size_t rem = flat;
        for (int j = q - 1; j >= 0; --j) {
            const int idx = static_cast<int>(rem % n);
            rem /= n;
            z[j] = std::polar(radii[j], 2 * kPi * idx / n);
        }
        grid[flat] = f(z);
    });
    const Eigen::Index comps = grid[0].size();
    double sample_max = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
        if (grid[flat].size() != comps)
            fail(ErrorCode::InvalidArgument, "sampled function changed its output length");
        if (!all_finite(grid[flat]))
            fail(ErrorCode::NonFiniteSample, "non-finite value on the polytorus");
        sample_max = std::max(sample_max, grid[flat].norm());
    }

    // One FFT pass per axis, per component.
    Eigen::FFT<double> fft;
    std::vector<Complex> line(n), res;
    std::size_t stride = 1;
    for (int axis = q - 1; axis >= 0; --axis) {
        for (std::size_t base = 0; base < total; ++base) {
            if ((base / stride) % n != 0)
                continue;
            for (Eigen::Index c = 0; c < comps; ++c) {
                for (int j = 0; j < n; ++j)
                    line[j] = grid[base + j * stride][c];
                fft.fwd(res, line);
                for (int j = 0; j < n; ++j)
                    grid[base + j * stride][c] = res[j];
            }
        }
        stride *= n;
    }

    PolytorusCoefficients out;
    out.lo = lo;
    out.hi = hi;
    out.radii = radii;
    out.sample_max = sample_max;
    const double norm = static_cast<double>(total);
    auto grid_index = [&](const std::vector<int>& k) {
        std::size_t idx = 0;
        for (int j = 0; j < q; ++j)
            idx = idx * n + static_cast<std::size_t>(wrap(k[j], n));
        return idx;
    };
    std::vector<unsigned char> used(total, 0);
    for (const auto& k : out.indices()) {
        double scale = norm;
        for (int j = 0; j < q; ++j)
            scale *= std::pow(radii[j], k[j]);
        const std::size_t g = grid_index(k);
        used[g] = 1;
        out.coeffs.push_back(grid[g] / scale);
    }
    double dropped = 0.0;
    for (std::size_t g = 0; g < total; ++g)
        if (!used[g])
            dropped = std::max(dropped, grid[g].norm() / norm);
    out.discarded_bound = dropped;
    return out;
}

double cr_residual(const MatrixXc& samples, double hx, double hy)
{
    if (samples.rows() < 4 || samples.cols() < 4)
        fail(ErrorCode::GridTooSmall, "CR residual needs at least a 4x4 grid");
    if (!(hx > 0) || !(hy > 0))
        fail(ErrorCode::InvalidArgument, "grid spacings must be positive");
    double worst = 0.0;
    for (Eigen::Index iy = 1; iy + 1 < samples.rows(); ++iy)
        for (Eigen::Index ix = 1; ix + 1 < samples.cols(); ++ix) {
            const Complex fx = (samples(iy, ix + 1) - samples(iy, ix - 1)) / (2 * hx);
            const Complex fy = (samples(iy + 1, ix) - samples(iy - 1, ix)) / (2 * hy);
            const Complex dbar = 0.5 * (fx + Complex(0, 1) * fy);
            if (!std::isfinite(dbar.real()) || !std::isfinite(dbar.imag()))
                fail(ErrorCode::NonFiniteSample, "non-finite value in CR grid");
            worst = std::max(worst, std::abs(dbar));
        }
    return worst;
}

} // namespace hk
