#include "hartogskit/royden.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"

namespace hk {

namespace {

using Eigen::ArrayXcd;

Eigen::VectorXcd fft_forward(const ArrayXcd& s)
{
    Eigen::FFT<double> fft;
    Eigen::VectorXcd in = s.matrix(), out;
    fft.fwd(out, in);
    return out;
}

ArrayXcd fft_inverse(const Eigen::VectorXcd& f)
{
    Eigen::FFT<double> fft;
    Eigen::VectorXcd out;
    Eigen::VectorXcd in = f;
    fft.inv(out, in);
    return out.array();
}

int unit_index(const MonomialBasis& basis, int var)
{
    Exponent e(basis.vars(), 0);
    e[var] = 1;
    return basis.index(e);
}

std::shared_ptr<const SampledCircle> default_circle(std::shared_ptr<const SampledCircle> c)
{
    return c ? c : std::make_shared<const SampledCircle>();
}

double max_abs(const ArrayXcd& a) { return a.size() == 0 ? 0.0 : a.abs().maxCoeff(); }

} // namespace

// SampledCircle

SampledCircle::SampledCircle(double radius, int nodes) : radius_(radius), nodes_(nodes)
{
    if (!(radius > 0) || nodes < 8 || nodes % 2 != 0)
        fail(ErrorCode::InvalidArgument, "sampled circle needs a positive radius and an even node count >= 8");
}

Complex SampledCircle::node(int j) const { return std::polar(radius_, 2 * kPi * j / nodes_); }

ArrayXcd SampledCircle::sample(const std::function<Complex(Complex)>& f) const
{
    ArrayXcd s(nodes_);
    for (int j = 0; j < nodes_; ++j)
        s[j] = f(node(j));
    return s;
}

ArrayXcd SampledCircle::laurent(const ArrayXcd& s) const
{
    const Eigen::VectorXcd f = fft_forward(s);
    const double cut = 1e-15 * f.cwiseAbs().maxCoeff();
    ArrayXcd c = ArrayXcd::Zero(nodes_);
    const int half = nodes_ / 2;
    for (int k = -half; k < half; ++k) {
        const Complex v = f[(k + nodes_) % nodes_];
        if (std::abs(v) > cut)
            c[k + half] = v / (double(nodes_) * std::pow(radius_, k));
    }
    return c;
}

ArrayXcd SampledCircle::from_laurent(const ArrayXcd& c) const
{
    const int half = nodes_ / 2;
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(nodes_);
    for (int k = -half; k < half; ++k)
        f[(k + nodes_) % nodes_] = c[k + half] * double(nodes_) * std::pow(radius_, k);
    return fft_inverse(f);
}

ArrayXcd SampledCircle::derivative(const ArrayXcd& s) const
{
    const ArrayXcd c = laurent(s);
    const int half = nodes_ / 2;
    ArrayXcd d = ArrayXcd::Zero(nodes_);
    for (int j = -half; j < half - 1; ++j)
        d[j + half] = double(j + 1) * c[j + 1 + half];
    return from_laurent(d);
}

std::pair<ArrayXcd, ArrayXcd> SampledCircle::split(const ArrayXcd& s) const
{
    const ArrayXcd c = laurent(s);
    const int half = nodes_ / 2;
    ArrayXcd plus = c, minus = c;
    plus.head(half).setZero();
    minus.tail(half).setZero();
    return {from_laurent(plus), from_laurent(minus)};
}

Complex SampledCircle::evaluate(const ArrayXcd& s, Complex z) const
{
    const ArrayXcd c = laurent(s);
    const int half = nodes_ / 2;
    Complex acc = 0;
    Complex p = 1;
    for (int k = 0; k < half; ++k, p *= z)
        acc += c[k + half] * p;
    if (z != Complex(0)) {
        const Complex iz = 1.0 / z;
        p = iz;
        for (int k = -1; k >= -half; --k, p *= iz)
            if (c[k + half] != Complex(0))
                acc += c[k + half] * p;
    }
    return acc;
}

ArrayXcd SampledCircle::resample(const ArrayXcd& s, double r) const
{
    const ArrayXcd c = laurent(s);
    const int half = nodes_ / 2;
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(nodes_);
    for (int k = -half; k < half; ++k)
        f[(k + nodes_) % nodes_] = c[k + half] * double(nodes_) * std::pow(r, k);
    return fft_inverse(f);
}

// FiberedMap

FiberedMap FiberedMap::identity(std::shared_ptr<const SampledCircle> circle, int fiber_dim, int degree)
{
    circle = default_circle(std::move(circle));
    FiberedMap m;
    m.circle = circle;
    auto basis = monomial_basis(fiber_dim, degree);
    const ArrayXcd zero = circle->constant(0);
    m.parts.assign(fiber_dim + 1, CoefficientSeries(basis, zero));
    if (degree >= 1)
        for (int i = 0; i < fiber_dim; ++i)
            m.parts[1 + i].set(unit_index(*basis, i), circle->constant(1));
    return m;
}

FiberedMap FiberedMap::compose(const FiberedMap& inner) const
{
    if (inner.fiber_dim() != fiber_dim() || inner.degree() != degree())
        fail(ErrorCode::InvalidArgument, "fibered maps of different shapes cannot be composed");
    const int m_dim = fiber_dim();
    const int n = degree();
    const auto& basis_ptr = parts.front().basis_ptr();
    const MonomialBasis& b = *basis_ptr;
    const ArrayXcd zero = circle->constant(0);

    CoefficientSeries one(basis_ptr, zero);
    one.set(0, circle->constant(1));

    // Monomials in the inner fiber outputs.
    std::vector<CoefficientSeries> pw(b.size(), CoefficientSeries(basis_ptr, zero));
    pw[0] = one;
    for (int i = 1; i < b.size(); ++i)
        pw[i] = pw[b.parent(i)] * inner.parts[1 + b.parent_var(i)];

    // Powers of the base displacement; coefficient functions are shifted by Taylor in z.
    const CoefficientSeries& alpha = inner.parts[0];
    const int val = alpha.valuation();
    const int mmax = val > n ? 0 : n / val;
    std::vector<CoefficientSeries> am(mmax + 1, one);
    for (int m = 1; m <= mmax; ++m)
        am[m] = am[m - 1] * alpha;

    FiberedMap out;
    out.circle = circle;
    out.parts.assign(m_dim + 1, CoefficientSeries(basis_ptr, zero));
    for (int p = 0; p <= m_dim; ++p) {
        // T_m = sum_e (d/dz)^m c_e beta^e, then sum_m alpha^m T_m / m!.
        std::vector<CoefficientSeries> t(mmax + 1, CoefficientSeries(basis_ptr, zero));
        for (int i = 0; i < b.size(); ++i) {
            if (!parts[p].is_nonzero(i))
                continue;
            ArrayXcd d = parts[p][i];
            const int room = n - b.degree(i);
            for (int m = 0; m <= std::min(mmax, room); ++m) {
                if (m > 0)
                    d = circle->derivative(d);
                if (max_abs(d) == 0.0)
                    break;
                t[m] += pw[i].scaled(d);
            }
        }
        CoefficientSeries acc = t[0];
        double fact = 1;
        for (int m = 1; m <= mmax; ++m) {
            fact *= m;
            acc += (am[m] * t[m]).scaled(Complex(1.0 / fact, 0.0));
        }
        if (p == 0)
            acc += alpha;
        out.parts[p] = acc;
    }
    return out;
}

FiberedMap FiberedMap::inverse() const
{
    const int m_dim = fiber_dim();
    const int n = degree();
    const MonomialBasis& b = basis();
    const int k = circle->size();
    for (const auto& part : parts)
        if (part.is_nonzero(0) && max_abs(part[0]) > 0)
            fail(ErrorCode::InvalidArgument, "fibered map must fix the zero section");

    // Pointwise J0^{-1} = [[1, -A B^{-1}], [0, B^{-1}]].
    std::vector<std::vector<ArrayXcd>> binv(m_dim, std::vector<ArrayXcd>(m_dim, ArrayXcd::Zero(k)));
    std::vector<ArrayXcd> abinv(m_dim, ArrayXcd::Zero(k));
    for (int j = 0; j < k; ++j) {
        Eigen::MatrixXcd bm(m_dim, m_dim);
        Eigen::RowVectorXcd am(m_dim);
        for (int c = 0; c < m_dim; ++c) {
            const int idx = unit_index(b, c);
            am[c] = parts[0].is_nonzero(idx) ? parts[0][idx][j] : Complex(0);
            for (int r = 0; r < m_dim; ++r)
                bm(r, c) = parts[1 + r].is_nonzero(idx) ? parts[1 + r][idx][j] : Complex(0);
        }
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(bm);
        if (!lu.isInvertible())
            fail(ErrorCode::InvalidArgument, "fiber Jacobian is singular on the sampled circle");
        const Eigen::MatrixXcd bi = lu.inverse();
        const Eigen::RowVectorXcd ab = am * bi;
        for (int r = 0; r < m_dim; ++r) {
            abinv[r][j] = ab[r];
            for (int c = 0; c < m_dim; ++c)
                binv[r][c][j] = bi(r, c);
        }
    }

    auto correct = [&](const FiberedMap& r, FiberedMap& h) {
        CoefficientSeries cz = r.parts[0];
        for (int c = 0; c < m_dim; ++c)
            cz -= r.parts[1 + c].scaled(abinv[c]);
        h.parts[0] -= cz;
        for (int row = 0; row < m_dim; ++row) {
            CoefficientSeries cw(r.parts[0].basis_ptr(), r.parts[0].zero());
            for (int c = 0; c < m_dim; ++c)
                cw += r.parts[1 + c].scaled(binv[row][c]);
            h.parts[1 + row] -= cw;
        }
    };

    FiberedMap h = identity(circle, m_dim, n);
    h.parts[0] = CoefficientSeries(h.parts[0].basis_ptr(), h.parts[0].zero());
    for (int c = 0; c < m_dim; ++c) {
        const int idx = unit_index(b, c);
        h.parts[0].set(idx, -abinv[c]);
        for (int r = 0; r < m_dim; ++r)
            h.parts[1 + r].set(idx, binv[r][c]);
    }

    double scale = 1.0;
    for (const auto& part : parts)
        for (int i = 0; i < b.size(); ++i)
            if (part.is_nonzero(i))
                scale = std::max(scale, max_abs(part[i]));
    for (int iter = 0; iter <= n; ++iter) {
        FiberedMap r = compose(h);
        for (int c = 0; c < m_dim; ++c)
            r.parts[1 + c].add(unit_index(b, c), -circle->constant(1));
        if (r.deviation_raw() <= 1e-15 * scale)
            break;
        correct(r, h);
    }
    return h;
}

double FiberedMap::deviation_raw() const
{
    double m = 0;
    for (const auto& part : parts)
        for (int i = 0; i < part.basis().size(); ++i)
            if (part.is_nonzero(i))
                m = std::max(m, max_abs(part[i]));
    return m;
}

std::pair<FiberedMap, double> FiberedMap::disk_part() const
{
    FiberedMap out = *this;
    double leak = 0;
    for (auto& part : out.parts)
        for (int i = 0; i < part.basis().size(); ++i)
            if (part.is_nonzero(i)) {
                const auto [plus, minus] = circle->split(part[i]);
                leak = std::max(leak, max_abs(minus));
                part.set(i, plus);
            }
    return {out, leak};
}

FiberedMap FiberedMap::degree_part(int n) const
{
    FiberedMap out;
    out.circle = circle;
    for (const auto& part : parts)
        out.parts.push_back(part.degree_part(n));
    if (n == 1)
        for (int c = 0; c < fiber_dim(); ++c)
            out.parts[1 + c].add(unit_index(basis(), c), -circle->constant(1));
    return out;
}

double FiberedMap::difference(const FiberedMap& other, int lo, int hi) const
{
    double best = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const CoefficientSeries d = parts[p].degree_range(lo, hi) - other.parts[p].degree_range(lo, hi);
        for (int i = 0; i < d.basis().size(); ++i)
            if (d.is_nonzero(i))
                best = std::max(best, max_abs(d[i]));
    }
    return best;
}

double FiberedMap::deviation(int lo, int hi) const
{
    return difference(identity(circle, fiber_dim(), degree()), lo, hi);
}

double FiberedMap::block_norm(int n, bool z_block, const std::vector<double>& radii) const
{
    const MonomialBasis& b = basis();
    if (n > degree())
        return 0.0;
    double best = 0;
    for (double r : radii) {
        Eigen::ArrayXd total = Eigen::ArrayXd::Zero(circle->size());
        const int p0 = z_block ? 0 : 1;
        const int p1 = z_block ? 1 : fiber_dim() + 1;
        for (int p = p0; p < p1; ++p) {
            Eigen::ArrayXd comp = Eigen::ArrayXd::Zero(circle->size());
            for (int i = b.degree_begin(n); i < b.degree_end(n); ++i) {
                if (!parts[p].is_nonzero(i))
                    continue;
                ArrayXcd c = parts[p][i];
                if (n == 1 && p >= 1 && i == unit_index(b, p - 1))
                    c -= 1.0;
                comp += circle->resample(c, r).abs() * monomial_ball_max(b.exponent(i));
            }
            total += z_block ? comp : comp.square();
        }
        if (!z_block)
            total = total.sqrt();
        best = std::max(best, total.maxCoeff());
    }
    return best;
}

std::pair<Complex, VectorXc> FiberedMap::operator()(Complex z, const VectorXc& w) const
{
    const MonomialBasis& b = basis();
    if (w.size() != fiber_dim())
        fail(ErrorCode::InvalidArgument, "fiber point has the wrong dimension");
    std::vector<Complex> mono(b.size());
    mono[0] = 1;
    for (int i = 1; i < b.size(); ++i)
        mono[i] = mono[b.parent(i)] * w[b.parent_var(i)];
    VectorXc vals(fiber_dim() + 1);
    for (int p = 0; p <= fiber_dim(); ++p) {
        Complex acc = 0;
        for (int i = 0; i < b.size(); ++i)
            if (parts[p].is_nonzero(i) && mono[i] != Complex(0))
                acc += circle->evaluate(parts[p][i], z) * mono[i];
        vals[p] = acc;
    }
    return {z + vals[0], vals.tail(fiber_dim())};
}

// Step 1

StraightenedChart straighten_chart(const PowerSeriesMap& phi, double tolerance)
{
    const ComplexSeriesMap f = to_series_map(phi);
    const int q = f.input_dim();
    const int m = f.output_dim();
    const int n = f.max_degree();
    if (q < 1 || m < q || n < 1)
        fail(ErrorCode::InvalidArgument, "chart straightening needs an immersion C^q -> C^M with q <= M");

    const MatrixXc jac = linear_part(f);
    Eigen::JacobiSVD<MatrixXc> svd(jac, Eigen::ComputeThinU);
    if (svd.singularValues().minCoeff() < tolerance)
        fail(ErrorCode::NotImmersion, "smallest singular value " + format_double(svd.singularValues().minCoeff()) +
                                          " of dphi is below the tolerance");
    // Complement by Gram-Schmidt on the standard basis, so coordinate-aligned charts keep
    // their coordinates.
    MatrixXc frame(m, m);
    frame.leftCols(q) = jac;
    MatrixXc basis = svd.matrixU().leftCols(q);
    for (int col = q; col < m; ++col) {
        int best = -1;
        VectorXc best_v;
        for (int j = 0; j < m; ++j) {
            VectorXc v = VectorXc::Unit(m, j);
            v -= basis * (basis.adjoint() * v);
            if (best < 0 || v.norm() > best_v.norm()) {
                best = j;
                best_v = v;
            }
        }
        best_v.normalize();
        frame.col(col) = best_v;
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = best_v;
    }
    const MatrixXc l = frame.inverse();

    const VectorXc base = evaluate(f, VectorXc::Zero(q));
    // phi in frame coordinates: (p, s) with p tangent to the identity.
    const ComplexSeriesMap framed = compose(affine_series(l, VectorXc::Zero(m), n), f);
    ComplexSeriesMap p, s;
    p.components.assign(framed.components.begin(), framed.components.begin() + q);
    s.components.assign(framed.components.begin() + q, framed.components.end());
    const ComplexSeriesMap pinv = inverse(p);
    ComplexSeriesMap graph;
    if (m > q)
        graph = compose(s, pinv);

    // H(y) = (center + p^{-1}(y'), y'' - graph(y')), lifted from q to M variables.
    const VectorXc center = phi.center().coords;
    ComplexSeriesMap hmap = ComplexSeriesMap::zeros(m, m, n, Complex(0));
    const auto& bm = hmap.components.front().basis();
    const auto& bq = pinv.components.front().basis();
    auto lift = [&](const ComplexSeries& src, ComplexSeries& dst, double sign) {
        for (int i = 0; i < bq.size(); ++i) {
            if (!src.is_nonzero(i))
                continue;
            Exponent e = bq.exponent(i);
            e.resize(m, 0);
            dst.add(bm.index(e), sign * src[i]);
        }
    };
    for (int c = 0; c < q; ++c) {
        lift(pinv.components[c], hmap.components[c], 1.0);
        hmap.components[c].add(0, center[c] - (pinv.components[c].is_nonzero(0) ? pinv.components[c][0] : 0.0));
    }
    for (int c = q; c < m; ++c) {
        hmap.components[c].add(unit_index(bm, c), 1.0);
        lift(graph.components[c - q], hmap.components[c], -1.0);
        if (hmap.components[c].is_nonzero(0))
            hmap.components[c].clear(0);
    }

    StraightenedChart chart;
    chart.h = compose(hmap, affine_series(l, VectorXc::Zero(m), n));
    chart.base_point = base;
    chart.center = center;
    chart.frame = frame;
    return chart;
}

ComplexSeriesMap straightening_residual(const StraightenedChart& chart, const PowerSeriesMap& phi)
{
    const ComplexSeriesMap f = to_series_map(phi);
    ComplexSeriesMap r = compose(chart.h, f);
    const int q = f.input_dim();
    const auto& b = r.components.front().basis();
    for (int c = 0; c < r.output_dim(); ++c) {
        if (c < q) {
            r.components[c].add(0, -chart.center[c]);
            r.components[c].add(unit_index(b, c), -1.0);
        }
    }
    return r;
}

// Step 2

namespace {

void check_principal_log(const MatrixXc& b)
{
    Eigen::ComplexEigenSolver<MatrixXc> es(b, false);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (!(es.eigenvalues()[i].real() > 0))
            fail(ErrorCode::NotNearIdentity, "cocycle value has an eigenvalue off the principal-log half plane");
}

// Laurent split of a pointwise matrix family: (k >= 0 part, k < 0 part).
std::pair<std::vector<MatrixXc>, std::vector<MatrixXc>> split_matrices(const std::vector<MatrixXc>& l,
                                                                       const SampledCircle& circle)
{
    const int k = circle.size();
    const int rows = l.front().rows(), cols = l.front().cols();
    std::vector<MatrixXc> plus(k, MatrixXc::Zero(rows, cols)), minus = plus;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            ArrayXcd s(k);
            for (int j = 0; j < k; ++j)
                s[j] = l[j](r, c);
            const auto [p, m] = circle.split(s);
            for (int j = 0; j < k; ++j) {
                plus[j](r, c) = p[j];
                minus[j](r, c) = m[j];
            }
        }
    return {plus, minus};
}

MatrixXc evaluate_matrices(const std::vector<MatrixXc>& v, const SampledCircle& circle, Complex z)
{
    const int k = circle.size();
    MatrixXc out(v.front().rows(), v.front().cols());
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) {
            ArrayXcd s(k);
            for (int j = 0; j < k; ++j)
                s[j] = v[j](r, c);
            out(r, c) = circle.evaluate(s, z);
        }
    return out;
}

} // namespace

MatrixXc MultiplicativeFactors::inner_at(Complex z) const { return evaluate_matrices(inner, *circle, z); }
MatrixXc MultiplicativeFactors::outer_at(Complex z) const { return evaluate_matrices(outer, *circle, z); }

MultiplicativeFactors factor_multiplicative_cocycle(const std::function<MatrixXc(Complex)>& b12,
                                                    std::shared_ptr<const SampledCircle> circle, double tolerance,
                                                    int max_iterations)
{
    circle = default_circle(std::move(circle));
    const int k = circle->size();
    std::vector<MatrixXc> b(k);
    double scale = 1.0;
    for (int j = 0; j < k; ++j) {
        b[j] = b12(circle->node(j));
        if (!all_finite(b[j]))
            fail(ErrorCode::NonFinite, "cocycle value is not finite");
        scale = std::max(scale, b[j].cwiseAbs().maxCoeff());
    }
    const int m = b.front().rows();
    if (m == 0 || b.front().cols() != m)
        fail(ErrorCode::InvalidArgument, "multiplicative cocycle must be square");

    MultiplicativeFactors out;
    out.circle = circle;
    out.inner.assign(k, MatrixXc::Identity(m, m));
    out.outer = out.inner;
    std::vector<MatrixXc> r = b;
    for (int iter = 0;; ++iter) {
        out.residual = 0;
        for (int j = 0; j < k; ++j)
            out.residual =
                std::max(out.residual, (out.inner[j] * out.outer[j].inverse() - b[j]).cwiseAbs().maxCoeff());
        if (!std::isfinite(out.residual))
            fail(ErrorCode::NotNearIdentity, "factor sweeps diverged");
        if (out.residual <= tolerance * scale) {
            out.iterations = iter;
            return out;
        }
        if (iter >= max_iterations)
            fail(ErrorCode::NotNearIdentity, "factor sweeps did not converge: residual " + format_double(out.residual));
        std::vector<MatrixXc> l(k);
        for (int j = 0; j < k; ++j) {
            r[j] = out.inner[j].inverse() * b[j] * out.outer[j];
            check_principal_log(r[j]);
            l[j] = r[j].log();
        }
        const auto [lp, lm] = split_matrices(l, *circle);
        for (int j = 0; j < k; ++j) {
            out.inner[j] = out.inner[j] * lp[j].exp();
            out.outer[j] = out.outer[j] * MatrixXc(-lm[j]).exp();
        }
    }
}

// Atlases

namespace {

FiberedMap zero_like(const FiberedMap& t)
{
    FiberedMap z = t;
    for (auto& part : z.parts)
        part = CoefficientSeries(part.basis_ptr(), part.zero());
    return z;
}

FiberedMap plus(const FiberedMap& a, const FiberedMap& b, double sign)
{
    FiberedMap out = a;
    for (std::size_t p = 0; p < a.parts.size(); ++p)
        out.parts[p] += b.parts[p].scaled(Complex(sign, 0));
    return out;
}

} // namespace

ChartAtlas identity_atlas(int fiber_dim, int degree, std::shared_ptr<const SampledCircle> circle)
{
    if (fiber_dim < 1 || degree < 1)
        fail(ErrorCode::InvalidArgument, "atlas needs fiber dimension and degree >= 1");
    circle = default_circle(std::move(circle));
    ChartAtlas a;
    a.circle = circle;
    a.t12 = FiberedMap::identity(circle, fiber_dim, degree);
    a.t21 = a.t12;
    a.param[0] = a.param[1] = a.changes[0] = a.changes[1] = a.t12;
    return a;
}

ChartAtlas atlas_from_transition(const FiberedMap& t12)
{
    ChartAtlas a = identity_atlas(t12.fiber_dim(), t12.degree(), t12.circle);
    a.t12 = t12;
    a.t21 = t12.inverse();
    a.param[1] = t12;
    return a;
}

namespace {

// Series sum_{n=2..N} x^n of a single fiber variable, scaled per degree.
void add_geometric(CoefficientSeries& s, const MonomialBasis& b, int var, const ArrayXcd& coeff, Complex ratio,
                   int top)
{
    ArrayXcd c = coeff;
    for (int n = 1; n <= top; ++n) {
        if (n >= 2) {
            Exponent e(b.vars(), 0);
            e[var] = n;
            s.add(b.index(e), c);
        }
        c *= ratio;
    }
}

} // namespace

FiberedMap round_trip_global(const RoundTripFixture& fx, std::shared_ptr<const SampledCircle> circle)
{
    circle = default_circle(std::move(circle));
    FiberedMap p = FiberedMap::identity(circle, fx.fiber_dim, fx.degree);
    if (fx.degree < 2 || fx.shear == 0.0)
        return p;
    const MonomialBasis& b = p.basis();
    Exponent sq(fx.fiber_dim, 0);
    sq[0] = 2;
    const ArrayXcd z = circle->sample([](Complex x) { return x; });
    p.parts[0].add(b.index(sq), circle->constant(fx.shear));
    p.parts[fx.fiber_dim].add(b.index(sq), z * fx.shear);
    return p;
}

ChartAtlas round_trip_atlas(const RoundTripFixture& fx, std::shared_ptr<const SampledCircle> circle)
{
    circle = default_circle(std::move(circle));
    const int m = fx.fiber_dim, n = fx.degree;
    if (m < 1 || n < 2)
        fail(ErrorCode::InvalidArgument, "round-trip fixture needs fiber dimension >= 1 and degree >= 2");
    FiberedMap g1 = FiberedMap::identity(circle, m, n), g2 = g1;
    const MonomialBasis& b = g1.basis();
    const ArrayXcd zs = circle->sample([](Complex x) { return x; });
    const ArrayXcd first = fx.a * fx.a * (1.0 + fx.twist * zs);
    const int top = fx.chart_degree > 0 ? std::min(fx.chart_degree, n) : n;
    add_geometric(g1.parts[0], b, 0, first / fx.a, fx.a, top);
    const ArrayXcd inv_z = circle->sample([](Complex x) { return 1.0 / x; });
    // (b w_1 / z)^n: coefficient b^n z^{-n}.
    for (int k = 2; k <= top; ++k) {
        Exponent e(m, 0);
        e[0] = k;
        g2.parts[m].add(b.index(e), (fx.b * inv_z).pow(k));
    }
    const FiberedMap g1i = g1.inverse(), g2i = g2.inverse();
    const FiberedMap global = round_trip_global(fx, circle);
    ChartAtlas a = identity_atlas(m, n, circle);
    a.t12 = g1.compose(g2i);
    a.t21 = g2.compose(g1i);
    a.param[0] = global.compose(g1i);
    a.param[1] = global.compose(g2i);
    return a;
}

double round_trip_epsilon(const RoundTripFixture& fx, double r_min) { return std::min(1.0 / fx.a, r_min / fx.b); }

ChartAtlas trivialize_linear_part(const ChartAtlas& atlas)
{
    const auto& circle = atlas.circle;
    const int m = atlas.fiber_dim(), n = atlas.degree(), k = circle->size();
    const MonomialBasis& b = atlas.t12.basis();

    std::vector<MatrixXc> bsamples(k, MatrixXc(m, m));
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            const int idx = unit_index(b, c);
            const auto& part = atlas.t12.parts[1 + r];
            for (int j = 0; j < k; ++j)
                bsamples[j](r, c) = part.is_nonzero(idx) ? part[idx][j] : Complex(0);
        }
    const MultiplicativeFactors f = factor_multiplicative_cocycle(
        [&](Complex z) { return evaluate_matrices(bsamples, *circle, z); }, circle);

    // w~ = B_alpha^{-1} w in chart alpha.
    auto linear_change = [&](const std::vector<MatrixXc>& bs, bool invert) {
        FiberedMap l = FiberedMap::identity(circle, m, n);
        for (int r = 0; r < m; ++r) {
            l.parts[1 + r] = CoefficientSeries(l.parts[1 + r].basis_ptr(), l.parts[1 + r].zero());
            for (int c = 0; c < m; ++c) {
                ArrayXcd s(k);
                for (int j = 0; j < k; ++j)
                    s[j] = invert ? MatrixXc(bs[j].inverse())(r, c) : bs[j](r, c);
                l.parts[1 + r].set(unit_index(b, c), s);
            }
        }
        return l;
    };
    const FiberedMap l1 = linear_change(f.inner, true), l1i = linear_change(f.inner, false);
    const FiberedMap l2 = linear_change(f.outer, true), l2i = linear_change(f.outer, false);
    ChartAtlas out = atlas;
    out.t12 = l1.compose(atlas.t12.compose(l2i));
    out.t21 = l2.compose(atlas.t21.compose(l1i));

    // z^ = z - A_alpha(z) w with A_12 = A_1 - A_2.
    FiberedMap k1 = FiberedMap::identity(circle, m, n), k2 = k1;
    for (int c = 0; c < m; ++c) {
        const int idx = unit_index(b, c);
        if (!out.t12.parts[0].is_nonzero(idx))
            continue;
        const auto [ap, an] = circle->split(out.t12.parts[0][idx]);
        k1.parts[0].set(idx, -ap);
        k2.parts[0].set(idx, an);
    }
    const FiberedMap k1i = k1.inverse(), k2i = k2.inverse();
    out.t12 = k1.compose(out.t12.compose(k2i));
    out.t21 = k2.compose(out.t21.compose(k1i));
    out.changes[0] = k1.compose(l1.compose(atlas.changes[0]));
    out.changes[1] = k2.compose(l2.compose(atlas.changes[1]));
    return out;
}

// Steps 3-4

namespace {

struct Fit {
    double slope = 0, stderr_ = 0;
    int points = 0;
};

Fit log_linear_fit(const std::vector<std::pair<int, double>>& pts)
{
    Fit f;
    f.points = static_cast<int>(pts.size());
    if (pts.size() == 1) {
        f.slope = std::log(pts[0].second) / pts[0].first;
        return f;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double np = double(pts.size());
    for (const auto& [n, v] : pts) {
        const double y = std::log(v);
        sx += n;
        sy += y;
        sxx += double(n) * n;
        sxy += n * y;
    }
    const double den = np * sxx - sx * sx;
    f.slope = (np * sxy - sx * sy) / den;
    if (pts.size() >= 3) {
        const double icept = (sy - f.slope * sx) / np;
        double ss = 0;
        for (const auto& [n, v] : pts) {
            const double e = std::log(v) - (icept + f.slope * n);
            ss += e * e;
        }
        f.stderr_ = std::sqrt(ss / (np - 2) / (sxx - sx * sx / np));
    }
    return f;
}

// Cousin cross-check of one degree: the negative Laurent part of c_2 is unique.
void cousin_crosscheck(DegreeReport& rep, const FiberedMap& p, const SampledCircle& circle, int resolution)
{
    std::vector<ArrayXcd> fns;
    std::vector<std::pair<double, ArrayXcd>> ranked;
    for (const auto& part : p.parts)
        for (int i = 0; i < part.basis().size(); ++i)
            if (part.is_nonzero(i) && max_abs(part[i]) > 1e-14)
                ranked.emplace_back(max_abs(part[i]), part[i]);
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    if (ranked.size() > 16)
        ranked.resize(16);
    if (ranked.empty()) {
        rep.crosscheck_difference = 0;
        return;
    }
    std::vector<ArrayXcd> laurent;
    for (const auto& [mag, s] : ranked)
        laurent.push_back(circle.laurent(s));
    const int dim = static_cast<int>(laurent.size());
    const int half = circle.size() / 2;
    AdditiveCocycle f;
    f.charts = 2;
    f.dim = dim;
    f.set(0, 1, [laurent, half, dim](Complex z) {
        VectorXc v(dim);
        const Complex iz = 1.0 / z;
        for (int d = 0; d < dim; ++d) {
            Complex acc = 0, pz = 1;
            for (int k = 0; k < half; ++k, pz *= z)
                acc += laurent[d][k + half] * pz;
            pz = iz;
            for (int k = -1; k >= -half; --k, pz *= iz)
                acc += laurent[d][k + half] * pz;
            v[d] = acc;
        }
        return v;
    });
    CousinOptions opt;
    opt.resolution = resolution;
    const CousinSolution sol = solve_cousin(Cover::standard_two_chart(), f, opt);
    rep.cousin_constant = sol.constant;
    rep.cousin_ratio = sol.measured_ratio;

    // Laurent coefficients of the Cousin c_2 on |z| = 1.
    const SampledCircle unit(1.0, circle.size());
    double diff = 0, scale = 1.0;
    std::vector<ArrayXcd> samples(dim, ArrayXcd(circle.size()));
    for (int j = 0; j < circle.size(); ++j) {
        const VectorXc v = sol.c[1](unit.node(j));
        for (int d = 0; d < dim; ++d)
            samples[d][j] = v[d];
    }
    for (int d = 0; d < dim; ++d) {
        const ArrayXcd c2 = unit.laurent(samples[d]);
        for (int k = -half; k < 0; ++k) {
            // Laurent c_2 = -(negative part of f).
            diff = std::max(diff, std::abs(c2[k + half] + laurent[d][k + half]));
            scale = std::max(scale, std::abs(laurent[d][k + half]));
        }
    }
    rep.crosscheck_difference = diff / scale;
}

} // namespace

RoydenResult normalize_transitions(const ChartAtlas& atlas, int degree, const NormalizeOptions& options)
{
    if (degree < 1 || degree > atlas.degree())
        fail(ErrorCode::InvalidArgument, "working degree must lie in [1, atlas degree]");
    const auto& circle = atlas.circle;
    if (atlas.t12.deviation(0, 1) > options.identity_tolerance ||
        atlas.t21.deviation(0, 1) > options.identity_tolerance)
        fail(ErrorCode::InvalidArgument, "atlas transitions are not normalized in degree 1");

    RoydenResult res;
    res.atlas = atlas;
    ChartAtlas& a = res.atlas;
    const int n_top = atlas.degree();
    const FiberedMap id = FiberedMap::identity(circle, atlas.fiber_dim(), n_top);

    for (int n = 2; n <= degree; ++n) {
        DegreeReport rep;
        rep.degree = n;
        const FiberedMap p = a.t12.degree_part(n);
        const FiberedMap q = a.t21.degree_part(n);
        rep.cocycle_norm = p.deviation_raw();
        rep.cocycle_residual = plus(p, q, 1.0).deviation_raw();
        if (rep.cocycle_residual > options.cocycle_tolerance * std::max(1.0, rep.cocycle_norm))
            fail(ErrorCode::CocycleViolation, "degree " + std::to_string(n) + " transitions violate the cocycle relation "
                                                  "by " + format_double(rep.cocycle_residual));

        FiberedMap c1 = zero_like(p), c2 = zero_like(p);
        for (std::size_t part = 0; part < p.parts.size(); ++part)
            for (int i = 0; i < p.parts[part].basis().size(); ++i) {
                if (!p.parts[part].is_nonzero(i) || max_abs(p.parts[part][i]) == 0.0)
                    continue;
                const auto [pp, pn] = circle->split(p.parts[part][i]);
                c1.parts[part].set(i, pp);
                c2.parts[part].set(i, -pn);
            }
        const FiberedMap g1 = plus(id, c1, -1.0), g2 = plus(id, c2, -1.0);
        const FiberedMap g1i = g1.inverse(), g2i = g2.inverse();
        const FiberedMap t12 = g1.compose(a.t12.compose(g2i));
        const FiberedMap t21 = g2.compose(a.t21.compose(g1i));
        rep.locality_residual = std::max(t12.difference(a.t12, 0, n - 1), t21.difference(a.t21, 0, n - 1));
        rep.composition_residual = t12.compose(t21).deviation(0, n_top);
        rep.a_norm[0] = c1.block_norm(n, true, options.norm_radii);
        rep.a_norm[1] = c2.block_norm(n, true, options.norm_radii);
        rep.b_norm[0] = c1.block_norm(n, false, options.norm_radii);
        rep.b_norm[1] = c2.block_norm(n, false, options.norm_radii);
        if (std::find(options.crosscheck_degrees.begin(), options.crosscheck_degrees.end(), n) !=
            options.crosscheck_degrees.end())
            cousin_crosscheck(rep, p, *circle, options.crosscheck_resolution);
        rep.change[0] = c1;
        rep.change[1] = c2;

        a.t12 = t12;
        a.t21 = t21;
        a.changes[0] = g1.compose(a.changes[0]);
        a.changes[1] = g2.compose(a.changes[1]);
        res.degrees.push_back(std::move(rep));
    }
    res.identity_residual = std::max(a.t12.deviation(0, degree), a.t21.deviation(0, degree));

    // Log-linear fit of max_alpha norms over the top half of the nonzero degrees.
    std::vector<std::pair<int, double>> all, top;
    for (const auto& rep : res.degrees) {
        const double v = std::max({rep.a_norm[0], rep.a_norm[1], rep.b_norm[0], rep.b_norm[1]});
        if (v > 1e-12)
            all.emplace_back(rep.degree, v);
    }
    if (all.empty())
        return res;
    const int mid = (2 + degree + 1) / 2;
    for (const auto& pt : all)
        if (pt.first >= mid)
            top.push_back(pt);
    const Fit fit = log_linear_fit(top.size() >= 3 ? top : all);
    res.growth_rate = std::exp(fit.slope);
    res.epsilon = std::exp(-fit.slope);
    res.epsilon_lower = std::exp(-(fit.slope + 2 * fit.stderr_));
    if (!std::isfinite(res.epsilon) || !std::isfinite(res.epsilon_lower) || res.epsilon_lower <= options.min_epsilon)
        fail(ErrorCode::RadiusCollapse, "fitted radius " + format_double(res.epsilon) + " (lower " +
                                            format_double(res.epsilon_lower) + ") collapses");
    return res;
}

TubularMap assemble_tubular_map(const RoydenResult& result, double tolerance, double safety)
{
    const ChartAtlas& a = result.atlas;
    TubularMap t;
    t.circle = a.circle;
    t.cover = a.cover;
    t.epsilon = result.epsilon;
    t.safety = safety;
    for (int i = 0; i < 2; ++i)
        t.chart[i] = a.param[i].compose(a.changes[i].inverse());
    std::tie(t.chart[0], t.disk_leak) = t.chart[0].disk_part();
    if (t.disk_leak > tolerance)
        fail(ErrorCode::ChartDisagreement,
             "disk chart carries negative Laurent terms of size " + format_double(t.disk_leak));

    const double rho = safety * std::min(result.epsilon, 1.0);
    const MonomialBasis& b = t.chart[0].basis();
    double worst = 0;
    for (double r : {0.8, 0.9, 1.0})
        for (std::size_t p = 0; p < t.chart[0].parts.size(); ++p) {
            const CoefficientSeries d = t.chart[0].parts[p] - t.chart[1].parts[p];
            for (int i = 0; i < b.size(); ++i)
                if (d.is_nonzero(i))
                    worst = std::max(worst, max_abs(a.circle->resample(d[i], r)) * std::pow(rho, b.degree(i)));
        }
    t.chart_disagreement = worst;
    if (worst > tolerance)
        fail(ErrorCode::ChartDisagreement,
             "chart expressions of the tubular map differ by " + format_double(worst) + " on the overlap");
    return t;
}

VectorXc TubularMap::operator()(Complex z, const VectorXc& w) const
{
    const int use = std::abs(z) <= circle->radius() ? 0 : 1;
    const auto [zz, ww] = chart[use](z, w);
    VectorXc out(ww.size() + 1);
    out[0] = zz;
    out.tail(ww.size()) = ww;
    return out;
}

FiberedMap TubularMap::inverse(int alpha) const
{
    if (alpha < 0 || alpha > 1)
        fail(ErrorCode::InvalidArgument, "tubular map has charts 0 and 1");
    const FiberedMap inv = chart[alpha].inverse();
    return alpha == 0 ? inv.disk_part().first : inv;
}

// CSV

void write_fibered_csv(std::ostream& os, const FiberedMap& t)
{
    const MonomialBasis& b = t.basis();
    const int half = t.circle->size() / 2;
    os << "degree,multi_index,component,re,im\n";
    for (int i = 0; i < b.size(); ++i)
        for (std::size_t p = 0; p < t.parts.size(); ++p) {
            if (!t.parts[p].is_nonzero(i))
                continue;
            ArrayXcd s = t.parts[p][i];
            if (p >= 1 && b.degree(i) == 1 && i == unit_index(b, static_cast<int>(p) - 1))
                s -= 1.0;
            const ArrayXcd c = t.circle->laurent(s);
            for (int k = -half; k < half; ++k) {
                const Complex v = c[k + half];
                if (v == Complex(0))
                    continue;
                os << b.degree(i) << ',' << k;
                for (int e : b.exponent(i))
                    os << ';' << e;
                os << ',' << p << ',' << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
            }
        }
}

FiberedMap read_fibered_csv(std::istream& is, std::shared_ptr<const SampledCircle> circle, int fiber_dim, int degree)
{
    circle = default_circle(std::move(circle));
    FiberedMap t = FiberedMap::identity(circle, fiber_dim, degree);
    const MonomialBasis& b = t.basis();
    const int half = circle->size() / 2;
    std::string line;
    if (!std::getline(is, line) || trim(line) != "degree,multi_index,component,re,im")
        fail(ErrorCode::ConfigError, "transition CSV is missing its header");
    std::map<std::pair<int, int>, ArrayXcd> coeffs;
    while (std::getline(is, line)) {
        if (trim(line).empty())
            continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 5)
            fail(ErrorCode::ConfigError, "transition CSV row needs 5 columns: " + line);
        const auto idx = split(cols[1], ';');
        if (static_cast<int>(idx.size()) != fiber_dim + 1)
            fail(ErrorCode::ConfigError, "transition CSV multi-index needs k and " + std::to_string(fiber_dim) +
                                             " exponents: " + line);
        const int k = parse_int(idx[0]);
        Exponent e;
        for (std::size_t j = 1; j < idx.size(); ++j)
            e.push_back(parse_int(idx[j]));
        const int comp = parse_int(cols[2]);
        if (exponent_degree(e) != parse_int(cols[0]) || exponent_degree(e) < 1 || exponent_degree(e) > degree ||
            k < -half || k >= half || comp < 0 || comp > fiber_dim ||
            std::any_of(e.begin(), e.end(), [](int v) { return v < 0; }))
            fail(ErrorCode::ConfigError, "transition CSV row is out of range: " + line);
        auto& c = coeffs.try_emplace({comp, b.index(e)}, ArrayXcd::Zero(circle->size())).first->second;
        c[k + half] += Complex(parse_double(cols[3]), parse_double(cols[4]));
    }
    for (const auto& [key, c] : coeffs)
        t.parts[key.first].add(key.second, circle->from_laurent(c));
    return t;
}

} // namespace hk
