#include "hartogskit/multiseries.hpp"

#include <cmath>
#include <mutex>

#include <Eigen/LU>

#include "hartogskit/error.hpp"

namespace hk {

namespace {

void enumerate_degree(int vars, int remaining, int pos, Exponent& current, std::vector<Exponent>& out)
{
    if (pos == vars - 1) {
        current[pos] = remaining;
        out.push_back(current);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        current[pos] = k;
        enumerate_degree(vars, remaining - k, pos + 1, current, out);
    }
}

} // namespace

MonomialBasis::MonomialBasis(int vars, int max_degree) : vars_(vars), max_degree_(max_degree)
{
    if (vars < 1 || max_degree < 0)
        fail(ErrorCode::InvalidArgument, "monomial basis needs vars >= 1 and degree >= 0");
    degree_offsets_.push_back(0);
    for (int d = 0; d <= max_degree; ++d) {
        Exponent cur(vars, 0);
        std::vector<Exponent> level;
        enumerate_degree(vars, d, 0, cur, level);
        for (auto& e : level) {
            lookup_.emplace(e, static_cast<int>(exponents_.size()));
            exponents_.push_back(std::move(e));
            degrees_.push_back(d);
        }
        degree_offsets_.push_back(static_cast<int>(exponents_.size()));
    }
    parents_.assign(exponents_.size(), {-1, -1});
    for (std::size_t i = 1; i < exponents_.size(); ++i) {
        Exponent e = exponents_[i];
        int j = 0;
        while (e[j] == 0)
            ++j;
        --e[j];
        parents_[i] = {lookup_.at(e), j};
    }
    const int n = size();
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (degrees_[a] + degrees_[b] > max_degree)
                continue;
            Exponent c = exponents_[a];
            for (int j = 0; j < vars; ++j)
                c[j] += exponents_[b][j];
            products_.push_back({a, b, lookup_.at(c)});
        }
    }
}

int MonomialBasis::index(const Exponent& e) const
{
    auto it = lookup_.find(e);
    return it == lookup_.end() ? -1 : it->second;
}

std::shared_ptr<const MonomialBasis> monomial_basis(int vars, int max_degree)
{
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(vars, max_degree);
    auto it = cache.find(key);
    if (it != cache.end())
        return it->second;
    auto basis = std::make_shared<const MonomialBasis>(vars, max_degree);
    cache.emplace(key, basis);
    return basis;
}

double monomial_ball_max(const Exponent& e)
{
    const int total = exponent_degree(e);
    if (total == 0)
        return 1.0;
    double log_value = 0.0;
    for (int k : e)
        if (k > 0)
            log_value += 0.5 * k * std::log(static_cast<double>(k) / total);
    return std::exp(log_value);
}

VectorXc evaluate(const ComplexSeriesMap& f, const VectorXc& x)
{
    VectorXc out(f.output_dim());
    for (int c = 0; c < f.output_dim(); ++c)
        out[c] = f.components[c].evaluate(x);
    return out;
}

ComplexSeriesMap compose(const ComplexSeriesMap& f, const ComplexSeriesMap& g)
{
    if (f.input_dim() != g.output_dim())
        fail(ErrorCode::InvalidArgument, "compose: inner map dimension does not match outer arity");
    const auto inner_basis = g.components.front().basis_ptr();
    const int degree = std::min(f.max_degree(), g.max_degree());
    const auto out_basis = monomial_basis(g.input_dim(), degree);

    std::vector<ComplexSeries> shifted;
    for (const auto& gc : g.components) {
        ComplexSeries s(out_basis, Complex(0));
        for (int i = 1; i < out_basis->size(); ++i) {
            const int src = inner_basis->index(out_basis->exponent(i));
            if (src >= 0 && gc.is_nonzero(src))
                s.set(i, gc[src]);
        }
        shifted.push_back(std::move(s));
    }

    const auto& fb = f.components.front().basis();
    std::vector<ComplexSeries> powers(fb.size());
    ComplexSeries one(out_basis, Complex(0));
    one.set(0, Complex(1));
    powers[0] = one;
    for (int i = 1; i < fb.size(); ++i) {
        if (fb.degree(i) > degree) {
            powers[i] = ComplexSeries(out_basis, Complex(0));
            continue;
        }
        powers[i] = powers[fb.parent(i)] * shifted[fb.parent_var(i)];
    }

    ComplexSeriesMap out;
    for (const auto& fc : f.components) {
        ComplexSeries acc(out_basis, Complex(0));
        for (int i = 0; i < fb.size(); ++i)
            if (fc.is_nonzero(i) && fb.degree(i) <= degree)
                acc += powers[i].scaled(fc[i]);
        out.components.push_back(std::move(acc));
    }
    return out;
}

MatrixXc linear_part(const ComplexSeriesMap& f)
{
    const int n = f.input_dim();
    MatrixXc a = MatrixXc::Zero(f.output_dim(), n);
    if (f.max_degree() < 1)
        return a;
    const auto& basis = f.components.front().basis();
    for (int j = 0; j < n; ++j) {
        Exponent e(n, 0);
        e[j] = 1;
        const int idx = basis.index(e);
        for (int c = 0; c < f.output_dim(); ++c)
            if (f.components[c].is_nonzero(idx))
                a(c, j) = f.components[c][idx];
    }
    return a;
}

ComplexSeriesMap affine_series(const MatrixXc& a, const VectorXc& b, int degree)
{
    const int n = static_cast<int>(a.cols());
    ComplexSeriesMap m = ComplexSeriesMap::zeros(n, static_cast<int>(a.rows()), degree, Complex(0));
    const auto& basis = m.components.front().basis();
    for (int c = 0; c < a.rows(); ++c) {
        if (b.size() > 0 && b[c] != Complex(0))
            m.components[c].set(0, b[c]);
        if (degree < 1)
            continue;
        for (int j = 0; j < n; ++j) {
            if (a(c, j) == Complex(0))
                continue;
            Exponent e(n, 0);
            e[j] = 1;
            m.components[c].set(basis.index(e), a(c, j));
        }
    }
    return m;
}

namespace {

ComplexSeriesMap apply_linear(const MatrixXc& a, const ComplexSeriesMap& f)
{
    ComplexSeriesMap out;
    const auto basis = f.components.front().basis_ptr();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        ComplexSeries acc(basis, Complex(0));
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            if (a(r, c) != Complex(0))
                acc += f.components[c].scaled(a(r, c));
        out.components.push_back(std::move(acc));
    }
    return out;
}

} // namespace

ComplexSeriesMap inverse(const ComplexSeriesMap& f)
{
    const int n = f.input_dim();
    if (f.output_dim() != n)
        fail(ErrorCode::InvalidArgument, "inverse: map must be square");
    const int degree = f.max_degree();
    const MatrixXc lin = linear_part(f);
    Eigen::FullPivLU<MatrixXc> lu(lin);
    if (!lu.isInvertible())
        fail(ErrorCode::NotImmersion, "inverse: linear part is singular");
    const MatrixXc lin_inv = lu.inverse();

    const ComplexSeriesMap nonlinear = f.degree_range(2, degree);
    const ComplexSeriesMap y = ComplexSeriesMap::identity(n, degree, Complex(0), Complex(1));
    ComplexSeriesMap x = apply_linear(lin_inv, y);
    for (int iter = 1; iter < degree; ++iter)
        x = apply_linear(lin_inv, y - compose(nonlinear, x));
    return x;
}

} // namespace hk
