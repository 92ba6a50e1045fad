#ifndef HARTOGSKIT_MULTISERIES_HPP
#define HARTOGSKIT_MULTISERIES_HPP

// Truncated multivariate power series over a coefficient ring. The ring is either
// plain complex numbers or Eigen arrays of samples (pointwise products), which is
// how coefficient functions of a base variable are carried through compositions.

#include <array>
#include <cassert>
#include <map>
#include <memory>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hartogskit/types.hpp"

namespace hk {

using Exponent = std::vector<int>;

inline int exponent_degree(const Exponent& e)
{
    int d = 0;
    for (int v : e)
        d += v;
    return d;
}

/// Graded enumeration of monomials x^e in `vars` variables with |e| <= max_degree.
/// Within a degree the order is reverse lexicographic in e (x_0^d first).
class MonomialBasis {
public:
    MonomialBasis(int vars, int max_degree);

    int vars() const { return vars_; }
    int max_degree() const { return max_degree_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const Exponent& exponent(int idx) const { return exponents_[idx]; }
    int degree(int idx) const { return degrees_[idx]; }
    int index(const Exponent& e) const;
    int degree_begin(int d) const { return degree_offsets_[d]; }
    int degree_end(int d) const { return degree_offsets_[d + 1]; }

    /// Index of x^e / x_j where it exists (the "parent" of the monomial), -1 for e = 0.
    int parent(int idx) const { return parents_[idx].first; }
    int parent_var(int idx) const { return parents_[idx].second; }

    /// All (a, b, c) with x^a * x^b = x^c and |c| <= max_degree.
    const std::vector<std::array<int, 3>>& products() const { return products_; }

private:
    int vars_;
    int max_degree_;
    std::vector<Exponent> exponents_;
    std::vector<int> degrees_;
    std::vector<int> degree_offsets_;
    std::map<Exponent, int> lookup_;
    std::vector<std::pair<int, int>> parents_;
    std::vector<std::array<int, 3>> products_;
};

/// Shared, cached basis for (vars, max_degree).
std::shared_ptr<const MonomialBasis> monomial_basis(int vars, int max_degree);

/// sup over the closed unit ball of C^d of |x^e|.
double monomial_ball_max(const Exponent& e);

namespace detail {

template <typename Coeff>
struct RingTraits;

template <>
struct RingTraits<Complex> {
    static Complex zero_like(const Complex&) { return Complex(0.0, 0.0); }
    static double magnitude(const Complex& c) { return std::abs(c); }
};

template <>
struct RingTraits<Eigen::ArrayXcd> {
    static Eigen::ArrayXcd zero_like(const Eigen::ArrayXcd& proto) { return Eigen::ArrayXcd::Zero(proto.size()); }
    static double magnitude(const Eigen::ArrayXcd& c) { return c.size() == 0 ? 0.0 : c.abs().maxCoeff(); }
};

} // namespace detail

/// Scalar-valued truncated power series sum_e c_e x^e with coefficients in `Coeff`.
template <typename Coeff>
class TruncatedSeries {
public:
    using Traits = detail::RingTraits<Coeff>;

    TruncatedSeries() = default;
    TruncatedSeries(std::shared_ptr<const MonomialBasis> basis, const Coeff& zero)
        : basis_(std::move(basis)), zero_(Traits::zero_like(zero)), coeffs_(basis_->size(), zero_),
          nonzero_(basis_->size(), 0)
    {
    }

    const MonomialBasis& basis() const { return *basis_; }
    const std::shared_ptr<const MonomialBasis>& basis_ptr() const { return basis_; }
    const Coeff& zero() const { return zero_; }
    int vars() const { return basis_->vars(); }
    int max_degree() const { return basis_->max_degree(); }

    const Coeff& operator[](int idx) const { return coeffs_[idx]; }
    bool is_nonzero(int idx) const { return nonzero_[idx] != 0; }

    void set(int idx, const Coeff& c)
    {
        coeffs_[idx] = c;
        nonzero_[idx] = 1;
    }
    void add(int idx, const Coeff& c)
    {
        if (nonzero_[idx])
            coeffs_[idx] += c;
        else
            coeffs_[idx] = c;
        nonzero_[idx] = 1;
    }
    void clear(int idx)
    {
        coeffs_[idx] = zero_;
        nonzero_[idx] = 0;
    }

    /// Homogeneous component of degree d.
    TruncatedSeries degree_part(int d) const
    {
        TruncatedSeries out(basis_, zero_);
        if (d > max_degree())
            return out;
        for (int i = basis_->degree_begin(d); i < basis_->degree_end(d); ++i)
            if (nonzero_[i])
                out.set(i, coeffs_[i]);
        return out;
    }

    /// Terms of degree in [lo, hi].
    TruncatedSeries degree_range(int lo, int hi) const
    {
        TruncatedSeries out(basis_, zero_);
        for (int i = 0; i < basis_->size(); ++i) {
            const int d = basis_->degree(i);
            if (nonzero_[i] && d >= lo && d <= hi)
                out.set(i, coeffs_[i]);
        }
        return out;
    }

    /// Lowest degree with a nonzero coefficient, or max_degree()+1 when none.
    int valuation() const
    {
        for (int i = 0; i < basis_->size(); ++i)
            if (nonzero_[i])
                return basis_->degree(i);
        return max_degree() + 1;
    }

    double degree_magnitude(int d) const
    {
        double m = 0.0;
        for (int i = basis_->degree_begin(d); i < basis_->degree_end(d); ++i)
            if (nonzero_[i])
                m = std::max(m, Traits::magnitude(coeffs_[i]));
        return m;
    }

    TruncatedSeries& operator+=(const TruncatedSeries& o)
    {
        for (int i = 0; i < basis_->size(); ++i)
            if (o.nonzero_[i])
                add(i, o.coeffs_[i]);
        return *this;
    }
    TruncatedSeries& operator-=(const TruncatedSeries& o)
    {
        for (int i = 0; i < basis_->size(); ++i)
            if (o.nonzero_[i])
                add(i, -o.coeffs_[i]);
        return *this;
    }
    friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
    friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
    TruncatedSeries operator-() const
    {
        TruncatedSeries out(basis_, zero_);
        for (int i = 0; i < basis_->size(); ++i)
            if (nonzero_[i])
                out.set(i, -coeffs_[i]);
        return out;
    }

    /// Multiply every coefficient by a ring element (pointwise for sampled rings).
    TruncatedSeries scaled(const Coeff& s) const
        requires(!std::is_same_v<Coeff, Complex>)
    {
        TruncatedSeries out(basis_, zero_);
        for (int i = 0; i < basis_->size(); ++i)
            if (nonzero_[i])
                out.set(i, coeffs_[i] * s);
        return out;
    }
    TruncatedSeries scaled(Complex s) const
    {
        TruncatedSeries out(basis_, zero_);
        for (int i = 0; i < basis_->size(); ++i)
            if (nonzero_[i])
                out.set(i, coeffs_[i] * s);
        return out;
    }

    /// Product truncated at max_degree().
    friend TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b)
    {
        TruncatedSeries out(a.basis_, a.zero_);
        for (const auto& p : a.basis_->products())
            if (a.nonzero_[p[0]] && b.nonzero_[p[1]])
                out.add(p[2], a.coeffs_[p[0]] * b.coeffs_[p[1]]);
        return out;
    }

    /// d/dx_var, truncated to the same basis.
    TruncatedSeries derivative(int var) const
    {
        TruncatedSeries out(basis_, zero_);
        for (int i = 0; i < basis_->size(); ++i) {
            if (!nonzero_[i])
                continue;
            Exponent e = basis_->exponent(i);
            if (e[var] == 0)
                continue;
            const double k = e[var];
            --e[var];
            out.add(basis_->index(e), coeffs_[i] * Complex(k, 0.0));
        }
        return out;
    }

    /// sum_e c_e x^e at a complex point.
    template <typename Derived>
    Coeff evaluate(const Eigen::MatrixBase<Derived>& x) const
    {
        assert(x.size() == vars());
        std::vector<Complex> mono(basis_->size());
        if (basis_->size() > 0)
            mono[0] = 1.0;
        Coeff acc = zero_;
        if (basis_->size() > 0 && nonzero_[0])
            acc += coeffs_[0];
        for (int i = 1; i < basis_->size(); ++i) {
            mono[i] = mono[basis_->parent(i)] * x[basis_->parent_var(i)];
            if (nonzero_[i])
                acc += coeffs_[i] * mono[i];
        }
        return acc;
    }

private:
    std::shared_ptr<const MonomialBasis> basis_;
    Coeff zero_{};
    std::vector<Coeff> coeffs_;
    std::vector<unsigned char> nonzero_;
};

/// Vector-valued truncated series: one TruncatedSeries per output component.
template <typename Coeff>
struct SeriesMap {
    std::vector<TruncatedSeries<Coeff>> components;

    int output_dim() const { return static_cast<int>(components.size()); }
    int input_dim() const { return components.empty() ? 0 : components.front().vars(); }
    int max_degree() const { return components.empty() ? 0 : components.front().max_degree(); }

    static SeriesMap zeros(int inputs, int outputs, int degree, const Coeff& zero_coeff)
    {
        SeriesMap m;
        auto basis = monomial_basis(inputs, degree);
        m.components.assign(outputs, TruncatedSeries<Coeff>(basis, zero_coeff));
        return m;
    }

    /// The coordinate map x -> x (+ offset), as a series.
    static SeriesMap identity(int dim, int degree, const Coeff& zero_coeff, const Coeff& one)
    {
        SeriesMap m = zeros(dim, dim, degree, zero_coeff);
        if (degree >= 1) {
            const auto& basis = m.components.front().basis();
            for (int j = 0; j < dim; ++j) {
                Exponent e(dim, 0);
                e[j] = 1;
                m.components[j].set(basis.index(e), one);
            }
        }
        return m;
    }

    SeriesMap degree_part(int d) const
    {
        SeriesMap out;
        for (const auto& c : components)
            out.components.push_back(c.degree_part(d));
        return out;
    }
    SeriesMap degree_range(int lo, int hi) const
    {
        SeriesMap out;
        for (const auto& c : components)
            out.components.push_back(c.degree_range(lo, hi));
        return out;
    }
    SeriesMap& operator+=(const SeriesMap& o)
    {
        for (std::size_t i = 0; i < components.size(); ++i)
            components[i] += o.components[i];
        return *this;
    }
    SeriesMap& operator-=(const SeriesMap& o)
    {
        for (std::size_t i = 0; i < components.size(); ++i)
            components[i] -= o.components[i];
        return *this;
    }
    friend SeriesMap operator+(SeriesMap a, const SeriesMap& b) { return a += b; }
    friend SeriesMap operator-(SeriesMap a, const SeriesMap& b) { return a -= b; }
};

using ComplexSeries = TruncatedSeries<Complex>;
using ComplexSeriesMap = SeriesMap<Complex>;

/// Evaluate a complex series map at x.
VectorXc evaluate(const ComplexSeriesMap& f, const VectorXc& x);

/// f(g(x)) where f is expanded about g(0): only g - g(0) is substituted.
/// The result is truncated at f's degree.
ComplexSeriesMap compose(const ComplexSeriesMap& f, const ComplexSeriesMap& g);

/// Series inverse of a square map with invertible linear part, expanded about f(0).
/// The result g satisfies f(g(y)) = f(0) + y through the working degree and g(0) = 0
/// when f is given in local coordinates.
ComplexSeriesMap inverse(const ComplexSeriesMap& f);

/// Linear part (Jacobian at 0) of a complex series map.
MatrixXc linear_part(const ComplexSeriesMap& f);

/// The map x -> A x + b as a series of the given degree.
ComplexSeriesMap affine_series(const MatrixXc& a, const VectorXc& b, int degree);

} // namespace hk

#endif // HARTOGSKIT_MULTISERIES_HPP
