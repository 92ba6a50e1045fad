#ifndef HARTOGSKIT_SERIES_HPP
#define HARTOGSKIT_SERIES_HPP

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "hartogskit/multiseries.hpp"
#include "hartogskit/types.hpp"

namespace hk {

/// A point of C^M standing in for an l^2 point: finitely many coordinates plus a
/// certified bound on the l^2 norm of everything that was dropped.
template <typename Scalar = Complex>
struct TruncatedVector {
    VectorX<Scalar> coords;
    double tail_bound = 0.0;

    TruncatedVector() = default;
    explicit TruncatedVector(VectorX<Scalar> c, double tail = 0.0) : coords(std::move(c)), tail_bound(tail) {}

    Eigen::Index size() const { return coords.size(); }
    double norm() const { return coords.norm(); }

    /// Zero-padded copy of length n (tail bound kept).
    TruncatedVector padded(Eigen::Index n) const
    {
        VectorX<Scalar> c = VectorX<Scalar>::Zero(std::max(n, coords.size()));
        c.head(coords.size()) = coords;
        return TruncatedVector(std::move(c), tail_bound);
    }
};

/// a - b with zero padding of the shorter operand; tail bounds add.
template <typename Scalar>
TruncatedVector<Scalar> operator-(const TruncatedVector<Scalar>& a, const TruncatedVector<Scalar>& b)
{
    const Eigen::Index n = std::max(a.size(), b.size());
    return TruncatedVector<Scalar>(a.padded(n).coords - b.padded(n).coords, a.tail_bound + b.tail_bound);
}

/// Continuous n-homogeneous polynomial map C^d -> C^m.
///
/// Stored by monomial coefficients (the symmetrized tensor in compressed form) for
/// small degree and input dimension; above those limits only a callable is kept.
class HomogeneousMap {
public:
    static constexpr int kMaxDenseDegree = 12;
    static constexpr int kMaxDenseInputs = 8;

    using Terms = std::vector<std::pair<Exponent, VectorXc>>;

    HomogeneousMap() = default;

    /// Builds from monomial terms; every exponent must have total degree `degree`.
    static HomogeneousMap from_terms(int degree, int input_dim, int output_dim, Terms terms,
                                     std::optional<double> norm = std::nullopt);
    /// Evaluation-only representation.
    static HomogeneousMap from_callable(int degree, int input_dim, int output_dim, HoloMap f,
                                        std::optional<double> norm = std::nullopt);
    /// Constant (degree 0) term.
    static HomogeneousMap constant(const VectorXc& value, int input_dim);
    /// Linear term x -> A x.
    static HomogeneousMap linear(const MatrixXc& a);

    int degree() const { return degree_; }
    int input_dim() const { return input_dim_; }
    int output_dim() const { return output_dim_; }
    bool is_dense() const { return !callable_; }
    const Terms& terms() const { return terms_; }

    /// Estimate of sup_{||x|| <= 1} ||P(x)||. Exact for degree 0 and linear maps.
    double norm_estimate() const { return norm_; }

    VectorXc operator()(const VectorXc& x) const;

    /// Same map with its argument scaled: x -> P(c x) = c^n P(x).
    HomogeneousMap dilated(Complex c) const;

private:
    int degree_ = 0;
    int input_dim_ = 0;
    int output_dim_ = 0;
    Terms terms_;
    HoloMap callable_;
    double norm_ = 0.0;
};

/// Lower bound of sup{||P(x)|| : ||x|| <= 1} from deterministic low-discrepancy sphere
/// sampling followed by projected gradient ascent from the best sample.
double homogeneous_norm(const HomogeneousMap& p, int sample_count);

enum class SeriesKind { Truncated, Polynomial };

/// f(x) = sum_n P_n(x - center), n = 0..N.
class PowerSeriesMap {
public:
    PowerSeriesMap() = default;
    /// When `radius` is omitted it is estimated from the terms (polynomials get +inf).
    PowerSeriesMap(TruncatedVector<> center, std::vector<HomogeneousMap> terms, SeriesKind kind,
                   std::optional<double> radius = std::nullopt);

    const TruncatedVector<>& center() const { return center_; }
    const std::vector<HomogeneousMap>& terms() const { return terms_; }
    SeriesKind kind() const { return kind_; }
    double radius_estimate() const { return radius_; }
    int degree() const { return static_cast<int>(terms_.size()) - 1; }
    int input_dim() const { return terms_.empty() ? 0 : terms_.front().input_dim(); }
    int output_dim() const { return terms_.empty() ? 0 : terms_.front().output_dim(); }

private:
    TruncatedVector<> center_;
    std::vector<HomogeneousMap> terms_;
    SeriesKind kind_ = SeriesKind::Truncated;
    double radius_ = kInf;
};

/// Sum of the terms at x, with tail_bound from the geometric remainder implied by
/// the radius estimate. Throws OutOfRadius / NonFinite.
TruncatedVector<> eval_series(const PowerSeriesMap& s, const TruncatedVector<>& x);

/// 1 / limsup ||P_n||^(1/n), from a log-linear fit over the top half of the nonzero
/// degrees; +inf for polynomials. Throws InsufficientTerms.
double estimate_radius(const PowerSeriesMap& s);

/// Conversions between the term list and the dense truncated-series algebra.
ComplexSeriesMap to_series_map(const PowerSeriesMap& s);
PowerSeriesMap to_power_series(const ComplexSeriesMap& f, const TruncatedVector<>& center, SeriesKind kind,
                               std::optional<double> radius = std::nullopt);

/// Coefficients c_k of a function on a ring rho_inner < |zeta| < rho_outer, k = k_min..k_max.
struct LaurentCoefficients {
    int k_min = 0;
    std::vector<VectorXc> coeffs;
    double inner_radius = 0.0;
    double outer_radius = kInf;
    /// Bound on the on-circle magnitude of indices outside the stored band.
    double discarded_bound = 0.0;

    int k_max() const { return k_min + static_cast<int>(coeffs.size()) - 1; }
    const VectorXc& at(int k) const { return coeffs.at(static_cast<std::size_t>(k - k_min)); }
    bool contains(int k) const { return k >= k_min && k <= k_max(); }
    /// sum_k c_k zeta^k over the stored band.
    VectorXc evaluate(Complex zeta) const;
    /// max over k < 0 of ||c_k|| rho^k, i.e. the negative part measured on a circle.
    double negative_magnitude(double rho) const;
};

/// CSV layout shared by series and coefficient tables:
///   degree,multi_index,component,re,im
/// multi_index is the exponent (or Laurent index tuple) joined by ';'.
void write_series_csv(std::ostream& os, const PowerSeriesMap& s);
/// Reads terms back; the result lives at `center` with the given kind.
PowerSeriesMap read_series_csv(std::istream& is, const TruncatedVector<>& center, SeriesKind kind,
                               std::optional<double> radius = std::nullopt);

} // namespace hk

#endif // HARTOGSKIT_SERIES_HPP
