#ifndef HARTOGSKIT_TYPES_HPP
#define HARTOGSKIT_TYPES_HPP

#include <complex>
#include <functional>
#include <limits>

#include <Eigen/Core>

namespace hk {

using Complex = std::complex<double>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

/// Holomorphic map C^d -> C^m given pointwise.
using HoloMap = std::function<VectorXc(const VectorXc&)>;
/// Map of one complex variable into C^m.
using CurveMap = std::function<VectorXc(Complex)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

inline bool all_finite(const VectorXc& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
            return false;
    return true;
}

/// Max-modulus norm of a complex vector.
template <typename Derived>
double max_norm(const Eigen::MatrixBase<Derived>& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

} // namespace hk

#endif // HARTOGSKIT_TYPES_HPP
