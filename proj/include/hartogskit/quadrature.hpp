#ifndef HARTOGSKIT_QUADRATURE_HPP
#define HARTOGSKIT_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "hartogskit/series.hpp"
#include "hartogskit/types.hpp"

namespace hk {

/// Equispaced nodes rho * exp(2 pi i j / N) on a circle. N is a power of two >= 16.
class CircleSampler {
public:
    explicit CircleSampler(double radius, int node_count = 256);

    double radius() const { return radius_; }
    int node_count() const { return node_count_; }
    Complex node(int j) const;
    std::vector<Complex> nodes() const;

    /// Node values of f, one column per node. Throws NonFiniteSample.
    MatrixXc sample(const CurveMap& f) const;

private:
    double radius_;
    int node_count_;
};

/// Trapezoidal Cauchy coefficients c_k, k in [k_lo, k_hi], of f on the sampler's circle.
/// The band width must not exceed the node count. Indices of the aliasing window that
/// fall outside the band are dropped and their largest on-circle size is recorded.
LaurentCoefficients circle_coefficients(const CurveMap& f, int k_lo, int k_hi, const CircleSampler& sampler);
LaurentCoefficients circle_coefficients(const std::function<Complex(Complex)>& f, int k_lo, int k_hi,
                                        const CircleSampler& sampler);
/// Same, from node values already taken (rows = components, columns = nodes).
LaurentCoefficients coefficients_from_samples(const MatrixXc& samples, int k_lo, int k_hi, double radius);

/// Multi-indexed coefficient table over a box of indices in q variables.
struct PolytorusCoefficients {
    std::vector<int> lo, hi;
    std::vector<double> radii;
    std::vector<VectorXc> coeffs; // row-major over the box, last variable fastest
    double discarded_bound = 0.0;
    /// Largest sample norm seen on the torus.
    double sample_max = 0.0;

    int vars() const { return static_cast<int>(lo.size()); }
    std::size_t flat(const std::vector<int>& k) const;
    const VectorXc& at(const std::vector<int>& k) const { return coeffs[flat(k)]; }
    bool contains(const std::vector<int>& k) const;
    /// sum c_k zeta^k over the stored box.
    VectorXc evaluate(const VectorXc& zeta) const;
    /// Enumerate the box in storage order.
    std::vector<std::vector<int>> indices() const;
};

/// Tensor-product trapezoidal rule on the torus prod |zeta_j| = radii_j.
PolytorusCoefficients polytorus_coefficients(const HoloMap& f, const std::vector<double>& radii,
                                             const std::vector<int>& lo, const std::vector<int>& hi,
                                             int node_count = 64);

/// Max over interior grid points of |d f / d zbar| by centred differences.
/// samples(iy, ix) holds f(x0 + ix*hx + i*(y0 + iy*hy)). Throws GridTooSmall below 4x4.
double cr_residual(const MatrixXc& samples, double hx, double hy);

} // namespace hk

#endif // HARTOGSKIT_QUADRATURE_HPP
