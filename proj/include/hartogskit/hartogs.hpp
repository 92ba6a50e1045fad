#ifndef HARTOGSKIT_HARTOGS_HPP
#define HARTOGSKIT_HARTOGS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "hartogskit/quadrature.hpp"
#include "hartogskit/types.hpp"

namespace hk {

enum class FigureModel { Ball, Polydisk };

/// H_q^n(r) = B^q x B^n(r)  u  A^q_{1-r,1} x B^n, in C^q x C^n.
/// With `infinite` set, n is the truncation M of the l^2 factor and the ball model is used.
struct HartogsFigure {
    int q = 1;
    int n = 1;
    bool infinite = false;
    double r = 0.5;
    FigureModel model = FigureModel::Polydisk;

    HartogsFigure() = default;
    HartogsFigure(int q_, int n_, double r_, FigureModel model_ = FigureModel::Polydisk, bool infinite_ = false);

    int dim() const { return q + n; }
    /// Norm used for both factors: Euclidean (ball) or max-modulus (polydisk).
    double norm(const VectorXc& v) const;
    bool contains(const VectorXc& z) const;
    /// Open target B^q x B^n (or the polydisk).
    bool target_contains(const VectorXc& z) const;
};

/// Membership in H_inf^inf(r) = B x B(r)  u  (B \ closed B(1-r)) x B for a point split as (z', z'').
bool in_infinite_infinite_figure(const VectorXc& z_prime, const VectorXc& z_second, double r);

struct ExtensionOptions {
    /// Torus nodes per variable when a single plane serves every target.
    int node_count = 256;
    /// Torus nodes per variable for per-direction planes.
    int line_node_count = 128;
    /// Small circle radius as a fraction of r.
    double small_circle_factor = 0.5;
    /// Shell circle radius; <= 0 means (2 - r)/2.
    double shell_radius = 0.0;
    /// Fiber circle radius; <= 0 means (2 - r)/2.
    double fiber_radius = 0.0;

    double overlap_tolerance = 1e-9;
    double negative_tolerance = 1e-9;
    double decay_tolerance = 1e-9;
    double cr_tolerance = 1e-5;
    double certification_tolerance = 1e-7;
    int certification_orders = 4;
    int overlap_samples = 100;
    int cr_probe_points = 4;
    double direction_tolerance = 1e-9;
    int random_directions = 8;
    double gateaux_tolerance = 1e-6;
    int gateaux_points = 3;
    std::uint64_t seed = 0x5eed5eedULL;
    /// Skip the NotHolomorphic probe (callers that certified holomorphy already).
    bool check_holomorphy = true;
};

/// Two-variable engine: the (1,1) figure in (lambda, mu) and its torus coefficients.
/// a(j, k) are the Laurent coefficients of g on |lambda| = rho_s, |mu| = rho_b.
class PlaneExtension {
public:
    using PlaneMap = std::function<VectorXc(Complex, Complex)>;

    PlaneExtension(const PlaneMap& g, double rho_s, double rho_b, int node_count);

    /// sum_{j,k >= 0} a_jk lambda^j mu^k.
    VectorXc operator()(Complex lambda, Complex mu) const;
    /// mu-Taylor coefficients c_k(lambda), k = 0..K.
    std::vector<VectorXc> fiber_coefficients(Complex lambda) const;
    const VectorXc& coefficient(int j, int k) const { return table_[static_cast<std::size_t>(j) * (order_ + 1) + k]; }

    int order() const { return order_; }
    double shell_radius() const { return rho_s_; }
    double fiber_radius() const { return rho_b_; }
    int output_dim() const { return outputs_; }
    /// max |g| over the torus nodes.
    double sup_bound() const { return sup_; }
    /// max over coefficients with a negative index of ||a_jk|| rho_s^j rho_b^k.
    double negative_magnitude() const { return negative_; }
    /// max over the top band max(j,k) >= 3N/8 of ||a_jk|| rho_s^j rho_b^k.
    double top_band_magnitude() const { return top_band_; }

private:
    int order_ = 0;
    int outputs_ = 0;
    double rho_s_ = 0, rho_b_ = 0;
    double sup_ = 0, negative_ = 0, top_band_ = 0;
    std::vector<VectorXc> table_;
};

struct ExtensionResult {
    HartogsFigure figure;
    std::vector<VectorXc> targets;
    std::vector<VectorXc> values;

    /// Radii of the closed polydisk sampled on its distinguished boundary.
    double shell_radius = 0;
    double fiber_radius = 0;
    /// max |f| over distinguished-boundary samples; bounds the extension on the closed target.
    double sup_bound = 0;

    double overlap_residual = 0;
    double negative_coefficient_max = 0;
    double top_band_max = 0;
    double cr_residual_max = 0;
    double certification_residual = 0;
    /// max |value| / sup_bound over targets of the closed target polydisk.
    double max_principle_ratio = 0;
    double oscillation_ratio = 0;
    double direction_mismatch = 0;
    double gateaux_error = 0;
    int planes_built = 0;

    /// Coefficients of the reference plane (first direction), indexed (j, k).
    std::shared_ptr<const PlaneExtension> reference_plane;
    /// Extension at any point of the open target.
    HoloMap evaluate;
    /// Plane whose coefficient table `evaluate` uses at z.
    std::function<std::shared_ptr<const PlaneExtension>(const VectorXc&)> plane_at;
};

/// Targets on a product grid: `per_axis` points per complex variable, moduli in (0, radius],
/// angles on a golden-ratio sequence.
std::vector<VectorXc> interior_grid(int dims, int per_axis, double radius);

/// Deterministic samples of the figure (half in each of its two pieces), kept a quarter of r
/// away from every boundary.
std::vector<VectorXc> figure_samples(const HartogsFigure& figure, int count, std::uint64_t seed);

ExtensionResult extend_bidim_q1(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                                const ExtensionOptions& options = {});

ExtensionResult extend_bidim_qn(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                                const ExtensionOptions& options = {});

ExtensionResult extend_q_infty(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                               const ExtensionOptions& options = {});

/// Dispatch on the figure: infinite -> extend_q_infty, n == 1 -> q1, otherwise qn.
ExtensionResult extend(const HoloMap& f, const HartogsFigure& figure, const std::vector<VectorXc>& eval_grid,
                       const ExtensionOptions& options = {});

/// Directional derivative of the extension at z0 along v from the Cauchy integral over
/// the circle z0 + s v, |s| = radius.
VectorXc gateaux_derivative(const ExtensionResult& result, const VectorXc& z0, const VectorXc& v,
                            double radius = 0.02);

/// Rows j,k of the reference plane in the shared series CSV layout (multi_index "j;k").
void write_extension_csv(std::ostream& os, const ExtensionResult& result);

} // namespace hk

#endif // HARTOGSKIT_HARTOGS_HPP
