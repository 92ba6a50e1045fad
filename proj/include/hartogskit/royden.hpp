#ifndef HARTOGSKIT_ROYDEN_HPP
#define HARTOGSKIT_ROYDEN_HPP

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hartogskit/dbar.hpp"
#include "hartogskit/multiseries.hpp"
#include "hartogskit/series.hpp"
#include "hartogskit/types.hpp"

namespace hk {

/// Functions of the base variable z, holomorphic near |z| = radius, carried by their
/// values at `nodes` equally spaced points of that circle. Laurent indices live in
/// [-nodes/2, nodes/2).
class SampledCircle {
public:
    explicit SampledCircle(double radius = 0.9, int nodes = 128);

    double radius() const { return radius_; }
    int size() const { return nodes_; }
    Complex node(int j) const;

    Eigen::ArrayXcd sample(const std::function<Complex(Complex)>& f) const;
    Eigen::ArrayXcd constant(Complex c) const { return Eigen::ArrayXcd::Constant(nodes_, c); }

    /// c_k for k = -nodes/2 .. nodes/2 - 1 (entry k + nodes/2); coefficients below 1e-15 of
    /// the largest are zeroed.
    Eigen::ArrayXcd laurent(const Eigen::ArrayXcd& s) const;
    Eigen::ArrayXcd from_laurent(const Eigen::ArrayXcd& c) const;

    Eigen::ArrayXcd derivative(const Eigen::ArrayXcd& s) const;
    /// (part with k >= 0, part with k < 0).
    std::pair<Eigen::ArrayXcd, Eigen::ArrayXcd> split(const Eigen::ArrayXcd& s) const;
    Complex evaluate(const Eigen::ArrayXcd& s, Complex z) const;
    /// Values at the same angles on the circle of radius r.
    Eigen::ArrayXcd resample(const Eigen::ArrayXcd& s, double r) const;

private:
    double radius_;
    int nodes_;
};

using CoefficientSeries = TruncatedSeries<Eigen::ArrayXcd>;

/// (z, w) -> (z + dz(z; w), W(z; w)) for w in C^M: part 0 is the displacement dz, parts
/// 1..M the fiber outputs. Coefficients are functions of z on a SampledCircle; the maps
/// fix the zero section, so no part has a constant term.
struct FiberedMap {
    std::shared_ptr<const SampledCircle> circle;
    std::vector<CoefficientSeries> parts;

    static FiberedMap identity(std::shared_ptr<const SampledCircle> circle, int fiber_dim, int degree);

    int fiber_dim() const { return static_cast<int>(parts.size()) - 1; }
    int degree() const { return parts.front().max_degree(); }
    const MonomialBasis& basis() const { return parts.front().basis(); }

    /// this o inner, truncated at the working degree.
    FiberedMap compose(const FiberedMap& inner) const;
    /// Series inverse; the Jacobian at w = 0 must be invertible at every node.
    FiberedMap inverse() const;

    /// Terms of (this - identity) of exactly degree n.
    FiberedMap degree_part(int n) const;
    /// max |coefficient| of this - other over degrees [lo, hi], nodes and parts.
    double difference(const FiberedMap& other, int lo, int hi) const;
    /// Same against the identity.
    double deviation(int lo, int hi) const;
    /// max |coefficient| over all terms.
    double deviation_raw() const;
    /// Copy with every coefficient projected onto its k >= 0 Laurent part; the second value is
    /// the largest dropped sample.
    std::pair<FiberedMap, double> disk_part() const;

    /// Upper bound sup_{|w| <= 1} |part(z; w)| of the degree-n terms, sup over the given
    /// radii: sum_e |c_e(z)| max_ball |w^e|. part 0 is the z block, parts 1..M the w block.
    double block_norm(int n, bool z_block, const std::vector<double>& radii) const;

    /// Value at a point with |z| inside the annulus of holomorphy of the coefficients.
    std::pair<Complex, VectorXc> operator()(Complex z, const VectorXc& w) const;
};

// Step 1: straightening an immersed disk.

struct StraightenedChart {
    /// Series in x - base_point with h(base_point) = (center, 0).
    ComplexSeriesMap h;
    VectorXc base_point;
    VectorXc center;
    /// Columns v_1..v_M: dphi(e_i) for i <= q, an orthonormal basis of their complement after.
    MatrixXc frame;
};

/// Chart with (h o phi)(z) = (z, 0) through phi's degree. Throws NotImmersion when the
/// smallest singular value of dphi at the centre is below `tolerance`.
StraightenedChart straighten_chart(const PowerSeriesMap& phi, double tolerance = 1e-8);

/// Series of h o phi - (z, 0) in the variables z - center.
ComplexSeriesMap straightening_residual(const StraightenedChart& chart, const PowerSeriesMap& phi);

// Step 2: near-identity multiplicative cocycles on a two-chart cover.

struct MultiplicativeFactors {
    std::shared_ptr<const SampledCircle> circle;
    /// Samples of B_1 (holomorphic on the inner chart) and B_2 (outer chart) at the nodes.
    std::vector<MatrixXc> inner, outer;
    /// max_j ||B_1 B_2^{-1} - B_12|| at the nodes.
    double residual = 0;
    int iterations = 0;

    MatrixXc inner_at(Complex z) const;
    MatrixXc outer_at(Complex z) const;
};

/// B_12 = B_1 B_2^{-1} from log B_12 split into its k >= 0 and k < 0 Laurent parts, with
/// log/exp correction sweeps for non-commuting values. Throws NotNearIdentity when the
/// principal logarithm is unusable (an eigenvalue with Re <= 0) or the sweeps stall.
MultiplicativeFactors factor_multiplicative_cocycle(const std::function<MatrixXc(Complex)>& b12,
                                                    std::shared_ptr<const SampledCircle> circle,
                                                    double tolerance = 1e-12, int max_iterations = 60);

// Steps 3-4: degree-by-degree normalization.

/// Two charts over the standard cover: U_1 the disk, U_2 the annulus. Transition t12 maps
/// chart-2 coordinates to chart-1 coordinates on the overlap; `param` maps chart coordinates
/// to the ambient space; `changes` are the coordinate changes applied so far.
struct ChartAtlas {
    std::shared_ptr<const SampledCircle> circle;
    Cover cover = Cover::standard_two_chart();
    FiberedMap t12, t21;
    FiberedMap param[2];
    FiberedMap changes[2];

    int fiber_dim() const { return t12.fiber_dim(); }
    int degree() const { return t12.degree(); }
};

/// Transitions are the identity; both charts parametrize (z, w) directly.
ChartAtlas identity_atlas(int fiber_dim, int degree, std::shared_ptr<const SampledCircle> circle = nullptr);
/// Atlas from t12 alone: t21 = t12^{-1}, chart 1 is the ambient frame, param[1] = t12.
ChartAtlas atlas_from_transition(const FiberedMap& t12);

struct RoundTripFixture {
    double a = 1.5;
    double b = 1.0;
    /// Chart-1 coefficients carry the factor (1 + twist z); 0 keeps the charts decoupled.
    double twist = 0.0;
    /// Global map P = (z + shear w_1^2, w + shear z w_1^2 e_M) every chart parametrizes through.
    double shear = 0.25;
    int fiber_dim = 2;
    int degree = 12;
    /// Last degree kept in the chart sums (polynomial charts); 0 keeps every degree.
    int chart_degree = 0;
};

/// Charts g_1 = (z + sum_n (a w_1)^n (1 + twist z), w) and g_2 = (z, w + e_M sum_n (b w_1 / z)^n)
/// over the global map P: t_ab = g_a o g_b^{-1}, param_a = P o g_a^{-1}.
ChartAtlas round_trip_atlas(const RoundTripFixture& fixture, std::shared_ptr<const SampledCircle> circle = nullptr);
FiberedMap round_trip_global(const RoundTripFixture& fixture, std::shared_ptr<const SampledCircle> circle);
/// min(1/a, r_min/b): the radius of the untwisted fixture's change series, with the chart-2
/// norms taken down to |z| = r_min.
double round_trip_epsilon(const RoundTripFixture& fixture, double r_min = 0.8);

/// Degree-1 normalization: factor B_12 multiplicatively, then split the additive A cocycle,
/// so the returned atlas has identity Jacobian on the zero section.
ChartAtlas trivialize_linear_part(const ChartAtlas& atlas);

struct NormalizeOptions {
    /// Radii where chart norms are measured (the overlap shrunk into the closed unit disk).
    std::vector<double> norm_radii = {0.8, 0.9, 1.0};
    double cocycle_tolerance = 1e-9;
    double identity_tolerance = 1e-9;
    /// Degrees cross-checked against solve_cousin.
    std::vector<int> crosscheck_degrees = {};
    int crosscheck_resolution = 256;
    double min_epsilon = 1e-6;
};

struct DegreeReport {
    int degree = 0;
    /// ||A^n_alpha||, ||B^n_alpha|| of the applied change in chart alpha.
    double a_norm[2] = {0, 0};
    double b_norm[2] = {0, 0};
    /// max over the transition's degree-n coefficients, before the step.
    double cocycle_norm = 0;
    double cocycle_residual = 0;
    double locality_residual = 0;
    double composition_residual = 0;
    /// solve_cousin comparison when requested; -1 otherwise.
    double crosscheck_difference = -1;
    double cousin_constant = -1;
    double cousin_ratio = -1;
    FiberedMap change[2];
};

struct RoydenResult {
    ChartAtlas atlas;
    std::vector<DegreeReport> degrees;
    /// Fitted convergence radius of the change series; +inf when every change vanishes.
    double epsilon = kInf;
    /// exp(-(slope + 2 stderr)) of the log-linear fit.
    double epsilon_lower = kInf;
    double growth_rate = 0;
    double identity_residual = 0;
};

/// Throws CocycleViolation, RadiusCollapse; InvalidArgument when the atlas is not
/// normalized in degree 1.
RoydenResult normalize_transitions(const ChartAtlas& atlas, int degree, const NormalizeOptions& options = {});

struct TubularMap {
    std::shared_ptr<const SampledCircle> circle;
    /// Chart expressions param_alpha o changes_alpha^{-1}, in the glued coordinates.
    FiberedMap chart[2];
    Cover cover;
    double epsilon = kInf;
    double safety = 0.5;
    double chart_disagreement = 0;
    /// Negative Laurent mass dropped from the disk chart, which is holomorphic on all of U_1.
    double disk_leak = 0;

    /// Ambient point for |z| <= 1 and ||w|| < safety * epsilon.
    VectorXc operator()(Complex z, const VectorXc& w) const;
    /// Series inverse of one chart expression; the disk chart keeps only k >= 0 Laurent terms.
    FiberedMap inverse(int alpha) const;
};

/// Throws ChartDisagreement when the disk chart leaks negative Laurent terms or the two
/// chart expressions differ beyond `tolerance` on the overlap, coefficients weighted by rho^degree with rho = safety min(epsilon, 1).
TubularMap assemble_tubular_map(const RoydenResult& result, double tolerance = 1e-8, double safety = 0.5);

/// Rows of t - identity with multi_index "k;e_1;..;e_M" (k the Laurent index in z).
void write_fibered_csv(std::ostream& os, const FiberedMap& t);
FiberedMap read_fibered_csv(std::istream& is, std::shared_ptr<const SampledCircle> circle, int fiber_dim, int degree);

} // namespace hk

#endif // HARTOGSKIT_ROYDEN_HPP
