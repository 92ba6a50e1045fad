#ifndef HARTOGSKIT_CONTINUATION_HPP
#define HARTOGSKIT_CONTINUATION_HPP

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "hartogskit/hartogs.hpp"
#include "hartogskit/quadrature.hpp"
#include "hartogskit/types.hpp"

namespace hk {

/// Open set U of the ambient space given by a signed margin (positive inside).
struct Region {
    std::function<double(const VectorXc&)> margin;

    bool contains(const VectorXc& x) const { return margin(x) > 0; }
};

/// Disks phi_t : D_t -> C^N, D_t = {|lambda - center(t)| < radius(t)}, defined on a
/// neighbourhood of the closed disk and holomorphic in lambda.
struct DiskFamily {
    int ambient_dim = 2;
    std::function<Complex(double)> center = [](double) { return Complex(0.0, 0.0); };
    std::function<double(double)> radius = [](double) { return 1.0; };
    std::function<VectorXc(double, Complex)> map;
};

struct FamilyCheckOptions {
    int t_samples = 33;
    int boundary_samples = 64;
    int interior_rings = 8;
};

struct FamilyReport {
    /// min margin of phi_0 over the closed disk (condition i).
    double initial_margin = 0;
    /// min margin of phi_t over the boundary circles (condition ii), and where it occurs.
    double boundary_margin = 0;
    double worst_t = 0;
    /// max over consecutive samples of sup |phi_t - phi_t'| / |t - t'|, and of the jump itself.
    double lipschitz = 0;
    double max_jump = 0;
    /// max Cauchy-Riemann residual of lambda -> phi_t(lambda), relative to sup |phi_t|.
    double cr_residual = 0;
};

/// Samples both hypotheses of the continuity principle; never throws for a bad family.
FamilyReport check_family(const DiskFamily& family, const Region& region, const FamilyCheckOptions& options = {});

/// f_t on a tube around the graph of phi_t in C x C^N. Local coordinates (zeta, w):
/// lambda = center + scale zeta, x = phi_t(lambda) + tube_radius frame w, with |zeta| < 1 and
/// max |w_i| < 1. The element is the cylinder prolongation: it depends on (lambda, x).
struct FunctionElement {
    double t = 0;
    Complex center{0.0, 0.0};
    double scale = 1;
    double tube_radius = 0.2;
    MatrixXc frame;
    std::function<VectorXc(double, Complex)> map;
    /// Taylor table in (zeta, w) on the polytorus of radius table_radius.
    PolytorusCoefficients table;
    double table_radius = 0.9;

    /// Hartogs step diagnostics (zero for the initial element).
    double overlap_residual = 0;
    double sup_bound = 0;
    /// max |f_t - f_t'| against the previous element on shared samples.
    double coherence = 0;
    /// Normalized displacement of this disk in the previous element's coordinates.
    double step_size = 0;

    VectorXc local(Complex lambda, const VectorXc& x) const;
    VectorXc point(Complex zeta, const VectorXc& w) const;
    /// Whether (lambda, x) lies in the tube with |zeta|, max |w_i| <= 1 - margin.
    bool covers(Complex lambda, const VectorXc& x, double margin = 0.05) const;
    VectorXc value(Complex lambda, const VectorXc& x) const;
    VectorXc value_local(const VectorXc& zw) const;
    /// f_t at the centre of the disk: lambda = center, x = phi_t(center).
    VectorXc center_value() const;
};

struct ContinuationOptions {
    /// Hartogs figure parameter in tubular coordinates.
    double r = 0.2;
    double tube_radius = 0.2;
    double max_step = 0.125;
    double min_step = 1.0 / 4096;
    int boundary_samples = 128;
    /// Polytorus nodes per variable (a power of two) for the stored elements.
    int table_nodes = 32;
    int coherence_samples = 50;
    double coherence_tolerance = 1e-8;
    /// Rotation angle of the adapted fiber frame (coordinate-independence checks).
    double frame_rotation = 0.0;
    ExtensionOptions extension = default_extension();

    static ExtensionOptions default_extension()
    {
        ExtensionOptions e;
        e.node_count = 64;
        e.line_node_count = 32;
        e.overlap_tolerance = 1e-8;
        e.overlap_samples = 60;
        return e;
    }
};

struct ContinuationResult {
    std::vector<FunctionElement> elements;
    FamilyReport family;
    /// max coefficient deviation of the tubular map from the identity (graphs have trivial
    /// normal bundles, so this is rounding).
    double tubular_deviation = 0;
    int halvings = 0;
};

/// Continues f (given on U) along the family t in [0, 1]. Throws BoundaryEscape, StepCollapse,
/// and whatever the Hartogs step raises (SlowDecay, OverlapMismatch, ...); messages carry the t
/// at which the run stopped. Elements reached before a failure are left in `partial`.
ContinuationResult continue_along(const HoloMap& f, const Region& region, const DiskFamily& family,
                                  const ContinuationOptions& options = {},
                                  std::vector<FunctionElement>* partial = nullptr);

// Fixtures.

struct ContinuationFixture {
    HoloMap f;
    Region region;
    DiskFamily family;
    std::string name;
};

/// phi_t(lambda) = (lambda, t c) in C^2 and U = {|x_1| < 1.45, |x_2| < inner} u
/// {0.6 < |x_1| < 1.45, |x_2| < |c| + outer_margin}; f(x) = 1 / (x_2 - 2).
ContinuationFixture swept_bidisk_fixture(Complex c, double inner = 0.35, double outer_margin = 0.3);
/// Same family with f = 1 / (x_2 - t_star c) and U declared as the whole bidisk
/// {|x_1| < 1.45, |x_2| < |c| + outer_margin}: the hypotheses hold on every sample while the pole
/// sits inside the swept set.
ContinuationFixture pole_fixture(Complex c, double t_star, double outer_margin = 0.3);
/// A polynomial f on the swept-bidisk region.
ContinuationFixture polynomial_fixture(Complex c);

/// CSV trace: t, step_size, overlap_residual, coherence, sup_bound, re/im of the centre value.
void write_continuation_csv(std::ostream& os, const ContinuationResult& result);

} // namespace hk

#endif // HARTOGSKIT_CONTINUATION_HPP
