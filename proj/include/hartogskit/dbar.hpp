#ifndef HARTOGSKIT_DBAR_HPP
#define HARTOGSKIT_DBAR_HPP

#include <algorithm>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hartogskit/types.hpp"

namespace hk {

enum class DomainKind { Disk, Annulus, Rectangle };

/// Disk, annulus or axis-aligned rectangle in C, with the number of grid cells across
/// the longer side of its bounding box.
struct PlanarDomain {
    DomainKind kind = DomainKind::Disk;
    Complex center{0.0, 0.0};
    double radius = 1.0;              // disk
    double inner = 0.0, outer = 0.0;  // annulus
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0; // rectangle
    int resolution = 128;

    static PlanarDomain disk(Complex c, double r, int resolution = 128);
    static PlanarDomain annulus(Complex c, double inner, double outer, int resolution = 128);
    static PlanarDomain rectangle(double x0, double x1, double y0, double y1, int resolution = 128);

    /// Positive inside, negative outside; magnitude is the distance to the boundary.
    double signed_distance(Complex z) const;
    bool contains(Complex z) const { return signed_distance(z) > 0; }
    double area() const;
    double smallest_feature() const;
};

/// Cell-centred grid over the bounding box with exact-to-subsampling area fractions.
struct PlanarGrid {
    double x0 = 0, y0 = 0, h = 0;
    int nx = 0, ny = 0;
    Eigen::ArrayXXd weight; // (ny, nx), fraction of the cell inside the domain
    Eigen::ArrayXXd depth;  // signed distance of each cell centre to the boundary
    double feature = 0;

    /// Cells far enough from the boundary that cut-cell errors are below grid order:
    /// depth >= max(3 h, feature / 8).
    bool deep(int iy, int ix) const { return depth(iy, ix) >= std::max(3 * h, feature / 8); }

    Complex point(int iy, int ix) const { return {x0 + (ix + 0.5) * h, y0 + (iy + 0.5) * h}; }
    /// Full cell whose (2 radius + 1)^2 neighbourhood is also full.
    bool interior(int iy, int ix, int radius = 1) const;
};

/// Throws DegenerateDomain (zero area) or ResolutionTooCoarse (h > smallest feature / 32).
std::shared_ptr<const PlanarGrid> make_grid(const PlanarDomain& d);

struct GridFunction {
    std::shared_ptr<const PlanarGrid> grid;
    Eigen::MatrixXcd values; // (ny, nx)

    static GridFunction sample(std::shared_ptr<const PlanarGrid> grid, const std::function<Complex(Complex)>& g);
    /// max |values| over cells that meet the domain.
    double sup() const;
};

struct CauchyOptions {
    /// Add the exact contribution of a linear g over the singular cell.
    bool self_cell_correction = true;
    bool check_residual = true;
    double residual_factor = 10.0;
};

struct CauchyResult {
    GridFunction u;
    /// max over deep cells of |dbar_h u - g|.
    double dbar_residual = 0;
    /// Grid-order bound h^2 (|g| + |D^2 g|) the residual is measured against.
    double expected_bound = 0;
};

/// u(z) = -(1/pi) integral_D g(zeta) / (zeta - z) dA by midpoint quadrature as an FFT
/// convolution. Throws NonFinite, ResolutionTooCoarse.
CauchyResult cauchy_transform(const GridFunction& g, const CauchyOptions& options = {});

/// Same quadrature evaluated at an arbitrary point; cells near z are integrated exactly.
Complex cauchy_transform_at(const GridFunction& g, Complex z);

/// Centred-difference dbar of a grid function; zero outside interior cells.
Eigen::MatrixXcd dbar_grid(const GridFunction& u);

/// Shared series CSV layout with multi_index "ix;iy" and degree ix + iy.
void write_grid_csv(std::ostream& os, const GridFunction& g);

/// sup over domain cells of (1/pi) integral_D dA / |zeta - z|.
double sup_constant(const PlanarDomain& d);

// Cousin problem over covers of a neighbourhood of the closed unit disk.

struct CoverSet {
    DomainKind kind = DomainKind::Disk; // Disk or Annulus
    Complex center{0.0, 0.0};
    double radius = 0, inner = 0, outer = 0;

    static CoverSet disk(Complex c, double r);
    static CoverSet annulus(Complex c, double inner, double outer);

    bool contains(Complex z) const;
    /// Normalised distance t in [0, 1) inside the set, >= 1 outside.
    double t(Complex z) const;
    /// Bump (1 - t^2)^3 and its dbar.
    double bump(Complex z) const;
    Complex bump_dbar(Complex z) const;
    /// Farthest point of the set from the origin.
    double reach() const;
};

struct Cover {
    std::vector<CoverSet> sets;
    /// Estimates are reported on the closed disk of this radius; the union must contain
    /// the disk of radius base_radius + margin.
    double base_radius = 1.0;
    double margin = 0.1;

    /// U1 = {|z| < 1.1}, U2 = {0.7 < |z| < 1.3}; the overlap is the annulus around |z| = 0.9.
    static Cover standard_two_chart();
    /// Adds a disk around 0.9 to the two charts, giving triple overlaps.
    static Cover standard_three_chart();

    int size() const { return static_cast<int>(sets.size()); }
    /// Checks containment, multiplicity <= 3 and connected pairwise intersections on a
    /// sample grid. Throws InvalidArgument.
    void validate() const;
};

class PartitionOfUnity {
public:
    explicit PartitionOfUnity(const Cover& cover) : cover_(cover) {}
    double rho(int alpha, Complex z) const;
    Complex rho_dbar(int alpha, Complex z) const;
    double sum(Complex z) const;

private:
    Cover cover_;
};

using ChartFunction = std::function<VectorXc(Complex)>;

/// f_{alpha beta} for alpha < beta; f_{beta alpha} = -f_{alpha beta} and f_{alpha alpha} = 0.
struct AdditiveCocycle {
    int charts = 0;
    int dim = 1;
    std::map<std::pair<int, int>, ChartFunction> pieces;

    void set(int alpha, int beta, ChartFunction f);
    /// Zero when the pair has no piece.
    VectorXc operator()(int alpha, int beta, Complex z) const;
};

struct CousinOptions {
    int resolution = 256;
    double cocycle_tolerance = 1e-8;
    /// Holomorphy of each c_alpha, relative to max |f|, before ResolutionTooCoarse.
    double cr_tolerance = 2e-2;
};

struct CousinSolution {
    Cover cover;
    /// c_alpha, holomorphic on U_alpha.
    std::vector<ChartFunction> c;
    /// A-priori constant 1 + gamma_D sup sum |dbar rho|.
    double constant = 0;
    double gamma = 0;
    double dbar_rho_sup = 0;
    /// max_alpha sup |c_alpha| over U_alpha and the closed base disk, over max |f|.
    double measured_ratio = 0;
    double input_sup = 0;
    double delta_residual = 0;
    double cr_residual = 0;
    double cocycle_residual = 0;
    double dbar_residual = 0;
};

CousinSolution solve_cousin(const Cover& cover, const AdditiveCocycle& cocycle, const CousinOptions& options = {});

} // namespace hk

#endif // HARTOGSKIT_DBAR_HPP
