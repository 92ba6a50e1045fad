#ifndef HARTOGSKIT_LOOPSPACE_HPP
#define HARTOGSKIT_LOOPSPACE_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "hartogskit/hartogs.hpp"
#include "hartogskit/types.hpp"

namespace hk {

/// Truncated Fourier model of a loop S^1 -> C^N in W^{k,2}: coefficients c_m, |m| <= modes.
class SobolevLoop {
public:
    /// Zero loop. Throws InvalidArgument unless dim >= 1, k >= 1 and modes >= 0.
    SobolevLoop(int dim, int k, int modes = 32);

    static SobolevLoop constant(const VectorXc& value, int k, int modes = 32);
    /// Trapezoidal Fourier coefficients of f on `nodes` >= 4 modes points; the k-weighted norm of
    /// the resolved modes beyond the cutoff is kept as tail_bound().
    static SobolevLoop from_function(const std::function<VectorXc(double)>& f, int dim, int k, int modes = 32,
                                     int nodes = 256);

    int dim() const { return dim_; }
    int order() const { return k_; }
    int modes() const { return modes_; }

    const VectorXc& coefficient(int m) const { return coeffs_[index(m)]; }
    VectorXc& coefficient(int m) { return coeffs_[index(m)]; }

    VectorXc operator()(double s) const;
    /// k-weighted norm of the modes dropped at construction.
    double tail_bound() const { return tail_; }
    /// Bound on sup_s |f(s) - truncation(s)| from the tail norm (Cauchy-Schwarz against the weights).
    double sup_tail_bound() const;

    /// Same loop with the cutoff moved; added modes are zero.
    SobolevLoop with_modes(int modes) const;

    /// Coefficients stacked by mode (m = -modes..modes), components fastest.
    VectorXc flatten() const;
    static SobolevLoop unflatten(const VectorXc& v, int dim, int k, int modes);

private:
    std::size_t index(int m) const;

    int dim_, k_, modes_;
    std::vector<VectorXc> coeffs_;
    double tail_ = 0;
};

/// (sum_m (1 + |m|)^{2k} |c_m|^2)^{1/2} with the loop's own k.
double sobolev_norm(const SobolevLoop& loop);
/// Same with an explicit weight order k >= 0 (k = 0 is the L^2 norm).
double sobolev_norm(const SobolevLoop& loop, int k);
double sobolev_distance(const SobolevLoop& a, const SobolevLoop& b);

/// z -> F(z, .) from a base domain in C^d into W^{k,2}(S^1, C^N).
struct LoopFamily {
    int base_dim = 2;
    int dim = 1;
    int k = 1;
    int modes = 32;
    std::function<SobolevLoop(const VectorXc&)> loop;

    /// Pointwise F(z, s); each loop is resolved on `nodes` points and throws InsufficientTerms when
    /// its tail exceeds tail_tolerance * max(1, norm).
    static LoopFamily from_pointwise(const std::function<VectorXc(const VectorXc&, double)>& f, int base_dim, int dim,
                                     int k, int modes = 32, int nodes = 256, double tail_tolerance = 1e-10);

    /// z -> c_m(z).
    HoloMap mode(int m) const;
    /// z -> all coefficients, stacked as in SobolevLoop::flatten.
    HoloMap flattened() const;
};

struct LoopExtensionOptions {
    ExtensionOptions extension;
    /// Targets of the norm certificate and continuity modulus; empty means a 4-per-axis interior
    /// grid of the closed polydisk sampled by the extension.
    std::vector<VectorXc> targets;
    /// Distinguished-boundary samples per variable for the maximum-principle certificate.
    int boundary_nodes = 16;
    double certificate_slack = 1e-6;
    /// Cauchy-Riemann check of every mode at figure samples (relative tolerance).
    double mode_cr_tolerance = 1e-5;
    int mode_cr_points = 4;
};

struct LoopExtensionResult {
    LoopFamily extended;
    ExtensionResult extension;
    std::vector<VectorXc> targets;
    std::vector<double> target_norms;
    /// max of sobolev_norm(F(z', .)) over distinguished-boundary samples z'.
    double boundary_max_norm = 0;
    /// max target norm / boundary_max_norm over targets in the closed sampled polydisk.
    double certificate_ratio = 0;
    /// max over target pairs of ||F(z) - F(z')||_{W^{k,2}} / |z - z'|.
    double continuity_modulus = 0;
    double mode_cr_residual = 0;
};

/// Mode-by-mode Hartogs extension of F from the figure to the target. Extension errors are
/// rethrown tagged with the failing mode; NormBlowup when the maximum-principle certificate fails.
LoopExtensionResult extend_loop_family(const LoopFamily& family, const HartogsFigure& figure,
                                       const LoopExtensionOptions& options = {});

/// max_z ||F(z)|| / max_{z'} ||F(z')||; throws NormBlowup above 1 + slack.
double certify_max_principle(const LoopFamily& family, const std::vector<VectorXc>& targets,
                             const std::vector<VectorXc>& boundary, double slack = 1e-6);

/// Ball automorphism of B^q interchanging a and 0; h_0(z) = -z.
VectorXc ball_automorphism(const VectorXc& a, const VectorXc& z);

/// phi_t(z, s) = (h_{f^q(s)}(z), t f^n(s)) for z in the closed unit ball of C^q.
struct MobiusDiskFamily {
    SobolevLoop fq, fn;
    int nodes = 256;
    /// 1 - max_s max(|f^q(s)|, |f^n(s)|) over the sampled s.
    double ball_margin = 0;

    int q() const { return fq.dim(); }
    int n() const { return fn.dim(); }

    VectorXc operator()(double t, const VectorXc& z, double s) const;
    /// The loop phi_t(z, .) in W^{k,2}(S^1, C^{q+n}).
    SobolevLoop loop(double t, const VectorXc& z) const;
    /// max over |z| = 1 samples and s of ||h(z)| - 1|: first components of boundary loops lie
    /// in the shell 1 - r < |.| < 1 + r for any r above this.
    double shell_deviation(int z_samples = 64) const;
    /// min over |z| = 1 samples and s of 1 - |t f^n(s)| at the given t.
    double fiber_margin(double t) const;
};

/// Throws LoopEscapesBall when either loop leaves its unit ball on the sampled s; InvalidArgument when
/// the loops disagree on k or the mode count.
MobiusDiskFamily mobius_disk_family(const SobolevLoop& fq, const SobolevLoop& fn, int nodes = 256);

/// Rows m,component,re,im.
void write_loop_csv(std::ostream& os, const SobolevLoop& loop);
SobolevLoop read_loop_csv(std::istream& is, int k);

} // namespace hk

#endif // HARTOGSKIT_LOOPSPACE_HPP
