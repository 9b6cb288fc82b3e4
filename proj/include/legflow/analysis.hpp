#pragma once

#include "legflow/flow.hpp"

namespace legflow {

/// Backward heat kernel parameters.
struct KernelSpec {
  Vec y0;        // center in realization coordinates
  double t0 = 0; // strictly after every evaluated snapshot time
  int n = 1;     // submanifold dimension
};

/// Realization-space view of one snapshot: everything the Gaussian-density
/// machinery needs, valid for isometric (round S^3) and flat-diagnostic
/// models.
struct AmbientSlice {
  int n = 1;
  double time = 0;
  std::vector<Vec> pos;
  Vec mass;                    // lumped vertex measures (realization metric)
  std::vector<Vec> H, T, E;    // per-vertex ambient vectors
  Vec alpha;
  Vec A_norm2;
  std::vector<std::vector<Vec>> tangent;  // per-vertex Euclidean-orthonormal
  double element_measure_sum = 0;
};

AmbientSlice make_slice(const DiscreteImmersion& imm, const GeometrySnapshot& snap);

/// Parabolic dilation (y,t) -> (lambda (y - y0), lambda^2 (t - t0)) applied to
/// a slice; fields rescale algebraically (positions x lambda, vectors / lambda,
/// alpha invariant, measures x lambda^n, |A|^2 / lambda^2).
AmbientSlice dilate_slice(const AmbientSlice& s, const Vec& y0, double t0, double lambda);

double backward_kernel(const Vec& y, const Vec& y0, double tau, int n);

/// Quadrature of the backward kernel over the immersion (element midpoints).
double gaussian_density(const DiscreteImmersion& imm, const KernelSpec& spec);
double gaussian_density(const AmbientSlice& slice, const KernelSpec& spec);

struct DensityRow {
  double t = 0;
  double density = 0;
  double bracket = 0;    // int (4 alpha^2 + |E|^2) rho
  double defect = 0;     // int |H - 2 alpha T - E + F_perp/(2 tau)|^2 rho
  double defect_a = 0;   // int |H + F_perp/(2 tau)|^2 rho
  double ddt_density = 0;        // centered difference (interior rows)
  double identity_residual = 0;  // interior rows
  bool inequality_violated = false;
};

struct DensitySeries {
  std::vector<DensityRow> rows;
  double max_identity_residual = 0;
  int violations = 0;
};

/// Discrete monotonicity bookkeeping: the exact pre-inequality identity
///   d/dt int rho = -1/2 (defect_a + defect) + 1/2 bracket
/// and the inequality d/dt int rho <= bracket - 1/2 defect, checked per
/// interval within `slack`.
DensitySeries monotonicity_series(const Trajectory& traj, const KernelSpec& spec,
                                  double slack = 1e-3);

struct DilationView {
  double lambda = 1;
  std::vector<double> s;          // rescaled times
  std::vector<AmbientSlice> slices;
  std::vector<double> density;    // of rho_{0,0} over each rescaled slice
  std::vector<double> a2_max;
};

DilationView parabolic_dilate(const Trajectory& traj, const KernelSpec& spec, double lambda);

enum class ShrinkerMode { Static, SelfSimilar };

struct ShrinkerResidual {
  double residual = 0;        // L2(rho) norm of the defining equation
  double residual_printed = 0;  // variant without the ambient correction term
  double weight = 0;          // total rho-mass used
};

/// Static: H - 2 alpha T + F_perp; self-similar at s: H - 2 alpha T - E -
/// F_perp/(2s) (the printed variant drops E). F_perp is the realization
/// normal part of the position relative to the kernel center.
ShrinkerResidual shrinker_residual(const AmbientSlice& slice, ShrinkerMode mode,
                                   double s = -1.0, const Vec* y0 = nullptr);
ShrinkerResidual shrinker_residual(const DiscreteImmersion& imm,
                                   const GeometrySnapshot& snap, ShrinkerMode mode,
                                   double s = -1.0);

/// gamma e^{ct} / sqrt(1 + gamma^2 e^{2ct}) with gamma/sqrt(1+gamma^2) =
/// omega_min0.
double ode_lower_bound(double omega_min0, double c, double t);

/// Min over the trajectory of omega_min(t) - bound(t); asserts >= -slack.
ReportRecord check_bound(const Trajectory& traj, double slack);

struct InequalityReport {
  int violations_h = 0;       // |H|^2 <= 4/3 |A|^2 beyond slack
  int violations_grad = 0;    // |grad Omega|^2 <= 4/3 (1 - Omega^2)|A|^2
  double worst_margin_h = 0;  // most negative margin seen
  double worst_margin_grad = 0;
  double psi_max = 0;         // max |A|^2 / Omega^6
  int graph_loss_vertices = 0;  // Omega <= 0 (psi undefined)
};

InequalityReport pointwise_inequalities(const GeometrySnapshot& snap, double slack);

/// Hausdorff distance between a closed curve in the ambient sphere chart and
/// the best-fit great circle (least-squares plane through the origin).
double hausdorff_to_best_great_circle(const DiscreteImmersion& imm);

/// Per-snapshot psi_max series and its least-squares trend slope.
struct PsiTrend {
  std::vector<double> t;
  std::vector<double> psi_max;
  double slope = 0;
  double running_max = 0;
};
PsiTrend psi_trend(const Trajectory& traj);

}  // namespace legflow
