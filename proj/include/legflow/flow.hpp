#pragma once

#include "legflow/mesh.hpp"

namespace legflow {

struct StepControl {
  double cfl_kappa = 0.25;       // dt <= kappa * h_min^2
  double curvature_kappa = 0.1;  // dt <= kappa' / max A_norm2
  double max_dt = 1e-3;
  double fixed_dt = 0;           // > 0 forces a constant step

  enum class RestorePolicy { Off, EveryK, Threshold };
  RestorePolicy restore_policy = RestorePolicy::EveryK;
  int restore_k = 1;
  double restore_threshold = 1e-8;  // residual triggering restoration
  double restore_tol = 1e-8;

  enum class Integrator { Euler, RK2 };
  Integrator integrator = Integrator::Euler;

  // Curve runs heading into a singularity bunch vertices tangentially and
  // stall the parabolic dt ceiling; this blends vertices toward uniform
  // arc length each step (shape-preserving reparametrization, dim 1 only).
  bool redistribute = false;

  void validate() const;
};

/// Blend curve vertices toward the uniform arc-length parametrization of the
/// current polyline (0 < blend <= 1); the anchor vertex 0 stays fixed.
void redistribute_curve(DiscreteImmersion& imm, double blend);

struct StoppingSpec {
  double tol_stop = 1e-3;   // stationarity: max |H - 2 alpha T|
  double t_max = 10.0;
  double guard_a2 = 1e6;    // blow-up guard on max A_norm2
  double guard_measure_ratio = 1e-10;  // min element measure vs initial mean
};

struct FlowState {
  DiscreteImmersion imm;
  GeometrySnapshot snap;
  int step_index = 0;
  double dt_last = 0;
  double cumulative_drift = 0;   // integrated Legendrian drift before restores
  double last_restore_disp = 0;
};

FlowState make_state(DiscreteImmersion imm, const AlphaGauge& gauge);

double choose_dt(const FlowState& state, const StepControl& control);

/// Per-vertex Gauss-Newton correction in span{T, Phi(edge dirs)} zeroing the
/// edge-wise eta residuals; returns the max displacement. Throws after 20
/// sweeps without convergence.
double restore_legendrian(DiscreteImmersion& imm, double tol = 1e-8, int max_sweeps = 20,
                          double* measured_drift = nullptr);

/// One flow step (explicit Euler or midpoint RK2) of velocity H - 2 alpha T;
/// applies the restoration policy and recomputes the snapshot.
void step(FlowState& state, double dt, const StepControl& control, const AlphaGauge& gauge);

struct SeriesRow {
  double t = 0, area = 0, omega_min = 0, omega_max = 0, a2_max = 0, h_max = 0;
  double alpha_min = 0, alpha_max = 0, leg_residual = 0, dt = 0, restored_displacement = 0;
};

struct Trajectory {
  ModelPtr model;
  AlphaGauge gauge;
  std::vector<SeriesRow> series;
  std::vector<DiscreteImmersion> snapshots;   // at cadence, plus initial/final
  std::vector<GeometrySnapshot> fields;       // matching field snapshots
  std::string termination;                    // stationary | t_max | guard | failed
  bool complete = false;
  double initial_mean_measure = 0;
};

struct RunSpec {
  StepControl control;
  StoppingSpec stopping;
  AlphaGauge gauge;
  int cadence = 10;  // snapshot every this many steps
  int max_steps = 2000000;
};

Trajectory run_flow(DiscreteImmersion initial, const RunSpec& spec);

struct SingularityReport {
  bool detected = false;
  double t0_estimate = 0;
  std::string type;  // "I", "II", "none", "inconclusive"
  double C_fit = 0;
  double p_fit = 0;
  double fit_quality = 0;  // R^2
  int fit_window = 0;
};

SingularityReport classify_singularity(const std::vector<double>& t,
                                       const std::vector<double>& a2_max,
                                       bool guard_triggered);
SingularityReport classify_singularity(const Trajectory& traj);

/// Central-difference time derivatives of alpha and Omega per vertex against
/// their evolution equations over uniform-cadence snapshot triples. Residuals
/// are reported modulo the spatially constant gauge mode of alpha, whose
/// drift is reported separately.
ReportRecord evolution_residuals(const Trajectory& traj);

/// Discrete Laplace-Beltrami of a per-vertex scalar field.
Vec laplacian_scalar(const DiscreteImmersion& imm, const Vec& f);

}  // namespace legflow
