#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "legflow/analysis.hpp"
#include "legflow/scenarios.hpp"

using namespace legflow;

TEST_CASE("dt selection") {
  auto imm = great_circle(64);
  FlowState st = make_state(imm, AlphaGauge{});
  StepControl ctl;
  ctl.cfl_kappa = 0.25;
  ctl.curvature_kappa = 0.1;
  ctl.max_dt = 1e-3;

  // A = 0: parabolic / max_dt ceilings only
  const double h = st.snap.h_min;
  CHECK(choose_dt(st, ctl) == doctest::Approx(std::min(0.25 * h * h, 1e-3)));

  // halved h quarters the parabolic ceiling
  auto imm2 = great_circle(128);
  FlowState st2 = make_state(imm2, AlphaGauge{});
  ctl.max_dt = 1.0;
  CHECK(choose_dt(st2, ctl) == doctest::Approx(0.25 * st2.snap.h_min * st2.snap.h_min));
  CHECK(choose_dt(st2, ctl) == doctest::Approx(0.25 * choose_dt(st, ctl) / 0.25 / 4.0)
                                   .epsilon(0.01));  // quartered vs N=64

  // curvature proxy dominates for huge A^2
  st.snap.A_norm2.setConstant(1e12);
  CHECK(choose_dt(st, ctl) == doctest::Approx(0.1e-12));
}

TEST_CASE("great circle is stationary under stepping") {
  FlowState st = make_state(great_circle(128), AlphaGauge{});
  StepControl ctl;
  const std::vector<ChartPoint> before = st.imm.verts;
  step(st, 1e-3, ctl, AlphaGauge{});
  double disp = 0;
  for (int v = 0; v < st.imm.num_vertices(); ++v)
    disp = std::max(disp, (st.imm.verts[v].x - before[v].x).norm());
  CHECK(disp < 1e-10);
}

TEST_CASE("anchored nonzero alpha produces a Reeb rotation at speed 2c") {
  const double c = 0.5;
  AlphaGauge gauge;
  gauge.anchor_value = c;
  FlowState st = make_state(great_circle(128), gauge);
  StepControl ctl;
  ctl.integrator = StepControl::Integrator::RK2;
  ctl.restore_policy = StepControl::RestorePolicy::Off;
  const std::vector<ChartPoint> before = st.imm.verts;
  const double dt = 5e-4;
  const int steps = 100;
  for (int i = 0; i < steps; ++i) step(st, dt, ctl, gauge);
  const double ang = 2.0 * c * dt * steps;  // Reeb flow z -> cos a z - sin a iz
  double worst = 0;
  for (int v = 0; v < st.imm.num_vertices(); ++v) {
    const Vec& z = before[v].x;
    Vec iz(4);
    iz << -z[1], z[0], -z[3], z[2];
    const Vec expect = std::cos(ang) * z - std::sin(ang) * iz;
    worst = std::max(worst, (st.imm.verts[v].x - expect).norm());
  }
  CHECK(worst < 1e-6);
  // shape invariant
  CHECK(std::abs(compute_snapshot(st.imm, gauge).area - 2 * M_PI) < 1e-3);
}

TEST_CASE("restoration: no-op, injected drift, and policy insensitivity") {
  auto imm = great_circle(128);
  CHECK(restore_legendrian(imm) == 0.0);  // already Legendrian

  const double eps = 1e-4;
  DiscreteImmersion drifted = imm;
  drifted.verts[31].x += eps * imm.model->reeb(imm.verts[31]);
  drifted.verts[31].x = imm.model->project_to_model(drifted.verts[31]);
  const double disp = restore_legendrian(drifted);
  CHECK(legendrian_residual(drifted) < 1e-8);
  CHECK(disp > 0.0);
  CHECK(disp < 20 * eps);  // correction within O(eps)

  // every_k(10) vs every_k(1) end in the same shape
  RunSpec s1, s10;
  s1.control.max_dt = 5e-4;
  s1.stopping.t_max = 0.2;
  s1.stopping.tol_stop = 1e-6;
  s10 = s1;
  s10.control.restore_k = 10;
  auto t1 = run_flow(perturbed_great_circle(128, 0.05, 3), s1);
  auto t10 = run_flow(perturbed_great_circle(128, 0.05, 3), s10);
  std::vector<Vec> p1, p10;
  for (const auto& p : t1.snapshots.back().verts) p1.push_back(p.x);
  for (const auto& p : t10.snapshots.back().verts) p10.push_back(p.x);
  CHECK(hausdorff_distance(p1, p10) < 1e-4);
}

TEST_CASE("perturbed circle flows to a great circle") {
  RunSpec spec;
  spec.control.max_dt = 5e-4;
  spec.stopping.tol_stop = 5e-4;
  spec.stopping.t_max = 4.0;
  spec.cadence = 100;
  auto traj = run_flow(perturbed_great_circle(128, 0.05, 3), spec);
  CHECK(traj.termination == "stationary");
  CHECK(traj.complete);
  CHECK(traj.series.back().a2_max < 1e-4);
  CHECK(hausdorff_to_best_great_circle(traj.snapshots.back()) < 5e-3);
  // area non-increasing up to per-step slack
  for (std::size_t i = 1; i < traj.series.size(); ++i)
    CHECK(traj.series[i].area <=
          traj.series[i - 1].area + 1e-6 + 1e-2 * traj.series[i].dt);
}

TEST_CASE("near-stationary states move slowly when stepped") {
  RunSpec spec;
  spec.control.max_dt = 5e-4;
  spec.stopping.tol_stop = 1e-3;
  spec.stopping.t_max = 4.0;
  auto traj = run_flow(perturbed_great_circle(96, 0.03, 2), spec);
  REQUIRE(traj.termination == "stationary");
  FlowState st = make_state(traj.snapshots.back(), spec.gauge);
  const double tol = spec.stopping.tol_stop;
  const double dt = 5e-4;
  const std::vector<ChartPoint> before = st.imm.verts;
  step(st, dt, spec.control, spec.gauge);
  for (int v = 0; v < st.imm.num_vertices(); ++v)
    CHECK((st.imm.verts[v].x - before[v].x).norm() < 10 * tol * dt);
}

TEST_CASE("singularity classifier on synthetic series") {
  const double t0 = 1.0;
  std::vector<double> t, a1, a2, abd;
  for (int i = 0; i < 200; ++i) {
    const double ti = 0.995 * t0 * i / 199.0;
    t.push_back(ti);
    a1.push_back(1.0 / (t0 - ti));
    a2.push_back(1.0 / std::pow(t0 - ti, 2));
    abd.push_back(2.0 + 0.1 * std::sin(10 * ti));
  }
  auto r1 = classify_singularity(t, a1, true);
  CHECK(r1.type == "I");
  CHECK(r1.C_fit == doctest::Approx(1.0).epsilon(0.02));
  CHECK(r1.t0_estimate == doctest::Approx(t0).epsilon(0.01));

  auto r2 = classify_singularity(t, a2, true);
  CHECK(r2.type == "II");

  auto r3 = classify_singularity(t, abd, false);
  CHECK(r3.type == "none");
}

TEST_CASE("bowtie curve shrinks to a guard-triggered singularity") {
  RunSpec spec;
  spec.control.max_dt = 5e-4;
  spec.control.redistribute = true;
  spec.stopping.tol_stop = 1e-6;
  spec.stopping.t_max = 1.0;
  spec.stopping.guard_a2 = 5e3;
  spec.cadence = 20;
  auto traj = run_flow(bowtie_curve(96, 0.8, 0.4), spec);
  CHECK(traj.termination == "guard");
  auto rep = classify_singularity(traj);
  CHECK(rep.detected);
  CHECK(rep.fit_quality > 0.99);
  CHECK(rep.t0_estimate > traj.series.back().t);
}

TEST_CASE("evolution residuals vanish on the stationary circle") {
  RunSpec spec;
  spec.control.fixed_dt = 2e-4;
  spec.stopping.tol_stop = 1e-30;  // force steps
  spec.stopping.t_max = 10 * 2e-4;
  spec.cadence = 1;
  auto traj = run_flow(great_circle(96), spec);
  auto rep = evolution_residuals(traj);
  CHECK(rep.get("alpha_residual_max") < 1e-8);
  CHECK(rep.get("alpha_residual_l2") < 1e-8);
}

TEST_CASE("evolution residuals require uniform cadence") {
  RunSpec spec;
  spec.control.fixed_dt = 2e-4;
  spec.stopping.tol_stop = 1e-30;
  spec.stopping.t_max = 10 * 2e-4;
  spec.cadence = 1;
  auto traj = run_flow(great_circle(96), spec);
  traj.fields[1].time += 1e-5;  // break the cadence
  CHECK_THROWS_AS(evolution_residuals(traj), Error);
}
