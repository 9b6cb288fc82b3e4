#include <cstdlib>
#include <cstdio>
#include <Eigen/Sparse>
#include <algorithm>
#include <sstream>

#include "legflow/flow.hpp"

namespace legflow {

void StepControl::validate() const {
  if (cfl_kappa <= 0) throw validation_error("cfl_kappa must be positive");
  if (curvature_kappa <= 0) throw validation_error("curvature_kappa must be positive");
  if (max_dt <= 0) throw validation_error("max_dt must be positive");
  if (restore_k <= 0) throw validation_error("restore_k must be positive");
  if (restore_tol <= 0) throw validation_error("restore_tol must be positive");
  if (fixed_dt < 0) throw validation_error("fixed_dt must be >= 0");
}

FlowState make_state(DiscreteImmersion imm, const AlphaGauge& gauge) {
  FlowState st;
  st.imm = std::move(imm);
  st.snap = compute_snapshot(st.imm, gauge);
  return st;
}

double choose_dt(const FlowState& state, const StepControl& control) {
  control.validate();
  if (control.fixed_dt > 0) return control.fixed_dt;
  const double h = state.snap.h_min;
  const double a2 = std::max(state.snap.A_norm2.size() ? state.snap.A_norm2.maxCoeff() : 0.0, 0.0);
  double dt = std::min(control.cfl_kappa * h * h, control.max_dt);
  if (a2 > 0) dt = std::min(dt, control.curvature_kappa / a2);
  return dt;
}

namespace {

double g_inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

// eta residual of an edge, measured in pa's chart, with endpoint
// displacements given in each endpoint's own chart.
double edge_eta_residual(const SasakiModel& m, const ChartPoint& pa, const Vec& da,
                         const ChartPoint& pb, const Vec& db) {
  ChartPoint a = pa;
  if (da.size()) a.x += da;
  if (m.has_constraint()) a.x = m.project_to_model(a);
  ChartPoint b = pb;
  if (db.size()) b.x += db;
  if (m.has_constraint()) b.x = m.project_to_model(b);
  const Vec xb = coords_in_chart(m, b, a.chart, a.x);
  ChartPoint mid{a.chart, 0.5 * (a.x + xb)};
  mid.x = m.project_to_model(mid);
  const Vec d = xb - a.x;
  return m.eta(mid).dot(d);
}

}  // namespace

double restore_legendrian(DiscreteImmersion& imm, double tol, int max_sweeps,
                          double* measured_drift) {
  const SasakiModel& m = *imm.model;
  const MeshTopology& topo = get_topology(imm);
  const int V = imm.num_vertices();
  const int NE = int(topo.edges.size());
  const int nb = 1 + imm.dim;  // per-vertex correction dofs
  double total_disp = 0;

  const Vec none;
  auto edge_residual_len = [&](int e, double* len_out) {
    const int a = topo.edges[e][0], b = topo.edges[e][1];
    const double r = edge_eta_residual(m, imm.verts[a], none, imm.verts[b], none);
    const Vec xb = coords_in_chart(m, imm.verts[b], imm.verts[a].chart, imm.verts[a].x);
    const Vec d = xb - imm.verts[a].x;
    ChartPoint mid{imm.verts[a].chart, 0.5 * (imm.verts[a].x + xb)};
    mid.x = m.project_to_model(mid);
    if (len_out) *len_out = std::sqrt(d.dot(m.metric(mid) * d));
    return r;
  };

  auto max_residual = [&]() {
    double worst = 0;
    for (int e = 0; e < NE; ++e) {
      double len = 1;
      const double r = edge_residual_len(e, &len);
      worst = std::max(worst, std::abs(r) / len);
    }
    return worst;
  };

  const double res0 = max_residual();
  if (measured_drift) *measured_drift = res0;
  if (res0 < tol) return 0.0;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // per-vertex correction bases: Reeb + Phi of edge directions
    std::vector<std::vector<Vec>> basis(V);
    for (int v = 0; v < V; ++v) {
      const ChartPoint& p = imm.verts[v];
      const Mat g = m.metric(p);
      const Mat Phi = m.phi(p);
      basis[v].push_back(m.reeb(p));
      int want = imm.dim;
      for (int e : topo.vert_edges[v]) {
        if (want == 0) break;
        const int o = topo.edges[e][0] == v ? topo.edges[e][1] : topo.edges[e][0];
        Vec d = coords_in_chart(m, imm.verts[o], p.chart, p.x) - p.x;
        d = m.project_tangent(p, d);
        Vec cand = Phi * d;
        for (const Vec& bv : basis[v])
          cand -= g_inner(g, cand, bv) / g_inner(g, bv, bv) * bv;
        const double n = std::sqrt(g_inner(g, cand, cand));
        if (n > 1e-10) {
          basis[v].push_back(cand / n);
          --want;
        }
      }
      while (int(basis[v].size()) < nb) basis[v].push_back(Vec::Zero(p.x.size()));
    }

    // global linearization: min |c|^2 subject to r + A c = 0 (damped)
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    Vec r(NE);
    const double fd = 1e-7;
    for (int e = 0; e < NE; ++e) {
      r[e] = edge_residual_len(e, nullptr);
      const int a = topo.edges[e][0], b = topo.edges[e][1];
      const bool same_chart =
          imm.verts[a].chart == imm.verts[b].chart && !m.has_constraint();
      if (same_chart) {
        // analytic rows: dr = +-eta(mid).b + (1/2) b^T (Deta d)
        const Vec xb = coords_in_chart(m, imm.verts[b], imm.verts[a].chart,
                                       imm.verts[a].x);
        const Vec d = xb - imm.verts[a].x;
        ChartPoint mid{imm.verts[a].chart, 0.5 * (imm.verts[a].x + xb)};
        const Vec em = m.eta(mid);
        const Vec Dd = m.deta(mid) * d;
        for (int side = 0; side < 2; ++side) {
          const int v = side == 0 ? a : b;
          const double sgn = side == 0 ? -1.0 : 1.0;
          for (int j = 0; j < nb; ++j) {
            if (basis[v][j].size() == 0 || basis[v][j].cwiseAbs().maxCoeff() == 0) continue;
            trips.emplace_back(e, v * nb + j,
                               sgn * em.dot(basis[v][j]) + 0.5 * Dd.dot(basis[v][j]));
          }
        }
        continue;
      }
      for (int side = 0; side < 2; ++side) {
        const int v = side == 0 ? a : b;
        for (int j = 0; j < nb; ++j) {
          if (basis[v][j].size() == 0 || basis[v][j].cwiseAbs().maxCoeff() == 0) continue;
          const Vec dp = fd * basis[v][j];
          const Vec dm = -fd * basis[v][j];
          const double rp = side == 0
                                ? edge_eta_residual(m, imm.verts[a], dp, imm.verts[b], none)
                                : edge_eta_residual(m, imm.verts[a], none, imm.verts[b], dp);
          const double rm = side == 0
                                ? edge_eta_residual(m, imm.verts[a], dm, imm.verts[b], none)
                                : edge_eta_residual(m, imm.verts[a], none, imm.verts[b], dm);
          trips.emplace_back(e, v * nb + j, (rp - rm) / (2 * fd));
        }
      }
    }
    Eigen::SparseMatrix<double> A(NE, V * nb);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseMatrix<double> AAt = (A * A.transpose()).pruned();
    // small Levenberg damping keeps the normal equations well posed
    for (int e = 0; e < NE; ++e) AAt.coeffRef(e, e) += 1e-12;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(AAt);
    if (solver.info() != Eigen::Success)
      throw numerical_error("legendrian restoration: singular normal equations");
    const Vec lambda = solver.solve(-r);
    const Vec c = A.transpose() * lambda;

    for (int v = 0; v < V; ++v) {
      Vec move = Vec::Zero(imm.verts[v].x.size());
      for (int j = 0; j < nb; ++j)
        if (basis[v][j].size()) move += c[v * nb + j] * basis[v][j];
      imm.verts[v].x += move;
      if (m.has_constraint()) imm.verts[v].x = m.project_to_model(imm.verts[v]);
      const Mat g = m.metric(imm.verts[v]);
      total_disp = std::max(total_disp, std::sqrt(g_inner(g, move, move)));
    }

    if (std::getenv("LEGFLOW_DEBUG_RESTORE"))
      std::fprintf(stderr,
                   "restore sweep %d: |r|max=%g |A|max=%g |c|max=%g res=%g pred=%g\n",
                   sweep, r.cwiseAbs().maxCoeff(),
                   Mat(A).cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff(),
                   max_residual(), (r + A * c).cwiseAbs().maxCoeff());

    if (max_residual() < tol) {
      rechart(imm);
      return total_disp;
    }
  }
  throw numerical_error("legendrian restoration did not converge in " +
                        std::to_string(max_sweeps) + " sweeps");
}

void redistribute_curve(DiscreteImmersion& imm, double blend) {
  if (imm.dim != 1 || !imm.closed) return;
  const SasakiModel& m = *imm.model;
  const MeshTopology& topo = get_topology(imm);
  const int V = imm.num_vertices();

  // traversal order along the cycle
  std::vector<int> next(V, -1);
  for (const auto& s : imm.segments) next[s[0]] = s[1];
  std::vector<int> order;
  order.reserve(V);
  for (int v = 0; v != 0 || order.empty();) {
    order.push_back(v);
    v = next[v];
    if (int(order.size()) > V) throw numerical_error("redistribute: broken cycle");
    if (v == 0) break;
  }
  if (int(order.size()) != V) throw numerical_error("redistribute: broken cycle");
  (void)topo;

  // cumulative chord lengths in the common chart of vertex 0
  const int chart = imm.verts[order[0]].chart;
  std::vector<Vec> x(V);
  for (int i = 0; i < V; ++i)
    x[i] = coords_in_chart(m, imm.verts[order[i]], chart,
                           i ? x[i - 1] : imm.verts[order[0]].x);
  std::vector<double> cum(V + 1, 0.0);
  for (int i = 0; i < V; ++i) {
    const Vec& a = x[i];
    const Vec& b = x[(i + 1) % V];
    Vec d = b - a;
    if (i + 1 == V) d = m.wrap_toward(chart, b, a) - a;
    ChartPoint mid{chart, 0.5 * (a + (a + d))};
    mid.x = m.project_to_model(mid);
    cum[i + 1] = cum[i] + std::sqrt(d.dot(m.metric(mid) * d));
  }
  const double L = cum[V];

  // uniform-arc targets, vertex 0 pinned
  int seg = 0;
  for (int i = 1; i < V; ++i) {
    const double target = L * i / V;
    while (seg + 1 < V && cum[seg + 1] < target) ++seg;
    const double t = (target - cum[seg]) / std::max(cum[seg + 1] - cum[seg], 1e-300);
    const Vec interp = (1.0 - t) * x[seg] + t * x[(seg + 1) % V];
    ChartPoint p{chart, (1.0 - blend) * x[i] + blend * interp};
    p.x = m.project_to_model(p);
    imm.verts[order[i]] = p;
  }
  enforce_charts(imm);
}

void step(FlowState& state, double dt, const StepControl& control, const AlphaGauge& gauge) {
  if (dt <= 0) throw validation_error("step: dt must be positive");
  DiscreteImmersion& imm = state.imm;
  const int V = imm.num_vertices();

  auto advance = [&](const std::vector<Vec>& vel, double h) {
    for (int v = 0; v < V; ++v) imm.verts[v].x += h * vel[v];
    enforce_charts(imm);
  };

  const std::vector<ChartPoint> saved = imm.verts;
  if (control.integrator == StepControl::Integrator::Euler) {
    advance(state.snap.velocity, dt);
  } else {
    advance(state.snap.velocity, 0.5 * dt);
    imm.time = state.snap.time + 0.5 * dt;
    GeometrySnapshot half = compute_snapshot(imm, gauge);
    // midpoint velocities act on the original positions; vertices may have
    // been recharted, so express them back in the saved charts
    std::vector<Vec> vel(V);
    for (int v = 0; v < V; ++v) {
      Vec w = half.velocity[v];
      if (imm.verts[v].chart != saved[v].chart)
        w = imm.model->transition_jacobian(imm.verts[v], saved[v].chart) * w;
      vel[v] = w;
    }
    imm.verts = saved;
    advance(vel, dt);
  }

  if (control.redistribute && imm.dim == 1) redistribute_curve(imm, 0.5);

  state.last_restore_disp = 0;
  bool do_restore = false;
  double drift = 0;
  switch (control.restore_policy) {
    case StepControl::RestorePolicy::Off:
      drift = legendrian_residual(imm);
      break;
    case StepControl::RestorePolicy::EveryK:
      do_restore = ((state.step_index + 1) % control.restore_k) == 0;
      if (!do_restore) drift = legendrian_residual(imm);
      break;
    case StepControl::RestorePolicy::Threshold:
      drift = legendrian_residual(imm);
      do_restore = drift > control.restore_threshold;
      break;
  }
  if (do_restore)
    state.last_restore_disp = restore_legendrian(imm, control.restore_tol, 20, &drift);
  state.cumulative_drift += drift;

  imm.time = state.snap.time + dt;
  state.snap = compute_snapshot(imm, gauge);
  state.dt_last = dt;
  state.step_index += 1;
}

namespace {

SeriesRow make_row(const FlowState& st) {
  SeriesRow r;
  const GeometrySnapshot& s = st.snap;
  r.t = s.time;
  r.area = s.area;
  r.omega_min = s.omega_min;
  r.omega_max = s.omega_max;
  r.a2_max = s.A_norm2.size() ? s.A_norm2.maxCoeff() : 0.0;
  r.h_max = s.max_velocity;
  r.alpha_min = s.alpha.size() ? s.alpha.minCoeff() : 0.0;
  r.alpha_max = s.alpha.size() ? s.alpha.maxCoeff() : 0.0;
  r.leg_residual = s.legendrian_residual;
  r.dt = st.dt_last;
  r.restored_displacement = st.last_restore_disp;
  return r;
}

void check_finite_row(const SeriesRow& r) {
  for (double v : {r.t, r.area, r.omega_min, r.omega_max, r.a2_max, r.h_max,
                   r.alpha_min, r.alpha_max, r.leg_residual, r.dt,
                   r.restored_displacement})
    if (!std::isfinite(v))
      throw numerical_error("non-finite value in series row (diagnostic dump follows)");
}

}  // namespace

Trajectory run_flow(DiscreteImmersion initial, const RunSpec& spec) {
  spec.control.validate();
  Trajectory traj;
  traj.model = initial.model;
  traj.gauge = spec.gauge;

  FlowState st = make_state(std::move(initial), spec.gauge);
  traj.initial_mean_measure = st.snap.area / st.imm.num_elements();
  traj.snapshots.push_back(st.imm);
  traj.fields.push_back(st.snap);
  traj.series.push_back(make_row(st));

  while (true) {
    if (st.snap.max_velocity < spec.stopping.tol_stop) {
      traj.termination = "stationary";
      break;
    }
    if (st.snap.time >= spec.stopping.t_max) {
      traj.termination = "t_max";
      break;
    }
    const double a2max = st.snap.A_norm2.size() ? st.snap.A_norm2.maxCoeff() : 0.0;
    double min_measure = 1e300;
    for (const auto& el : st.snap.geom.elements)
      min_measure = std::min(min_measure, el.measure);
    if (a2max > spec.stopping.guard_a2 ||
        min_measure < spec.stopping.guard_measure_ratio * traj.initial_mean_measure) {
      traj.termination = "guard";
      break;
    }
    if (st.step_index >= spec.max_steps) {
      traj.termination = "t_max";
      break;
    }

    double dt = choose_dt(st, spec.control);
    bool ok = false;
    const DiscreteImmersion backup = st.imm;
    const GeometrySnapshot snap_backup = st.snap;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      try {
        step(st, dt, spec.control, spec.gauge);
        ok = true;
      } catch (const Error&) {
        st.imm = backup;
        st.snap = snap_backup;
        dt *= 0.5;
      }
    }
    if (!ok) {
      traj.termination = "failed";
      traj.complete = false;
      traj.snapshots.push_back(st.imm);
      traj.fields.push_back(st.snap);
      return traj;
    }

    SeriesRow row = make_row(st);
    check_finite_row(row);
    traj.series.push_back(row);
    if (st.step_index % spec.cadence == 0) {
      traj.snapshots.push_back(st.imm);
      traj.fields.push_back(st.snap);
    }
  }

  if (traj.snapshots.empty() || traj.snapshots.back().time != st.imm.time) {
    traj.snapshots.push_back(st.imm);
    traj.fields.push_back(st.snap);
  }
  traj.complete = true;
  return traj;
}

// ---------------- singularity classification ----------------

SingularityReport classify_singularity(const std::vector<double>& t,
                                       const std::vector<double>& a2_max,
                                       bool guard_triggered) {
  SingularityReport rep;
  rep.detected = guard_triggered;
  if (t.size() != a2_max.size() || t.size() < 4)
    throw validation_error("classify_singularity: need matched series with >= 4 rows");

  if (!guard_triggered) {
    rep.type = "none";
    return rep;
  }

  // fit window: last quarter of the samples before the guard trigger
  const int n = int(t.size());
  int w = std::max(n / 4, 10);
  if (w > n) {
    rep.type = "inconclusive";
    return rep;
  }
  std::vector<double> tw(t.end() - w, t.end());
  std::vector<double> aw(a2_max.end() - w, a2_max.end());
  rep.fit_window = w;

  // grid+refine search for t0 maximizing R^2 of log a2 ~ -p log(t0 - t)
  const double t_last = tw.back();
  const double span = tw.back() - tw.front();
  auto fit_at = [&](double t0) {
    std::vector<double> x, y;
    for (int i = 0; i < w; ++i) {
      x.push_back(std::log(t0 - tw[i]));
      y.push_back(std::log(std::max(aw[i], 1e-300)));
    }
    return std::tuple{lsq_slope(x, y), lsq_r2(x, y)};
  };
  double best_t0 = t_last + 0.05 * span, best_r2 = -1, best_p = 0;
  double lo = t_last + 1e-6 * span, hi = t_last + 2.0 * span;
  for (int pass = 0; pass < 4; ++pass) {
    const int grid = 60;
    for (int i = 0; i <= grid; ++i) {
      const double t0 = lo + (hi - lo) * i / grid;
      auto [slope, r2] = fit_at(t0);
      if (r2 > best_r2) {
        best_r2 = r2;
        best_t0 = t0;
        best_p = -slope;
      }
    }
    const double width = (hi - lo) / 10;
    lo = std::max(t_last + 1e-9 * span, best_t0 - width);
    hi = best_t0 + width;
  }
  rep.t0_estimate = best_t0;
  rep.p_fit = best_p;
  rep.fit_quality = best_r2;
  if (best_p >= 0.8 && best_p <= 1.2) {
    rep.type = "I";
    // C with the type-I normalization a2 = C / (t0 - t)
    double acc = 0;
    for (int i = 0; i < w; ++i)
      acc += std::log(std::max(aw[i], 1e-300)) + std::log(best_t0 - tw[i]);
    rep.C_fit = std::exp(acc / w);
  } else if (best_p > 1.2) {
    rep.type = "II";
  } else {
    rep.type = "none";
  }
  return rep;
}

SingularityReport classify_singularity(const Trajectory& traj) {
  std::vector<double> t, a2;
  for (const auto& r : traj.series) {
    t.push_back(r.t);
    a2.push_back(r.a2_max);
  }
  if (int(t.size()) < 10) {
    SingularityReport rep;
    rep.detected = traj.termination == "guard";
    rep.type = "inconclusive";
    return rep;
  }
  return classify_singularity(t, a2, traj.termination == "guard");
}

// ---------------- evolution-equation residuals ----------------

Vec laplacian_scalar(const DiscreteImmersion& imm, const Vec& f) {
  if (f.size() != imm.num_vertices())
    throw validation_error("laplacian_scalar: field size mismatch");
  InducedGeometry geo = induced_geometry(imm);
  const int V = imm.num_vertices();
  Vec lap = Vec::Zero(V);
  Vec mass = Vec::Zero(V);
  const double share = imm.dim == 1 ? 0.5 : 1.0 / 3.0;
  for (int e = 0; e < imm.num_elements(); ++e) {
    const ElementGeom& el = geo.elements[e];
    std::vector<int> ids = imm.dim == 1
                               ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                               : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                                  imm.triangles[e][2]};
    Mat K;
    if (imm.dim == 1) {
      K = Mat(2, 2);
      const double w = 1.0 / el.measure;
      K << w, -w, -w, w;
    } else {
      Mat grad(2, 3);
      grad << -1, 1, 0, -1, 0, 1;
      K = el.measure * grad.transpose() * el.G.inverse() * grad;
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = 0; j < ids.size(); ++j) lap[ids[i]] -= K(i, j) * f[ids[j]];
      mass[ids[i]] += share * el.measure;
    }
  }
  for (int v = 0; v < V; ++v) lap[v] /= mass[v];
  return lap;
}

ReportRecord evolution_residuals(const Trajectory& traj) {
  ReportRecord rep;
  rep.name = "evolution_residuals";
  const auto& F = traj.fields;
  if (F.size() < 3) throw validation_error("evolution_residuals: need >= 3 snapshots");
  // uniform cadence required
  const double dt0 = F[1].time - F[0].time;
  for (std::size_t i = 1; i + 1 < F.size(); ++i)
    if (std::abs((F[i + 1].time - F[i].time) - dt0) > 1e-9 * std::max(1.0, std::abs(dt0)))
      throw validation_error("evolution_residuals: non-uniform snapshot cadence");

  const double kp2 = traj.model->constants.alpha_linear;
  const double c = traj.model->constants.c_transverse;

  double alpha_max = 0, alpha_l2 = 0, alpha_drift = 0;
  double omega_max = 0, omega_l2 = 0;
  int n_alpha = 0, n_omega = 0;

  for (std::size_t i = 1; i + 1 < F.size(); ++i) {
    const GeometrySnapshot& s = F[i];
    const DiscreteImmersion& imm = traj.snapshots[i];
    const int V = imm.num_vertices();
    const double two_dt = F[i + 1].time - F[i - 1].time;

    // lumped masses for the L2 norms
    InducedGeometry geo = induced_geometry(imm);
    Vec mass = Vec::Zero(V);
    const double share = imm.dim == 1 ? 0.5 : 1.0 / 3.0;
    for (int e = 0; e < imm.num_elements(); ++e) {
      const auto ids = imm.dim == 1
                           ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                           : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                              imm.triangles[e][2]};
      for (int id : ids) mass[id] += share * geo.elements[e].measure;
    }
    const double total_mass = mass.sum();

    {
      const Vec dadt = (F[i + 1].alpha - F[i - 1].alpha) / two_dt;
      const Vec lap = laplacian_scalar(imm, s.alpha);
      Vec r = dadt - lap - kp2 * s.alpha;
      // remove the spatially constant gauge mode; report its drift separately
      const double mean = mass.dot(r) / total_mass;
      alpha_drift = std::max(alpha_drift, std::abs(mean));
      r.array() -= mean;
      alpha_max = std::max(alpha_max, r.cwiseAbs().maxCoeff());
      alpha_l2 += mass.dot(r.cwiseProduct(r)) / total_mass;
      ++n_alpha;
    }

    if (imm.dim == 2 && imm.model->has_omega_plus()) {
      const Vec dodt = (F[i + 1].omega - F[i - 1].omega) / two_dt;
      const Vec lap = laplacian_scalar(imm, s.omega);
      Vec r(V);
      for (int v = 0; v < V; ++v) {
        const double om = s.omega[v];
        r[v] = dodt[v] - lap[v] -
               ((2.0 * s.A_norm2[v] - s.H_norm2[v]) * om + (1.0 - om * om) * c * om);
      }
      omega_max = std::max(omega_max, r.cwiseAbs().maxCoeff());
      omega_l2 += mass.dot(r.cwiseProduct(r)) / total_mass;
      ++n_omega;
    }
  }

  rep.set("alpha_residual_max", alpha_max);
  rep.set("alpha_residual_l2", n_alpha ? std::sqrt(alpha_l2 / n_alpha) : 0.0);
  rep.set("alpha_gauge_drift", alpha_drift);
  if (n_omega) {
    rep.set("omega_residual_max", omega_max);
    rep.set("omega_residual_l2", std::sqrt(omega_l2 / n_omega));
  }
  rep.set("intervals", double(n_alpha));
  return rep;
}

}  // namespace legflow
