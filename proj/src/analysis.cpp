#include <algorithm>

#include "legflow/analysis.hpp"

namespace legflow {

namespace {

void require_realization(const SasakiModel& m, bool allow_flat) {
  if (m.isometric_embedding) return;
  if (allow_flat && m.flat_diagnostic) return;
  throw unsupported_error(
      "model '" + m.name +
      "' has no isometric realization; Gaussian-density machinery unavailable");
}

std::vector<Vec> euclid_orthonormal(const std::vector<Vec>& vecs) {
  std::vector<Vec> out;
  for (const auto& v : vecs) {
    Vec w = v;
    for (const auto& f : out) w -= w.dot(f) * f;
    const double n = w.norm();
    if (n < 1e-13) throw numerical_error("degenerate tangent frame");
    out.push_back(w / n);
  }
  return out;
}

Vec normal_part(const Vec& rel, const std::vector<Vec>& tangent) {
  Vec out = rel;
  for (const auto& t : tangent) out -= rel.dot(t) * t;
  return out;
}

}  // namespace

AmbientSlice make_slice(const DiscreteImmersion& imm, const GeometrySnapshot& snap) {
  const SasakiModel& m = *imm.model;
  require_realization(m, /*allow_flat=*/true);
  const bool isometric = m.isometric_embedding;
  const int V = imm.num_vertices();

  AmbientSlice s;
  s.n = imm.dim;
  s.time = snap.time;
  s.alpha = snap.alpha;
  s.A_norm2 = snap.A_norm2;
  s.pos.reserve(V);
  for (const auto& p : imm.verts) s.pos.push_back(p.x);

  // vertex masses from realization measures
  s.mass = Vec::Zero(V);
  const double share = imm.dim == 1 ? 0.5 : 1.0 / 3.0;
  for (int e = 0; e < imm.num_elements(); ++e) {
    const ElementGeom& el = snap.geom.elements[e];
    const double mu = isometric ? el.measure : el.measure_flat;
    const auto ids = imm.dim == 1
                         ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                         : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                            imm.triangles[e][2]};
    for (int id : ids) s.mass[id] += share * mu;
    s.element_measure_sum += mu;
  }

  // per-vertex frames and vectors in realization coordinates
  const MeshTopology& topo = get_topology(imm);
  auto frames = vertex_frames(imm, topo, snap.geom.elements);
  s.H = snap.H;
  s.T.reserve(V);
  s.E.reserve(V);
  s.tangent.reserve(V);
  for (int v = 0; v < V; ++v) {
    const ChartPoint& p = imm.verts[v];
    s.T.push_back(m.reeb(p));
    if (isometric)
      s.E.push_back(m.ambient_correction(p, frames[v].tangent));
    else
      s.E.push_back(Vec::Zero(p.x.size()));
    s.tangent.push_back(euclid_orthonormal(frames[v].tangent));
  }
  return s;
}

AmbientSlice dilate_slice(const AmbientSlice& s, const Vec& y0, double t0, double lambda) {
  if (lambda <= 0) throw validation_error("parabolic dilation requires lambda > 0");
  AmbientSlice out = s;
  out.time = lambda * lambda * (s.time - t0);
  const double ln = std::pow(lambda, s.n);
  out.mass *= ln;
  out.element_measure_sum *= ln;
  out.A_norm2 /= lambda * lambda;
  for (std::size_t v = 0; v < s.pos.size(); ++v) {
    out.pos[v] = lambda * (s.pos[v] - y0);
    out.H[v] = s.H[v] / lambda;
    out.T[v] = s.T[v] / lambda;
    out.E[v] = s.E[v] / lambda;
  }
  return out;
}

double backward_kernel(const Vec& y, const Vec& y0, double tau, int n) {
  if (tau <= 0) throw validation_error("backward kernel needs t < t0");
  return std::pow(4.0 * M_PI * tau, -0.5 * n) *
         std::exp(-(y - y0).squaredNorm() / (4.0 * tau));
}

double gaussian_density(const DiscreteImmersion& imm, const KernelSpec& spec) {
  const SasakiModel& m = *imm.model;
  require_realization(m, /*allow_flat=*/true);
  if (imm.time >= spec.t0)
    throw validation_error("gaussian_density: snapshot time must precede t0");
  const bool isometric = m.isometric_embedding;
  InducedGeometry geo = induced_geometry(imm);
  const double tau = spec.t0 - imm.time;
  double acc = 0;
  for (const auto& el : geo.elements)
    acc += backward_kernel(el.center, spec.y0, tau, spec.n) *
           (isometric ? el.measure : el.measure_flat);
  return acc;
}

double gaussian_density(const AmbientSlice& slice, const KernelSpec& spec) {
  if (slice.time >= spec.t0)
    throw validation_error("gaussian_density: slice time must precede t0");
  const double tau = spec.t0 - slice.time;
  double acc = 0;
  for (int v = 0; v < int(slice.pos.size()); ++v)
    acc += backward_kernel(slice.pos[v], spec.y0, tau, spec.n) * slice.mass[v];
  return acc;
}

DensitySeries monotonicity_series(const Trajectory& traj, const KernelSpec& spec,
                                  double slack) {
  if (!traj.model->isometric_embedding)
    throw unsupported_error("monotonicity requires an isometric model");
  const auto& F = traj.fields;
  if (F.size() < 3) throw validation_error("monotonicity_series: need >= 3 snapshots");
  const double dt0 = F[1].time - F[0].time;
  for (std::size_t i = 1; i + 1 < F.size(); ++i)
    if (std::abs((F[i + 1].time - F[i].time) - dt0) > 1e-9 * std::max(1.0, std::abs(dt0)))
      throw validation_error("monotonicity_series: non-uniform snapshot cadence");
  if (traj.fields.back().time >= spec.t0)
    throw validation_error("monotonicity_series: t0 must lie after the last snapshot");

  DensitySeries out;
  const std::size_t N = F.size();
  out.rows.resize(N);

  for (std::size_t i = 0; i < N; ++i) {
    AmbientSlice sl = make_slice(traj.snapshots[i], F[i]);
    DensityRow& row = out.rows[i];
    row.t = sl.time;
    const double tau = spec.t0 - sl.time;
    double density = 0, bracket = 0, defect = 0, defect_a = 0;
    for (int v = 0; v < int(sl.pos.size()); ++v) {
      const double rho = backward_kernel(sl.pos[v], spec.y0, tau, sl.n) * sl.mass[v];
      density += rho;
      const double a = sl.alpha[v];
      bracket += (4.0 * a * a + sl.E[v].squaredNorm()) * rho;
      const Vec fp = normal_part(sl.pos[v] - spec.y0, sl.tangent[v]);
      const Vec vel = sl.H[v] - 2.0 * a * sl.T[v];
      defect += (vel - sl.E[v] + fp / (2.0 * tau)).squaredNorm() * rho;
      defect_a += (sl.H[v] + fp / (2.0 * tau)).squaredNorm() * rho;
    }
    row.density = density;
    row.bracket = bracket;
    row.defect = defect;
    row.defect_a = defect_a;
  }

  // element-midpoint density is cheaper noise-wise for d/dt; recompute it
  for (std::size_t i = 0; i < N; ++i) {
    KernelSpec ks = spec;
    out.rows[i].density = gaussian_density(traj.snapshots[i], ks);
  }

  for (std::size_t i = 1; i + 1 < N; ++i) {
    DensityRow& row = out.rows[i];
    row.ddt_density = (out.rows[i + 1].density - out.rows[i - 1].density) /
                      (out.rows[i + 1].t - out.rows[i - 1].t);
    row.identity_residual = std::abs(row.ddt_density +
                                     0.5 * (row.defect_a + row.defect) -
                                     0.5 * row.bracket);
    out.max_identity_residual = std::max(out.max_identity_residual, row.identity_residual);
    const double scale = std::max(1.0, std::abs(row.bracket) + std::abs(row.defect));
    if (row.ddt_density > row.bracket - 0.5 * row.defect + slack * scale) {
      row.inequality_violated = true;
      ++out.violations;
    }
  }
  return out;
}

DilationView parabolic_dilate(const Trajectory& traj, const KernelSpec& spec,
                              double lambda) {
  if (lambda <= 0) throw validation_error("parabolic dilation requires lambda > 0");
  if (!traj.model->isometric_embedding && !traj.model->flat_diagnostic)
    throw unsupported_error("parabolic dilation requires a realization model");
  DilationView view;
  view.lambda = lambda;
  for (std::size_t i = 0; i < traj.fields.size(); ++i) {
    if (traj.fields[i].time >= spec.t0) continue;
    AmbientSlice sl = make_slice(traj.snapshots[i], traj.fields[i]);
    AmbientSlice d = dilate_slice(sl, spec.y0, spec.t0, lambda);
    view.s.push_back(d.time);
    view.density.push_back(
        gaussian_density(d, KernelSpec{Vec::Zero(spec.y0.size()), 0.0, sl.n}));
    view.a2_max.push_back(d.A_norm2.size() ? d.A_norm2.maxCoeff() : 0.0);
    view.slices.push_back(std::move(d));
  }
  if (view.slices.empty())
    throw validation_error("parabolic dilation: no snapshots before t0");
  return view;
}

ShrinkerResidual shrinker_residual(const AmbientSlice& slice, ShrinkerMode mode,
                                   double s, const Vec* y0_in) {
  if (mode == ShrinkerMode::SelfSimilar && s == 0.0)
    throw validation_error("self-similar residual: s must be nonzero");
  const Vec y0 = y0_in ? *y0_in : Vec::Zero(int(slice.pos[0].size()));
  // weight: backward kernel at unit scale for the static equation, at |s| for
  // the self-similar one
  const double tau = mode == ShrinkerMode::Static ? 1.0 : std::abs(s);
  ShrinkerResidual out;
  double acc = 0, acc_printed = 0, wsum = 0;
  for (int v = 0; v < int(slice.pos.size()); ++v) {
    const double rho = backward_kernel(slice.pos[v], y0, tau, slice.n) * slice.mass[v];
    const Vec fp = normal_part(slice.pos[v] - y0, slice.tangent[v]);
    const Vec vel = slice.H[v] - 2.0 * slice.alpha[v] * slice.T[v];
    Vec resid, resid_printed;
    if (mode == ShrinkerMode::Static) {
      resid = vel + fp;
      resid_printed = resid;
    } else {
      resid = vel - slice.E[v] - fp / (2.0 * s);
      resid_printed = vel - fp / (2.0 * s);
    }
    acc += resid.squaredNorm() * rho;
    acc_printed += resid_printed.squaredNorm() * rho;
    wsum += rho;
  }
  out.residual = std::sqrt(acc);
  out.residual_printed = std::sqrt(acc_printed);
  out.weight = wsum;
  return out;
}

ShrinkerResidual shrinker_residual(const DiscreteImmersion& imm,
                                   const GeometrySnapshot& snap, ShrinkerMode mode,
                                   double s) {
  AmbientSlice slice = make_slice(imm, snap);
  return shrinker_residual(slice, mode, s);
}

double ode_lower_bound(double omega_min0, double c, double t) {
  if (!(omega_min0 > 0 && omega_min0 < 1))
    throw validation_error("ode_lower_bound: omega_min0 must lie in (0,1)");
  const double gamma = omega_min0 / std::sqrt(1.0 - omega_min0 * omega_min0);
  const double ge = gamma * std::exp(c * t);
  return ge / std::sqrt(1.0 + ge * ge);
}

ReportRecord check_bound(const Trajectory& traj, double slack) {
  ReportRecord rep;
  rep.name = "ode_lower_bound_check";
  if (traj.series.empty()) throw validation_error("check_bound: empty trajectory");
  const double c = traj.model->constants.c_transverse;
  const double om0 = traj.series.front().omega_min;
  if (!(om0 > 0 && om0 < 1))
    throw validation_error("check_bound: initial omega_min not in (0,1)");
  const double t_start = traj.series.front().t;
  double min_margin = 1e300;
  int violations = 0;
  for (const auto& row : traj.series) {
    const double bound = ode_lower_bound(om0, c, row.t - t_start);
    const double margin = row.omega_min - bound;
    min_margin = std::min(min_margin, margin);
    if (margin < -slack) ++violations;
  }
  rep.set("omega_min0", om0);
  rep.set("c", c);
  rep.set("min_margin", min_margin);
  rep.set("slack", slack);
  rep.set("violations", violations);
  rep.pass = violations == 0;
  return rep;
}

InequalityReport pointwise_inequalities(const GeometrySnapshot& snap, double slack) {
  InequalityReport rep;
  const int V = int(snap.A_norm2.size());
  rep.worst_margin_h = 1e300;
  rep.worst_margin_grad = 1e300;
  for (int v = 0; v < V; ++v) {
    const double m1 = (4.0 / 3.0) * snap.A_norm2[v] - snap.H_norm2[v];
    rep.worst_margin_h = std::min(rep.worst_margin_h, m1);
    if (m1 < -slack) ++rep.violations_h;
    if (snap.dim == 2 && snap.omega.size()) {
      const double om = snap.omega[v];
      const double m2 =
          (4.0 / 3.0) * (1.0 - om * om) * snap.A_norm2[v] - snap.grad_omega_norm2[v];
      rep.worst_margin_grad = std::min(rep.worst_margin_grad, m2);
      if (m2 < -slack) ++rep.violations_grad;
      if (om <= 0)
        ++rep.graph_loss_vertices;
      else
        rep.psi_max = std::max(rep.psi_max, snap.A_norm2[v] / std::pow(om, 6));
    }
  }
  if (snap.dim != 2) rep.worst_margin_grad = 0;
  return rep;
}

double hausdorff_to_best_great_circle(const DiscreteImmersion& imm) {
  if (imm.dim != 1) throw validation_error("best great circle: curve immersions only");
  const int V = imm.num_vertices();
  const int N = int(imm.verts[0].x.size());
  Mat X(N, V);
  for (int v = 0; v < V; ++v) X.col(v) = imm.verts[v].x;
  Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeThinU);
  const Vec u1 = svd.matrixU().col(0);
  const Vec u2 = svd.matrixU().col(1);

  // vertex -> circle distance
  double worst = 0;
  for (int v = 0; v < V; ++v) {
    const Vec& x = imm.verts[v].x;
    const double a = x.dot(u1), b = x.dot(u2);
    const double inplane = std::sqrt(a * a + b * b);
    const double d2 = x.squaredNorm() + 1.0 - 2.0 * inplane;
    worst = std::max(worst, std::sqrt(std::max(d2, 0.0)));
  }

  // circle -> polyline distance (point-to-segment)
  const int samples = 4 * V;
  for (int i = 0; i < samples; ++i) {
    const double th = 2.0 * M_PI * i / samples;
    const Vec c = std::cos(th) * u1 + std::sin(th) * u2;
    double best = 1e300;
    for (const auto& seg : imm.segments) {
      const Vec& a = imm.verts[seg[0]].x;
      const Vec& b = imm.verts[seg[1]].x;
      const Vec d = b - a;
      const double t = std::clamp((c - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (c - (a + t * d)).norm());
    }
    worst = std::max(worst, best);
  }
  return worst;
}

PsiTrend psi_trend(const Trajectory& traj) {
  PsiTrend out;
  for (const auto& f : traj.fields) {
    double pm = 0;
    for (int v = 0; v < int(f.A_norm2.size()); ++v)
      if (f.omega.size() && f.omega[v] > 0)
        pm = std::max(pm, f.A_norm2[v] / std::pow(f.omega[v], 6));
    out.t.push_back(f.time);
    out.psi_max.push_back(pm);
    out.running_max = std::max(out.running_max, pm);
  }
  if (out.t.size() >= 2) out.slope = lsq_slope(out.t, out.psi_max);
  return out;
}

}  // namespace legflow
