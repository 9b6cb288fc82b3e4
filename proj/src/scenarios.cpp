#include <Eigen/Geometry>
#include <Eigen/Sparse>
#include <map>

#include "legflow/flow.hpp"
#include "legflow/scenarios.hpp"

namespace legflow {

// ---------------- maps of S^2 ----------------

SymplectoMap SymplectoMap::rotation(const Vec3& axis, double angle) {
  if (std::abs(axis.norm() - 1.0) > 1e-12)
    throw validation_error("rotation axis must be unit");
  SymplectoMap m;
  m.kind_ = Kind::Rotation;
  m.rot_ = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return m;
}

SymplectoMap SymplectoMap::twist(double amplitude) {
  SymplectoMap m;
  m.kind_ = Kind::Twist;
  m.amplitude_ = amplitude;
  return m;
}

SymplectoMap SymplectoMap::zcube() {
  SymplectoMap m;
  m.kind_ = Kind::ZCube;
  return m;
}

SymplectoMap SymplectoMap::composition(std::vector<SymplectoMap> maps) {
  SymplectoMap m;
  m.kind_ = Kind::Composition;
  m.parts_ = std::move(maps);
  return m;
}

namespace {
Eigen::Matrix3d z_rotation(double a) {
  Eigen::Matrix3d R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}
}  // namespace

Vec3 SymplectoMap::apply(const Vec3& p) const {
  switch (kind_) {
    case Kind::Rotation:
      return rot_ * p;
    case Kind::Twist:
      return z_rotation(amplitude_ * p.z()) * p;
    case Kind::ZCube: {
      const double z = std::clamp(p.z(), -1.0, 1.0);
      const double z3 = z * z * z;
      const double s_old = std::sqrt(std::max(1.0 - z * z, 0.0));
      const double s_new = std::sqrt(std::max(1.0 - z3 * z3, 0.0));
      if (s_old < 1e-14) return Vec3(0, 0, z3 > 0 ? 1 : -1);
      return Vec3(p.x() * s_new / s_old, p.y() * s_new / s_old, z3);
    }
    case Kind::Composition: {
      Vec3 q = p;
      for (const auto& m : parts_) q = m.apply(q);
      return q;
    }
  }
  return p;
}

Eigen::Matrix3d SymplectoMap::differential(const Vec3& p) const {
  switch (kind_) {
    case Kind::Rotation:
      return rot_;
    case Kind::Twist: {
      // d(R_z(a z) p) = R_z + a (d R_z/d angle) p (x) dz
      const Eigen::Matrix3d R = z_rotation(amplitude_ * p.z());
      Eigen::Matrix3d G;  // rotation generator about z
      G << 0, -1, 0, 1, 0, 0, 0, 0, 0;
      const Vec3 gen = G * (R * p);
      Eigen::Matrix3d D = R;
      D += amplitude_ * gen * Vec3(0, 0, 1).transpose();
      return D;
    }
    case Kind::ZCube: {
      // central differences along tangent directions (test-only map)
      const double h = 1e-6;
      Eigen::Matrix3d D;
      for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = 1;
        Vec3 pp = (p + h * e).normalized();
        Vec3 pm = (p - h * e).normalized();
        D.col(j) = (apply(pp) - apply(pm)) / (2 * h);
      }
      return D;
    }
    case Kind::Composition: {
      Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
      Vec3 q = p;
      for (const auto& m : parts_) {
        D = m.differential(q) * D;
        q = m.apply(q);
      }
      return D;
    }
  }
  return Eigen::Matrix3d::Identity();
}

double SymplectoMap::twist_phase(double z) const {
  if (kind_ != Kind::Twist) throw validation_error("twist_phase: not a twist map");
  // integral of s g'(s) ds from 0 to z with g(s) = amplitude * s
  return amplitude_ * z * z / 2.0;
}

double is_area_preserving(const SymplectoMap& map, int samples, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  for (int i = 0; i < samples; ++i) {
    Vec3 p(rng.normal(), rng.normal(), rng.normal());
    p.normalize();
    // orthonormal tangent frame at p
    Vec3 a = std::abs(p.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    const Vec3 e1 = (a - a.dot(p) * p).normalized();
    const Vec3 e2 = p.cross(e1);
    const Eigen::Matrix3d D = map.differential(p);
    const Vec3 q = map.apply(p);
    Vec3 f1 = D * e1, f2 = D * e2;
    f1 -= f1.dot(q) * q;
    f2 -= f2.dot(q) * q;
    // signed area Jacobian w.r.t. the round area forms
    const double det = q.dot(f1.cross(f2));
    worst = std::max(worst, std::abs(det - 1.0));
  }
  return worst;
}

// ---------------- icosphere ----------------

BaseMesh icosphere(int level) {
  if (level < 0 || level > 7) throw validation_error("icosphere level must be 0..7");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
      {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
      {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) -> int {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (v[a] + v[b]).normalized();
      v.push_back(m);
      const int id = int(v.size()) - 1;
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> nf;
    nf.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int ab = mid(tri[0], tri[1]);
      const int bc = mid(tri[1], tri[2]);
      const int ca = mid(tri[2], tri[0]);
      nf.push_back({tri[0], ab, ca});
      nf.push_back({tri[1], bc, ab});
      nf.push_back({tri[2], ca, bc});
      nf.push_back({ab, bc, ca});
    }
    f = std::move(nf);
  }
  return BaseMesh{std::move(v), std::move(f)};
}

// ---------------- graph lifts into the product model ----------------

namespace {

// stereographic factor coordinates for hemisphere sign sigma (+1 north chart)
Eigen::Vector2d stereo_factor(const Vec3& p, int sigma) {
  const double denom = 1.0 + sigma * p.z();
  if (denom < 1e-9) throw numerical_error("lift: point at the excluded pole");
  return Eigen::Vector2d(p.x() / denom, sigma * p.y() / denom);
}

// fiber-phase 1-form increment -(P1 - P2) along a straight chart edge,
// edge-midpoint quadrature
double phase_increment(const Vec& xa, const Vec& xb) {
  const Vec mid = 0.5 * (xa + xb);
  const Vec d = xb - xa;
  auto P = [&](int off) {
    const double s = 1.0 + mid[off] * mid[off] + mid[off + 1] * mid[off + 1];
    return 2.0 * (mid[off + 1] * d[off] - mid[off] * d[off + 1]) / s;
  };
  return -(P(0) - P(2));
}

struct GraphVerts {
  std::vector<ChartPoint> pts;  // psi = 0 placeholder
};

GraphVerts graph_vertices(const SymplectoMap& map, const BaseMesh& base) {
  GraphVerts g;
  g.pts.reserve(base.verts.size());
  for (const auto& x : base.verts) {
    const Vec3 y = map.apply(x);
    const int s1 = x.z() >= 0 ? 1 : -1;
    const int s2 = y.z() >= 0 ? 1 : -1;
    const int chart = (s1 < 0 ? 1 : 0) | (s2 < 0 ? 2 : 0);
    const Eigen::Vector2d u1 = stereo_factor(x, s1);
    const Eigen::Vector2d u2 = stereo_factor(y, s2);
    Vec c(5);
    c << u1[0], u1[1], u2[0], u2[1], 0.0;
    g.pts.push_back(ChartPoint{chart, c});
  }
  return g;
}

double wrap_defect(double d) {
  // principal value of the fiber defect (period 4 pi)
  const double period = 4.0 * M_PI;
  double w = std::remainder(d, period);
  return w;
}

}  // namespace

Vec lift_face_defects(const SymplectoMap& map, const BaseMesh& base) {
  auto model = make_model(ModelId::T11);
  GraphVerts g = graph_vertices(map, base);
  Vec defects(base.triangles.size());
  for (std::size_t f = 0; f < base.triangles.size(); ++f) {
    const auto& tri = base.triangles[f];
    std::vector<const ChartPoint*> pts = {&g.pts[tri[0]], &g.pts[tri[1]], &g.pts[tri[2]]};
    const int c = common_chart(*model, pts);
    Vec x0 = coords_in_chart(*model, g.pts[tri[0]], c);
    Vec x1 = coords_in_chart(*model, g.pts[tri[1]], c);
    Vec x2 = coords_in_chart(*model, g.pts[tri[2]], c);
    // psi placeholders cancel around the cycle; only increments matter
    const double circ =
        phase_increment(x0, x1) + phase_increment(x1, x2) + phase_increment(x2, x0);
    defects[f] = wrap_defect(circ);
  }
  return defects;
}

DiscreteImmersion legendrian_lift(const SymplectoMap& map, const BaseMesh& base,
                                  LiftReport* report, double holonomy_tol,
                                  double anchor_phase) {
  auto model = make_model(ModelId::T11);
  GraphVerts g = graph_vertices(map, base);
  const int V = int(g.pts.size());

  // face-cycle defects decide liftability
  const Vec defects = lift_face_defects(map, base);
  const double holonomy = defects.cwiseAbs().maxCoeff();
  if (holonomy > holonomy_tol) {
    std::ostringstream os;
    os << "map is not liftable: holonomy residual " << holonomy
       << " exceeds tolerance " << holonomy_tol << " (area-preservation defect)";
    throw validation_error(os.str());
  }

  // edge list from the base topology
  DiscreteImmersion imm;
  imm.model = model;
  imm.dim = 2;
  imm.triangles = base.triangles;
  imm.verts = g.pts;
  MeshTopology topo = build_topology(imm);
  const int NE = int(topo.edges.size());

  // per-edge target increments, evaluated in a per-edge common chart; an
  // edge's increment is expressed at its endpoints' home charts through the
  // model transition (which carries the fiber shift)
  struct EdgeDat {
    int chart;
    double target;    // Delta psi in `chart`
    double shift_a;   // psi_chart(a) = psi_home(a) + shift_a
    double shift_b;
  };
  std::vector<EdgeDat> ed(NE);
  for (int e = 0; e < NE; ++e) {
    const int a = topo.edges[e][0], b = topo.edges[e][1];
    std::vector<const ChartPoint*> pts = {&g.pts[a], &g.pts[b]};
    const int c = common_chart(*model, pts);
    const Vec xa = coords_in_chart(*model, g.pts[a], c);
    const Vec xb = coords_in_chart(*model, g.pts[b], c);
    ed[e].chart = c;
    ed[e].target = phase_increment(xa, xb);
    // placeholder psi is 0, so the transitioned psi IS the fiber shift
    ed[e].shift_a = g.pts[a].chart == c ? 0.0 : xa[4];
    ed[e].shift_b = g.pts[b].chart == c ? 0.0 : xb[4];
  }

  // spanning-tree integration of psi (home-chart values)
  Vec psi = Vec::Zero(V);
  std::vector<char> seen(V, 0);
  std::vector<char> in_tree(NE, 0);
  std::vector<int> queue = {0};
  seen[0] = 1;
  psi[0] = anchor_phase;
  int tree_edges = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int v = queue[qi];
    for (int e : topo.vert_edges[v]) {
      const int o = topo.edges[e][0] == v ? topo.edges[e][1] : topo.edges[e][0];
      if (seen[o]) continue;
      seen[o] = 1;
      in_tree[e] = 1;
      ++tree_edges;
      const double sv = topo.edges[e][0] == v ? ed[e].shift_a : ed[e].shift_b;
      const double so = topo.edges[e][0] == v ? ed[e].shift_b : ed[e].shift_a;
      const double tgt = topo.edges[e][0] == v ? ed[e].target : -ed[e].target;
      // psi_chart(o) = psi_chart(v) + target
      psi[o] = (psi[v] + sv + tgt) - so;
      queue.push_back(o);
    }
  }
  for (int v = 0; v < V; ++v)
    if (!seen[v]) throw validation_error("base mesh is not connected");

  // least-squares smoothing distributing the (small) cycle defects
  {
    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(V);
    for (int e = 0; e < NE; ++e) {
      const int a = topo.edges[e][0], b = topo.edges[e][1];
      const double actual = (psi[b] + ed[e].shift_b) - (psi[a] + ed[e].shift_a);
      const double r = ed[e].target - actual;  // want delta_b - delta_a = r
      trips.emplace_back(a, a, 1.0);
      trips.emplace_back(b, b, 1.0);
      trips.emplace_back(a, b, -1.0);
      trips.emplace_back(b, a, -1.0);
      rhs[a] -= r;
      rhs[b] += r;
    }
    trips.emplace_back(0, 0, 1.0);  // pin the anchor
    Eigen::SparseMatrix<double> L(V, V);
    L.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() == Eigen::Success) {
      Eigen::VectorXd delta = solver.solve(rhs);
      delta.array() -= delta[0];
      psi += delta;
    }
  }

  for (int v = 0; v < V; ++v) imm.verts[v].x[4] = psi[v];
  imm.time = 0;

  const double leg = legendrian_residual(imm);
  if (report) {
    report->holonomy_residual = holonomy;
    report->legendrian_residual = leg;
    report->tree_edges = tree_edges;
  }
  return imm;
}

DiscreteImmersion identity_graph(int level) {
  SymplectoMap id = SymplectoMap::rotation(Vec3(0, 0, 1), 0.0);
  return legendrian_lift(id, icosphere(level));
}

DiscreteImmersion map_graph(const SymplectoMap& map, int level, LiftReport* report) {
  return legendrian_lift(map, icosphere(level), report);
}

// ---------------- curves in S^3 ----------------

DiscreteImmersion great_circle(int n_vertices) {
  if (n_vertices < 8) throw validation_error("great_circle: need >= 8 vertices");
  auto model = make_model(ModelId::RoundS3);
  DiscreteImmersion imm;
  imm.model = model;
  imm.dim = 1;
  for (int i = 0; i < n_vertices; ++i) {
    const double s = 2.0 * M_PI * i / n_vertices;
    Vec p(4);
    p << std::cos(s), 0.0, std::sin(s), 0.0;
    imm.verts.push_back(ChartPoint{0, p});
    imm.segments.push_back({i, (i + 1) % n_vertices});
  }
  return imm;
}

DiscreteImmersion perturbed_great_circle(int n_vertices, double eps, int mode) {
  DiscreteImmersion imm = great_circle(n_vertices);
  Vec u(n_vertices);
  for (int i = 0; i < n_vertices; ++i)
    u[i] = std::cos(mode * 2.0 * M_PI * i / n_vertices);
  return perturb_legendrian(imm, u, eps);
}

DiscreteImmersion horizontal_lift_curve(const std::function<Vec3(double)>& curve,
                                        int n_vertices, int loops, double closure_tol) {
  auto model = make_model(ModelId::RoundS3);
  const double total = 2.0 * M_PI * loops;
  const int substeps = 8;
  // initial fiber point over curve(0)
  Vec3 p0 = curve(0.0);
  p0.normalize();
  // any point of the fiber: inverse of the Hopf map
  const double r1 = std::sqrt(std::max(0.0, (1.0 + p0.x()) / 2.0));
  const double r2 = std::sqrt(std::max(0.0, (1.0 - p0.x()) / 2.0));
  const double ph = std::atan2(p0.z(), p0.y());
  Vec4 z(r1, 0.0, r2 * std::cos(-ph), r2 * std::sin(-ph));
  if (std::abs(hopf_project(z).dot(p0) - 1.0) > 1e-10)
    throw numerical_error("horizontal lift: bad fiber seed");

  DiscreteImmersion imm;
  imm.model = model;
  imm.dim = 1;
  const int steps = n_vertices * substeps;
  const double du = total / steps;
  auto rhs = [&](double u, const Vec4& y) -> Vec4 {
    Vec3 c = curve(u);
    c.normalize();
    const double h = 1e-6;
    Vec3 cp = curve(u + h), cm = curve(u - h);
    cp.normalize();
    cm.normalize();
    Vec3 v = (cp - cm) / (2 * h);
    Vec3 base = hopf_project(y);
    v -= v.dot(base) / base.squaredNorm() * base;  // tangent at the tracked point
    return hopf_horizontal_lift(base, v, y);
  };
  for (int i = 0; i < steps; ++i) {
    if (i % substeps == 0) {
      imm.verts.push_back(ChartPoint{0, z});
      const int k = int(imm.verts.size()) - 1;
      if (k > 0) imm.segments.push_back({k - 1, k});
    }
    const double u = i * du;
    const Vec4 k1 = rhs(u, z);
    const Vec4 k2 = rhs(u + du / 2, (z + du / 2 * k1).normalized());
    const Vec4 k3 = rhs(u + du / 2, (z + du / 2 * k2).normalized());
    const Vec4 k4 = rhs(u + du, (z + du * k3).normalized());
    z = (z + du / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)).normalized();
  }
  const double gap = (z - Vec4(imm.verts[0].x)).norm();
  if (gap > closure_tol) {
    std::ostringstream os;
    os << "horizontal lift does not close: endpoint gap " << gap
       << " (enclosed-area holonomy defect)";
    throw validation_error(os.str());
  }
  imm.segments.push_back({int(imm.verts.size()) - 1, 0});
  return imm;
}

DiscreteImmersion bowtie_curve(int n_vertices, double phi_amp, double z_amp) {
  auto curve = [phi_amp, z_amp](double u) {
    const double phi = phi_amp * std::sin(u);
    const double z = z_amp * std::sin(2.0 * u);
    const double s = std::sqrt(std::max(1.0 - z * z, 0.0));
    return Vec3(s * std::cos(phi), s * std::sin(phi), z);
  };
  return horizontal_lift_curve(curve, n_vertices, 1, 1e-5);
}

DiscreteImmersion axis_line_std_contact(int n_vertices, double half_length) {
  auto model = make_model(ModelId::StdContact, 1);
  DiscreteImmersion imm;
  imm.model = model;
  imm.dim = 1;
  imm.closed = false;
  imm.diagnostic = true;
  for (int i = 0; i < n_vertices; ++i) {
    Vec p = Vec::Zero(3);
    p[0] = -half_length + 2.0 * half_length * i / (n_vertices - 1);
    imm.verts.push_back(ChartPoint{0, p});
    if (i > 0) imm.segments.push_back({i - 1, i});
  }
  return imm;
}

DiscreteImmersion perturb_legendrian(const DiscreteImmersion& imm, const Vec& u,
                                     double eps) {
  if (u.size() != imm.num_vertices())
    throw validation_error("perturb_legendrian: field size mismatch");
  const SasakiModel& m = *imm.model;
  DiscreteImmersion out = imm;
  const MeshTopology& topo = get_topology(imm);
  InducedGeometry geo = induced_geometry(imm);
  auto frames = vertex_frames(imm, topo, geo.elements);
  const int V = imm.num_vertices();

  // P1 gradient vectors per element, averaged to vertices
  std::vector<Vec> grad(V);
  Vec wsum = Vec::Zero(V);
  for (int v = 0; v < V; ++v) grad[v] = Vec::Zero(m.chart_dim(imm.verts[v].chart));
  for (int e = 0; e < imm.num_elements(); ++e) {
    const ElementGeom& el = geo.elements[e];
    std::vector<int> ids = imm.dim == 1
                               ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                               : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                                  imm.triangles[e][2]};
    Vec gvec;
    if (imm.dim == 1) {
      gvec = (u[ids[1]] - u[ids[0]]) / el.G(0, 0) * (el.coords[1] - el.coords[0]);
    } else {
      Eigen::Vector2d df(u[ids[1]] - u[ids[0]], u[ids[2]] - u[ids[0]]);
      Eigen::Vector2d c = el.G.inverse() * df;
      gvec = c[0] * (el.coords[1] - el.coords[0]) + c[1] * (el.coords[2] - el.coords[0]);
    }
    for (int id : ids) {
      Vec gv = gvec;
      if (el.chart != imm.verts[id].chart)
        gv = m.transition_jacobian(ChartPoint{el.chart, el.center}, imm.verts[id].chart) * gvec;
      grad[id] += el.measure * gv;
      wsum[id] += el.measure;
    }
  }
  for (int v = 0; v < V; ++v) grad[v] /= wsum[v];

  for (int v = 0; v < V; ++v) {
    const ChartPoint& p = imm.verts[v];
    const Vec move = -(m.phi(p) * grad[v]) - 2.0 * u[v] * frames[v].T;
    out.verts[v].x += eps * move;
  }
  enforce_charts(out);
  try {
    restore_legendrian(out, 1e-8);
  } catch (const Error& err) {
    throw numerical_error(std::string("perturbation too large: ") + err.what());
  }
  return out;
}

}  // namespace legflow
