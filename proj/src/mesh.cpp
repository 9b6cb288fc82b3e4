#include <Eigen/Eigenvalues>
#include <algorithm>
#include <set>
#include <sstream>

#include "legflow/mesh.hpp"

namespace legflow {

std::string to_string(const AlphaGauge& g) {
  std::ostringstream os;
  switch (g.policy) {
    case AlphaGauge::Policy::Anchor:
      os << "anchor " << g.anchor_vertex << " " << g.anchor_value;
      break;
    case AlphaGauge::Policy::MeanZero:
      os << "mean_zero";
      break;
    case AlphaGauge::Policy::ConePhase:
      os << "cone_phase " << g.anchor_vertex;
      break;
  }
  return os.str();
}

AlphaGauge alpha_gauge_from_string(const std::string& s) {
  std::istringstream is(s);
  std::string kind;
  is >> kind;
  AlphaGauge g;
  if (kind == "anchor") {
    g.policy = AlphaGauge::Policy::Anchor;
    if (!(is >> g.anchor_vertex)) g.anchor_vertex = 0;
    if (!(is >> g.anchor_value)) g.anchor_value = 0.0;
  } else if (kind == "mean_zero") {
    g.policy = AlphaGauge::Policy::MeanZero;
  } else if (kind == "cone_phase") {
    g.policy = AlphaGauge::Policy::ConePhase;
    if (!(is >> g.anchor_vertex)) g.anchor_vertex = 0;
  } else {
    throw validation_error("unknown alpha gauge '" + s + "'");
  }
  return g;
}

// ---------------- topology ----------------

MeshTopology build_topology(const DiscreteImmersion& imm) {
  const int V = imm.num_vertices();
  if (V < 3) throw validation_error("immersion needs at least 3 vertices");
  MeshTopology t;
  t.vert_edges.resize(V);
  t.vert_elems.resize(V);
  t.ring.resize(V);

  auto add_edge = [&](int a, int b) -> int {
    auto key = std::minmax(a, b);
    auto it = t.edge_index.find(key);
    if (it != t.edge_index.end()) return it->second;
    int id = int(t.edges.size());
    t.edges.push_back({key.first, key.second});
    t.edge_index[key] = id;
    t.vert_edges[key.first].push_back(id);
    t.vert_edges[key.second].push_back(id);
    return id;
  };

  if (imm.dim == 1) {
    std::vector<int> deg(V, 0);
    for (int e = 0; e < int(imm.segments.size()); ++e) {
      auto [a, b] = imm.segments[e];
      if (a < 0 || b < 0 || a >= V || b >= V || a == b)
        throw validation_error("bad segment " + std::to_string(e));
      add_edge(a, b);
      t.vert_elems[a].push_back(e);
      t.vert_elems[b].push_back(e);
      deg[a]++;
      deg[b]++;
    }
    if (imm.closed)
      for (int v = 0; v < V; ++v)
        if (deg[v] != 2)
          throw validation_error("polyline not closed at vertex " + std::to_string(v));
  } else {
    std::map<std::pair<int, int>, int> oriented;
    for (int f = 0; f < int(imm.triangles.size()); ++f) {
      auto [a, b, c] = imm.triangles[f];
      if (a == b || b == c || a == c)
        throw validation_error("degenerate triangle " + std::to_string(f));
      for (auto [u, v] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
        add_edge(u, v);
        oriented[{u, v}]++;
      }
      for (int v : {a, b, c}) t.vert_elems[v].push_back(f);
    }
    if (imm.closed && !imm.diagnostic) {
      // closed oriented surface: every edge once in each direction
      for (const auto& e : t.edges) {
        const auto f_it = oriented.find({e[0], e[1]});
        const auto b_it = oriented.find({e[1], e[0]});
        const int fwd = f_it == oriented.end() ? 0 : f_it->second;
        const int bwd = b_it == oriented.end() ? 0 : b_it->second;
        if (fwd != 1 || bwd != 1)
          throw validation_error(
              "mesh is not a consistently oriented closed surface at edge (" +
              std::to_string(e[0]) + "," + std::to_string(e[1]) + ")");
      }
    }
  }

  for (const auto& e : t.edges) {
    t.ring[e[0]].push_back(e[1]);
    t.ring[e[1]].push_back(e[0]);
  }
  return t;
}

const MeshTopology& get_topology(const DiscreteImmersion& imm) {
  if (!imm.topology_cache)
    imm.topology_cache = std::make_shared<const MeshTopology>(build_topology(imm));
  return *imm.topology_cache;
}

// ---------------- chart helpers ----------------

Vec coords_in_chart(const SasakiModel& model, const ChartPoint& p, int chart) {
  if (p.chart == chart) return p.x;
  return model.transition(p, chart).x;
}

Vec coords_in_chart(const SasakiModel& model, const ChartPoint& p, int chart,
                    const Vec& ref) {
  return model.wrap_toward(chart, coords_in_chart(model, p, chart), ref);
}

int common_chart(const SasakiModel& model, const std::vector<const ChartPoint*>& pts) {
  for (const ChartPoint* anchor : pts) {
    const int c = anchor->chart;
    bool ok = true;
    for (const ChartPoint* q : pts) {
      if (q->chart == c) continue;
      try {
        ChartPoint r = model.transition(*q, c);
        if (!model.in_domain(c, r.x)) ok = false;
      } catch (const Error&) {
        ok = false;
      }
      if (!ok) break;
    }
    if (ok) return c;
  }
  throw numerical_error("no common chart for element (mesh too coarse for the atlas)");
}

void rechart(DiscreteImmersion& imm) {
  for (auto& p : imm.verts) {
    const int c = imm.model->preferred_chart(p);
    if (c != p.chart) p = imm.model->transition(p, c);
  }
}

void enforce_charts(DiscreteImmersion& imm) {
  rechart(imm);
  for (auto& p : imm.verts) {
    imm.model->canonicalize(p);
    if (imm.model->has_constraint()) p.x = imm.model->project_to_model(p);
  }
}

// ---------------- small metric utilities ----------------

namespace {

double g_inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

// g-orthonormalize `vecs` against `fixed` and among themselves.
std::vector<Vec> gram_schmidt(const Mat& g, std::vector<Vec> vecs,
                              const std::vector<Vec>& fixed = {}) {
  std::vector<Vec> out;
  for (auto& v : vecs) {
    Vec w = v;
    for (const auto& f : fixed) w -= g_inner(g, w, f) * f;
    for (const auto& f : out) w -= g_inner(g, w, f) * f;
    const double n = std::sqrt(std::max(g_inner(g, w, w), 0.0));
    if (n < 1e-13) throw numerical_error("gram_schmidt: degenerate frame");
    out.push_back(w / n);
  }
  return out;
}

ElementGeom element_geometry(const DiscreteImmersion& imm, int elem) {
  const SasakiModel& m = *imm.model;
  ElementGeom eg;
  std::vector<int> ids;
  if (imm.dim == 1)
    ids = {imm.segments[elem][0], imm.segments[elem][1]};
  else
    ids = {imm.triangles[elem][0], imm.triangles[elem][1], imm.triangles[elem][2]};

  std::vector<const ChartPoint*> pts;
  for (int id : ids) pts.push_back(&imm.verts[id]);
  eg.chart = m.mesh_charts().size() == 1 ? m.mesh_charts()[0] : common_chart(m, pts);
  eg.coords.push_back(coords_in_chart(m, imm.verts[ids[0]], eg.chart));
  for (std::size_t i = 1; i < ids.size(); ++i)
    eg.coords.push_back(coords_in_chart(m, imm.verts[ids[i]], eg.chart, eg.coords[0]));

  Vec mid = eg.coords[0];
  for (std::size_t i = 1; i < eg.coords.size(); ++i) mid += eg.coords[i];
  mid /= double(eg.coords.size());
  ChartPoint center{eg.chart, mid};
  center.x = m.project_to_model(center);
  eg.center = center.x;
  const Mat g = m.metric(center);

  if (imm.dim == 1) {
    const Vec d = eg.coords[1] - eg.coords[0];
    // Simpson quadrature of the speed of proj((1-t)a + t b); exact chord for
    // unconstrained charts, O(h^4)-accurate arc on constrained ones
    auto speed = [&](const Vec& x) {
      ChartPoint q{eg.chart, x};
      const Vec dd = m.projection_differential(q, d);
      ChartPoint qp{eg.chart, m.project_to_model(q)};
      return std::sqrt(dd.dot(m.metric(qp) * dd));
    };
    const Vec dd_mid = m.projection_differential(ChartPoint{eg.chart, mid}, d);
    eg.G = Mat::Zero(1, 1);
    eg.G(0, 0) = g_inner(g, dd_mid, dd_mid);
    eg.measure = m.has_constraint()
                     ? (speed(eg.coords[0]) + 4.0 * speed(mid) + speed(eg.coords[1])) / 6.0
                     : (speed(eg.coords[0]) + 4.0 * std::sqrt(eg.G(0, 0)) + speed(eg.coords[1])) / 6.0;
    eg.measure_flat = d.norm();
    eg.frame = gram_schmidt(g, {dd_mid});
  } else {
    const Vec e1 = eg.coords[1] - eg.coords[0];
    const Vec e2 = eg.coords[2] - eg.coords[0];
    eg.G = Mat(2, 2);
    eg.G << g_inner(g, e1, e1), g_inner(g, e1, e2), g_inner(g, e2, e1), g_inner(g, e2, e2);
    const double det = eg.G.determinant();
    if (det <= 0)
      throw numerical_error("element " + std::to_string(elem) + " has degenerate metric");
    eg.measure = 0.5 * std::sqrt(det);
    const double fdet =
        e1.squaredNorm() * e2.squaredNorm() - std::pow(e1.dot(e2), 2);
    eg.measure_flat = 0.5 * std::sqrt(std::max(fdet, 0.0));
    eg.frame = gram_schmidt(g, {e1, e2});
    if (m.has_omega_plus()) {
      const Mat om = m.omega_plus(center);
      eg.omega = double(imm.orientation) * eg.frame[0].dot(om * eg.frame[1]);
    }
  }
  return eg;
}

void check_degeneracy(const std::vector<ElementGeom>& elems) {
  double mean = 0;
  for (const auto& el : elems) mean += el.measure;
  mean /= double(elems.size());
  std::vector<int> degenerate;
  for (int e = 0; e < int(elems.size()); ++e)
    if (elems[e].measure < 1e-14 * mean) degenerate.push_back(e);
  if (!degenerate.empty()) {
    std::ostringstream os;
    os << "degenerate elements:";
    for (int e : degenerate) os << " " << e;
    throw numerical_error(os.str());
  }
}

}  // namespace

InducedGeometry induced_geometry(const DiscreteImmersion& imm) {
  (void)get_topology(imm);  // validates connectivity
  InducedGeometry out;
  const int E = imm.num_elements();
  out.elements.reserve(E);
  for (int e = 0; e < E; ++e) out.elements.push_back(element_geometry(imm, e));
  check_degeneracy(out.elements);
  for (const auto& el : out.elements) out.total_measure += el.measure;

  double hmin = 1e300;
  const SasakiModel& m = *imm.model;
  for (const auto& el : out.elements)
    for (std::size_t i = 0; i < el.coords.size(); ++i)
      for (std::size_t j = i + 1; j < el.coords.size(); ++j) {
        const Vec d = el.coords[j] - el.coords[i];
        ChartPoint mid{el.chart, 0.5 * (el.coords[i] + el.coords[j])};
        mid.x = m.project_to_model(mid);
        hmin = std::min(hmin, std::sqrt(d.dot(m.metric(mid) * d)));
      }
  out.h_min = hmin;
  return out;
}

// ---------------- vertex frames ----------------

std::vector<VertexFrame> vertex_frames(const DiscreteImmersion& imm,
                                       const MeshTopology& topo,
                                       const std::vector<ElementGeom>& elems) {
  const SasakiModel& m = *imm.model;
  const int V = imm.num_vertices();
  std::vector<VertexFrame> out(V);

  for (int v = 0; v < V; ++v) {
    VertexFrame& fr = out[v];
    const ChartPoint& p = imm.verts[v];
    fr.chart = p.chart;
    fr.g = m.metric(p);
    fr.T = m.reeb(p);
    const int d = m.chart_dim(p.chart);

    std::vector<Vec> raw;
    if (imm.dim == 1) {
      // tangent from the two neighbors, oriented by the outgoing segment
      int nb_next = -1, nb_prev = -1;
      for (int e : topo.vert_elems[v]) {
        const auto& s = imm.segments[e];
        if (s[0] == v) nb_next = s[1];
        if (s[1] == v) nb_prev = s[0];
      }
      Vec t;
      if (nb_next >= 0 && nb_prev >= 0)
        t = coords_in_chart(m, imm.verts[nb_next], p.chart, p.x) -
            coords_in_chart(m, imm.verts[nb_prev], p.chart, p.x);
      else if (nb_next >= 0)
        t = coords_in_chart(m, imm.verts[nb_next], p.chart, p.x) - p.x;
      else
        t = p.x - coords_in_chart(m, imm.verts[nb_prev], p.chart, p.x);
      raw = {m.project_tangent(p, t)};
    } else {
      // averaged projector of incident element frames, top eigenvectors
      Mat P = Mat::Zero(d, d);
      double wsum = 0;
      for (int e : topo.vert_elems[v]) {
        const ElementGeom& el = elems[e];
        for (const Vec& f : el.frame) {
          Vec fv = f;
          if (el.chart != p.chart) {
            ChartPoint cp{el.chart, el.center};
            fv = m.transition_jacobian(cp, p.chart) * f;
          }
          P += el.measure * fv * fv.transpose();
        }
        wsum += el.measure;
      }
      P /= wsum;
      // g-orthonormal top-2 directions of P
      Eigen::LLT<Mat> llt(fr.g);
      const Mat L = llt.matrixL();
      const Mat Pt = L.transpose() * P * L;
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Pt + Pt.transpose()));
      const Mat evec = es.eigenvectors();
      // columns sorted ascending; take the last two
      Vec y1 = evec.col(d - 1), y2 = evec.col(d - 2);
      const Mat Linv_t = L.transpose().inverse();
      raw = {Linv_t * y1, Linv_t * y2};
      // orient consistently with the first incident element
      const ElementGeom& el0 = elems[topo.vert_elems[v][0]];
      Vec f0 = el0.frame[0], f1 = el0.frame[1];
      if (el0.chart != p.chart) {
        ChartPoint cp{el0.chart, el0.center};
        const Mat J = m.transition_jacobian(cp, p.chart);
        f0 = J * f0;
        f1 = J * f1;
      }
      const double det = g_inner(fr.g, raw[0], f0) * g_inner(fr.g, raw[1], f1) -
                         g_inner(fr.g, raw[0], f1) * g_inner(fr.g, raw[1], f0);
      if (det < 0) std::swap(raw[0], raw[1]);
    }

    fr.tangent = gram_schmidt(fr.g, raw);
    // normal frame: Phi(tangent) orthonormalized against the tangent plane
    // and the (orthogonalized) Reeb direction, so the projection is exact
    std::vector<Vec> tn = fr.tangent;
    tn.push_back(gram_schmidt(fr.g, {fr.T}, fr.tangent)[0]);
    const Mat Phi = m.phi(p);
    std::vector<Vec> ph;
    for (const Vec& t : fr.tangent) ph.push_back(Phi * t);
    fr.normal_phi = gram_schmidt(fr.g, ph, tn);
  }
  return out;
}

// ---------------- snapshot pipeline ----------------

namespace {

struct Workspace {
  const MeshTopology* topo = nullptr;
  InducedGeometry geom;
  std::vector<VertexFrame> frames;
  Vec mass;  // lumped vertex measures
  std::vector<std::vector<Mat>> gamma;  // per-vertex Christoffels (empty on flat charts)
};

Workspace build_workspace(const DiscreteImmersion& imm) {
  Workspace w;
  w.topo = &get_topology(imm);
  const int E = imm.num_elements();
  w.geom.elements.reserve(E);
  for (int e = 0; e < E; ++e) w.geom.elements.push_back(element_geometry(imm, e));
  check_degeneracy(w.geom.elements);
  for (const auto& el : w.geom.elements) w.geom.total_measure += el.measure;

  const SasakiModel& m = *imm.model;
  double hmin = 1e300;
  for (const auto& el : w.geom.elements)
    for (std::size_t i = 0; i < el.coords.size(); ++i)
      for (std::size_t j = i + 1; j < el.coords.size(); ++j) {
        const Vec d = el.coords[j] - el.coords[i];
        ChartPoint mid{el.chart, 0.5 * (el.coords[i] + el.coords[j])};
        mid.x = m.project_to_model(mid);
        hmin = std::min(hmin, std::sqrt(d.dot(m.metric(mid) * d)));
      }
  w.geom.h_min = hmin;

  w.frames = vertex_frames(imm, *w.topo, w.geom.elements);

  w.gamma.resize(imm.num_vertices());
  for (int v = 0; v < imm.num_vertices(); ++v)
    if (!m.flat_chart(imm.verts[v].chart)) w.gamma[v] = m.christoffels(imm.verts[v]);

  const int V = imm.num_vertices();
  w.mass = Vec::Zero(V);
  const double share = imm.dim == 1 ? 0.5 : 1.0 / 3.0;
  for (int e = 0; e < E; ++e) {
    const auto ids = imm.dim == 1
                         ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                         : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                            imm.triangles[e][2]};
    for (int id : ids) w.mass[id] += share * w.geom.elements[e].measure;
  }
  return w;
}

// P1 stiffness of one element (rows/cols follow corner order).
Mat element_stiffness(const ElementGeom& el, int dim) {
  if (dim == 1) {
    Mat K(2, 2);
    const double w = 1.0 / el.measure;
    K << w, -w, -w, w;
    return K;
  }
  Mat grad(2, 3);
  grad << -1, 1, 0, -1, 0, 1;  // reference gradients of (l0, l1, l2)
  const Mat Ginv = el.G.inverse();
  return el.measure * grad.transpose() * Ginv * grad;
}

// Discrete Laplace-Beltrami of the chart coordinate functions at each
// vertex, evaluated in the vertex home chart.
std::vector<Vec> laplacian_of_coords(const DiscreteImmersion& imm, const Workspace& w) {
  const SasakiModel& m = *imm.model;
  const int V = imm.num_vertices();
  std::vector<Vec> lap(V);
  for (int v = 0; v < V; ++v) lap[v] = Vec::Zero(m.chart_dim(imm.verts[v].chart));

  const int E = imm.num_elements();
  for (int e = 0; e < E; ++e) {
    const ElementGeom& el = w.geom.elements[e];
    const Mat K = element_stiffness(el, imm.dim);
    const auto ids = imm.dim == 1
                         ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                         : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                            imm.triangles[e][2]};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int v = ids[i];
      const int home = imm.verts[v].chart;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        if (K(i, j) == 0.0) continue;
        const Vec xj = coords_in_chart(m, imm.verts[ids[j]], home, imm.verts[v].x);
        lap[v] -= K(i, j) * xj;
      }
    }
  }
  for (int v = 0; v < V; ++v) lap[v] /= w.mass[v];
  return lap;
}

// Mean curvature vectors from the FEM Laplacian plus the ambient Christoffel
// correction, projected onto the Phi(T Sigma) normal frame.
std::vector<Vec> mean_curvature_impl(const DiscreteImmersion& imm, const Workspace& w) {
  const SasakiModel& m = *imm.model;
  const int V = imm.num_vertices();
  std::vector<Vec> lap = laplacian_of_coords(imm, w);
  std::vector<Vec> H(V);
  for (int v = 0; v < V; ++v) {
    const ChartPoint& p = imm.verts[v];
    const VertexFrame& fr = w.frames[v];
    Vec pre = lap[v];
    // chart-backend correction g^{ij} Gamma^c_{ab} dF^a dF^b = sum_k Gamma(e_k, e_k)
    if (!w.gamma[v].empty()) {
      const auto& gam = w.gamma[v];
      for (const Vec& t : fr.tangent)
        for (int c = 0; c < pre.size(); ++c) pre[c] += t.dot(gam[c] * t);
    }
    if (m.isometric_embedding) {
      std::vector<Vec> frame = fr.tangent;
      pre += m.ambient_correction(p, frame);
    }
    // project onto the span of the Phi-normal frame (exactly g-orthogonal to
    // T Sigma and to the Reeb direction)
    Vec h = Vec::Zero(pre.size());
    for (const Vec& nk : fr.normal_phi) h += g_inner(fr.g, pre, nk) * nk;
    H[v] = h;
  }
  return H;
}

struct FitResult {
  Vec A_norm2, H_norm2_fit, sym_defect;
};

// Least-squares quadratic fit of the immersion over ring neighborhoods in
// g-normal coordinates; one tilt-correction pass refines the tangent plane.
FitResult second_fundamental_impl(const DiscreteImmersion& imm, const Workspace& w) {
  const SasakiModel& m = *imm.model;
  const int V = imm.num_vertices();
  FitResult out;
  out.A_norm2 = Vec::Zero(V);
  out.H_norm2_fit = Vec::Zero(V);
  out.sym_defect = Vec::Zero(V);

  const int dim = imm.dim;
  const int nquad = dim == 1 ? 1 : 3;             // independent Hessian entries
  const int nunk = dim + nquad;                   // linear + quadratic

  for (int v = 0; v < V; ++v) {
    const ChartPoint& p = imm.verts[v];
    const VertexFrame& fr0 = w.frames[v];

    // stencil: 1-ring, widened to the 2-ring when too small
    std::vector<int> ring = w.topo->ring[v];
    if (int(ring.size()) < (dim == 1 ? 2 : 3)) {
      if (!imm.closed && imm.diagnostic) continue;  // open-curve endpoints
      throw validation_error("vertex " + std::to_string(v) + " has deficient stencil");
    }
    if (dim == 2 && int(ring.size()) < 5) {
      std::set<int> rs(ring.begin(), ring.end());
      for (int nb : w.topo->ring[v])
        for (int nb2 : w.topo->ring[nb])
          if (nb2 != v) rs.insert(nb2);
      ring.assign(rs.begin(), rs.end());
    }
    const int R = int(ring.size());
    if (R < nunk && !(dim == 1 && R == 2))
      throw validation_error("vertex " + std::to_string(v) + " has deficient stencil");

    std::vector<Vec> offs(R);
    double scale = 0;
    for (int j = 0; j < R; ++j) {
      offs[j] = coords_in_chart(m, imm.verts[ring[j]], p.chart, p.x) - p.x;
      offs[j] = m.project_tangent(p, offs[j]);
      scale += std::sqrt(g_inner(fr0.g, offs[j], offs[j]));
    }
    scale /= R;

    std::vector<Vec> tangent = fr0.tangent;
    std::vector<Vec> normals = fr0.normal_phi;
    normals.push_back(fr0.T);  // fit the Reeb component as well
    Mat hess;                  // (dim normals) x nquad columns
    Vec trace2;

    for (int pass = 0; pass < 2; ++pass) {
      const int NN = int(normals.size());
      Mat Arows(R, nunk);
      Mat rhs(R, NN);
      for (int j = 0; j < R; ++j) {
        Vec xi(dim);
        for (int a = 0; a < dim; ++a) xi[a] = g_inner(fr0.g, offs[j], tangent[a]) / scale;
        int col = 0;
        for (int a = 0; a < dim; ++a) Arows(j, col++) = xi[a];
        if (dim == 1) {
          Arows(j, col++) = 0.5 * xi[0] * xi[0];
        } else {
          Arows(j, col++) = 0.5 * xi[0] * xi[0];
          Arows(j, col++) = xi[0] * xi[1];
          Arows(j, col++) = 0.5 * xi[1] * xi[1];
        }
        for (int k = 0; k < NN; ++k)
          rhs(j, k) = g_inner(fr0.g, offs[j], normals[k]) / scale;
      }
      const Mat sol = Arows.colPivHouseholderQr().solve(rhs);

      if (pass == 0) {
        // tilt the tangent plane by the fitted linear terms and refit
        std::vector<Vec> tilted = tangent;
        for (int a = 0; a < dim; ++a)
          for (int k = 0; k < NN; ++k) tilted[a] += sol(a, k) * normals[k];
        tangent = gram_schmidt(fr0.g, tilted);
        std::vector<Vec> tn = tangent;
        tn.push_back(fr0.T);
        const Mat Phi = m.phi(p);
        std::vector<Vec> ph;
        for (const Vec& t : tangent) ph.push_back(Phi * t);
        normals = gram_schmidt(fr0.g, ph, tn);
        normals.push_back(fr0.T);
        continue;
      }

      // curvature: quadratic coefficients back to unscaled units (1/scale)
      hess = sol.bottomRows(nquad) / scale;
      trace2 = Vec::Zero(NN);
      // ambient Christoffel correction: A^k(u,v) = hess + <Gamma(u,v), n_k>
      const auto& gam = w.gamma[v];
      auto gamma_vec = [&](const Vec& u, const Vec& t2) {
        Vec gv = Vec::Zero(p.x.size());
        if (gam.empty()) return gv;
        for (int c = 0; c < gv.size(); ++c) gv[c] = u.dot(gam[c] * t2);
        return gv;
      };

      double a2 = 0, defect = 0;
      std::vector<Mat> Ak(NN, Mat::Zero(dim, dim));
      for (int k = 0; k < NN; ++k) {
        if (dim == 1) {
          Ak[k](0, 0) = hess(0, k) +
                        g_inner(fr0.g, gamma_vec(tangent[0], tangent[0]), normals[k]);
        } else {
          const Vec g00 = gamma_vec(tangent[0], tangent[0]);
          const Vec g01 = gamma_vec(tangent[0], tangent[1]);
          const Vec g11 = gamma_vec(tangent[1], tangent[1]);
          Ak[k](0, 0) = hess(0, k) + g_inner(fr0.g, g00, normals[k]);
          Ak[k](0, 1) = Ak[k](1, 0) = hess(1, k) + g_inner(fr0.g, g01, normals[k]);
          Ak[k](1, 1) = hess(2, k) + g_inner(fr0.g, g11, normals[k]);
        }
      }
      // |A|^2 over the Phi-frame normals (the Reeb component vanishes for
      // Legendrians and is reported inside the symmetry defect)
      for (int k = 0; k < dim; ++k) {
        a2 += Ak[k].squaredNorm();
        trace2[k] = Ak[k].trace();
      }
      out.A_norm2[v] = a2;
      double h2 = 0;
      for (int k = 0; k < dim; ++k) h2 += trace2[k] * trace2[k];
      out.H_norm2_fit[v] = h2;
      // full-symmetry defect h_{kij} vs h_{ikj} plus the Reeb block size
      if (dim == 2) {
        defect = std::max(defect, std::abs(Ak[0](0, 1) - Ak[1](0, 0)));
        defect = std::max(defect, std::abs(Ak[0](1, 1) - Ak[1](0, 1)));
      }
      defect = std::max(defect, Ak[dim > 1 ? 2 : 1].cwiseAbs().maxCoeff());
      out.sym_defect[v] = defect;
    }
  }
  return out;
}

double lagrangian_cone_phase(const DiscreteImmersion& imm, const Workspace& w, int v) {
  // phase of det_C [F, t] for the cone frame of a Legendrian curve in S^3
  const ChartPoint& p = imm.verts[v];
  const Vec& t = w.frames[v].tangent[0];
  const std::complex<double> F1(p.x[0], p.x[1]), F2(p.x[2], p.x[3]);
  const std::complex<double> T1(t[0], t[1]), T2(t[2], t[3]);
  return std::arg(F1 * T2 - F2 * T1);
}

Vec edge_alpha_form(const DiscreteImmersion& imm, const Workspace& w,
                    const std::vector<Vec>& H) {
  const SasakiModel& m = *imm.model;
  const int NE = int(w.topo->edges.size());
  Vec form(NE);
  for (int e = 0; e < NE; ++e) {
    const int a = w.topo->edges[e][0], b = w.topo->edges[e][1];
    const ChartPoint& pa = imm.verts[a];
    const ChartPoint& pb = imm.verts[b];
    const Vec da = coords_in_chart(m, pb, pa.chart, pa.x) - pa.x;
    const Vec db = pb.x - coords_in_chart(m, pa, pb.chart, pb.x);
    const double ca = g_inner(w.frames[a].g, H[a], m.phi(pa) * da);
    const double cb = g_inner(w.frames[b].g, H[b], m.phi(pb) * db);
    form[e] = -0.5 * (ca + cb);
  }
  return form;
}

}  // namespace

AlphaField integrate_edge_form(const DiscreteImmersion& imm, const MeshTopology& topo,
                               const Vec& edge_form, const AlphaGauge& gauge) {
  const int V = imm.num_vertices();
  if (edge_form.size() != int(topo.edges.size()))
    throw validation_error("integrate_edge_form: edge count mismatch");

  AlphaField out;
  out.alpha = Vec::Zero(V);
  std::vector<char> seen(V, 0);
  std::vector<char> tree_edge(topo.edges.size(), 0);
  // BFS spanning tree from the gauge anchor
  const int root = (gauge.policy == AlphaGauge::Policy::MeanZero) ? 0 : gauge.anchor_vertex;
  if (root < 0 || root >= V) throw validation_error("gauge anchor out of range");
  std::vector<int> queue = {root};
  seen[root] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int v = queue[qi];
    for (int e : topo.vert_edges[v]) {
      const int o = topo.edges[e][0] == v ? topo.edges[e][1] : topo.edges[e][0];
      if (seen[o]) continue;
      seen[o] = 1;
      tree_edge[e] = 1;
      const double inc = topo.edges[e][0] == v ? edge_form[e] : -edge_form[e];
      out.alpha[o] = out.alpha[v] + inc;
      queue.push_back(o);
    }
  }
  for (int v = 0; v < V; ++v)
    if (!seen[v]) throw validation_error("mesh is not connected");

  double res = 0;
  for (int e = 0; e < int(topo.edges.size()); ++e) {
    if (tree_edge[e]) continue;
    const double cyc = out.alpha[topo.edges[e][1]] - out.alpha[topo.edges[e][0]] - edge_form[e];
    res = std::max(res, std::abs(cyc));
  }
  out.exactness_residual = res;
  return out;
}

GeometrySnapshot compute_snapshot(const DiscreteImmersion& imm, const AlphaGauge& gauge) {
  const SasakiModel& m = *imm.model;
  const Workspace w = build_workspace(imm);
  const int V = imm.num_vertices();
  const int E = imm.num_elements();

  GeometrySnapshot s;
  s.time = imm.time;
  s.dim = imm.dim;
  s.geom = w.geom;
  s.area = w.geom.total_measure;
  s.h_min = w.geom.h_min;
  s.gauge = gauge;

  // mean curvature + second fundamental form
  s.H = mean_curvature_impl(imm, w);
  const FitResult fit = second_fundamental_impl(imm, w);
  s.A_norm2 = fit.A_norm2;
  s.sym_defect = fit.sym_defect;
  s.H_norm2 = Vec::Zero(V);
  for (int v = 0; v < V; ++v) s.H_norm2[v] = g_inner(w.frames[v].g, s.H[v], s.H[v]);

  // Legendrian angle
  const Vec dalpha = edge_alpha_form(imm, w, s.H);
  AlphaField af = integrate_edge_form(imm, *w.topo, dalpha, gauge);
  double shift = 0;
  switch (gauge.policy) {
    case AlphaGauge::Policy::Anchor:
      shift = gauge.anchor_value - af.alpha[gauge.anchor_vertex];
      break;
    case AlphaGauge::Policy::MeanZero: {
      double num = 0;
      for (int v = 0; v < V; ++v) num += w.mass[v] * af.alpha[v];
      shift = -num / w.mass.sum();
      break;
    }
    case AlphaGauge::Policy::ConePhase: {
      if (m.id != ModelId::RoundS3)
        throw validation_error("cone_phase gauge is only valid on round_s3");
      const double phase = lagrangian_cone_phase(imm, w, gauge.anchor_vertex);
      shift = -phase - af.alpha[gauge.anchor_vertex];
      break;
    }
  }
  s.alpha = af.alpha.array() + shift;
  s.exactness_residual = af.exactness_residual;
  s.alpha_gauge_const = shift;

  // per-element scalars to vertices
  s.omega = Vec::Zero(V);
  s.grad_alpha_norm2 = Vec::Zero(V);
  s.grad_omega_norm2 = Vec::Zero(V);
  if (imm.dim == 2 && m.has_omega_plus()) {
    Vec wsum = Vec::Zero(V);
    for (int e = 0; e < E; ++e) {
      const auto& tri = imm.triangles[e];
      for (int c = 0; c < 3; ++c) {
        s.omega[tri[c]] += w.geom.elements[e].measure * w.geom.elements[e].omega;
        wsum[tri[c]] += w.geom.elements[e].measure;
      }
    }
    for (int v = 0; v < V; ++v) s.omega[v] /= wsum[v];
    s.omega_min = s.omega.minCoeff();
    s.omega_max = s.omega.maxCoeff();
    for (int v = 0; v < V; ++v)
      if (s.omega[v] < -1.0 - 1e-6 || s.omega[v] > 1.0 + 1e-6)
        throw numerical_error("Omega out of [-1,1] at vertex " + std::to_string(v));
  }

  // P1 gradients of alpha and omega
  auto accumulate_grad = [&](const Vec& f, Vec& out_v) {
    Vec wsum = Vec::Zero(V);
    for (int e = 0; e < E; ++e) {
      const ElementGeom& el = w.geom.elements[e];
      double gn2;
      if (imm.dim == 1) {
        const auto& sg = imm.segments[e];
        const double df = f[sg[1]] - f[sg[0]];
        gn2 = df * df / el.G(0, 0);
      } else {
        const auto& tr = imm.triangles[e];
        Eigen::Vector2d df(f[tr[1]] - f[tr[0]], f[tr[2]] - f[tr[0]]);
        gn2 = df.dot(el.G.inverse() * df);
      }
      const auto ids = imm.dim == 1
                           ? std::vector<int>{imm.segments[e][0], imm.segments[e][1]}
                           : std::vector<int>{imm.triangles[e][0], imm.triangles[e][1],
                                              imm.triangles[e][2]};
      for (int id : ids) {
        out_v[id] += el.measure * gn2;
        wsum[id] += el.measure;
      }
    }
    for (int v = 0; v < V; ++v) out_v[v] /= wsum[v];
  };
  accumulate_grad(s.alpha, s.grad_alpha_norm2);
  if (imm.dim == 2 && m.has_omega_plus()) accumulate_grad(s.omega, s.grad_omega_norm2);

  // Legendrian residual per edge -> per vertex max
  s.leg_res = Vec::Zero(V);
  double worst = 0;
  for (std::size_t e = 0; e < w.topo->edges.size(); ++e) {
    const int a = w.topo->edges[e][0], b = w.topo->edges[e][1];
    std::vector<const ChartPoint*> pts = {&imm.verts[a], &imm.verts[b]};
    const int c = m.mesh_charts().size() == 1 ? m.mesh_charts()[0] : common_chart(m, pts);
    const Vec xa = coords_in_chart(m, imm.verts[a], c);
    const Vec xb = coords_in_chart(m, imm.verts[b], c, xa);
    ChartPoint mid{c, 0.5 * (xa + xb)};
    mid.x = m.project_to_model(mid);
    const Vec d = xb - xa;
    const double len = std::sqrt(d.dot(m.metric(mid) * d));
    const double r = std::abs(m.eta(mid).dot(d)) / len;
    s.leg_res[a] = std::max(s.leg_res[a], r);
    s.leg_res[b] = std::max(s.leg_res[b], r);
    worst = std::max(worst, r);
  }
  s.legendrian_residual = worst;

  // flow velocity
  s.velocity.resize(V);
  s.max_velocity = 0;
  for (int v = 0; v < V; ++v) {
    s.velocity[v] = s.H[v] - 2.0 * s.alpha[v] * w.frames[v].T;
    s.max_velocity = std::max(
        s.max_velocity, std::sqrt(g_inner(w.frames[v].g, s.velocity[v], s.velocity[v])));
  }
  return s;
}

std::vector<Vec> mean_curvature(const DiscreteImmersion& imm) {
  const Workspace w = build_workspace(imm);
  return mean_curvature_impl(imm, w);
}

SecondFundamental second_fundamental_norm(const DiscreteImmersion& imm) {
  const Workspace w = build_workspace(imm);
  const FitResult fit = second_fundamental_impl(imm, w);
  return SecondFundamental{fit.A_norm2, fit.H_norm2_fit, fit.sym_defect};
}

double legendrian_residual(const DiscreteImmersion& imm) {
  const SasakiModel& m = *imm.model;
  const MeshTopology& topo = get_topology(imm);
  double worst = 0;
  for (const auto& e : topo.edges) {
    std::vector<const ChartPoint*> pts = {&imm.verts[e[0]], &imm.verts[e[1]]};
    const int c = m.mesh_charts().size() == 1 ? m.mesh_charts()[0] : common_chart(m, pts);
    const Vec xa = coords_in_chart(m, imm.verts[e[0]], c);
    const Vec xb = coords_in_chart(m, imm.verts[e[1]], c, xa);
    ChartPoint mid{c, 0.5 * (xa + xb)};
    mid.x = m.project_to_model(mid);
    const Vec d = xb - xa;
    const double len = std::sqrt(d.dot(m.metric(mid) * d));
    worst = std::max(worst, std::abs(m.eta(mid).dot(d)) / len);
  }
  return worst;
}

AlphaField recover_alpha(const DiscreteImmersion& imm, const AlphaGauge& gauge) {
  const Workspace w = build_workspace(imm);
  const std::vector<Vec> H = mean_curvature_impl(imm, w);
  const Vec dalpha = edge_alpha_form(imm, w, H);
  AlphaField af = integrate_edge_form(imm, *w.topo, dalpha, gauge);
  double shift = 0;
  if (gauge.policy == AlphaGauge::Policy::Anchor)
    shift = gauge.anchor_value - af.alpha[gauge.anchor_vertex];
  else if (gauge.policy == AlphaGauge::Policy::MeanZero) {
    double num = 0;
    for (int v = 0; v < imm.num_vertices(); ++v) num += w.mass[v] * af.alpha[v];
    shift = -num / w.mass.sum();
  } else {
    const double phase = lagrangian_cone_phase(imm, w, gauge.anchor_vertex);
    shift = -phase - af.alpha[gauge.anchor_vertex];
  }
  af.alpha.array() += shift;
  af.gauge_const = shift;
  return af;
}

Vec omega_star(const DiscreteImmersion& imm) {
  if (imm.dim != 2)
    throw unsupported_error("omega_star requires a surface immersion");
  if (!imm.model->has_omega_plus())
    throw unsupported_error("omega_star: model has no transverse Kahler form");
  InducedGeometry geo = induced_geometry(imm);
  Vec out(imm.num_elements());
  for (int e = 0; e < imm.num_elements(); ++e) out[e] = geo.elements[e].omega;
  return out;
}

double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  auto one_sided = [](const std::vector<Vec>& p, const std::vector<Vec>& q) {
    double worst = 0;
    for (const auto& x : p) {
      double best = 1e300;
      for (const auto& y : q) best = std::min(best, (x - y).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace legflow
