#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "legflow/flow.hpp"
#include "legflow/scenarios.hpp"

using namespace legflow;

TEST_CASE("great-circle polyline length and fixed-point fields") {
  auto imm = great_circle(256);
  auto snap = compute_snapshot(imm, AlphaGauge{});
  CHECK(std::abs(snap.area - 2 * M_PI) < 1e-4);
  CHECK(snap.legendrian_residual < 1e-12);
  CHECK(snap.max_velocity < 1e-10);          // H = 0, alpha = 0 under anchor
  CHECK(snap.A_norm2.maxCoeff() < 1e-10);
  CHECK(snap.exactness_residual < 1e-12);
}

TEST_CASE("identity graph: induced area converges to the calibrated value") {
  // diagonal pullback metric is 1/3 of the round one, so area -> 4 pi / 3
  std::vector<double> errs;
  for (int L : {1, 2, 3}) {
    auto imm = identity_graph(L);
    auto geo = induced_geometry(imm);
    errs.push_back(std::abs(geo.total_measure - 4.0 * M_PI / 3.0));
  }
  auto fit = fit_order(errs);
  CHECK(fit.order > 1.7);
  CHECK(errs.back() < 1e-2);
}

TEST_CASE("identity graph is a discrete fixed point with Omega = 1") {
  auto imm = identity_graph(3);
  auto snap = compute_snapshot(imm, AlphaGauge{});
  CHECK(snap.max_velocity < 1e-12);
  CHECK(snap.omega_min == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(snap.omega_max == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(snap.legendrian_residual < 1e-12);
  CHECK(snap.A_norm2.maxCoeff() < 1e-12);
  // alpha constant across vertices (anchor gauge)
  CHECK(snap.alpha.maxCoeff() - snap.alpha.minCoeff() < 1e-10);
}

TEST_CASE("flipped-orientation triangle is rejected") {
  auto imm = identity_graph(1);
  std::swap(imm.triangles[7][0], imm.triangles[7][1]);
  imm.topology_cache.reset();
  CHECK_THROWS_AS(induced_geometry(imm), Error);
}

TEST_CASE("mean curvature of a small latitude circle (diagnostic, non-Legendrian)") {
  // circle at colatitude r on a totally geodesic 2-sphere has |H| = cot(r)
  auto model = make_model(ModelId::RoundS3);
  const double r = 0.7;
  const int N = 512;
  DiscreteImmersion imm;
  imm.model = model;
  imm.dim = 1;
  imm.diagnostic = true;
  for (int i = 0; i < N; ++i) {
    const double s = 2 * M_PI * i / N;
    Vec p(4);
    p << std::sin(r) * std::cos(s), std::sin(r) * std::sin(s), std::cos(r), 0.0;
    imm.verts.push_back(ChartPoint{0, p});
    imm.segments.push_back({i, (i + 1) % N});
  }
  auto H = mean_curvature(imm);
  double hn = H[0].norm();
  CHECK(hn == doctest::Approx(1.0 / std::tan(r)).epsilon(0.02));
}

TEST_CASE("second fundamental form scales quadratically in the perturbation") {
  auto a1 = compute_snapshot(perturbed_great_circle(256, 0.02, 3), AlphaGauge{});
  auto a2 = compute_snapshot(perturbed_great_circle(256, 0.04, 3), AlphaGauge{});
  const double ratio = a2.A_norm2.maxCoeff() / a1.A_norm2.maxCoeff();
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("fitted trace reproduces the backend mean curvature under refinement") {
  std::vector<double> errs;
  for (int N : {64, 128, 256}) {
    auto imm = perturbed_great_circle(N, 0.05, 3);
    auto snap = compute_snapshot(imm, AlphaGauge{});
    auto sf = second_fundamental_norm(imm);
    double worst = 0;
    for (int v = 0; v < imm.num_vertices(); ++v)
      worst = std::max(worst, std::abs(std::sqrt(sf.H_norm2_fit[v]) -
                                       std::sqrt(snap.H_norm2[v])));
    errs.push_back(worst / std::sqrt(snap.H_norm2.maxCoeff()));
  }
  CHECK(errs.back() < errs.front());
  auto fit = fit_order(errs);
  CHECK(fit.order > 0.7);
}

TEST_CASE("legendrian residual detects an injected Reeb displacement") {
  for (double eps : {1e-4, 2e-4}) {
    auto imm = great_circle(128);
    const Vec T = imm.model->reeb(imm.verts[17]);
    imm.verts[17].x += 2 * eps * T;
    imm.verts[17].x = imm.model->project_to_model(imm.verts[17]);
    const double res = legendrian_residual(imm);
    CHECK(res > eps);  // nonzero, order eps * local factor
    CHECK(res < 200 * eps);
  }
}

TEST_CASE("alpha integration: synthetic holonomy is measured exactly") {
  auto imm = great_circle(64);
  const MeshTopology& topo = get_topology(imm);
  // exact form d(phi) plus a defect on one non-tree edge
  Vec phi(imm.num_vertices());
  for (int v = 0; v < imm.num_vertices(); ++v) phi[v] = std::sin(2.0 * M_PI * v / 64.0);
  Vec form(int(topo.edges.size()));
  for (int e = 0; e < int(topo.edges.size()); ++e)
    form[e] = phi[topo.edges[e][1]] - phi[topo.edges[e][0]];
  AlphaGauge gauge;
  auto base = integrate_edge_form(imm, topo, form, gauge);
  CHECK(base.exactness_residual < 1e-12);

  const double defect = 0.37;
  bool found_nontree = false;
  for (int e = 0; e < int(topo.edges.size()) && !found_nontree; ++e) {
    Vec f2 = form;
    f2[e] += defect;
    auto af = integrate_edge_form(imm, topo, f2, gauge);
    if (af.exactness_residual > 1e-6) {
      CHECK(af.exactness_residual == doctest::Approx(defect).epsilon(1e-10));
      found_nontree = true;
    }
  }
  CHECK(found_nontree);
}

TEST_CASE("alpha gauge covariance and cone phase") {
  auto imm = perturbed_great_circle(256, 0.05, 3);

  AlphaGauge g0;  // anchor 0, value 0
  AlphaGauge g1;
  g1.anchor_value = 0.75;
  auto a0 = recover_alpha(imm, g0);
  auto a1 = recover_alpha(imm, g1);
  CHECK(((a1.alpha - a0.alpha).array() - 0.75).abs().maxCoeff() < 1e-12);

  // cone-phase gauge: alpha should match the negative Lagrangian angle of
  // the cone frame pointwise, not just at the anchor
  AlphaGauge gc;
  gc.policy = AlphaGauge::Policy::ConePhase;
  auto ac = recover_alpha(imm, gc);
  const MeshTopology& topo = get_topology(imm);
  auto geo = induced_geometry(imm);
  auto frames = vertex_frames(imm, topo, geo.elements);
  double worst = 0;
  for (int v = 0; v < imm.num_vertices(); ++v) {
    const Vec& x = imm.verts[v].x;
    const Vec& t = frames[v].tangent[0];
    const std::complex<double> F1(x[0], x[1]), F2(x[2], x[3]);
    const std::complex<double> T1(t[0], t[1]), T2(t[2], t[3]);
    const double phase = std::arg(F1 * T2 - F2 * T1);
    double diff = std::remainder(ac.alpha[v] - (-phase), 2.0 * M_PI);
    worst = std::max(worst, std::abs(diff));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("omega_star is orientation-odd") {
  auto imm = map_graph(SymplectoMap::twist(0.25), 2);
  Vec om = omega_star(imm);
  DiscreteImmersion rev = imm;
  rev.orientation = -1;
  Vec om_rev = omega_star(rev);
  CHECK((om + om_rev).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(om.minCoeff() > 0.0);
  CHECK(om.maxCoeff() < 1.0 + 1e-9);
  // dim-1 input is rejected
  auto circ = great_circle(64);
  CHECK_THROWS_AS(omega_star(circ), Error);
}

TEST_CASE("mean curvature is exactly orthogonal to the surface and the Reeb field") {
  auto imm = map_graph(SymplectoMap::twist(0.3), 2);
  auto snap = compute_snapshot(imm, AlphaGauge{});
  const MeshTopology& topo = get_topology(imm);
  auto frames = vertex_frames(imm, topo, snap.geom.elements);
  const SasakiModel& m = *imm.model;
  for (int v = 0; v < imm.num_vertices(); v += 7) {
    const Mat g = m.metric(imm.verts[v]);
    const double hn = std::sqrt(snap.H[v].dot(g * snap.H[v]));
    if (hn < 1e-14) continue;
    CHECK(std::abs(snap.H[v].dot(g * frames[v].T)) < 1e-8 * hn);
    for (const Vec& t : frames[v].tangent)
      CHECK(std::abs(snap.H[v].dot(g * t)) < 1e-8 * hn);
  }
}

TEST_CASE("pointwise curvature inequalities hold up to refinement slack") {
  for (int L : {2, 3}) {
    auto imm = map_graph(SymplectoMap::twist(0.3), L);
    auto snap = compute_snapshot(imm, AlphaGauge{});
    for (int v = 0; v < imm.num_vertices(); ++v) {
      CHECK(snap.H_norm2[v] <= (4.0 / 3.0) * snap.A_norm2[v] + 2e-2);
      const double om = snap.omega[v];
      CHECK(snap.grad_omega_norm2[v] <=
            (4.0 / 3.0) * (1.0 - om * om) * snap.A_norm2[v] + 2e-2);
    }
  }
}

TEST_CASE("degenerate element reporting") {
  auto imm = great_circle(64);
  imm.verts[10] = imm.verts[11];  // collapse one edge
  CHECK_THROWS_WITH_AS(induced_geometry(imm), doctest::Contains("degenerate"), Error);
}
