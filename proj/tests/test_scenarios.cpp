#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "legflow/flow.hpp"
#include "legflow/scenarios.hpp"

using namespace legflow;

TEST_CASE("area-preservation residuals of the map family") {
  CHECK(is_area_preserving(SymplectoMap::twist(0.4), 100) < 1e-12);
  CHECK(is_area_preserving(SymplectoMap::rotation(Vec3(0, 1, 0), 0.8), 100) < 1e-14);
  auto comp = SymplectoMap::composition(
      {SymplectoMap::twist(0.2), SymplectoMap::rotation(Vec3(0, 0, 1), 0.5)});
  CHECK(is_area_preserving(comp, 100) < 1e-11);
  CHECK(is_area_preserving(SymplectoMap::zcube(), 100) > 0.1);  // flagged
}

TEST_CASE("icosphere vertex counts and valences") {
  for (int L : {0, 1, 2, 3}) {
    auto mesh = icosphere(L);
    CHECK(int(mesh.verts.size()) == 10 * (1 << (2 * L)) + 2);
    CHECK(int(mesh.triangles.size()) == 20 * (1 << (2 * L)));
    for (const auto& v : mesh.verts) CHECK(std::abs(v.norm() - 1.0) < 1e-14);
  }
}

TEST_CASE("identity lift reproduces the fixed point") {
  LiftReport lr;
  auto imm = legendrian_lift(SymplectoMap::rotation(Vec3(0, 0, 1), 0.0), icosphere(2), &lr);
  CHECK(lr.holonomy_residual < 1e-10);
  CHECK(lr.legendrian_residual < 1e-10);
  // psi identically the anchor constant
  for (const auto& p : imm.verts) CHECK(std::abs(p.x[4]) < 1e-10);
  auto snap = compute_snapshot(imm, AlphaGauge{});
  CHECK(snap.max_velocity < 1e-12);
  CHECK(snap.omega_min == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("twist lift: positive Omega and near-Legendrian output") {
  LiftReport lr;
  auto imm = map_graph(SymplectoMap::twist(0.3), 3, &lr);
  CHECK(lr.holonomy_residual < 5e-3);
  CHECK(lr.legendrian_residual < 10 * lr.holonomy_residual);
  auto om = omega_star(imm);
  CHECK(om.minCoeff() > 0.9);
  // closed-form fiber phase of the twist; compare on vertices away from
  // chart transitions (psi defined mod the fiber period)
  auto base = icosphere(3);
  auto map = SymplectoMap::twist(0.3);
  double worst = 0;
  for (std::size_t v = 0; v < base.verts.size(); ++v) {
    const double z = base.verts[v].z();
    const double expected = map.twist_phase(z) - map.twist_phase(base.verts[0].z());
    if (imm.verts[v].chart != imm.verts[0].chart) continue;
    worst = std::max(worst,
                     std::abs(std::remainder(imm.verts[v].x[4] - imm.verts[0].x[4] -
                                             expected, 4.0 * M_PI)));
  }
  CHECK(worst < 5e-3);
}

TEST_CASE("rotation lift crosses pole charts cleanly") {
  LiftReport lr;
  auto imm = map_graph(SymplectoMap::rotation(Vec3(1, 0, 0), 0.9), 3, &lr);
  CHECK(lr.holonomy_residual < 5e-3);
  auto snap = compute_snapshot(imm, AlphaGauge{});
  CHECK(snap.omega_min > 0.99);  // isometry graph is calibrated up to noise
  CHECK(snap.legendrian_residual < 1e-2);
}

TEST_CASE("non-area-preserving map is rejected with a Stokes-defect holonomy") {
  CHECK_THROWS_WITH_AS(map_graph(SymplectoMap::zcube(), 2),
                       doctest::Contains("not liftable"), Error);
  // oracle: the face defect equals the area defect of the mapped face
  auto base = icosphere(2);
  auto map = SymplectoMap::zcube();
  Vec defects = lift_face_defects(map, base);
  int worst = 0;
  for (int f = 1; f < defects.size(); ++f)
    if (std::abs(defects[f]) > std::abs(defects[worst])) worst = f;
  auto tri_area = [](const Vec3& a, const Vec3& b, const Vec3& c) {
    // spherical excess via l'Huilier
    auto ang = [](const Vec3& u, const Vec3& v) {
      return std::acos(std::clamp(u.dot(v), -1.0, 1.0));
    };
    const double s1 = ang(a, b), s2 = ang(b, c), s3 = ang(c, a);
    const double s = 0.5 * (s1 + s2 + s3);
    const double t = std::sqrt(std::max(
        std::tan(s / 2) * std::tan((s - s1) / 2) * std::tan((s - s2) / 2) *
            std::tan((s - s3) / 2),
        0.0));
    return 4.0 * std::atan(t);
  };
  const auto& tri = base.triangles[worst];
  const Vec3 a = base.verts[tri[0]], b = base.verts[tri[1]], c = base.verts[tri[2]];
  const double defect_area = tri_area(a, b, c) -
                             tri_area(map.apply(a), map.apply(b), map.apply(c));
  CHECK(std::abs(defects[worst]) ==
        doctest::Approx(std::abs(defect_area)).epsilon(0.35));
}

TEST_CASE("lift holonomy is anchor- and tree-independent") {
  LiftReport l1, l2;
  auto imm1 = legendrian_lift(SymplectoMap::twist(0.3), icosphere(2), &l1, 5e-3, 0.0);
  auto imm2 = legendrian_lift(SymplectoMap::twist(0.3), icosphere(2), &l2, 5e-3, 1.3);
  CHECK(l1.holonomy_residual == doctest::Approx(l2.holonomy_residual).epsilon(1e-12));
  // anchor shift moves every fiber phase uniformly (graphs congruent under
  // the Reeb isometry)
  for (int v = 0; v < imm1.num_vertices(); ++v)
    CHECK(std::abs(std::remainder(imm2.verts[v].x[4] - imm1.verts[v].x[4] - 1.3,
                                  4.0 * M_PI)) < 1e-9);
}

TEST_CASE("curve seeds in the round 3-sphere") {
  auto gc = great_circle(128);
  CHECK(legendrian_residual(gc) < 1e-12);

  auto pert = perturbed_great_circle(128, 0.05, 3);
  CHECK(legendrian_residual(pert) < 1e-8);

  // doubly traversed equator closes onto a Legendrian great circle
  auto eq = [](double u) { return Vec3(std::cos(u), std::sin(u), 0.0); };
  auto lift2 = horizontal_lift_curve(eq, 128, 2);
  CHECK(legendrian_residual(lift2) < 1e-6);
  auto snap = compute_snapshot(lift2, AlphaGauge{});
  CHECK(snap.area == doctest::Approx(2 * M_PI).epsilon(1e-3));
  CHECK(snap.A_norm2.maxCoeff() < 1e-4);

  // a single traversal encloses area 2 pi and cannot close (fiber holonomy)
  CHECK_THROWS_WITH_AS(horizontal_lift_curve(eq, 128, 1),
                       doctest::Contains("does not close"), Error);

  // zero-area bowtie closes
  auto bt = bowtie_curve(128, 0.8, 0.4);
  CHECK(legendrian_residual(bt) < 1e-6);
}

TEST_CASE("perturbation operator basics") {
  auto imm = great_circle(128);
  const int V = imm.num_vertices();

  // u = 0 is the identity
  auto same = perturb_legendrian(imm, Vec::Zero(V), 0.05);
  double d0 = 0;
  for (int v = 0; v < V; ++v) d0 = std::max(d0, (same.verts[v].x - imm.verts[v].x).norm());
  CHECK(d0 < 1e-12);

  // constant u = c is a pure Reeb translation: z -> cos(2 eps c) z - sin(2 eps c) i z
  const double c = 0.8, eps = 0.04;
  auto moved = perturb_legendrian(imm, Vec::Constant(V, c), eps);
  const double ang = 2.0 * eps * c;
  double worst = 0;
  for (int v = 0; v < V; ++v) {
    const Vec& z = imm.verts[v].x;
    Vec iz(4);
    iz << -z[1], z[0], -z[3], z[2];
    const Vec expect = std::cos(ang) * z - std::sin(ang) * iz;
    worst = std::max(worst, (moved.verts[v].x - expect).norm());
  }
  CHECK(worst < 1e-6);
  // shape isometric: edge lengths unchanged
  auto g0 = induced_geometry(imm), g1 = induced_geometry(moved);
  CHECK(std::abs(g0.total_measure - g1.total_measure) < 1e-8);

  // displacement scales linearly for small eps
  Vec u(V);
  for (int v = 0; v < V; ++v) u[v] = std::sin(4.0 * M_PI * v / V);
  auto p1 = perturb_legendrian(imm, u, 0.01);
  auto p2 = perturb_legendrian(imm, u, 0.02);
  double m1 = 0, m2 = 0;
  for (int v = 0; v < V; ++v) {
    m1 = std::max(m1, (p1.verts[v].x - imm.verts[v].x).norm());
    m2 = std::max(m2, (p2.verts[v].x - imm.verts[v].x).norm());
  }
  CHECK(m2 / m1 == doctest::Approx(2.0).epsilon(0.1));
}
