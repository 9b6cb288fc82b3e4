#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "legflow/model.hpp"

using namespace legflow;

namespace {

// Numeric exterior derivative of the covector field eta: (d eta)_{ab}.
Mat numeric_deta(const SasakiModel& m, const ChartPoint& p, double h = 1e-5) {
  const int d = m.chart_dim(p.chart);
  Mat de = Mat::Zero(d, d);
  std::vector<Vec> deta(d);
  for (int a = 0; a < d; ++a) {
    ChartPoint pp = p, pm = p;
    pp.x[a] += h;
    pm.x[a] -= h;
    deta[a] = (m.eta(pp) - m.eta(pm)) / (2.0 * h);
  }
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) de(a, b) = deta[a][b] - deta[b][a];
  return de;
}

void check_pointwise_invariants(const SasakiModel& m, const ChartPoint& p, Rng& rng) {
  const Vec et = m.eta(p);
  const Vec T = m.reeb(p);
  const Mat F = m.phi(p);
  const Mat g = m.metric(p);

  CHECK(std::abs(et.dot(T) - 1.0) < 1e-8);                 // eta(T) = 1
  CHECK(std::abs(T.dot(g * T) - 1.0) < 1e-8);              // g(T,T) = 1
  CHECK((F * T).norm() < 1e-8);                            // Phi T = 0

  // d eta(T, X) = 0 for tangent X
  const Mat de = numeric_deta(m, p);
  const int dd = m.chart_dim(p.chart);
  for (int j = 0; j < dd; ++j) {
    Vec ej = Vec::Zero(dd);
    ej[j] = 1.0;
    CHECK(std::abs(T.dot(de * m.project_tangent(p, ej))) < 1e-8);
  }

  // Phi^2 = -id on ker eta and compatibility with g.
  const int d = m.chart_dim(p.chart);
  for (int k = 0; k < 4; ++k) {
    Vec v = m.project_tangent(p, rng.normal_vec(d));
    v -= et.dot(v) * T;  // horizontal
    CHECK((F * (F * v) + v).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, v.norm()));
    Vec w = m.project_tangent(p, rng.normal_vec(d));
    const double lhs = (F * v).dot(g * (F * w));
    const double rhs = v.dot(g * w) - et.dot(v) * et.dot(w);
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
    // Sasakian pairing used by the flow: d eta(Y, X) = 2 g(Phi Y, X).
    const double dew_v = w.dot(de * v);  // de_{ab} w^a v^b
    const double pair = 2.0 * (F * w).dot(g * v);
    CHECK(std::abs(dew_v - pair) < 1e-7 * std::max(1.0, std::abs(pair)));
  }
}

}  // namespace

TEST_CASE("round_s3 contact data at the base point") {
  auto m = make_model(ModelId::RoundS3);
  ChartPoint p{0, Vec4(1, 0, 0, 0)};
  auto cd = contact_data(*m, p);
  CHECK((cd.reeb.v - Vec4(0, 1, 0, 0)).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK((cd.eta - Vec4(0, 1, 0, 0)).norm() == doctest::Approx(0.0).epsilon(1e-14));
  Vec4 v(0, 0, 1, 0);
  CHECK(((cd.phi * v) - Vec4(0, 0, 0, 1)).norm() < 1e-14);
}

TEST_CASE("std_contact Darboux data at the origin") {
  auto m = make_model(ModelId::StdContact, 1);
  ChartPoint p{0, Vec::Zero(3)};
  auto cd = contact_data(*m, p);
  CHECK(cd.reeb.v[2] == doctest::Approx(2.0));
  CHECK(cd.eta[0] == doctest::Approx(0.0));  // eta(dx) at y=0
  CHECK(cd.eta[2] == doctest::Approx(0.5));  // eta(dz)
}

TEST_CASE("t11 metric blocks at the equator point") {
  auto m = make_model(ModelId::T11);
  ChartPoint p{0, Vec(5)};
  p.x << 1, 0, 1, 0, 0.3;  // theta1 = theta2 = pi/2, phi = 0
  auto md = metric_at(*m, p);
  Vec et = m->eta(p);
  Vec expected_eta(5);
  expected_eta << 0, -1.0 / 3.0, 0, 1.0 / 3.0, 1.0 / 3.0;
  CHECK((et - expected_eta).cwiseAbs().maxCoeff() < 1e-14);
  Mat expected = expected_eta * expected_eta.transpose();
  for (int i = 0; i < 4; ++i) expected(i, i) += 1.0 / 6.0;
  CHECK((md.g - expected).cwiseAbs().maxCoeff() < 1e-14);

  // christoffels symmetric in the lower indices
  for (const auto& gk : md.christoffels)
    CHECK((gk - gk.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("round_s3 closed-form christoffels match finite differences") {
  auto m = make_model(ModelId::RoundS3);
  Rng rng(31);
  for (int it = 0; it < 20; ++it) {
    ChartPoint p = m->sample_point(1 + int(rng.next_u64() % 2), rng);
    auto closed = m->christoffels(p);
    auto fd = m->SasakiModel::christoffels(p);
    for (std::size_t k = 0; k < closed.size(); ++k)
      CHECK((closed[k] - fd[k]).cwiseAbs().maxCoeff() < 1e-7);  // O(step^2)
  }
}

TEST_CASE("t11 identity-graph frame is calibrated") {
  auto m = make_model(ModelId::T11);
  ChartPoint p{0, Vec(5)};
  p.x << 1, 0, 1, 0, 0.0;
  Mat g = m->metric(p);
  Mat om = m->omega_plus(p);
  Vec e1(5), e2(5);
  e1 << 1, 0, 1, 0, 0;
  e2 << 0, 1, 0, 1, 0;
  CHECK(std::abs(m->eta(p).dot(e1)) < 1e-14);
  CHECK(std::abs(m->eta(p).dot(e2)) < 1e-14);
  e1 /= std::sqrt(e1.dot(g * e1));
  e2 /= std::sqrt(e2.dot(g * e2));
  CHECK(double(e1.transpose() * om * e2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("t11 transverse form: Reeb annihilation, closedness, norm") {
  auto m = make_model(ModelId::T11);
  Rng rng(3);
  for (int it = 0; it < 50; ++it) {
    ChartPoint p = m->sample_point(int(rng.next_u64() % 4), rng);
    Mat om = transverse_kahler(*m, p);
    CHECK((om * m->reeb(p)).cwiseAbs().maxCoeff() < 1e-14);
    // numeric exterior derivative d omega (i,j,k)
    const double h = 1e-5;
    std::vector<Mat> dom(5);
    for (int a = 0; a < 5; ++a) {
      ChartPoint pp = p, pm = p;
      pp.x[a] += h;
      pm.x[a] -= h;
      dom[a] = (m->omega_plus(pp) - m->omega_plus(pm)) / (2 * h);
    }
    double worst = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j)
        for (int k = j + 1; k < 5; ++k)
          worst = std::max(worst, std::abs(dom[i](j, k) - dom[j](i, k) + dom[k](i, j)));
    CHECK(worst < 1e-6);
    // calibrating norm |omega|^2 matches the registered value
    Mat gi = m->metric(p).inverse();
    double n2 = 0.5 * (gi * om * gi * om.transpose()).trace();
    CHECK(n2 == doctest::Approx(m->omega_plus_norm2).epsilon(1e-8));
  }
  CHECK(m->omega_plus_norm2 == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("pointwise Sasakian invariants at random points, all models") {
  Rng rng(17);
  std::vector<ModelPtr> models = {make_model(ModelId::StdContact, 1),
                                  make_model(ModelId::RoundS3),
                                  make_model(ModelId::T11)};
  for (auto& m : models) {
    const auto charts = m->mesh_charts();
    // 1000 points split across mesh charts (plus intrinsic charts for S3)
    std::vector<int> all = charts;
    for (int c : m->curvature_charts())
      if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
    int count = 0;
    while (count < 1000) {
      int chart = all[std::size_t(rng.next_u64() % all.size())];
      ChartPoint p = m->sample_point(chart, rng);
      if (!m->in_domain(chart, p.x, 0.05)) continue;
      check_pointwise_invariants(*m, p, rng);
      ++count;
    }
  }
}

TEST_CASE("chart transitions: round trips and tensor transport") {
  Rng rng(23);
  auto t11 = make_model(ModelId::T11);
  for (int it = 0; it < 200; ++it) {
    int from = int(rng.next_u64() % 4);
    int to = int(rng.next_u64() % 4);
    ChartPoint p = t11->sample_point(from, rng);
    // keep away from factor origins so every transition is defined
    for (int f = 0; f < 2; ++f) {
      double r = std::hypot(p.x[2 * f], p.x[2 * f + 1]);
      if (r < 0.3) p.x[2 * f] += 0.5;
    }
    ChartPoint q = t11->transition(p, to);
    ChartPoint back = t11->transition(q, from);
    CHECK((back.x - p.x).cwiseAbs().maxCoeff() < 1e-12);

    // covariant transport of eta and g: eta_from = J^T eta_to, g_from = J^T g_to J
    Mat J = t11->transition_jacobian(p, to);
    CHECK((t11->eta(p) - J.transpose() * t11->eta(q)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((t11->metric(p) - J.transpose() * t11->metric(q) * J).cwiseAbs().maxCoeff() < 1e-8);

    // tangent round trip
    TangentVec tv{p, rng.normal_vec(5)};
    TangentVec tv2 = transport(*t11, transport(*t11, tv, to), from);
    CHECK((tv2.v - tv.v).cwiseAbs().maxCoeff() < 1e-10);
  }

  auto s3 = make_model(ModelId::RoundS3);
  for (int it = 0; it < 100; ++it) {
    ChartPoint p = s3->sample_point(1, rng);
    if (p.x.norm() < 0.3) continue;
    ChartPoint q = s3->transition(p, 2);
    CHECK((s3->transition(q, 1).x - p.x).cwiseAbs().maxCoeff() < 1e-12);
    Mat J = s3->transition_jacobian(p, 2);
    CHECK((s3->eta(p) - J.transpose() * s3->eta(q)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((s3->metric(p) - J.transpose() * s3->metric(q) * J).cwiseAbs().maxCoeff() < 1e-8);
    TangentVec tv{p, rng.normal_vec(3)};
    TangentVec tv2 = transport(*s3, transport(*s3, tv, 2), 1);
    CHECK((tv2.v - tv.v).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("verify_einstein on the three models") {
  auto s3 = make_model(ModelId::RoundS3);
  auto rep = verify_einstein(*s3, 100, 1e-4);
  CHECK(rep.get("max_relative_deviation") < 1e-4);
  CHECK(rep.get("K_fit") == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(rep.pass);

  auto t11 = make_model(ModelId::T11);
  rep = verify_einstein(*t11, 100, 1e-4);
  CHECK(rep.get("max_relative_deviation") < 1e-3);
  CHECK(rep.get("K_fit") == doctest::Approx(4.0).epsilon(1e-3));

  auto sc = make_model(ModelId::StdContact, 1);
  rep = verify_einstein(*sc, 50, 1e-4);
  CHECK(rep.get("K_fit") == doctest::Approx(-2.0).epsilon(1e-3));
  CHECK(rep.get("max_relative_deviation") < 1e-3);  // eta-Einstein with K=-2
}

TEST_CASE("t11 measured transverse curvature constant") {
  auto m = make_model(ModelId::T11);
  CHECK(m->constants.c_transverse == doctest::Approx(6.0).epsilon(5e-3));
}

TEST_CASE("hopf projection and horizontal lift") {
  Vec4 y(1, 0, 0, 0);
  CHECK((hopf_project(y) - Vec3(1, 0, 0)).norm() < 1e-15);

  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    Vec yy = rng.normal_vec(4);
    Vec4 z(yy);
    z.normalize();
    Vec3 p = hopf_project(z);
    Vec vv = rng.normal_vec(3);
    Vec3 v(vv);
    v -= v.dot(p) / p.squaredNorm() * p;  // tangent to S^2 at p
    Vec4 w = hopf_horizontal_lift(p, v, z);
    CHECK((hopf_differential(z) * w - v).norm() < 1e-10);        // d(pi) lift = v
    CHECK(std::abs(w.dot(Vec4(-z[1], z[0], -z[3], z[2]))) < 1e-10);  // eta(lift)=0
    CHECK(std::abs(w.dot(z)) < 1e-10);                           // tangent to S^3
  }
}

TEST_CASE("ambient correction on the round sphere") {
  auto m = make_model(ModelId::RoundS3);
  Rng rng(9);
  Vec p4 = rng.normal_vec(4);
  p4.normalize();
  ChartPoint p{0, p4};
  Vec t = rng.normal_vec(4);
  t -= t.dot(p4) * p4;
  t.normalize();
  auto E = m->ambient_correction(p, {t});
  CHECK((E - p4).norm() < 1e-12);

  // finite-difference oracle: second derivative of a great circle through p
  // in direction t has normal (to S^3) part -p, so E = +p for a curve.
  const double h = 1e-4;
  Vec cp = (p4 * std::cos(h) + t * std::sin(h));
  Vec cm = (p4 * std::cos(h) - t * std::sin(h));
  Vec acc = (cp + cm - 2 * p4) / (h * h);
  Vec normal_part = acc.dot(p4) * p4;
  CHECK((E + normal_part).norm() < 1e-6);

  auto sc = make_model(ModelId::StdContact, 1);
  ChartPoint q{0, Vec::Zero(3)};
  CHECK_THROWS_AS(sc->ambient_correction(q, {}), Error);
}

TEST_CASE("domain errors name the chart") {
  auto m = make_model(ModelId::RoundS3);
  ChartPoint p{0, Vec4(3, 0, 0, 0)};
  CHECK_THROWS_WITH_AS(contact_data(*m, p),
                       doctest::Contains("chart 0"), Error);
}
