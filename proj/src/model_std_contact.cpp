#include "legflow/model.hpp"

namespace legflow {

// Standard Sasakian structure on R^{2n+1}, coordinates (x_1..x_n, y_1..y_n, z):
//   eta = (1/2)(dz - sum_i y_i dx_i),   T = 2 d/dz,
//   g   = eta (x) eta + (1/4) sum_i (dx_i^2 + dy_i^2).
// Single global chart; realization is the chart itself (flat diagnostic
// ambient, but not isometric for g).
class StdContactModel final : public SasakiModel {
 public:
  explicit StdContactModel(int nn) {
    id = ModelId::StdContact;
    n = nn;
    name = "std_contact";
    ambient_dim = 2 * n + 1;
    isometric_embedding = false;
    flat_diagnostic = true;
    constants.K = -2.0;
    constants.einstein_factor = 2.0 * n;
    constants.alpha_linear = constants.K + 2.0;
    constants.c_transverse = 0.0;
  }

  int num_charts() const override { return 1; }
  int chart_dim(int) const override { return ambient_dim; }
  std::vector<int> mesh_charts() const override { return {0}; }
  std::vector<int> curvature_charts() const override { return {0}; }

  bool in_domain(int chart, const Vec& x, double margin) const override {
    if (chart != 0 || x.size() != ambient_dim) return false;
    return x.cwiseAbs().maxCoeff() < 100.0 - margin;
  }

  ChartPoint transition(const ChartPoint& p, int to) const override {
    if (to != 0 || p.chart != 0) throw validation_error("std_contact has a single chart");
    return p;
  }

  int preferred_chart(const ChartPoint&) const override { return 0; }

  ChartPoint sample_point(int chart, Rng& rng) const override {
    ChartPoint p{chart, Vec(ambient_dim)};
    for (int i = 0; i < ambient_dim; ++i) p.x[i] = rng.uniform(-1.0, 1.0);
    return p;
  }

  Vec eta(const ChartPoint& p) const override {
    Vec e = Vec::Zero(ambient_dim);
    for (int i = 0; i < n; ++i) e[i] = -0.5 * p.x[n + i];  // -y_i/2 on dx_i
    e[2 * n] = 0.5;
    return e;
  }

  Mat deta(const ChartPoint&) const override {
    Mat D = Mat::Zero(ambient_dim, ambient_dim);
    for (int i = 0; i < n; ++i) D(n + i, i) = -0.5;  // d_{y_i} eta_{x_i}
    return D;
  }

  Vec reeb(const ChartPoint&) const override {
    Vec t = Vec::Zero(ambient_dim);
    t[2 * n] = 2.0;
    return t;
  }

  Mat phi(const ChartPoint& p) const override {
    // phi(dx_i) = dy_i, phi(dy_i) = -dx_i - y_i dz, phi(dz) = 0.
    Mat f = Mat::Zero(ambient_dim, ambient_dim);
    for (int i = 0; i < n; ++i) {
      f(n + i, i) = 1.0;
      f(i, n + i) = -1.0;
      f(2 * n, n + i) = -p.x[n + i];
    }
    return f;
  }

  Mat metric(const ChartPoint& p) const override {
    const Vec e = eta(p);
    Mat g = e * e.transpose();
    for (int i = 0; i < 2 * n; ++i) g(i, i) += 0.25;
    return g;
  }
};

ModelPtr build_std_contact(int n) {
  if (n < 1 || n > 3) throw validation_error("std_contact: n must be 1..3");
  return std::make_shared<StdContactModel>(n);
}

}  // namespace legflow
