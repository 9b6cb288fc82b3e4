#include "legflow/model.hpp"

namespace legflow {

namespace {

// Per-factor stereographic data. sigma = +1 for the chart covering the north
// pole (theta = 0 at r = 0), -1 for the south one. Transition between the two
// is the conjugated inversion (a,b) -> (a,-b)/r^2.
struct Factor {
  double a, b;
  double r2() const { return a * a + b * b; }
};

// 1-form P = (cos(theta) - sigma) dphi expressed in chart coordinates;
// the same closed form holds in both factor charts.
inline void add_P(Vec& cov, int off, double a, double b, double coeff) {
  const double s = 1.0 + a * a + b * b;
  cov[off] += coeff * 2.0 * b / s;       // on da
  cov[off + 1] += coeff * (-2.0 * a) / s;  // on db
}

}  // namespace

// Homogeneous Sasaki-Einstein structure on S^2 x S^3 in product-sign form:
// charts (a1,b1,a2,b2,psi) with
//   eta = (1/3)(dpsi + (cos t1 - s1) dphi1 - (cos t2 - s2) dphi2),
//   g   = (1/6) sum_i lam_i^2 (da_i^2 + db_i^2) + eta (x) eta,
//   T   = 3 d/dpsi,
// where lam_i^2 = 4/(1+r_i^2)^2 is the round factor metric. Four charts,
// one per hemisphere combination; the fiber coordinate shifts by +-2 phi_i
// across factor transitions (period 4 pi).
class T11Model final : public SasakiModel {
 public:
  T11Model() {
    id = ModelId::T11;
    n = 2;
    name = "t11";
    ambient_dim = 5;
    isometric_embedding = false;
    flat_diagnostic = false;
    constants.K = 4.0;
    constants.einstein_factor = 4.0;
    constants.alpha_linear = 6.0;
  }

  static int sigma1(int chart) { return (chart & 1) ? -1 : 1; }
  static int sigma2(int chart) { return (chart & 2) ? -1 : 1; }

  int num_charts() const override { return 4; }
  int chart_dim(int) const override { return 5; }
  std::vector<int> mesh_charts() const override { return {0, 1, 2, 3}; }
  std::vector<int> curvature_charts() const override { return {0, 1, 2, 3}; }
  double overlap_width() const override { return 0.4; }

  bool in_domain(int chart, const Vec& x, double margin) const override {
    if (chart < 0 || chart > 3 || x.size() != 5) return false;
    const double r1 = std::hypot(x[0], x[1]);
    const double r2 = std::hypot(x[2], x[3]);
    return r1 < 2.5 - margin && r2 < 2.5 - margin;
  }

  ChartPoint transition(const ChartPoint& p, int to) const override {
    if (p.chart == to) return p;
    ChartPoint q = p;
    q.chart = to;
    double psi = p.x[4];
    if (sigma1(p.chart) != sigma1(to)) {
      const double r2 = p.x[0] * p.x[0] + p.x[1] * p.x[1];
      if (r2 < 1e-12) throw validation_error("t11: point outside factor-1 chart overlap");
      const double phi = sigma1(p.chart) * std::atan2(p.x[1], p.x[0]);
      psi += (sigma1(to) - sigma1(p.chart)) * phi;
      q.x[0] = p.x[0] / r2;
      q.x[1] = -p.x[1] / r2;
    }
    if (sigma2(p.chart) != sigma2(to)) {
      const double r2 = p.x[2] * p.x[2] + p.x[3] * p.x[3];
      if (r2 < 1e-12) throw validation_error("t11: point outside factor-2 chart overlap");
      const double phi = sigma2(p.chart) * std::atan2(p.x[3], p.x[2]);
      psi -= (sigma2(to) - sigma2(p.chart)) * phi;
      q.x[2] = p.x[2] / r2;
      q.x[3] = -p.x[3] / r2;
    }
    q.x[4] = psi;
    return q;
  }

  int preferred_chart(const ChartPoint& p) const override {
    int c = p.chart;
    if (p.x[0] * p.x[0] + p.x[1] * p.x[1] > 1.3225) c ^= 1;  // r1 > 1.15
    if (p.x[2] * p.x[2] + p.x[3] * p.x[3] > 1.3225) c ^= 2;  // r2 > 1.15
    return c;
  }

  // psi is circle-valued with period 4 pi
  Vec wrap_toward(int chart, Vec x, const Vec& ref) const override {
    (void)chart;
    x[4] = ref[4] + std::remainder(x[4] - ref[4], 4.0 * M_PI);
    return x;
  }

  void canonicalize(ChartPoint& p) const override {
    p.x[4] = std::remainder(p.x[4], 4.0 * M_PI);
  }

  ChartPoint sample_point(int chart, Rng& rng) const override {
    ChartPoint p{chart, Vec(5)};
    for (int i = 0; i < 4; ++i) p.x[i] = rng.uniform(-0.9, 0.9);
    p.x[4] = rng.uniform(-M_PI, M_PI);
    return p;
  }

  Mat transition_jacobian(const ChartPoint& p, int to) const override {
    Mat J = Mat::Identity(5, 5);
    for (int f = 0; f < 2; ++f) {
      const int sf = f == 0 ? sigma1(p.chart) : sigma2(p.chart);
      const int st = f == 0 ? sigma1(to) : sigma2(to);
      if (sf == st) continue;
      const int off = 2 * f;
      const double a = p.x[off], b = p.x[off + 1];
      const double r2 = a * a + b * b;
      if (r2 < 1e-12) throw validation_error("t11: Jacobian outside chart overlap");
      const double r4 = r2 * r2;
      J(off, off) = (b * b - a * a) / r4;
      J(off, off + 1) = -2.0 * a * b / r4;
      J(off + 1, off) = 2.0 * a * b / r4;
      J(off + 1, off + 1) = (b * b - a * a) / r4;
      // fiber shift: +- (st - sf) * sigma_source * datan2(b,a)
      const double sgn = (f == 0 ? 1.0 : -1.0) * double(st - sf) * double(sf);
      J(4, off) += sgn * (-b / r2);
      J(4, off + 1) += sgn * (a / r2);
    }
    return J;
  }

  Vec eta(const ChartPoint& p) const override {
    Vec e = Vec::Zero(5);
    add_P(e, 0, p.x[0], p.x[1], 1.0 / 3.0);
    add_P(e, 2, p.x[2], p.x[3], -1.0 / 3.0);
    e[4] = 1.0 / 3.0;
    return e;
  }

  Mat deta(const ChartPoint& p) const override {
    Mat D = Mat::Zero(5, 5);
    for (int f = 0; f < 2; ++f) {
      const int off = 2 * f;
      const double sgn = f == 0 ? 1.0 : -1.0;
      const double a = p.x[off], b = p.x[off + 1];
      const double s = 1.0 + a * a + b * b;
      const double s2 = s * s;
      D(off, off) += sgn * (-4.0 / 3.0) * a * b / s2;
      D(off + 1, off) += sgn * (2.0 / 3.0) * (s - 2.0 * b * b) / s2;
      D(off, off + 1) += sgn * (-2.0 / 3.0) * (s - 2.0 * a * a) / s2;
      D(off + 1, off + 1) += sgn * (4.0 / 3.0) * a * b / s2;
    }
    return D;
  }

  Vec reeb(const ChartPoint&) const override {
    Vec t = Vec::Zero(5);
    t[4] = 3.0;
    return t;
  }

  Mat phi(const ChartPoint& p) const override {
    // Contact complex structure: horizontal lift of (-J1) + (+J2); the psi
    // component of the image restores horizontality.
    const double s1 = 1.0 + p.x[0] * p.x[0] + p.x[1] * p.x[1];
    const double s2 = 1.0 + p.x[2] * p.x[2] + p.x[3] * p.x[3];
    Mat f = Mat::Zero(5, 5);
    for (int j = 0; j < 4; ++j) {
      Vec v = Vec::Zero(5);
      v[j] = 1.0;
      Vec w = Vec::Zero(5);
      w[0] = v[1];   // -J1: (va,vb) -> (vb,-va)
      w[1] = -v[0];
      w[2] = -v[3];  // +J2: (va,vb) -> (-vb,va)
      w[3] = v[2];
      const double P1w = 2.0 * (p.x[1] * w[0] - p.x[0] * w[1]) / s1;
      const double P2w = 2.0 * (p.x[3] * w[2] - p.x[2] * w[3]) / s2;
      w[4] = -(P1w - P2w);
      f.col(j) = w;
    }
    return f;
  }

  Mat metric(const ChartPoint& p) const override {
    const Vec e = eta(p);
    Mat g = e * e.transpose();
    const double l1 = 4.0 / std::pow(1.0 + p.x[0] * p.x[0] + p.x[1] * p.x[1], 2);
    const double l2 = 4.0 / std::pow(1.0 + p.x[2] * p.x[2] + p.x[3] * p.x[3], 2);
    g(0, 0) += l1 / 6.0;
    g(1, 1) += l1 / 6.0;
    g(2, 2) += l2 / 6.0;
    g(3, 3) += l2 / 6.0;
    return g;
  }

  bool has_omega_plus() const override { return true; }
  Mat omega_plus(const ChartPoint& p) const override {
    // Sum of the two factor area forms, normalized so the identity graph is
    // calibrated (Omega = +1).
    Mat om = Mat::Zero(5, 5);
    const double l1 = 4.0 / std::pow(1.0 + p.x[0] * p.x[0] + p.x[1] * p.x[1], 2);
    const double l2 = 4.0 / std::pow(1.0 + p.x[2] * p.x[2] + p.x[3] * p.x[3], 2);
    om(0, 1) = l1 / 6.0;
    om(1, 0) = -l1 / 6.0;
    om(2, 3) = l2 / 6.0;
    om(3, 2) = -l2 / 6.0;
    return om;
  }
};

ModelPtr build_t11() { return std::make_shared<T11Model>(); }

}  // namespace legflow
