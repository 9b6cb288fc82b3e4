#include "legflow/model.hpp"

namespace legflow {

namespace {

inline Vec4 mul_i4(const Vec4& z) { return Vec4(-z[1], z[0], -z[3], z[2]); }

// Stereographic embeddings R^3 -> S^3 c R^4. Chart 1 covers S^3 minus
// (-1,0,0,0) (u = 0 at (1,0,0,0)); chart 2 the antipodal one. Transition
// between them is inversion u -> u/|u|^2.
Vec4 stereo_embed(const Vec& u, int sign) {
  const double r2 = u.squaredNorm();
  Vec4 p;
  p[0] = sign * (1.0 - r2) / (1.0 + r2);
  p[1] = 2.0 * u[0] / (1.0 + r2);
  p[2] = 2.0 * u[1] / (1.0 + r2);
  p[3] = 2.0 * u[2] / (1.0 + r2);
  return p;
}

Eigen::Matrix<double, 4, 3> stereo_jacobian(const Vec& u, int sign) {
  const double r2 = u.squaredNorm();
  const double s = 1.0 + r2;
  Eigen::Matrix<double, 4, 3> J;
  for (int j = 0; j < 3; ++j) J(0, j) = sign * (-4.0 * u[j]) / (s * s);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      J(i + 1, j) = (2.0 * (i == j ? s : 0.0) - 4.0 * u[i] * u[j]) / (s * s);
  return J;
}

Vec stereo_coords(const Vec4& p, int sign) {
  const double denom = 1.0 + sign * p[0];
  if (denom < 1e-6) throw validation_error("round_s3: point outside stereographic chart overlap");
  Vec u(3);
  u << p[1] / denom, p[2] / denom, p[3] / denom;
  return u;
}

}  // namespace

// Round unit S^3 c R^4 = C^2 with T = i p, eta = <i p, .>, Phi = i on ker eta.
// Chart 0 is the ambient R^4 realization used by meshes (Euclidean-isometric);
// charts 1 and 2 are intrinsic stereographic charts used for curvature
// sampling and chart-transition checks.
class RoundS3Model final : public SasakiModel {
 public:
  RoundS3Model() {
    id = ModelId::RoundS3;
    n = 1;
    name = "round_s3";
    ambient_dim = 4;
    isometric_embedding = true;
    flat_diagnostic = false;
    constants.K = 2.0;
    constants.einstein_factor = 2.0;
    constants.alpha_linear = 4.0;
    constants.c_transverse = 0.0;
  }

  int num_charts() const override { return 3; }
  int chart_dim(int chart) const override { return chart == 0 ? 4 : 3; }
  std::vector<int> mesh_charts() const override { return {0}; }
  std::vector<int> curvature_charts() const override { return {1, 2}; }
  double overlap_width() const override { return 0.3; }

  bool in_domain(int chart, const Vec& x, double margin) const override {
    if (chart == 0)
      return x.size() == 4 && std::abs(x.norm() - 1.0) < 0.5 - margin;
    return x.size() == 3 && x.norm() < 3.0 - margin;
  }

  ChartPoint transition(const ChartPoint& p, int to) const override {
    if (p.chart == to) return p;
    const Vec4 amb = to_ambient(p);
    if (to == 0) return ChartPoint{0, amb};
    return ChartPoint{to, stereo_coords(amb, to == 1 ? 1 : -1)};
  }

  int preferred_chart(const ChartPoint& p) const override {
    if (p.chart == 0) return 0;
    return p.x.norm() <= 1.0 ? p.chart : (p.chart == 1 ? 2 : 1);
  }

  ChartPoint sample_point(int chart, Rng& rng) const override {
    if (chart == 0) {
      Vec p = rng.normal_vec(4);
      return ChartPoint{0, p / p.norm()};
    }
    ChartPoint p{chart, Vec(3)};
    for (int i = 0; i < 3; ++i) p.x[i] = rng.uniform(-0.6, 0.6);
    return p;
  }

  Mat transition_jacobian(const ChartPoint& p, int to) const override {
    if ((p.chart == 1 && to == 2) || (p.chart == 2 && to == 1)) {
      const double r2 = p.x.squaredNorm();
      return (Mat::Identity(3, 3) * r2 - 2.0 * p.x * p.x.transpose()) / (r2 * r2);
    }
    return SasakiModel::transition_jacobian(p, to);
  }

  bool has_constraint() const override { return true; }
  Vec project_to_model(const ChartPoint& p) const override {
    if (p.chart != 0) return p.x;
    return p.x / p.x.norm();
  }
  Vec project_tangent(const ChartPoint& p, const Vec& v) const override {
    if (p.chart != 0) return v;
    const Vec nrm = p.x / p.x.norm();
    return v - v.dot(nrm) * nrm;
  }
  Vec projection_differential(const ChartPoint& p, const Vec& v) const override {
    if (p.chart != 0) return v;
    const double r = p.x.norm();
    const Vec nrm = p.x / r;
    return (v - v.dot(nrm) * nrm) / r;
  }

  Vec eta(const ChartPoint& p) const override {
    if (p.chart == 0) return mul_i4(Vec4(p.x));
    const Vec4 amb = stereo_embed(p.x, p.chart == 1 ? 1 : -1);
    const auto J = stereo_jacobian(p.x, p.chart == 1 ? 1 : -1);
    return J.transpose() * mul_i4(amb);
  }

  Vec reeb(const ChartPoint& p) const override {
    if (p.chart == 0) return mul_i4(Vec4(p.x));
    const Vec4 amb = stereo_embed(p.x, p.chart == 1 ? 1 : -1);
    const auto J = stereo_jacobian(p.x, p.chart == 1 ? 1 : -1);
    // solve J t = i p  (J has full column rank)
    return (J.transpose() * J).ldlt().solve(J.transpose() * mul_i4(amb));
  }

  Mat phi(const ChartPoint& p) const override {
    if (p.chart == 0) {
      const Vec4 q(p.x);
      const Vec4 nrm = q / q.norm();
      const Vec4 t = mul_i4(nrm);
      Mat f(4, 4);
      for (int j = 0; j < 4; ++j) {
        Vec4 v = Vec4::Zero();
        v[j] = 1.0;
        v -= v.dot(nrm) * nrm;
        v -= v.dot(t) * t;
        f.col(j) = mul_i4(v);
      }
      return f;
    }
    const int sign = p.chart == 1 ? 1 : -1;
    const Vec4 amb = stereo_embed(p.x, sign);
    const auto J = stereo_jacobian(p.x, sign);
    const Vec4 t = mul_i4(amb);
    const Mat pinv = (J.transpose() * J).ldlt().solve(J.transpose());
    Mat f(3, 3);
    for (int j = 0; j < 3; ++j) {
      Vec4 w = J.col(j);
      w -= w.dot(amb) * amb;
      w -= w.dot(t) * t;
      f.col(j) = pinv * mul_i4(w);
    }
    return f;
  }

  Mat metric(const ChartPoint& p) const override {
    if (p.chart == 0) return Mat::Identity(4, 4);
    const double lam2 = 4.0 / std::pow(1.0 + p.x.squaredNorm(), 2);
    return lam2 * Mat::Identity(3, 3);
  }

  bool flat_chart(int chart) const override { return chart == 0; }

  Mat deta(const ChartPoint& p) const override {
    if (p.chart != 0) return SasakiModel::deta(p);
    Mat D(4, 4);
    // eta_b = (J p)_b with J the complex structure block matrix
    D << 0, 1, 0, 0,
        -1, 0, 0, 0,
         0, 0, 0, 1,
         0, 0, -1, 0;
    return D;
  }

  std::vector<Mat> christoffels(const ChartPoint& p) const override {
    if (p.chart == 0) return std::vector<Mat>(4, Mat::Zero(4, 4));
    // conformal metric lam^2 delta, w = grad log lam
    const double s = 1.0 + p.x.squaredNorm();
    Vec w = -2.0 * p.x / s;
    std::vector<Mat> gam(3, Mat::Zero(3, 3));
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double v = 0;
          if (i == k) v += w[j];
          if (j == k) v += w[i];
          if (i == j) v -= w[k];
          gam[k](i, j) = v;
        }
    return gam;
  }

  Vec ambient_correction(const ChartPoint& p, const std::vector<Vec>& frame) const override {
    if (p.chart != 0)
      throw unsupported_error("ambient correction requires the ambient realization chart");
    // Unit sphere: Abar(X,X) = -<X,X> p, so E = (frame size) * p.
    return double(frame.size()) * (p.x / p.x.norm());
  }

 private:
  Vec4 to_ambient(const ChartPoint& p) const {
    if (p.chart == 0) {
      Vec4 q(p.x);
      return q / q.norm();
    }
    return stereo_embed(p.x, p.chart == 1 ? 1 : -1);
  }
};

ModelPtr build_round_s3() { return std::make_shared<RoundS3Model>(); }

}  // namespace legflow
