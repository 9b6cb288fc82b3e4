#pragma once

#include <memory>
#include <string>
#include <vector>

#include "legflow/numeric.hpp"

namespace legflow {

enum class ModelId { StdContact, RoundS3, T11 };

std::string to_string(ModelId id);
ModelId model_id_from_string(const std::string& s);

/// Constants attached to one ambient model.
struct ModelConstants {
  double K = 0.0;                // eta-Einstein constant: Ric = K g + (2n-K) eta (x) eta
  double c_transverse = 0.0;     // Ric^T(Phi+ e1, e2) = c * Omega on Legendrian frames
  double einstein_factor = 0.0;  // 2n, the Sasaki-Einstein value of K
  double alpha_linear = 0.0;     // K + 2, zeroth-order coefficient of the angle equation
};

/// A point given by chart id plus coordinates in that chart.
struct ChartPoint {
  int chart = 0;
  Vec x;
};

/// Tangent vector anchored at a chart point, components in chart coordinates.
struct TangentVec {
  ChartPoint base;
  Vec v;
};

/// Analytic evaluators for one ambient Sasakian model manifold.
///
/// All evaluators are pure functions of (model, point) and safe for
/// concurrent read-only use. Charts are indexed 0..num_charts()-1; the
/// charts meshes live in are `mesh_charts()`, the ones used for curvature
/// sampling are `curvature_charts()` (they may coincide).
class SasakiModel {
 public:
  virtual ~SasakiModel() = default;

  ModelId id;
  std::string name;
  int n = 1;            // transverse complex dimension (submanifold dimension)
  int ambient_dim = 0;  // coordinate count of the mesh charts
  bool isometric_embedding = false;  // mesh coordinates Euclidean-isometric for g
  bool flat_diagnostic = false;      // mesh coordinates usable as a flat ambient R^N
  ModelConstants constants;

  virtual int num_charts() const = 0;
  virtual int chart_dim(int chart) const = 0;
  virtual std::vector<int> mesh_charts() const = 0;
  virtual std::vector<int> curvature_charts() const = 0;

  /// True if x lies in the chart's open domain with at least `margin` slack.
  virtual bool in_domain(int chart, const Vec& x, double margin = 0.0) const = 0;
  /// Declared overlap width used by the ChartPoint validity margin.
  virtual double overlap_width() const { return 0.0; }

  /// Express p in chart `to`; throws if p is outside the overlap.
  virtual ChartPoint transition(const ChartPoint& p, int to) const = 0;
  /// Jacobian of the transition map at p (default: central differences).
  virtual Mat transition_jacobian(const ChartPoint& p, int to) const;
  /// Chart this point should be stored in (rechart policy).
  virtual int preferred_chart(const ChartPoint& p) const = 0;
  /// Move periodic coordinates of x onto the branch nearest `ref` (identity
  /// for charts without circle-valued coordinates).
  virtual Vec wrap_toward(int chart, Vec x, const Vec& ref) const {
    (void)chart;
    (void)ref;
    return x;
  }
  /// Normalize periodic coordinates of a stored point to a canonical branch.
  virtual void canonicalize(ChartPoint&) const {}
  /// Random in-domain point of the chart (on the constraint manifold if any).
  virtual ChartPoint sample_point(int chart, Rng& rng) const = 0;

  // ---- pointwise structure tensors, components in p's chart ----
  virtual Vec eta(const ChartPoint& p) const = 0;    // covector
  virtual Vec reeb(const ChartPoint& p) const = 0;   // vector
  virtual Mat phi(const ChartPoint& p) const = 0;    // endomorphism
  virtual Mat metric(const ChartPoint& p) const = 0; // symmetric positive definite
  /// D(c,b) = d_c eta_b; default central differences of eta.
  virtual Mat deta(const ChartPoint& p) const;
  /// True if the chart has identically vanishing Christoffels.
  virtual bool flat_chart(int) const { return false; }

  /// Christoffels Gamma[c](a,b) = Gamma^c_{ab}; default central differences of
  /// the metric with step fd_step().
  virtual std::vector<Mat> christoffels(const ChartPoint& p) const;

  /// Transverse Kahler 2-form (antisymmetric matrix); only product models.
  virtual Mat omega_plus(const ChartPoint& p) const;
  virtual bool has_omega_plus() const { return false; }
  /// |omega_plus|_g^2 measured at registration (calibrating value).
  double omega_plus_norm2 = 0.0;

  // ---- realization constraint (e.g. |p| = 1 on the ambient sphere chart) ----
  virtual bool has_constraint() const { return false; }
  virtual Vec project_to_model(const ChartPoint& p) const { return p.x; }
  /// Project a chart vector onto the model tangent space at p (identity for
  /// unconstrained charts).
  virtual Vec project_tangent(const ChartPoint&, const Vec& v) const { return v; }
  /// Differential of project_to_model at p applied to v (identity for
  /// unconstrained charts). Used for on-manifold edge quadrature.
  virtual Vec projection_differential(const ChartPoint&, const Vec& v) const { return v; }

  /// E = -sum_i Abar(e_i,e_i) for the realization; isometric models only.
  virtual Vec ambient_correction(const ChartPoint& p,
                                 const std::vector<Vec>& frame) const;

  /// Default finite-difference step for model tensor derivatives.
  double fd_step() const { return 1e-5; }
};

using ModelPtr = std::shared_ptr<const SasakiModel>;

/// Build (and lazily register) a model. Registration measures c_transverse
/// and the omega_plus calibration where applicable; results are cached.
ModelPtr make_model(ModelId id, int n = 1);
ModelPtr make_model(const std::string& name, int n = 1);

// ---------- free operations ----------

struct ContactData {
  Vec eta;
  TangentVec reeb;
  Mat phi;
};

/// (eta, T, Phi) at p; throws a domain error naming the chart if p is
/// outside its chart domain.
ContactData contact_data(const SasakiModel& model, const ChartPoint& p);

struct MetricData {
  Mat g;
  std::vector<Mat> christoffels;
};

MetricData metric_at(const SasakiModel& model, const ChartPoint& p);

Mat transverse_kahler(const SasakiModel& model, const ChartPoint& p);

/// Transport a tangent vector into chart `to` with the transition Jacobian
/// (central differences of the registered transition map).
TangentVec transport(const SasakiModel& model, const TangentVec& t, int to);

/// Numeric Ricci tensor from christoffels by central differences with the
/// given outer step.
Mat ricci_numeric(const SasakiModel& model, const ChartPoint& p, double step);

/// Structured result of a verification operation.
struct ReportRecord {
  std::string name;
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> notes;
  bool pass = true;

  void set(const std::string& key, double v) { values.emplace_back(key, v); }
  double get(const std::string& key) const;
  bool has(const std::string& key) const;
};

/// Compares numeric Ricci against K g + (2n-K) eta (x) eta at random chart
/// points away from chart boundaries; also reports the best-fit K.
ReportRecord verify_einstein(const SasakiModel& model, int samples,
                             double fd_step, std::uint64_t seed = 7);

// ---------- Hopf fibration helpers (round S^3 in C^2) ----------

/// pi(z1,z2) = (|z1|^2 - |z2|^2, 2 Re(z1 conj z2), 2 Im(z1 conj z2)).
Vec3 hopf_project(const Vec4& y);

/// Unique ker-eta preimage of v with d(pi)(lift) = v; v must be tangent to
/// S^2 at p = hopf_project(y) (|<v,p>| <= 1e-10).
Vec4 hopf_horizontal_lift(const Vec3& p, const Vec3& v, const Vec4& y);

/// Differential of hopf_project at y (3x4).
Eigen::Matrix<double, 3, 4> hopf_differential(const Vec4& y);

}  // namespace legflow
