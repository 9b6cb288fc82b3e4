#pragma once

#include <functional>

#include "legflow/mesh.hpp"

namespace legflow {

/// Area-preserving (or deliberately non-preserving, for tests) maps of S^2.
class SymplectoMap {
 public:
  enum class Kind { Rotation, Twist, ZCube, Composition };

  static SymplectoMap rotation(const Vec3& axis, double angle);
  /// (z, phi) -> (z, phi + amplitude * z) about the polar axis; exactly
  /// area-preserving and fixes the poles.
  static SymplectoMap twist(double amplitude);
  /// Non-area-preserving control map (z -> z^3 along meridians).
  static SymplectoMap zcube();
  static SymplectoMap composition(std::vector<SymplectoMap> maps);

  Vec3 apply(const Vec3& p) const;
  /// Differential restricted to T_p S^2 (3x3, maps tangent to tangent).
  Eigen::Matrix3d differential(const Vec3& p) const;
  Kind kind() const { return kind_; }
  double twist_amplitude() const { return amplitude_; }

  /// Twist fiber-phase primitive: psi(z) - psi(0) for the graph lift.
  double twist_phase(double z) const;

 private:
  Kind kind_ = Kind::Rotation;
  Eigen::Matrix3d rot_ = Eigen::Matrix3d::Identity();
  double amplitude_ = 0;
  std::vector<SymplectoMap> parts_;
};

/// Max |det(differential) - 1| over sampled points (area form Jacobian).
double is_area_preserving(const SymplectoMap& map, int samples, std::uint64_t seed = 13);

struct LiftReport {
  double holonomy_residual = 0;    // max face-cycle phase defect
  double legendrian_residual = 0;  // after the lift
  int tree_edges = 0;
};

struct BaseMesh {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> triangles;
};

/// Subdivided icosahedron on the unit S^2 (level 0 = icosahedron).
BaseMesh icosphere(int level);

/// Legendrian graph of an area-preserving map: per-vertex fiber phase by
/// spanning-tree integration of the horizontality condition, cycle-defect
/// measurement, and a least-squares smoothing pass once defects are below
/// tolerance.
DiscreteImmersion legendrian_lift(const SymplectoMap& map, const BaseMesh& base,
                                  LiftReport* report = nullptr,
                                  double holonomy_tol = 5e-3,
                                  double anchor_phase = 0.0);

/// Face-cycle phase defects of a lift candidate (diagnostic/test hook).
Vec lift_face_defects(const SymplectoMap& map, const BaseMesh& base);

// ---- Legendrian curves in the round S^3 ----

DiscreteImmersion great_circle(int n_vertices);

DiscreteImmersion perturbed_great_circle(int n_vertices, double eps, int mode);

/// Horizontal lift of a closed curve on S^2 given as u in [0, 2 pi loops)
/// -> S^2; fails with a closure error if the enclosed-area holonomy does not
/// vanish (mod the fiber period).
DiscreteImmersion horizontal_lift_curve(const std::function<Vec3(double)>& curve,
                                        int n_vertices, int loops = 1,
                                        double closure_tol = 1e-6);

/// Zero-area bowtie projection seed (shrinks under the flow).
DiscreteImmersion bowtie_curve(int n_vertices, double phi_amp, double z_amp);

/// Identity-graph Legendrian in the product model.
DiscreteImmersion identity_graph(int level);

/// Graph of a twist/rotation map.
DiscreteImmersion map_graph(const SymplectoMap& map, int level,
                            LiftReport* report = nullptr);

/// Open x-axis segment in the flat diagnostic model (Legendrian geodesic).
DiscreteImmersion axis_line_std_contact(int n_vertices, double half_length);

/// Move vertices by eps * (-grad u . Phi-frame - 2 u T) and restore the
/// Legendrian constraint.
DiscreteImmersion perturb_legendrian(const DiscreteImmersion& imm, const Vec& u,
                                     double eps);

}  // namespace legflow
