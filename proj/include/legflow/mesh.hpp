#pragma once

#include <array>
#include <map>

#include "legflow/model.hpp"

namespace legflow {

/// Gauge fixing the additive constant of the Legendrian angle.
struct AlphaGauge {
  enum class Policy { Anchor, MeanZero, ConePhase };
  Policy policy = Policy::Anchor;
  int anchor_vertex = 0;
  double anchor_value = 0.0;
};

std::string to_string(const AlphaGauge& g);
AlphaGauge alpha_gauge_from_string(const std::string& s);

/// Oriented discrete Legendrian submanifold: closed polyline (dim 1) or
/// oriented triangle mesh (dim 2), vertex positions in model chart
/// coordinates.
struct MeshTopology;

struct DiscreteImmersion {
  ModelPtr model;
  int dim = 1;
  double time = 0.0;
  int orientation = 1;
  bool closed = true;       // closed-manifold connectivity enforced
  bool diagnostic = false;  // relaxes Legendrian/closedness requirements
  std::vector<ChartPoint> verts;
  std::vector<std::array<int, 2>> segments;   // dim 1
  std::vector<std::array<int, 3>> triangles;  // dim 2

  // connectivity cache; copies of the immersion share it
  mutable std::shared_ptr<const MeshTopology> topology_cache;

  int num_vertices() const { return int(verts.size()); }
  int num_elements() const {
    return dim == 1 ? int(segments.size()) : int(triangles.size());
  }
};

/// Connectivity cache; build_topology validates closed-manifold structure
/// and consistent orientation.
struct MeshTopology {
  std::vector<std::array<int, 2>> edges;          // undirected, v0 < v1
  std::vector<std::vector<int>> vert_edges;
  std::vector<std::vector<int>> vert_elems;
  std::vector<std::vector<int>> ring;             // 1-ring neighbors
  std::map<std::pair<int, int>, int> edge_index;
};

MeshTopology build_topology(const DiscreteImmersion& imm);

/// Validated topology, built once per connectivity and cached.
const MeshTopology& get_topology(const DiscreteImmersion& imm);

/// Per-element geometry in a common chart.
struct ElementGeom {
  int chart = 0;
  std::vector<Vec> coords;   // corner coordinates in `chart`
  Vec center;                // coordinate midpoint (projected to the model)
  Mat G;                     // metric Gram of corner-edge vectors
  double measure = 0;        // d mu
  double measure_flat = 0;   // chart-coordinate (realization) measure
  std::vector<Vec> frame;    // oriented g-orthonormal tangent frame
  double omega = 0;          // Omega for dim 2 when the model provides omega_plus
};

struct InducedGeometry {
  std::vector<ElementGeom> elements;
  double total_measure = 0;
  double h_min = 0;  // min g-edge length
};

InducedGeometry induced_geometry(const DiscreteImmersion& imm);

/// Per-vertex/per-element fields derived from an immersion at one time.
struct GeometrySnapshot {
  double time = 0;
  int dim = 1;

  InducedGeometry geom;

  std::vector<Vec> H;         // mean curvature vector, home-chart components
  std::vector<Vec> velocity;  // H - 2 alpha T
  Vec H_norm2;
  Vec A_norm2;
  Vec sym_defect;             // second-fundamental symmetry defect
  Vec alpha;
  Vec grad_alpha_norm2;
  Vec omega;                  // vertex-averaged Omega (dim 2 only; else zeros)
  Vec grad_omega_norm2;
  Vec leg_res;                // max incident-edge Legendrian residual

  double area = 0;
  double h_min = 0;
  double exactness_residual = 0;
  double legendrian_residual = 0;
  double alpha_gauge_const = 0;
  AlphaGauge gauge;
  double max_velocity = 0;    // max |H - 2 alpha T|_g
  double omega_min = 0, omega_max = 0;
};

GeometrySnapshot compute_snapshot(const DiscreteImmersion& imm, const AlphaGauge& gauge);

// ---- individual field operations ----

std::vector<Vec> mean_curvature(const DiscreteImmersion& imm);

struct SecondFundamental {
  Vec A_norm2;
  Vec H_norm2_fit;  // |trace of fitted A|^2
  Vec sym_defect;
};
SecondFundamental second_fundamental_norm(const DiscreteImmersion& imm);

/// max over edges of |eta(edge midpoint tangent)| / |edge|_g.
double legendrian_residual(const DiscreteImmersion& imm);

struct AlphaField {
  Vec alpha;
  double exactness_residual = 0;
  double gauge_const = 0;
};

/// Integrates an arbitrary edge 1-form over a spanning tree and fixes the
/// constant per gauge; exactness residual is the max independent-cycle
/// integral. Edge values are indexed like MeshTopology::edges and oriented
/// v0 -> v1.
AlphaField integrate_edge_form(const DiscreteImmersion& imm, const MeshTopology& topo,
                               const Vec& edge_form, const AlphaGauge& gauge);

AlphaField recover_alpha(const DiscreteImmersion& imm, const AlphaGauge& gauge);

/// Per-element Omega = omega_plus(e1, e2) for the oriented orthonormal frame.
Vec omega_star(const DiscreteImmersion& imm);

/// Hausdorff-type distance between two vertex clouds in realization
/// coordinates (used by the curve convergence checks).
double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

// ---- shared helpers used by scenarios/flow ----

/// Pick a chart in which all given points are expressible; throws if none.
int common_chart(const SasakiModel& model, const std::vector<const ChartPoint*>& pts);

/// Vertex coordinates expressed in `chart`.
Vec coords_in_chart(const SasakiModel& model, const ChartPoint& p, int chart);
/// Same, with periodic coordinates wrapped onto the branch nearest `ref`.
Vec coords_in_chart(const SasakiModel& model, const ChartPoint& p, int chart,
                    const Vec& ref);

/// Move every vertex to its preferred chart (rechart policy).
void rechart(DiscreteImmersion& imm);

/// Map x -> preferred chart + constraint projection.
void enforce_charts(DiscreteImmersion& imm);

struct VertexFrame {
  int chart = 0;
  Mat g;
  Vec T;
  std::vector<Vec> tangent;     // dim vectors, g-orthonormal
  std::vector<Vec> normal_phi;  // dim vectors spanning Phi(T Sigma), g-orthonormal,
                                // exactly g-orthogonal to tangent and T
};

/// Tangent/normal frames at every vertex (from incident element frames).
std::vector<VertexFrame> vertex_frames(const DiscreteImmersion& imm,
                                       const MeshTopology& topo,
                                       const std::vector<ElementGeom>& elems);

}  // namespace legflow
