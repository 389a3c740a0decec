#pragma once

#include "parastab/fem.hpp"
#include "parastab/mesh.hpp"

namespace parastab {

/// Indicator-patch operator family (actuators or sensors).
///
/// Patches are exact unions of mesh triangles, so indicators are kept as
/// elementwise-constant data and every pairing below is an exact integral:
///   load(i,j) = int_{patch j} phi_i,   gram(i,j) = area(patch i ^ patch j).
/// With disjoint patches the Gram matrix is diagonal with the patch areas.
struct PatchArray {
  RegionFamily regions;
  std::vector<std::vector<int>> cells;  // triangle indices per patch
  Eigen::MatrixXd load;                 // dof_count x m
  Eigen::MatrixXd gram;                 // m x m
  Eigen::MatrixXd gram_inverse;
  double lambda = 0.0;  // feedback / injection gain

  int count() const { return static_cast<int>(regions.rectangles.size()); }
  int dof_count() const { return static_cast<int>(load.rows()); }
};

/// Builds the array; throws std::invalid_argument if the patches do not
/// align with the mesh.
PatchArray make_patch_array(const TriMesh& mesh, const RegionFamily& regions, double lambda);

/// Amplitudes -> piecewise-constant field over mesh triangles
/// (sum_j u_j 1_{patch j}).
Vector expand(const PatchArray& arr, const TriMesh& mesh, const Vector& amplitudes);

/// Exact patch integrals of a nodal P1 field: component j = int_{patch j} y.
Vector measure(const PatchArray& arr, const Vector& nodal);

/// Exact patch integrals of a piecewise-constant (per-triangle) field.
Vector measure_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values);

/// Feedback amplitudes: -lambda * gram^{-1} * measure(y).
Vector feedback(const PatchArray& arr, const Vector& nodal);
Vector feedback_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values);

/// Output injection field: -lambda * expand(gram^{-1} v), as a
/// piecewise-constant field over triangles.
Vector injection(const PatchArray& arr, const TriMesh& mesh, const Vector& residual);

/// Load vector of the injection field: -lambda * load * gram^{-1} * residual.
Vector injection_load(const PatchArray& arr, const Vector& residual);

/// Orthogonal projection (in the L2 inner product) onto the span of the
/// patch indicators, returned as a piecewise-constant field over triangles.
Vector project(const PatchArray& arr, const TriMesh& mesh, const Vector& nodal);
Vector project_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values);

// Exact integrals between piecewise-constant and nodal P1 fields.
double inner_cells(const TriMesh& mesh, const Vector& cells_a, const Vector& cells_b);
double inner_cell_nodal(const TriMesh& mesh, const Vector& cell_values, const Vector& nodal);
double l2_norm_cells(const TriMesh& mesh, const Vector& cell_values);

/// Max deviations of the operator identities on a given geometry, probed with
/// seeded random nodal fields. Every entry should be at roundoff level.
struct OperatorIdentityReport {
  double projection_idempotence = 0.0;   // |P(P y) - P y|
  double projection_self_adjoint = 0.0;  // |(P y, z) - (y, P z)|
  double projection_contraction = 0.0;   // max(0, |P y| - |y|)
  double feedback_factorization = 0.0;   // |B K y + lambda_K P y|
  double injection_factorization = 0.0;  // |L W y + lambda_L P y|
  double gram_off_diagonal = 0.0;
  double gram_area_mismatch = 0.0;       // |gram_jj - patch area|

  double worst() const;
  bool pass(double tol) const { return worst() <= tol; }
};

OperatorIdentityReport operator_identity_report(const TriMesh& mesh, const PatchArray& actuators,
                                                const PatchArray& sensors, int probes = 20,
                                                unsigned seed = 2026);

}  // namespace parastab
