#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <map>
#include <memory>

#include "parastab/mesh.hpp"

namespace parastab {

using SpMat = Eigen::SparseMatrix<double>;

/// Time-dependent reaction and convection data, plus the diffusion constant.
struct CoefficientField {
  double nu = 0.1;
  std::function<double(double, double, double)> reaction;           // a(x1,x2,t)
  std::function<Eigen::Vector2d(double, double, double)> convection;  // b(x1,x2,t)
};

/// The coefficient set used by the default scenarios:
///   nu = 0.1,  a = -3/2 + x1 - |sin(6t + x1)|,  b = (x1 + x2, |cos(6t) x1 x2|).
CoefficientField default_coefficients();

/// Standard P1 mass matrix, exact elementwise integration.
SpMat assemble_mass(const TriMesh& mesh);

/// nu * (grad u, grad v) + (u, v): the shifted diffusion operator with
/// natural (do-nothing) Neumann boundary. Throws for nu <= 0.
SpMat assemble_stiffness(const TriMesh& mesh, double nu);

/// Per-mesh quadrature geometry reused across reassemblies of the
/// time-dependent terms.
struct QuadCache {
  // One row per (element, quadrature point): x, y, weight (already scaled by
  // the element area).
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  // Barycentric values of the three local basis functions at each of the
  // quadrature points of the reference rule.
  Eigen::Matrix<double, Eigen::Dynamic, 3> basis;
  // Constant P1 gradients per element: rows (gx0,gy0,gx1,gy1,gx2,gy2).
  Eigen::Matrix<double, Eigen::Dynamic, 6> grads;
  int points_per_element = 0;
};

QuadCache make_quad_cache(const TriMesh& mesh);

/// Reaction-convection matrix at time t:
///   entries  int a(x,t) phi_j phi_i + int (b(x,t) . grad phi_j) phi_i,
/// by a fixed degree-4 Gauss rule per element. Generally nonsymmetric.
SpMat assemble_reaction_convection(const TriMesh& mesh, const QuadCache& cache,
                                   const CoefficientField& coeff, double t);
SpMat assemble_reaction_convection(const TriMesh& mesh, const CoefficientField& coeff, double t);

struct SemidiscreteOperators {
  SpMat mass;
  SpMat stiffness;
  int dof_count = 0;
};

SemidiscreteOperators make_operators(const TriMesh& mesh, double nu);

/// One backward-Euler step: solves
///   (M + dt (stiffness + rc_next)) y+ = M y + dt M forcing
/// with rc_next evaluated at the end of the step. The forcing is a nodal
/// field; its load is M * forcing.
Vector implicit_step(const SemidiscreteOperators& ops, const SpMat& rc_next, const Vector& y,
                     double dt, const Vector& forcing);

/// sqrt(y^T M y).
double l2_norm(const Vector& y, const SpMat& mass);

/// Time stepper for the loops: owns the assembly of the end-of-step system
/// matrix and a small cache of factorizations keyed by integer time index
/// (end time = index * dt). The cached factors are immutable once built, so
/// repeated solves against the same index are bitwise reproducible.
class ImplicitStepper {
 public:
  ImplicitStepper(const TriMesh& mesh, const SemidiscreteOperators& ops,
                  const CoefficientField& coeff, double dt);

  double dt() const { return dt_; }
  const SemidiscreteOperators& ops() const { return ops_; }

  /// y+ solving (M + dt (stiffness + rc(end_index*dt))) y+ = M y + dt * load,
  /// where load is the assembled right-hand-side vector (not a nodal field).
  Vector advance(long end_index, const Vector& y, const Vector& load);

  /// Apply the cached factorization at end_index to an arbitrary rhs.
  Vector solve(long end_index, const Vector& rhs);

  /// Drop cached factorizations with index < min_index.
  void retire_below(long min_index);

  int factor_cache_size() const { return static_cast<int>(factors_.size()); }

 private:
  Eigen::SparseLU<SpMat>& factor_at(long end_index);

  const TriMesh& mesh_;
  const SemidiscreteOperators& ops_;
  const CoefficientField& coeff_;
  double dt_;
  QuadCache quad_;
  std::map<long, std::unique_ptr<Eigen::SparseLU<SpMat>>> factors_;
};

/// Exact P1 interpolation matrix from a mesh onto its refinement
/// (inherited vertices copy, midpoints average their edge endpoints).
SpMat prolongation_matrix(const TriMesh& fine);

/// Prolong nodal values from the parent of `fine` onto `fine`. Throws
/// std::invalid_argument if the sizes do not match the nesting data.
Vector prolong(const Vector& coarse_values, const TriMesh& fine);

}  // namespace parastab
