#include "parastab/patches.hpp"

#include <random>
#include <stdexcept>

namespace parastab {

PatchArray make_patch_array(const TriMesh& mesh, const RegionFamily& regions, double lambda) {
  PatchArray arr;
  arr.regions = regions;
  arr.cells = region_cells(mesh, regions);  // throws if misaligned
  arr.lambda = lambda;
  const int m = arr.count();

  arr.load = Eigen::MatrixXd::Zero(mesh.vertex_count(), m);
  for (int j = 0; j < m; ++j)
    for (int k : arr.cells[j]) {
      const double third = triangle_area(mesh, k) / 3.0;
      for (int e = 0; e < 3; ++e) arr.load(mesh.triangles(k, e), j) += third;
    }

  arr.gram = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double overlap = 0.0;
      for (int ki : arr.cells[i])
        for (int kj : arr.cells[j])
          if (ki == kj) overlap += triangle_area(mesh, ki);
      arr.gram(i, j) = overlap;
    }
  arr.gram_inverse = arr.gram.inverse();
  return arr;
}

Vector expand(const PatchArray& arr, const TriMesh& mesh, const Vector& amplitudes) {
  if (amplitudes.size() != arr.count())
    throw std::invalid_argument("expand: amplitude dimension mismatch");
  Vector field = Vector::Zero(mesh.triangle_count());
  for (int j = 0; j < arr.count(); ++j)
    for (int k : arr.cells[j]) field(k) += amplitudes(j);
  return field;
}

Vector measure(const PatchArray& arr, const Vector& nodal) {
  if (nodal.size() != arr.dof_count())
    throw std::invalid_argument("measure: field dimension mismatch");
  return arr.load.transpose() * nodal;
}

Vector measure_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values) {
  if (cell_values.size() != mesh.triangle_count())
    throw std::invalid_argument("measure_cells: field dimension mismatch");
  Vector out(arr.count());
  for (int j = 0; j < arr.count(); ++j) {
    double s = 0.0;
    for (int k : arr.cells[j]) s += cell_values(k) * triangle_area(mesh, k);
    out(j) = s;
  }
  return out;
}

Vector feedback(const PatchArray& arr, const Vector& nodal) {
  return -arr.lambda * (arr.gram_inverse * measure(arr, nodal));
}

Vector feedback_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values) {
  return -arr.lambda * (arr.gram_inverse * measure_cells(arr, mesh, cell_values));
}

Vector injection(const PatchArray& arr, const TriMesh& mesh, const Vector& residual) {
  if (residual.size() != arr.count())
    throw std::invalid_argument("injection: residual dimension mismatch");
  return expand(arr, mesh, Vector(-arr.lambda * (arr.gram_inverse * residual)));
}

Vector injection_load(const PatchArray& arr, const Vector& residual) {
  if (residual.size() != arr.count())
    throw std::invalid_argument("injection_load: residual dimension mismatch");
  return -arr.lambda * (arr.load * (arr.gram_inverse * residual));
}

Vector project(const PatchArray& arr, const TriMesh& mesh, const Vector& nodal) {
  return expand(arr, mesh, Vector(arr.gram_inverse * measure(arr, nodal)));
}

Vector project_cells(const PatchArray& arr, const TriMesh& mesh, const Vector& cell_values) {
  return expand(arr, mesh, Vector(arr.gram_inverse * measure_cells(arr, mesh, cell_values)));
}

double inner_cells(const TriMesh& mesh, const Vector& cells_a, const Vector& cells_b) {
  double s = 0.0;
  for (int k = 0; k < mesh.triangle_count(); ++k)
    s += cells_a(k) * cells_b(k) * triangle_area(mesh, k);
  return s;
}

double inner_cell_nodal(const TriMesh& mesh, const Vector& cell_values, const Vector& nodal) {
  double s = 0.0;
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const double mean =
        (nodal(mesh.triangles(k, 0)) + nodal(mesh.triangles(k, 1)) + nodal(mesh.triangles(k, 2))) /
        3.0;
    s += cell_values(k) * mean * triangle_area(mesh, k);
  }
  return s;
}

double l2_norm_cells(const TriMesh& mesh, const Vector& cell_values) {
  return std::sqrt(inner_cells(mesh, cell_values, cell_values));
}

double OperatorIdentityReport::worst() const {
  double w = projection_idempotence;
  w = std::max(w, projection_self_adjoint);
  w = std::max(w, projection_contraction);
  w = std::max(w, feedback_factorization);
  w = std::max(w, injection_factorization);
  w = std::max(w, gram_off_diagonal);
  w = std::max(w, gram_area_mismatch);
  return w;
}

OperatorIdentityReport operator_identity_report(const TriMesh& mesh, const PatchArray& actuators,
                                                const PatchArray& sensors, int probes,
                                                unsigned seed) {
  OperatorIdentityReport rep;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const SpMat mass = assemble_mass(mesh);

  for (const PatchArray* arr : {&actuators, &sensors}) {
    for (int j = 0; j < arr->count(); ++j) {
      for (int i = 0; i < arr->count(); ++i)
        if (i != j) rep.gram_off_diagonal = std::max(rep.gram_off_diagonal,
                                                     std::abs(arr->gram(i, j)));
      rep.gram_area_mismatch = std::max(
          rep.gram_area_mismatch, std::abs(arr->gram(j, j) - arr->regions.rectangles[j].area()));
    }
  }

  for (int p = 0; p < probes; ++p) {
    Vector y(mesh.vertex_count()), z(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      y(i) = unif(rng);
      z(i) = unif(rng);
    }
    const double ny = l2_norm(y, mass);
    for (const PatchArray* arr : {&actuators, &sensors}) {
      const Vector py = project(*arr, mesh, y);
      const Vector ppy = project_cells(*arr, mesh, py);
      rep.projection_idempotence =
          std::max(rep.projection_idempotence, l2_norm_cells(mesh, Vector(ppy - py)));
      const double lhs = inner_cell_nodal(mesh, py, z);
      const double rhs = inner_cell_nodal(mesh, project(*arr, mesh, z), y);
      rep.projection_self_adjoint = std::max(rep.projection_self_adjoint, std::abs(lhs - rhs));
      rep.projection_contraction =
          std::max(rep.projection_contraction, l2_norm_cells(mesh, py) - ny);
    }
    // B K y = -lambda_K P y and L W y = -lambda_L P y, composed through the
    // amplitude route on one side and the projection route on the other.
    const Vector bk = expand(actuators, mesh, feedback(actuators, y));
    const Vector pk = -actuators.lambda * project(actuators, mesh, y);
    rep.feedback_factorization =
        std::max(rep.feedback_factorization, l2_norm_cells(mesh, Vector(bk - pk)));
    const Vector lw = injection(sensors, mesh, measure(sensors, y));
    const Vector pl = -sensors.lambda * project(sensors, mesh, y);
    rep.injection_factorization =
        std::max(rep.injection_factorization, l2_norm_cells(mesh, Vector(lw - pl)));
  }
  return rep;
}

}  // namespace parastab
