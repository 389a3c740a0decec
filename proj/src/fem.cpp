#include "parastab/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace parastab {

CoefficientField default_coefficients() {
  CoefficientField c;
  c.nu = 0.1;
  c.reaction = [](double x1, double /*x2*/, double t) {
    return -1.5 + x1 - std::abs(std::sin(6.0 * t + x1));
  };
  c.convection = [](double x1, double x2, double t) {
    return Eigen::Vector2d(x1 + x2, std::abs(std::cos(6.0 * t) * x1 * x2));
  };
  return c;
}

namespace {

struct ElementGeometry {
  std::array<int, 3> v;
  double area;
  Eigen::Matrix<double, 3, 2> grad;  // row i = grad of local basis i
};

ElementGeometry element_geometry(const TriMesh& mesh, int k) {
  ElementGeometry g;
  for (int i = 0; i < 3; ++i) g.v[i] = mesh.triangles(k, i);
  const Eigen::Vector2d a = mesh.vertices.row(g.v[0]);
  const Eigen::Vector2d b = mesh.vertices.row(g.v[1]);
  const Eigen::Vector2d c = mesh.vertices.row(g.v[2]);
  const double det = (b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0));
  g.area = 0.5 * det;
  g.grad.row(0) << (b(1) - c(1)) / det, (c(0) - b(0)) / det;
  g.grad.row(1) << (c(1) - a(1)) / det, (a(0) - c(0)) / det;
  g.grad.row(2) << (a(1) - b(1)) / det, (b(0) - a(0)) / det;
  return g;
}

// Degree-4 symmetric Gauss rule on the triangle (two 3-point orbits);
// weights sum to 1 and are scaled by the element area on use.
struct TriRule {
  static constexpr int n = 6;
  double w[n];
  double l1[n], l2[n], l3[n];
  TriRule() {
    const double wa = 0.223381589678011, la = 0.108103018168070, lb = 0.445948490915965;
    const double wc = 0.109951743655322, lc = 0.816847572980459, ld = 0.091576213509771;
    const double ws[2] = {wa, wc};
    const double ps[2][3] = {{la, lb, lb}, {lc, ld, ld}};
    int q = 0;
    for (int o = 0; o < 2; ++o)
      for (int r = 0; r < 3; ++r) {
        w[q] = ws[o];
        l1[q] = ps[o][r % 3];
        l2[q] = ps[o][(r + 1) % 3];
        l3[q] = ps[o][(r + 2) % 3];
        ++q;
      }
  }
};

const TriRule& tri_rule() {
  static const TriRule rule;
  return rule;
}

}  // namespace

SpMat assemble_mass(const TriMesh& mesh) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto g = element_geometry(mesh, k);
    const double s = g.area / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trip.emplace_back(g.v[i], g.v[j], (i == j ? 2.0 : 1.0) * s);
  }
  SpMat m(mesh.vertex_count(), mesh.vertex_count());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SpMat assemble_stiffness(const TriMesh& mesh, double nu) {
  if (nu <= 0.0) throw std::invalid_argument("assemble_stiffness: nu must be > 0");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto g = element_geometry(mesh, k);
    const double sm = g.area / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double kij = nu * g.area * g.grad.row(i).dot(g.grad.row(j));
        trip.emplace_back(g.v[i], g.v[j], kij + (i == j ? 2.0 : 1.0) * sm);
      }
  }
  SpMat a(mesh.vertex_count(), mesh.vertex_count());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

QuadCache make_quad_cache(const TriMesh& mesh) {
  const auto& rule = tri_rule();
  QuadCache cache;
  cache.points_per_element = TriRule::n;
  cache.points.resize(mesh.triangle_count() * TriRule::n, 3);
  cache.grads.resize(mesh.triangle_count(), 6);
  cache.basis.resize(TriRule::n, 3);
  for (int q = 0; q < TriRule::n; ++q) cache.basis.row(q) << rule.l1[q], rule.l2[q], rule.l3[q];
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    const auto g = element_geometry(mesh, k);
    cache.grads.row(k) << g.grad(0, 0), g.grad(0, 1), g.grad(1, 0), g.grad(1, 1), g.grad(2, 0),
        g.grad(2, 1);
    const Eigen::Vector2d a = mesh.vertices.row(g.v[0]);
    const Eigen::Vector2d b = mesh.vertices.row(g.v[1]);
    const Eigen::Vector2d c = mesh.vertices.row(g.v[2]);
    for (int q = 0; q < TriRule::n; ++q) {
      const Eigen::Vector2d x = rule.l1[q] * a + rule.l2[q] * b + rule.l3[q] * c;
      cache.points.row(k * TriRule::n + q) << x(0), x(1), rule.w[q] * g.area;
    }
  }
  return cache;
}

SpMat assemble_reaction_convection(const TriMesh& mesh, const QuadCache& cache,
                                   const CoefficientField& coeff, double t) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.triangle_count());
  const int nq = cache.points_per_element;
  for (int k = 0; k < mesh.triangle_count(); ++k) {
    Eigen::Matrix3d el = Eigen::Matrix3d::Zero();
    Eigen::Matrix<double, 3, 2> grad;
    grad << cache.grads(k, 0), cache.grads(k, 1), cache.grads(k, 2), cache.grads(k, 3),
        cache.grads(k, 4), cache.grads(k, 5);
    for (int q = 0; q < nq; ++q) {
      const double x = cache.points(k * nq + q, 0);
      const double y = cache.points(k * nq + q, 1);
      const double w = cache.points(k * nq + q, 2);
      const double a = coeff.reaction(x, y, t);
      const Eigen::Vector2d b = coeff.convection(x, y, t);
      for (int i = 0; i < 3; ++i) {
        const double phi_i = cache.basis(q, i);
        for (int j = 0; j < 3; ++j)
          el(i, j) += w * phi_i * (a * cache.basis(q, j) + b.dot(grad.row(j)));
      }
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trip.emplace_back(mesh.triangles(k, i), mesh.triangles(k, j), el(i, j));
  }
  SpMat m(mesh.vertex_count(), mesh.vertex_count());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SpMat assemble_reaction_convection(const TriMesh& mesh, const CoefficientField& coeff, double t) {
  return assemble_reaction_convection(mesh, make_quad_cache(mesh), coeff, t);
}

SemidiscreteOperators make_operators(const TriMesh& mesh, double nu) {
  SemidiscreteOperators ops;
  ops.mass = assemble_mass(mesh);
  ops.stiffness = assemble_stiffness(mesh, nu);
  ops.dof_count = mesh.vertex_count();
  return ops;
}

Vector implicit_step(const SemidiscreteOperators& ops, const SpMat& rc_next, const Vector& y,
                     double dt, const Vector& forcing) {
  if (dt <= 0.0) throw std::invalid_argument("implicit_step: dt must be > 0");
  if (y.size() != ops.dof_count || forcing.size() != ops.dof_count)
    throw std::invalid_argument("implicit_step: dimension mismatch");
  SpMat system = ops.mass + dt * (ops.stiffness + rc_next);
  Eigen::SparseLU<SpMat> lu(system);
  if (lu.info() != Eigen::Success) throw std::runtime_error("implicit_step: factorization failed");
  const Vector rhs = ops.mass * y + dt * (ops.mass * forcing);
  return lu.solve(rhs);
}

double l2_norm(const Vector& y, const SpMat& mass) {
  if (y.size() != mass.rows()) throw std::invalid_argument("l2_norm: dimension mismatch");
  return std::sqrt(y.dot(mass * y));
}

ImplicitStepper::ImplicitStepper(const TriMesh& mesh, const SemidiscreteOperators& ops,
                                 const CoefficientField& coeff, double dt)
    : mesh_(mesh), ops_(ops), coeff_(coeff), dt_(dt), quad_(make_quad_cache(mesh)) {
  if (dt <= 0.0) throw std::invalid_argument("ImplicitStepper: dt must be > 0");
}

Eigen::SparseLU<SpMat>& ImplicitStepper::factor_at(long end_index) {
  auto it = factors_.find(end_index);
  if (it != factors_.end()) return *it->second;
  const double t_end = static_cast<double>(end_index) * dt_;
  SpMat system =
      ops_.mass + dt_ * (ops_.stiffness + assemble_reaction_convection(mesh_, quad_, coeff_, t_end));
  auto lu = std::make_unique<Eigen::SparseLU<SpMat>>();
  lu->compute(system);
  if (lu->info() != Eigen::Success)
    throw std::runtime_error("ImplicitStepper: factorization failed at index " +
                             std::to_string(end_index));
  return *factors_.emplace(end_index, std::move(lu)).first->second;
}

Vector ImplicitStepper::advance(long end_index, const Vector& y, const Vector& load) {
  const Vector rhs = ops_.mass * y + dt_ * load;
  return factor_at(end_index).solve(rhs);
}

Vector ImplicitStepper::solve(long end_index, const Vector& rhs) {
  return factor_at(end_index).solve(rhs);
}

void ImplicitStepper::retire_below(long min_index) {
  factors_.erase(factors_.begin(), factors_.lower_bound(min_index));
}

SpMat prolongation_matrix(const TriMesh& fine) {
  if (fine.level == 0 || fine.inherited_vertex_count == 0)
    throw std::invalid_argument("prolongation_matrix: mesh has no refinement parent");
  const int nc = fine.inherited_vertex_count;
  const int nf = fine.vertex_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(nc + 2 * (nf - nc));
  for (int v = 0; v < nc; ++v) trip.emplace_back(v, v, 1.0);
  for (int v = nc; v < nf; ++v) {
    const auto& e = fine.midpoint_of[v - nc];
    trip.emplace_back(v, e[0], 0.5);
    trip.emplace_back(v, e[1], 0.5);
  }
  SpMat p(nf, nc);
  p.setFromTriplets(trip.begin(), trip.end());
  return p;
}

Vector prolong(const Vector& coarse_values, const TriMesh& fine) {
  if (fine.level == 0 || coarse_values.size() != fine.inherited_vertex_count)
    throw std::invalid_argument("prolong: meshes are not nested");
  return prolongation_matrix(fine) * coarse_values;
}

}  // namespace parastab
