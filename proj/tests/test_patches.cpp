#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parastab/patches.hpp"

using namespace parastab;

namespace {

struct Geometry {
  TriMesh mesh;
  PatchArray actuators;
  PatchArray sensors;
};

Geometry default_geometry(int n = 16, int order = 2) {
  const auto [act, sens] = build_regions(order, order);
  Geometry g;
  g.mesh = build_structured_mesh(n);
  g.actuators = make_patch_array(g.mesh, act, 100.0);
  g.sensors = make_patch_array(g.mesh, sens, 200.0);
  return g;
}

}  // namespace

TEST_CASE("gram matrices are diagonal with the patch areas") {
  const auto g = default_geometry();
  for (const PatchArray* arr : {&g.actuators, &g.sensors}) {
    for (int i = 0; i < arr->count(); ++i)
      for (int j = 0; j < arr->count(); ++j) {
        if (i == j)
          CHECK(std::abs(arr->gram(i, i) - 1.0 / 64.0) < 1e-14);
        else
          CHECK(std::abs(arr->gram(i, j)) < 1e-14);
      }
    const Eigen::MatrixXd prod = arr->gram * arr->gram_inverse;
    CHECK((prod - Eigen::MatrixXd::Identity(arr->count(), arr->count())).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("misaligned meshes are rejected") {
  const auto [act, sens] = build_regions(2, 2);
  CHECK_THROWS_AS(make_patch_array(build_structured_mesh(3), act, 1.0), std::invalid_argument);
}

TEST_CASE("amplitude expansion") {
  const auto g = default_geometry();
  const int m = g.actuators.count();

  SUBCASE("unit vector gives the indicator of its patch") {
    Vector e1 = Vector::Zero(m);
    e1(0) = 1.0;
    const Vector field = expand(g.actuators, g.mesh, e1);
    double inside = 0.0;
    for (int k : g.actuators.cells[0]) inside += std::abs(field(k) - 1.0);
    CHECK(inside == 0.0);
    CHECK(field.sum() == doctest::Approx(g.actuators.cells[0].size()));
  }

  SUBCASE("zero amplitudes give the zero field") {
    CHECK(expand(g.actuators, g.mesh, Vector::Zero(m)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("all-ones is the indicator of the union") {
    const Vector field = expand(g.actuators, g.mesh, Vector::Ones(m));
    size_t covered = 0;
    for (int k = 0; k < g.mesh.triangle_count(); ++k) {
      CHECK((field(k) == 0.0 || field(k) == 1.0));  // patches are disjoint
      covered += field(k) == 1.0;
    }
    size_t expected = 0;
    for (const auto& cells : g.actuators.cells) expected += cells.size();
    CHECK(covered == expected);
  }

  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(expand(g.actuators, g.mesh, Vector::Zero(m + 1)), std::invalid_argument);
  }
}

TEST_CASE("patch measurements") {
  SUBCASE("constant one integrates to the patch areas (order 1)") {
    const auto [act, sens] = build_regions(1, 1);
    const auto mesh = build_structured_mesh(16);
    const auto arr = make_patch_array(mesh, act, 1.0);
    const Vector w = measure(arr, Vector::Ones(mesh.vertex_count()));
    for (int j = 0; j < arr.count(); ++j) CHECK(w(j) == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
  }

  const auto g = default_geometry();

  SUBCASE("zero field measures zero") {
    CHECK(measure(g.actuators, Vector::Zero(g.mesh.vertex_count())).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("indicator of a patch measures its gram column") {
    Vector e2 = Vector::Zero(g.actuators.count());
    e2(2) = 1.0;
    const Vector field = expand(g.actuators, g.mesh, e2);
    const Vector w = measure_cells(g.actuators, g.mesh, field);
    CHECK((w - g.actuators.gram.col(2)).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("sensors are blind to fields supported on the actuator patches") {
    const Vector field = expand(g.actuators, g.mesh, Vector::Ones(g.actuators.count()));
    CHECK(measure_cells(g.sensors, g.mesh, field).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("constant one measures sensor areas") {
    const Vector w = measure(g.sensors, Vector::Ones(g.mesh.vertex_count()));
    for (int j = 0; j < g.sensors.count(); ++j)
      CHECK(w(j) == doctest::Approx(1.0 / 64.0).epsilon(1e-13));
  }
}

TEST_CASE("feedback amplitudes") {
  const auto g = default_geometry();
  const int m = g.actuators.count();

  CHECK(feedback(g.actuators, Vector::Zero(g.mesh.vertex_count())).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("indicator input hits only its own channel") {
    Vector e1 = Vector::Zero(m);
    e1(0) = 1.0;
    const Vector field = expand(g.actuators, g.mesh, e1);
    const Vector u = feedback_cells(g.actuators, g.mesh, field);
    CHECK(u(0) == doctest::Approx(-100.0).epsilon(1e-12));
    for (int j = 1; j < m; ++j) CHECK(std::abs(u(j)) < 1e-12);
  }
}

TEST_CASE("output injection") {
  const auto g = default_geometry();
  const int s = g.sensors.count();

  CHECK(injection(g.sensors, g.mesh, Vector::Zero(s)).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("unit residual produces -lambda/area on its patch") {
    Vector e1 = Vector::Zero(s);
    e1(0) = 1.0;
    const Vector field = injection(g.sensors, g.mesh, e1);
    const double expected = -200.0 / (1.0 / 64.0);
    for (int k : g.sensors.cells[0]) CHECK(field(k) == doctest::Approx(expected).epsilon(1e-12));
    // zero elsewhere
    double outside = 0.0;
    for (int k = 0; k < g.mesh.triangle_count(); ++k) outside += std::abs(field(k));
    CHECK(outside == doctest::Approx(std::abs(expected) * g.sensors.cells[0].size()));
  }

  SUBCASE("injection load matches the field's exact load") {
    Vector v(s);
    for (int j = 0; j < s; ++j) v(j) = 0.3 * j - 1.0;
    const Vector field = injection(g.sensors, g.mesh, v);
    const Vector load = injection_load(g.sensors, v);
    // pair the field against each hat function by exact integration
    for (int trial = 0; trial < 5; ++trial) {
      Vector probe = Vector::Zero(g.mesh.vertex_count());
      probe(37 * (trial + 1)) = 1.0;
      CHECK(inner_cell_nodal(g.mesh, field, probe) ==
            doctest::Approx(load.dot(probe)).epsilon(1e-12));
    }
  }
}

TEST_CASE("projection onto the patch span") {
  const auto g = default_geometry();

  SUBCASE("fields already in the span are fixed points") {
    Vector c = Vector::Zero(g.actuators.count());
    c(2) = 3.0;
    const Vector field = expand(g.actuators, g.mesh, c);
    const Vector proj = project_cells(g.actuators, g.mesh, field);
    CHECK((proj - field).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("fields with zero patch integrals project to zero") {
    // a hat function whose support touches no actuator patch
    std::vector<bool> patch_vertex(g.mesh.vertex_count(), false);
    for (const auto& cells : g.actuators.cells)
      for (int k : cells)
        for (int e = 0; e < 3; ++e) patch_vertex[g.mesh.triangles(k, e)] = true;
    int v_free = -1;
    for (int v = 0; v < g.mesh.vertex_count() && v_free < 0; ++v)
      if (!patch_vertex[v]) v_free = v;
    REQUIRE(v_free >= 0);
    Vector y = Vector::Zero(g.mesh.vertex_count());
    y(v_free) = 1.0;
    // support of a hat is the vertex star; it may still overlap a patch cell
    // unless the vertex is isolated from all patch cells, so check first
    if (measure(g.actuators, y).cwiseAbs().maxCoeff() == 0.0)
      CHECK(project(g.actuators, g.mesh, y).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("identity suite: idempotence, self-adjointness, contraction, factorizations") {
    const auto rep = operator_identity_report(g.mesh, g.actuators, g.sensors);
    CHECK(rep.projection_idempotence < 1e-11);
    CHECK(rep.projection_self_adjoint < 1e-11);
    CHECK(rep.projection_contraction <= 0.0 + 1e-15);
    CHECK(rep.feedback_factorization < 1e-10);
    CHECK(rep.injection_factorization < 1e-10);
    CHECK(rep.gram_off_diagonal < 1e-14);
    CHECK(rep.pass(1e-10));
  }
}
