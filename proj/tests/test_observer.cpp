#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "parastab/engine.hpp"
#include "parastab/observer.hpp"

using namespace parastab;

TEST_CASE("noise generator") {
  SUBCASE("zero magnitude always yields zero") {
    NoiseGenerator gen(42, 0.0);
    for (int k = 0; k < 10; ++k) CHECK(gen.sample(8).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("identical seeds give identical streams") {
    NoiseGenerator g1(7, 1e-3), g2(7, 1e-3);
    for (int k = 0; k < 100; ++k) CHECK((g1.sample(5) - g2.sample(5)).cwiseAbs().maxCoeff() == 0.0);
    NoiseGenerator g3(8, 1e-3);
    CHECK((NoiseGenerator(7, 1e-3).sample(5) - g3.sample(5)).cwiseAbs().maxCoeff() != 0.0);
  }

  SUBCASE("bounded and unbiased") {
    const double mag = 0.5;
    NoiseGenerator gen(1, mag);
    const int samples = 100000;
    double sum = 0.0;
    for (int k = 0; k < samples; ++k) {
      const Vector z = gen.sample(1);
      CHECK(std::abs(z(0)) <= mag);
      sum += z(0);
    }
    // uniform std is mag/sqrt(3); allow three standard errors of the mean
    const double bound = 3.0 * mag / std::sqrt(3.0 * samples);
    CHECK(std::abs(sum / samples) <= bound);
  }

  SUBCASE("negative magnitude rejected") {
    CHECK_THROWS_AS(NoiseGenerator(1, -1.0), std::invalid_argument);
  }
}

namespace {

struct ObserverRig {
  TriMesh mesh;
  SemidiscreteOperators ops;
  CoefficientField coeff;
  PatchArray actuators, sensors;
  std::unique_ptr<ImplicitStepper> stepper;

  explicit ObserverRig(double lambda_l, double ts = 1e-3) {
    mesh = build_structured_mesh(8);
    ops = make_operators(mesh, 0.1);
    coeff = default_coefficients();
    const auto [act, sens] = build_regions(1, 1);
    actuators = make_patch_array(mesh, act, 100.0);
    sensors = make_patch_array(mesh, sens, lambda_l);
    stepper = std::make_unique<ImplicitStepper>(mesh, ops, coeff, ts);
  }
};

}  // namespace

TEST_CASE("observer step") {
  SUBCASE("zero gain reduces to the plain forced step") {
    ObserverRig rig(0.0);
    const Vector yhat = nodal_field(rig.mesh, "paper_yhat0");
    Vector u(rig.actuators.count());
    u << 0.4, -1.1;
    const Vector via_observer = observer_step(*rig.stepper, rig.sensors, rig.actuators, yhat,
                                              Vector::Zero(rig.sensors.count()), u, 1);
    const Vector direct = rig.stepper->advance(1, yhat, Vector(rig.actuators.load * u));
    CHECK((via_observer - direct).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero state, measurement and input stay zero") {
    ObserverRig rig(200.0);
    const Vector next = observer_step(*rig.stepper, rig.sensors, rig.actuators,
                                      Vector::Zero(rig.mesh.vertex_count()),
                                      Vector::Zero(rig.sensors.count()),
                                      Vector::Zero(rig.actuators.count()), 1);
    CHECK(next.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("Woodbury path matches a dense direct solve") {
    // independent oracle: assemble the full observer system matrix and solve
    // it densely
    ObserverRig rig(200.0);
    const double dt = rig.stepper->dt();
    const Vector yhat = nodal_field(rig.mesh, "paper_yhat0");
    Vector w(rig.sensors.count());
    w << 0.2, -0.6;
    Vector u(rig.actuators.count());
    u << 1.0, 0.5;

    const Vector stepped =
        observer_step(*rig.stepper, rig.sensors, rig.actuators, yhat, w, u, 1);

    const SpMat rc = assemble_reaction_convection(rig.mesh, rig.coeff, dt);
    Eigen::MatrixXd system =
        Eigen::MatrixXd(rig.ops.mass + dt * (rig.ops.stiffness + rc)) +
        dt * rig.sensors.lambda *
            (rig.sensors.load * rig.sensors.gram_inverse * rig.sensors.load.transpose());
    const Vector rhs = rig.ops.mass * yhat +
                       dt * (rig.actuators.load * u +
                             rig.sensors.lambda *
                                 (rig.sensors.load * (rig.sensors.gram_inverse * w)));
    const Vector direct = system.partialPivLu().solve(rhs);
    CHECK((stepped - direct).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("consistent measurements leave only an O(dt^2) injection residual") {
    // with w = measure(yhat) the injection vanishes at the old iterate, so
    // the deviation from the free step shrinks like dt^2 under halving
    auto deviation = [](double dt) {
      ObserverRig rig(200.0, dt);
      ObserverRig free_rig(0.0, dt);
      const Vector yhat = nodal_field(rig.mesh, "paper_yhat0");
      const Vector w = measure(rig.sensors, yhat);
      const Vector u = Vector::Zero(rig.actuators.count());
      const Vector with_injection =
          observer_step(*rig.stepper, rig.sensors, rig.actuators, yhat, w, u, 1);
      const Vector without =
          observer_step(*free_rig.stepper, free_rig.sensors, free_rig.actuators, yhat,
                        Vector::Zero(2), u, 1);
      return l2_norm(Vector(with_injection - without), rig.ops.mass);
    };
    const double d1 = deviation(4e-3);
    const double d2 = deviation(2e-3);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.3));
  }
}

TEST_CASE("estimate error contracts in closed loop" * doctest::timeout(300)) {
  // matched plant/observer discretization, no noise: the estimate error
  // follows its own injected dynamics and must decay fast
  ScenarioConfig cfg;
  cfg.mode = Mode::delayed_predictor;
  cfg.matched = true;
  cfg.rf = 0;
  cfg.T_final = 6.0;
  cfg.zeta_mag = 0.0;
  const auto trace = run_scenario(cfg);
  const double rate = fit_log_slope(trace.t, trace.norm_err, 1.0, 6.0);
  CHECK(rate < -0.5);

  // monotone after the initial transient
  bool monotone = true;
  for (Eigen::Index i = 1; i < trace.rows(); ++i)
    if (trace.t(i) > 1.0 && trace.norm_err(i) > trace.norm_err(i - 1) * (1.0 + 1e-9))
      monotone = false;
  CHECK(monotone);
}
