#include "parastab/observer.hpp"

#include <stdexcept>

namespace parastab {

Vector observer_step(ImplicitStepper& stepper, const PatchArray& sensors,
                     const PatchArray& actuators, const Vector& estimate,
                     const Vector& measurement, const Vector& delayed_input, long end_index) {
  const int s = sensors.count();
  if (measurement.size() != s) throw std::invalid_argument("observer_step: measurement dimension");
  if (delayed_input.size() != actuators.count())
    throw std::invalid_argument("observer_step: input dimension");

  const double dt = stepper.dt();
  const double lam = sensors.lambda;

  // Explicit forcing: actuator load plus the measurement part of the
  // injection, -L w = +lambda expand(G^{-1} w) as a load vector.
  Vector load = actuators.load * delayed_input;
  if (lam != 0.0) load += lam * (sensors.load * (sensors.gram_inverse * measurement));
  const Vector base = stepper.advance(end_index, estimate, load);
  if (lam == 0.0) return base;

  // Woodbury correction for the implicit -lambda P_sensors part:
  //   system = F + U V^T,  U = dt lambda Lw G^{-1},  V^T = Lw^T.
  const Eigen::MatrixXd u_block = (dt * lam) * (sensors.load * sensors.gram_inverse);
  Eigen::MatrixXd f_inv_u(u_block.rows(), s);
  for (int j = 0; j < s; ++j) f_inv_u.col(j) = stepper.solve(end_index, u_block.col(j));
  const Eigen::MatrixXd small =
      Eigen::MatrixXd::Identity(s, s) + sensors.load.transpose() * f_inv_u;
  const Vector correction = small.partialPivLu().solve(sensors.load.transpose() * base);
  return base - f_inv_u * correction;
}

}  // namespace parastab
