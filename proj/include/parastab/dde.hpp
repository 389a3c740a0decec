#pragma once

#include <Eigen/Dense>

namespace parastab {
namespace dde {

using Eigen::VectorXd;

/// Parameters of the scalar delayed feedback loop
///   y' = rho y(t) + kappa y(t - tau),  y = y0 exp(rho t) on [0, tau).
struct DDEParams {
  double rho = 1.0;     // > 0: free growth rate
  double kappa = -2.0;  // < -rho: feedback gain
  double tau = 0.0;     // >= 0: input delay
  double y0 = 1.0;
  double h = 1e-3;      // integration step; tau/h must be integral
};

/// Largest delay below which the loop stays asymptotically stable:
///   (kappa^2 - rho^2)^{-1/2} * arccos(-rho/kappa).
/// Throws std::invalid_argument unless kappa < -rho < 0.
double delay_threshold(double rho, double kappa);

struct Trajectory {
  VectorXd t;
  VectorXd y;
};

/// Method of steps: exact exponential on [0, tau), then RK4 with the delayed
/// value read from the stored grid (cubic Hermite for the half-step stage).
Trajectory solve_delayed_scalar(const DDEParams& p, double T);

enum class Stability { growing, decaying, marginal };

/// Compares max |y| on the trailing window of length fraction*T against the
/// preceding window of the same length: ratio > 1.05 -> growing,
/// ratio < 0.95 -> decaying, else marginal.
Stability classify(const Trajectory& traj, double window_fraction = 0.25);
Stability classify_series(const VectorXd& t, const VectorXd& values,
                          double window_fraction = 0.25);

const char* to_string(Stability s);

/// Diagonal delayed system in the eigenbasis of a self-adjoint operator with
/// eigenvalues alpha_1 <= alpha_2 <= ...:
///   coordinate i <= controlled:  y_i' = (-alpha_i + rho + alpha_1) y_i + kappa y_i(t-tau)
///   coordinate i >  controlled:  y_i' = (-alpha_i + rho + alpha_1) y_i.
struct SpectralParams {
  VectorXd alphas;      // increasing, alphas(0) > 0
  double rho = 1.0;     // > 0
  double kappa = -2.0;  // < -rho
  int controlled = 0;   // number of feedback-controlled coordinates
  double tau = 0.0;
  VectorXd y0;
  double h = 1e-3;
};

/// Eigenvalues nu*pi^2*(i^2+j^2) + 1 of the shifted Neumann diffusion
/// operator on the unit square, sorted ascending and truncated to `count`.
VectorXd spectral_eigenvalues(int count, double nu);

struct ModalTrajectories {
  VectorXd t;
  Eigen::MatrixXd coords;  // column i = trajectory of coordinate i
};

/// Simulates the diagonal delayed system coordinate by coordinate. Throws
/// std::invalid_argument if the parameter invariants fail (ordering,
/// controlled < count, alpha_{controlled+1} > rho + alpha_1, tau/h integral).
ModalTrajectories simulate_modal_delay(const SpectralParams& p, double T);

}  // namespace dde
}  // namespace parastab
