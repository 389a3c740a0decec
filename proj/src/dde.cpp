#include "parastab/dde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace parastab {
namespace dde {

double delay_threshold(double rho, double kappa) {
  if (!(rho > 0.0) || !(kappa < -rho))
    throw std::invalid_argument("delay_threshold: need kappa < -rho < 0");
  return std::acos(-rho / kappa) / std::sqrt(kappa * kappa - rho * rho);
}

namespace {

long snapped_steps(double length, double h, const char* what) {
  const double ratio = length / h;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw std::invalid_argument(std::string(what) + " must be an integer multiple of h");
  return n;
}

// Scalar delayed linear equation y' = rho y + kappa y(t - tau) with free
// history y0 exp(rho t) on [0, tau]; rho of any sign, kappa arbitrary.
Trajectory integrate_scalar(double rho, double kappa, double tau, double y0, double h, double T) {
  if (h <= 0.0 || T <= 0.0) throw std::invalid_argument("dde: need h > 0 and T > 0");
  const long steps = std::max<long>(1, std::lround(T / h));
  Trajectory traj;
  traj.t.resize(steps + 1);
  traj.y.resize(steps + 1);
  for (long i = 0; i <= steps; ++i) traj.t(i) = static_cast<double>(i) * h;

  if (tau == 0.0) {
    // Degenerate case: plain linear ODE, classic RK4.
    const double lam = rho + kappa;
    double y = y0;
    traj.y(0) = y;
    for (long n = 0; n < steps; ++n) {
      const double k1 = lam * y;
      const double k2 = lam * (y + 0.5 * h * k1);
      const double k3 = lam * (y + 0.5 * h * k2);
      const double k4 = lam * (y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      traj.y(n + 1) = y;
    }
    return traj;
  }

  const long delay_steps = snapped_steps(tau, h, "tau");
  std::vector<double> y(steps + 1), dy(steps + 1);
  const long front = std::min(delay_steps, steps);
  for (long k = 0; k <= front; ++k) {
    y[k] = y0 * std::exp(rho * traj.t(k));
    dy[k] = rho * y[k];
  }

  // History lookup: exact on [0, tau], cubic Hermite between stored nodes
  // afterwards (only ever needed at half-steps).
  auto history = [&](double t) {
    if (t <= tau) return y0 * std::exp(rho * t);
    const long k = static_cast<long>(std::floor(t / h + 1e-9));
    const double theta = (t - static_cast<double>(k) * h) / h;
    if (theta < 1e-9) return y[k];
    const double t2 = theta * theta, t3 = t2 * theta;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y[k] + (t3 - 2.0 * t2 + theta) * h * dy[k] +
           (-2.0 * t3 + 3.0 * t2) * y[k + 1] + (t3 - t2) * h * dy[k + 1];
  };

  if (front == delay_steps && delay_steps <= steps)
    dy[delay_steps] = rho * y[delay_steps] + kappa * y[0];  // right derivative at t = tau

  for (long n = delay_steps; n < steps; ++n) {
    const double t = traj.t(n);
    const double yn = y[n];
    const double k1 = rho * yn + kappa * history(t - tau);
    const double hmid = history(t + 0.5 * h - tau);
    const double k2 = rho * (yn + 0.5 * h * k1) + kappa * hmid;
    const double k3 = rho * (yn + 0.5 * h * k2) + kappa * hmid;
    const double k4 = rho * (yn + h * k3) + kappa * history(t + h - tau);
    y[n + 1] = yn + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    dy[n + 1] = rho * y[n + 1] + kappa * history(t + h - tau);
  }
  for (long i = 0; i <= steps; ++i) traj.y(i) = y[i];
  return traj;
}

}  // namespace

Trajectory solve_delayed_scalar(const DDEParams& p, double T) {
  if (!(p.rho > 0.0) || !(p.kappa < -p.rho))
    throw std::invalid_argument("solve_delayed_scalar: need kappa < -rho < 0");
  if (p.tau < 0.0) throw std::invalid_argument("solve_delayed_scalar: tau must be >= 0");
  if (p.tau > 0.0) snapped_steps(p.tau, p.h, "tau");
  return integrate_scalar(p.rho, p.kappa, p.tau, p.y0, p.h, T);
}

Stability classify_series(const VectorXd& t, const VectorXd& values, double window_fraction) {
  if (t.size() != values.size() || t.size() < 4)
    throw std::invalid_argument("classify: series too short");
  if (window_fraction <= 0.0 || window_fraction > 0.5)
    throw std::invalid_argument("classify: window_fraction must lie in (0, 1/2]");
  const double span = t(t.size() - 1) - t(0);
  const double t_hi = t(t.size() - 1);
  const double t_mid = t_hi - window_fraction * span;
  const double t_lo = t_hi - 2.0 * window_fraction * span;
  double last = 0.0, prev = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double a = std::abs(values(i));
    if (t(i) >= t_mid)
      last = std::max(last, a);
    else if (t(i) >= t_lo)
      prev = std::max(prev, a);
  }
  if (prev == 0.0) return last == 0.0 ? Stability::marginal : Stability::growing;
  const double ratio = last / prev;
  if (ratio > 1.05) return Stability::growing;
  if (ratio < 0.95) return Stability::decaying;
  return Stability::marginal;
}

Stability classify(const Trajectory& traj, double window_fraction) {
  return classify_series(traj.t, traj.y, window_fraction);
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::growing: return "growing";
    case Stability::decaying: return "decaying";
    default: return "marginal";
  }
}

VectorXd spectral_eigenvalues(int count, double nu) {
  if (count < 1) throw std::invalid_argument("spectral_eigenvalues: count must be >= 1");
  std::vector<double> vals;
  const int range = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count)))) + 2;
  const double pi2 = M_PI * M_PI;
  for (int i = 0; i <= range; ++i)
    for (int j = 0; j <= range; ++j) vals.push_back(nu * pi2 * (i * i + j * j) + 1.0);
  std::sort(vals.begin(), vals.end());
  VectorXd out(count);
  for (int i = 0; i < count; ++i) out(i) = vals[i];
  return out;
}

ModalTrajectories simulate_modal_delay(const SpectralParams& p, double T) {
  const int n = static_cast<int>(p.alphas.size());
  if (n < 2) throw std::invalid_argument("modal delay: need at least two coordinates");
  if (!(p.alphas(0) > 0.0)) throw std::invalid_argument("modal delay: alpha_1 must be > 0");
  for (int i = 1; i < n; ++i)
    if (p.alphas(i) < p.alphas(i - 1))
      throw std::invalid_argument("modal delay: eigenvalues must be nondecreasing");
  if (!(p.rho > 0.0) || !(p.kappa < -p.rho || p.kappa == 0.0))
    throw std::invalid_argument("modal delay: need kappa < -rho < 0 (or kappa = 0, free)");
  if (p.controlled < 1 || p.controlled >= n)
    throw std::invalid_argument("modal delay: controlled must lie in [1, count)");
  if (!(p.alphas(p.controlled) > p.rho + p.alphas(0)))
    throw std::invalid_argument("modal delay: alpha_{m+1} must exceed rho + alpha_1");
  if (p.y0.size() != n) throw std::invalid_argument("modal delay: y0 dimension mismatch");
  if (p.tau > 0.0) snapped_steps(p.tau, p.h, "tau");

  ModalTrajectories out;
  for (int i = 0; i < n; ++i) {
    const double rho_i = -p.alphas(i) + p.rho + p.alphas(0);
    const double kappa_i = i < p.controlled ? p.kappa : 0.0;
    const auto traj = integrate_scalar(rho_i, kappa_i, i < p.controlled ? p.tau : 0.0, p.y0(i),
                                       p.h, T);
    if (i == 0) {
      out.t = traj.t;
      out.coords.resize(traj.t.size(), n);
    }
    out.coords.col(i) = traj.y;
  }
  return out;
}

}  // namespace dde
}  // namespace parastab
