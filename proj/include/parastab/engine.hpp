#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parastab/fem.hpp"
#include "parastab/mesh.hpp"

namespace parastab {

enum class Mode { free, nominal, delayed_plain, delayed_predictor, open_loop };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& name);  // throws on unknown name

/// Complete description of one closed-loop run. The plant integrates on the
/// rf-times refined mesh with step 2^{-(2+rf)} * t_s; predictor and observer
/// stay on the coarse mesh with step t_s.
struct ScenarioConfig {
  Mode mode = Mode::delayed_predictor;
  double nu = 0.1;
  int actuator_order = 2;  // 2*order^2 actuators
  int sensor_order = 2;    // 2*order^2 sensors
  double lambda_feedback = 100.0;   // actuator gain
  double lambda_injection = 200.0;  // sensor gain
  double tau = 0.1;    // input delay; integer multiple of t_s
  double t_s = 1e-3;   // coarse step
  int rf = 0;          // plant refinement index, 0..4
  double T_final = 10.0;
  double zeta_mag = 1e-7;  // sensor noise magnitude
  std::uint64_t seed = 1;
  int coarse_n = 16;  // cells per side; multiple of 4*max(orders)
  std::string y0 = "paper_y0";
  std::string yhat0 = "paper_yhat0";
  double tau_act = 0.0;  // nominal mode: input activation time
  double eps = 0.0;      // open_loop mode: offline-state perturbation size
  bool full_state = false;  // delayed_predictor: bypass the observer (needs matched)
  bool matched = false;     // plant uses the coarse mesh and step (rf must be 0)
};

/// Checks all invariants, canonicalizes (free mode zeroes both gains) and
/// returns the validated copy. Throws std::invalid_argument with a precise
/// message on violations.
ScenarioConfig validated(const ScenarioConfig& cfg);

/// Names: paper_y0 = 1 - 2 x1 x2, paper_yhat0 = -1 - 3 x2^2, zero, one.
Vector nodal_field(const TriMesh& mesh, const std::string& name);

struct SimulationTrace {
  Vector t;
  Vector norm_y;    // L2 norm of the plant state
  Vector norm_err;  // L2 norm of the prolonged estimate error
  Vector norm_u;    // Euclidean norm of the input computed at t
  ScenarioConfig config;

  Eigen::Index rows() const { return t.size(); }
};

SimulationTrace run_scenario(const ScenarioConfig& cfg);

/// Least-squares slope of log(norm_y) over t in [t_lo, t_hi]. Throws if the
/// window is empty or contains nonpositive norms.
double fit_decay_rate(const SimulationTrace& trace, double t_lo, double t_hi);
double fit_log_slope(const Vector& t, const Vector& values, double t_lo, double t_hi);

/// Max of norm_y over [t_lo, T_final].
double plateau_level(const SimulationTrace& trace, double t_lo);

/// Runs scenarios concurrently (at most max_threads at a time; each run is
/// fully isolated). Results are ordered like the input.
std::vector<SimulationTrace> run_scenarios(const std::vector<ScenarioConfig>& configs,
                                           int max_threads);

/// Worker cap from the PARASTAB_THREADS environment variable (falls back to
/// the hardware concurrency).
int worker_thread_cap();

}  // namespace parastab
