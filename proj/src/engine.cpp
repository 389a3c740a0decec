#include "parastab/engine.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>

#include "parastab/observer.hpp"
#include "parastab/patches.hpp"
#include "parastab/predictor.hpp"

namespace parastab {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::free: return "free";
    case Mode::nominal: return "nominal";
    case Mode::delayed_plain: return "delayed_plain";
    case Mode::delayed_predictor: return "delayed_predictor";
    case Mode::open_loop: return "open_loop";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  for (Mode m : {Mode::free, Mode::nominal, Mode::delayed_plain, Mode::delayed_predictor,
                 Mode::open_loop})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown mode '" + name + "'");
}

namespace {

long integral_ratio(double value, double unit, const char* what) {
  const double ratio = value / unit;
  const long n = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw std::invalid_argument(std::string(what) + " must be an integer multiple of t_s");
  return n;
}

}  // namespace

ScenarioConfig validated(const ScenarioConfig& cfg) {
  ScenarioConfig c = cfg;
  if (!(c.nu > 0.0)) throw std::invalid_argument("nu must be > 0");
  if (c.actuator_order < 1 || c.sensor_order < 1)
    throw std::invalid_argument("actuator/sensor orders must be >= 1");
  if (c.lambda_feedback < 0.0 || c.lambda_injection < 0.0)
    throw std::invalid_argument("gains must be >= 0");
  if (!(c.t_s > 0.0)) throw std::invalid_argument("t_s must be > 0");
  if (c.tau < 0.0) throw std::invalid_argument("tau must be >= 0");
  integral_ratio(c.tau, c.t_s, "tau");
  if (c.rf < 0 || c.rf > 4) throw std::invalid_argument("rf must lie in {0,...,4}");
  if (!(c.T_final > 0.0)) throw std::invalid_argument("T must be > 0");
  integral_ratio(c.T_final, c.t_s, "T");
  if (c.zeta_mag < 0.0) throw std::invalid_argument("zeta_mag must be >= 0");
  const int align = 4 * std::max(c.actuator_order, c.sensor_order);
  if (c.coarse_n < 1 || c.coarse_n % align != 0)
    throw std::invalid_argument("coarse_n must be a positive multiple of 4*max(M,S)");
  if (c.tau_act < 0.0) throw std::invalid_argument("tau_act must be >= 0");
  if (c.mode == Mode::nominal) integral_ratio(c.tau_act, c.t_s, "tau_act");
  if (c.full_state && c.mode != Mode::delayed_predictor)
    throw std::invalid_argument("full_state applies to delayed_predictor only");
  if (c.full_state && !c.matched)
    throw std::invalid_argument("full_state requires matched discretization");
  if (c.matched && c.rf != 0)
    throw std::invalid_argument("matched discretization requires rf = 0");
  if (c.mode == Mode::free) {
    c.lambda_feedback = 0.0;
    c.lambda_injection = 0.0;
  }
  nodal_field(build_structured_mesh(1), c.y0);     // name check
  nodal_field(build_structured_mesh(1), c.yhat0);  // name check
  return c;
}

Vector nodal_field(const TriMesh& mesh, const std::string& name) {
  Vector v(mesh.vertex_count());
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const double x1 = mesh.vertices(i, 0), x2 = mesh.vertices(i, 1);
    if (name == "paper_y0")
      v(i) = 1.0 - 2.0 * x1 * x2;
    else if (name == "paper_yhat0")
      v(i) = -1.0 - 3.0 * x2 * x2;
    else if (name == "zero")
      v(i) = 0.0;
    else if (name == "one")
      v(i) = 1.0;
    else
      throw std::invalid_argument("unknown initial field '" + name + "'");
  }
  return v;
}

namespace {

struct Setup {
  TriMesh coarse;
  std::vector<TriMesh> refinements;  // successive refinements of the coarse mesh
  CoefficientField coeff;
  SemidiscreteOperators coarse_ops;
  std::optional<SemidiscreteOperators> refined_ops;
  PatchArray coarse_actuators, coarse_sensors;
  std::optional<PatchArray> refined_actuators, refined_sensors;
  SpMat prolongation;  // coarse -> fine (identity when the meshes coincide)
  int substeps = 1;
  double ts_r = 0.0;

  bool same_triangulation() const { return refinements.empty(); }
  const TriMesh& fine() const { return refinements.empty() ? coarse : refinements.back(); }
  const SemidiscreteOperators& fine_ops() const {
    return refined_ops ? *refined_ops : coarse_ops;
  }
  const PatchArray& fine_actuators() const {
    return refined_actuators ? *refined_actuators : coarse_actuators;
  }
  const PatchArray& fine_sensors() const {
    return refined_sensors ? *refined_sensors : coarse_sensors;
  }
};

Setup build_setup(const ScenarioConfig& cfg) {
  Setup s;
  s.coarse = build_structured_mesh(cfg.coarse_n);
  s.coeff = default_coefficients();
  s.coeff.nu = cfg.nu;

  const auto [act_regions, sens_regions] = build_regions(cfg.actuator_order, cfg.sensor_order);
  if (!check_alignment(s.coarse, act_regions) || !check_alignment(s.coarse, sens_regions))
    throw std::invalid_argument(
        "patches do not align with the coarse mesh; pick coarse_n a multiple of 8*max(M,S)");

  const int depth = cfg.matched ? 0 : cfg.rf;
  for (int i = 0; i < depth; ++i)
    s.refinements.push_back(refine(i == 0 ? s.coarse : s.refinements.back()));

  s.coarse_ops = make_operators(s.coarse, cfg.nu);
  s.coarse_actuators = make_patch_array(s.coarse, act_regions, cfg.lambda_feedback);
  s.coarse_sensors = make_patch_array(s.coarse, sens_regions, cfg.lambda_injection);
  if (depth > 0) {
    s.refined_ops = make_operators(s.fine(), cfg.nu);
    s.refined_actuators = make_patch_array(s.fine(), act_regions, cfg.lambda_feedback);
    s.refined_sensors = make_patch_array(s.fine(), sens_regions, cfg.lambda_injection);
  }

  if (depth == 0) {
    SpMat id(s.coarse.vertex_count(), s.coarse.vertex_count());
    id.setIdentity();
    s.prolongation = id;
  } else {
    SpMat p = prolongation_matrix(s.refinements[0]);
    for (int i = 1; i < depth; ++i) p = prolongation_matrix(s.refinements[i]) * p;
    s.prolongation = p;
  }

  s.substeps = cfg.matched ? 1 : (1 << (2 + cfg.rf));
  s.ts_r = cfg.t_s / s.substeps;
  return s;
}

}  // namespace

SimulationTrace run_scenario(const ScenarioConfig& raw) {
  const ScenarioConfig cfg = validated(raw);
  Setup s = build_setup(cfg);

  const long n_steps = integral_ratio(cfg.T_final, cfg.t_s, "T");
  const long n_tau = integral_ratio(cfg.tau, cfg.t_s, "tau");
  const int m = s.coarse_actuators.count();
  const int n_sens = s.coarse_sensors.count();

  ImplicitStepper coarse_stepper(s.coarse, s.coarse_ops, s.coeff, cfg.t_s);
  std::optional<ImplicitStepper> plant_storage;
  ImplicitStepper* plant_stepper = &coarse_stepper;
  if (!cfg.matched) {
    plant_storage.emplace(s.fine(), s.fine_ops(), s.coeff, s.ts_r);
    plant_stepper = &*plant_storage;
  }

  const bool has_observer = cfg.mode == Mode::free || cfg.mode == Mode::delayed_plain ||
                            (cfg.mode == Mode::delayed_predictor && !cfg.full_state);
  const bool uses_history =
      cfg.mode == Mode::delayed_plain || cfg.mode == Mode::delayed_predictor;

  Vector y = nodal_field(s.fine(), cfg.y0);
  Vector yhat = has_observer ? nodal_field(s.coarse, cfg.yhat0) : Vector();
  InputHistory hist(static_cast<int>(n_tau), m);
  NoiseGenerator noise(cfg.seed, cfg.zeta_mag);
  PredictorConfig pred;
  if (cfg.mode == Mode::delayed_predictor)
    pred = make_predictor_config(cfg.tau, cfg.t_s, coarse_stepper, s.coarse_actuators);

  // Open-loop input: feedback along an offline closed-loop solve started from
  // a perturbed copy of the initial state (free flow up to tau first).
  std::vector<Vector> open_loop_input;
  if (cfg.mode == Mode::open_loop) {
    Vector z = nodal_field(s.fine(), cfg.y0);
    z.array() += cfg.eps;  // perturbation field: eps * 1 (unit L2 norm)
    open_loop_input.reserve(n_steps + 1);
    for (long n = 0; n <= n_steps + n_tau; ++n) {
      Vector u = Vector::Zero(m);
      if (n >= n_tau) {
        u = feedback(s.fine_actuators(), z);
        open_loop_input.push_back(u);
        if (static_cast<long>(open_loop_input.size()) > n_steps) break;
      }
      const Vector load = s.fine_actuators().load * u;
      for (int r = 1; r <= s.substeps; ++r)
        z = plant_stepper->advance(n * s.substeps + r, z, load);
      plant_stepper->retire_below((n + 1) * s.substeps + 1);
    }
    plant_stepper->retire_below(std::numeric_limits<long>::max());
  }

  SimulationTrace trace;
  trace.config = cfg;
  trace.t.resize(n_steps + 1);
  trace.norm_y.resize(n_steps + 1);
  trace.norm_err.resize(n_steps + 1);
  trace.norm_u.resize(n_steps + 1);

  const long n_act = cfg.mode == Mode::nominal ? integral_ratio(cfg.tau_act, cfg.t_s, "tau_act") : 0;

  for (long n = 0; n <= n_steps; ++n) {
    //  input computed at t = n t_s
    Vector u_now = Vector::Zero(m);
    switch (cfg.mode) {
      case Mode::free: break;
      case Mode::nominal:
        if (n >= n_act) u_now = feedback(s.fine_actuators(), y);
        break;
      case Mode::delayed_plain: u_now = feedback(s.coarse_actuators, yhat); break;
      case Mode::delayed_predictor:
        u_now = compute_input(pred, n, cfg.full_state ? y : yhat, hist);
        break;
      case Mode::open_loop:
        if (n < static_cast<long>(open_loop_input.size())) u_now = open_loop_input[n];
        break;
    }

    trace.t(n) = static_cast<double>(n) * cfg.t_s;
    trace.norm_y(n) = l2_norm(y, s.fine_ops().mass);
    trace.norm_err(n) =
        has_observer ? l2_norm(Vector(s.prolongation * yhat - y), s.fine_ops().mass) : 0.0;
    trace.norm_u(n) = u_now.norm();
    if (n == n_steps) break;

    //  input acting on [n t_s, (n+1) t_s)
    Vector u_act = Vector::Zero(m);
    if (uses_history) {
      // Read the delayed entry before pushing: the push evicts exactly the
      // input from n_tau steps ago. tau = 0 degenerates to the fresh input.
      if (n_tau > 0) u_act = hist.delayed(n);
      hist.push(u_now);
      if (n_tau == 0) u_act = u_now;
    } else if (cfg.mode == Mode::nominal) {
      u_act = u_now;
    } else if (cfg.mode == Mode::open_loop && n >= n_tau) {
      u_act = open_loop_input[n - n_tau];
    }

    const Vector load = s.fine_actuators().load * u_act;
    for (int r = 1; r <= s.substeps; ++r)
      y = plant_stepper->advance(n * s.substeps + r, y, load);

    // Measure the end-of-step plant state: the injection is implicit at
    // t_{n+1}, so the discrete estimate-error dynamics contract exactly
    // when plant and observer share mesh and step.
    if (has_observer) {
      Vector w = measure(s.fine_sensors(), y);
      if (cfg.mode != Mode::free) w += noise.sample(n_sens);
      yhat = observer_step(coarse_stepper, s.coarse_sensors, s.coarse_actuators, yhat, w, u_act,
                           n + 1);
    }

    coarse_stepper.retire_below(n + 2);
    if (!cfg.matched) plant_stepper->retire_below((n + 1) * s.substeps + 1);
  }
  return trace;
}

double fit_log_slope(const Vector& t, const Vector& values, double t_lo, double t_hi) {
  if (!(t_lo < t_hi)) throw std::invalid_argument("fit window: need t_lo < t_hi");
  double st = 0, sv = 0, stt = 0, stv = 0;
  long n = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (t(i) < t_lo || t(i) > t_hi) continue;
    if (!(values(i) > 0.0))
      throw std::invalid_argument("fit window contains nonpositive values");
    const double lv = std::log(values(i));
    st += t(i);
    sv += lv;
    stt += t(i) * t(i);
    stv += t(i) * lv;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit window contains fewer than two samples");
  const double denom = n * stt - st * st;
  if (denom == 0.0) throw std::invalid_argument("fit window is degenerate");
  return (n * stv - st * sv) / denom;
}

double fit_decay_rate(const SimulationTrace& trace, double t_lo, double t_hi) {
  return fit_log_slope(trace.t, trace.norm_y, t_lo, t_hi);
}

double plateau_level(const SimulationTrace& trace, double t_lo) {
  if (trace.rows() == 0) throw std::invalid_argument("plateau_level: empty trace");
  if (t_lo > trace.t(trace.rows() - 1))
    throw std::invalid_argument("plateau_level: window beyond the trace span");
  double level = 0.0;
  for (Eigen::Index i = 0; i < trace.rows(); ++i)
    if (trace.t(i) >= t_lo) level = std::max(level, trace.norm_y(i));
  return level;
}

int worker_thread_cap() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PARASTAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(std::min<long>(v, 256));
  }
  return static_cast<int>(hw);
}

std::vector<SimulationTrace> run_scenarios(const std::vector<ScenarioConfig>& configs,
                                           int max_threads) {
  std::vector<SimulationTrace> results(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<size_t> next{0};
  const int workers =
      std::max(1, std::min<int>(max_threads, static_cast<int>(configs.size())));
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        results[i] = run_scenario(configs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < workers - 1; ++i) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw std::runtime_error("scenario " + std::to_string(i) + " failed: " + errors[i]);
  return results;
}

}  // namespace parastab
