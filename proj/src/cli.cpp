#include "parastab/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "parastab/dde.hpp"
#include "parastab/engine.hpp"
#include "parastab/io.hpp"
#include "parastab/patches.hpp"

namespace parastab {

namespace {

void print_usage() {
  std::cout << "usage: parastab <command> [options]\n"
            << "commands:\n"
            << "  simulate     run one closed-loop scenario and write a trace CSV\n"
            << "  dde          scalar delayed feedback loop (threshold + trajectory)\n"
            << "  spectral     modal delayed system in the diffusion eigenbasis\n"
            << "  check-ops    verify the actuator/sensor operator identities\n"
            << "  sweep-tau    delayed_plain runs over a grid of delays\n"
            << "  sweep-noise  delayed_predictor runs over noise magnitudes\n"
            << "options: see 'parastab <command> --help'\n"
            << "environment: PARASTAB_THREADS caps sweep parallelism\n";
}

ScenarioConfig load_scenario(const std::string& config_path) {
  if (config_path.empty()) return validated(ScenarioConfig{});
  auto parsed = parse_config_file(config_path);
  if (!std::holds_alternative<ScenarioConfig>(parsed))
    throw std::invalid_argument("config file '" + config_path + "' is not a scenario config");
  return std::get<ScenarioConfig>(parsed);
}

int cmd_simulate(CLI::App& app, int argc, const char* const* argv) {
  std::string config_path, out_path = "trace.csv", mode;
  std::optional<double> tau, zeta, T;
  std::optional<int> rf;
  std::optional<long> seed;
  app.add_option("--config", config_path, "scenario config file (key = value lines)");
  app.add_option("--out", out_path, "output CSV path");
  app.add_option("--mode", mode, "free|nominal|delayed_plain|delayed_predictor|open_loop");
  app.add_option("--tau", tau, "input delay");
  app.add_option("--rf", rf, "plant refinement index 0..4");
  app.add_option("--seed", seed, "noise seed");
  app.add_option("--zeta-mag", zeta, "sensor noise magnitude");
  app.add_option("--T", T, "final time");
  app.parse(argc, argv);

  ScenarioConfig cfg = load_scenario(config_path);
  if (!mode.empty()) cfg.mode = mode_from_string(mode);
  if (tau) cfg.tau = *tau;
  if (rf) cfg.rf = *rf;
  if (seed) cfg.seed = static_cast<std::uint64_t>(*seed);
  if (zeta) cfg.zeta_mag = *zeta;
  if (T) cfg.T_final = *T;
  cfg = validated(cfg);

  const SimulationTrace trace = run_scenario(cfg);
  write_trace_csv(trace, out_path);
  const auto n = trace.rows();
  std::cout << "mode=" << to_string(cfg.mode) << " rows=" << n
            << " |y(0)|=" << format_double(trace.norm_y(0))
            << " |y(T)|=" << format_double(trace.norm_y(n - 1)) << " -> " << out_path << "\n";
  return 0;
}

int cmd_dde(CLI::App& app, int argc, const char* const* argv) {
  std::string config_path, out_path;
  DdeRun run;
  run.params.tau = 1.0;
  app.add_option("--config", config_path, "dde config file (kind = dde)");
  app.add_option("--rho", run.params.rho, "free growth rate (> 0)");
  app.add_option("--kappa", run.params.kappa, "feedback gain (< -rho)");
  app.add_option("--tau", run.params.tau, "input delay");
  app.add_option("--y0", run.params.y0, "initial value");
  app.add_option("--step", run.params.h, "integration step");
  app.add_option("--T", run.T, "final time");
  app.add_option("--out", out_path, "trajectory CSV path");
  app.parse(argc, argv);

  if (!config_path.empty()) {
    auto parsed = parse_config_file(config_path);
    if (!std::holds_alternative<DdeRun>(parsed))
      throw std::invalid_argument("config file is not a dde config (missing kind = dde?)");
    run = std::get<DdeRun>(parsed);
  }

  const double threshold = dde::delay_threshold(run.params.rho, run.params.kappa);
  const auto traj = dde::solve_delayed_scalar(run.params, run.T);
  const auto verdict = dde::classify(traj);
  std::cout << "threshold=" << format_double(threshold) << " tau=" << format_double(run.params.tau)
            << " classification=" << dde::to_string(verdict) << "\n";
  if (!out_path.empty()) write_dde_csv(traj, run, out_path);
  return 0;
}

int cmd_spectral(CLI::App& app, int argc, const char* const* argv) {
  dde::SpectralParams p;
  double T = 30.0, nu = 0.1;
  int count = 20;
  p.tau = 1.1;
  std::string out_path;
  app.add_option("--rho", p.rho, "free growth rate of the first coordinate");
  app.add_option("--kappa", p.kappa, "feedback gain (< -rho)");
  app.add_option("--tau", p.tau, "input delay");
  app.add_option("--count", count, "number of eigenvalues");
  app.add_option("--controlled", p.controlled, "controlled coordinates (0 = auto)");
  app.add_option("--nu", nu, "diffusion constant behind the eigenvalues");
  app.add_option("--step", p.h, "integration step");
  app.add_option("--T", T, "final time");
  app.add_option("--out", out_path, "per-coordinate norm CSV path");
  app.parse(argc, argv);

  p.alphas = dde::spectral_eigenvalues(count, nu);
  if (p.controlled <= 0) {
    p.controlled = 1;
    while (p.controlled < count - 1 && !(p.alphas(p.controlled) > p.rho + p.alphas(0)))
      ++p.controlled;
  }
  p.y0 = dde::VectorXd::Ones(count);
  const auto modal = dde::simulate_modal_delay(p, T);
  const auto verdict = dde::classify_series(modal.t, modal.coords.col(0));
  std::cout << "coordinates=" << count << " controlled=" << p.controlled
            << " coord1=" << dde::to_string(verdict) << "\n";

  if (!out_path.empty()) {
    // Same trace format: norm_y over all coordinates, input norm over the
    // controlled ones (delayed feedback), estimate-error column zeroed.
    SimulationTrace t;
    const auto n = modal.t.size();
    t.t = modal.t;
    t.norm_y.resize(n);
    t.norm_err = Vector::Zero(n);
    t.norm_u.resize(n);
    const long ds = p.tau > 0.0 ? std::lround(p.tau / p.h) : 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      t.norm_y(i) = modal.coords.row(i).norm();
      t.norm_u(i) = (i >= ds)
                        ? std::abs(p.kappa) *
                              modal.coords.row(i - ds).head(p.controlled).norm()
                        : 0.0;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "'");
    out << "# parastab trace v1\n# kind = spectral\n";
    out << "# rho = " << format_double(p.rho) << "\n# kappa = " << format_double(p.kappa)
        << "\n# tau = " << format_double(p.tau) << "\n";
    out << "t,norm_y,norm_err,norm_u\n";
    for (Eigen::Index i = 0; i < n; ++i)
      out << format_double(t.t(i)) << ',' << format_double(t.norm_y(i)) << ','
          << format_double(t.norm_err(i)) << ',' << format_double(t.norm_u(i)) << "\n";
  }
  return 0;
}

int cmd_check_ops(CLI::App& app, int argc, const char* const* argv) {
  int n = 16, order_m = 2, order_s = 2;
  double lambda_k = 100.0, lambda_l = 200.0, tol = 1e-10;
  app.add_option("--n", n, "cells per side");
  app.add_option("--M", order_m, "actuator order");
  app.add_option("--S", order_s, "sensor order");
  app.add_option("--lambda-K", lambda_k, "feedback gain");
  app.add_option("--lambda-L", lambda_l, "injection gain");
  app.add_option("--tol", tol, "pass tolerance");
  app.parse(argc, argv);

  const auto mesh = build_structured_mesh(n);
  const auto [act_regions, sens_regions] = build_regions(order_m, order_s);
  const auto actuators = make_patch_array(mesh, act_regions, lambda_k);
  const auto sensors = make_patch_array(mesh, sens_regions, lambda_l);
  const auto rep = operator_identity_report(mesh, actuators, sensors);

  auto line = [&](const char* name, double v) {
    std::cout << (v <= tol ? "[pass] " : "[FAIL] ") << name << "  max deviation "
              << format_double(v) << "\n";
  };
  line("projection idempotence     ", rep.projection_idempotence);
  line("projection self-adjointness", rep.projection_self_adjoint);
  line("projection contraction     ", rep.projection_contraction);
  line("feedback factorization B K ", rep.feedback_factorization);
  line("injection factorization L W", rep.injection_factorization);
  line("gram off-diagonal          ", rep.gram_off_diagonal);
  line("gram diagonal vs patch area", rep.gram_area_mismatch);
  const bool ok = rep.pass(tol);
  std::cout << (ok ? "all operator identities hold" : "operator identity violation") << " (tol "
            << format_double(tol) << ")\n";
  return ok ? 0 : 1;
}

int cmd_sweep_tau(CLI::App& app, int argc, const char* const* argv) {
  std::string config_path, out_path, taus = "0.2,0.4,0.6,0.8,1.0,1.2";
  std::optional<double> T;
  app.add_option("--config", config_path, "base scenario config");
  app.add_option("--taus", taus, "comma-separated delay grid");
  app.add_option("--T", T, "final time");
  app.add_option("--out", out_path, "summary CSV path");
  app.parse(argc, argv);

  ScenarioConfig base = load_scenario(config_path);
  base.mode = Mode::delayed_plain;
  if (T) base.T_final = *T;

  std::vector<double> grid;
  std::stringstream ss(taus);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));

  std::vector<ScenarioConfig> configs;
  for (double tau : grid) {
    ScenarioConfig c = base;
    c.tau = tau;
    configs.push_back(validated(c));
  }
  const auto traces = run_scenarios(configs, worker_thread_cap());

  std::optional<double> onset;
  std::ostringstream summary;
  summary << "tau,growth_ratio,classification\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    const auto& tr = traces[i];
    const auto verdict = dde::classify_series(tr.t, tr.norm_y);
    // trailing-window amplitude ratio, as in the classification
    const double span = tr.t(tr.rows() - 1) - tr.t(0);
    double last = 0, prev = 0;
    for (Eigen::Index k = 0; k < tr.rows(); ++k) {
      if (tr.t(k) >= tr.t(tr.rows() - 1) - 0.25 * span)
        last = std::max(last, tr.norm_y(k));
      else if (tr.t(k) >= tr.t(tr.rows() - 1) - 0.5 * span)
        prev = std::max(prev, tr.norm_y(k));
    }
    const double ratio = prev > 0 ? last / prev : 0.0;
    std::cout << "tau=" << format_double(grid[i]) << " ratio=" << format_double(ratio) << " "
              << dde::to_string(verdict) << "\n";
    summary << format_double(grid[i]) << ',' << format_double(ratio) << ','
            << dde::to_string(verdict) << "\n";
    if (!onset && verdict == dde::Stability::growing) onset = grid[i];
  }
  if (onset)
    std::cout << "instability onset at tau=" << format_double(*onset) << "\n";
  else
    std::cout << "no instability on the grid\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "'");
    out << summary.str();
  }
  return 0;
}

int cmd_sweep_noise(CLI::App& app, int argc, const char* const* argv) {
  std::string config_path, out_path, mags = "0,1e-7,1e-5,1e-3";
  std::optional<double> T;
  app.add_option("--config", config_path, "base scenario config");
  app.add_option("--mags", mags, "comma-separated noise magnitudes");
  app.add_option("--T", T, "final time");
  app.add_option("--out", out_path, "summary CSV path");
  app.parse(argc, argv);

  ScenarioConfig base = load_scenario(config_path);
  base.mode = Mode::delayed_predictor;
  if (T) base.T_final = *T;

  std::vector<double> grid;
  std::stringstream ss(mags);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));

  std::vector<ScenarioConfig> configs;
  for (double mag : grid) {
    ScenarioConfig c = base;
    c.zeta_mag = mag;
    configs.push_back(validated(c));
  }
  const auto traces = run_scenarios(configs, worker_thread_cap());

  std::ostringstream summary;
  summary << "zeta_mag,plateau\n";
  for (size_t i = 0; i < grid.size(); ++i) {
    const double level = plateau_level(traces[i], 0.8 * traces[i].config.T_final);
    std::cout << "zeta_mag=" << format_double(grid[i]) << " plateau=" << format_double(level)
              << "\n";
    summary << format_double(grid[i]) << ',' << format_double(level) << "\n";
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open '" + out_path + "'");
    out << summary.str();
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  if (argc < 2) {
    print_usage();
    return 2;
  }
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    print_usage();
    return 0;
  }

  using Handler = int (*)(CLI::App&, int, const char* const*);
  Handler handler = nullptr;
  if (cmd == "simulate")
    handler = cmd_simulate;
  else if (cmd == "dde")
    handler = cmd_dde;
  else if (cmd == "spectral")
    handler = cmd_spectral;
  else if (cmd == "check-ops")
    handler = cmd_check_ops;
  else if (cmd == "sweep-tau")
    handler = cmd_sweep_tau;
  else if (cmd == "sweep-noise")
    handler = cmd_sweep_noise;
  if (!handler) {
    std::cerr << "parastab: unknown command '" << cmd << "'\n";
    print_usage();
    return 2;
  }

  CLI::App app{"parastab " + cmd};
  try {
    return handler(app, argc - 1, argv + 1);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "parastab " << cmd << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "parastab " << cmd << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace parastab
