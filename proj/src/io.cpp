#include "parastab/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace parastab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_line(int line_no, const std::string& why) {
  throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + why);
}

double parse_real(const std::string& v, int line_no) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) bad_line(line_no, "trailing characters after number '" + v + "'");
    return x;
  } catch (const std::invalid_argument&) {
    bad_line(line_no, "expected a number, got '" + v + "'");
  } catch (const std::out_of_range&) {
    bad_line(line_no, "number out of range: '" + v + "'");
  }
}

long parse_int(const std::string& v, int line_no) {
  try {
    size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) bad_line(line_no, "trailing characters after integer '" + v + "'");
    return x;
  } catch (const std::exception&) {
    bad_line(line_no, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line_no) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  bad_line(line_no, "expected a boolean (0/1/true/false), got '" + v + "'");
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  ScenarioConfig sc;
  DdeRun dr;
  bool is_dde = false;
  bool kind_seen = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::vector<std::pair<std::string, std::pair<std::string, int>>> entries;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad_line(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) bad_line(line_no, "empty key");
    if (value.empty()) bad_line(line_no, "empty value for key '" + key + "'");
    if (key == "kind") {
      if (value == "dde")
        is_dde = true;
      else if (value == "scenario")
        is_dde = false;
      else
        bad_line(line_no, "kind must be 'scenario' or 'dde'");
      kind_seen = true;
      continue;
    }
    entries.emplace_back(key, std::make_pair(value, line_no));
  }
  (void)kind_seen;

  if (is_dde) {
    for (const auto& [key, vl] : entries) {
      const auto& [value, ln] = vl;
      if (key == "rho")
        dr.params.rho = parse_real(value, ln);
      else if (key == "kappa")
        dr.params.kappa = parse_real(value, ln);
      else if (key == "tau")
        dr.params.tau = parse_real(value, ln);
      else if (key == "y0")
        dr.params.y0 = parse_real(value, ln);
      else if (key == "h")
        dr.params.h = parse_real(value, ln);
      else if (key == "T")
        dr.T = parse_real(value, ln);
      else
        bad_line(ln, "unknown dde key '" + key + "'");
    }
    if (!(dr.params.rho > 0.0) || !(dr.params.kappa < -dr.params.rho))
      throw std::invalid_argument("dde config: need kappa < -rho < 0");
    if (dr.params.h <= 0.0 || dr.T <= 0.0)
      throw std::invalid_argument("dde config: need h > 0 and T > 0");
    return dr;
  }

  for (const auto& [key, vl] : entries) {
    const auto& [value, ln] = vl;
    if (key == "mode") {
      try {
        sc.mode = mode_from_string(value);
      } catch (const std::exception& e) {
        bad_line(ln, e.what());
      }
    } else if (key == "nu")
      sc.nu = parse_real(value, ln);
    else if (key == "M")
      sc.actuator_order = static_cast<int>(parse_int(value, ln));
    else if (key == "S")
      sc.sensor_order = static_cast<int>(parse_int(value, ln));
    else if (key == "lambda_K")
      sc.lambda_feedback = parse_real(value, ln);
    else if (key == "lambda_L")
      sc.lambda_injection = parse_real(value, ln);
    else if (key == "tau")
      sc.tau = parse_real(value, ln);
    else if (key == "t_s")
      sc.t_s = parse_real(value, ln);
    else if (key == "rf")
      sc.rf = static_cast<int>(parse_int(value, ln));
    else if (key == "T")
      sc.T_final = parse_real(value, ln);
    else if (key == "zeta_mag")
      sc.zeta_mag = parse_real(value, ln);
    else if (key == "seed")
      sc.seed = static_cast<std::uint64_t>(parse_int(value, ln));
    else if (key == "coarse_n")
      sc.coarse_n = static_cast<int>(parse_int(value, ln));
    else if (key == "y0")
      sc.y0 = value;
    else if (key == "yhat0")
      sc.yhat0 = value;
    else if (key == "tau_act")
      sc.tau_act = parse_real(value, ln);
    else if (key == "eps")
      sc.eps = parse_real(value, ln);
    else if (key == "full_state")
      sc.full_state = parse_bool(value, ln);
    else if (key == "matched")
      sc.matched = parse_bool(value, ln);
    else
      bad_line(ln, "unknown scenario key '" + key + "'");
  }
  return validated(sc);
}

ParsedConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string scenario_to_text(const ScenarioConfig& cfg) {
  std::ostringstream out;
  out << "kind = scenario\n";
  out << "mode = " << to_string(cfg.mode) << "\n";
  out << "nu = " << format_double(cfg.nu) << "\n";
  out << "M = " << cfg.actuator_order << "\n";
  out << "S = " << cfg.sensor_order << "\n";
  out << "lambda_K = " << format_double(cfg.lambda_feedback) << "\n";
  out << "lambda_L = " << format_double(cfg.lambda_injection) << "\n";
  out << "tau = " << format_double(cfg.tau) << "\n";
  out << "t_s = " << format_double(cfg.t_s) << "\n";
  out << "rf = " << cfg.rf << "\n";
  out << "T = " << format_double(cfg.T_final) << "\n";
  out << "zeta_mag = " << format_double(cfg.zeta_mag) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "coarse_n = " << cfg.coarse_n << "\n";
  out << "y0 = " << cfg.y0 << "\n";
  out << "yhat0 = " << cfg.yhat0 << "\n";
  out << "tau_act = " << format_double(cfg.tau_act) << "\n";
  out << "eps = " << format_double(cfg.eps) << "\n";
  out << "full_state = " << (cfg.full_state ? 1 : 0) << "\n";
  out << "matched = " << (cfg.matched ? 1 : 0) << "\n";
  return out.str();
}

std::string dde_run_to_text(const DdeRun& run) {
  std::ostringstream out;
  out << "kind = dde\n";
  out << "rho = " << format_double(run.params.rho) << "\n";
  out << "kappa = " << format_double(run.params.kappa) << "\n";
  out << "tau = " << format_double(run.params.tau) << "\n";
  out << "y0 = " << format_double(run.params.y0) << "\n";
  out << "h = " << format_double(run.params.h) << "\n";
  out << "T = " << format_double(run.T) << "\n";
  return out.str();
}

namespace {

void write_manifest(std::ostream& out, const std::string& config_text) {
  out << "# parastab trace v1\n";
  out << "# config-begin\n";
  std::istringstream lines(config_text);
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << "\n";
  out << "# config-end\n";
}

void write_rows(std::ostream& out, const Vector& t, const Vector& ny, const Vector& ne,
                const Vector& nu) {
  out << "t,norm_y,norm_err,norm_u\n";
  for (Eigen::Index i = 0; i < t.size(); ++i)
    out << format_double(t(i)) << ',' << format_double(ny(i)) << ',' << format_double(ne(i))
        << ',' << format_double(nu(i)) << "\n";
}

}  // namespace

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
  write_manifest(out, scenario_to_text(trace.config));
  write_rows(out, trace.t, trace.norm_y, trace.norm_err, trace.norm_u);
}

void write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_trace_csv(trace, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

SimulationTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trace file '" + path + "'");
  std::string line;
  std::string config_text;
  bool in_config = false;
  std::vector<std::array<double, 4>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      std::string body = trim(line.substr(1));
      if (body == "config-begin") {
        in_config = true;
      } else if (body == "config-end") {
        in_config = false;
      } else if (in_config) {
        config_text += body + "\n";
      }
      continue;
    }
    if (trim(line).empty()) continue;
    if (!header_seen) {
      if (trim(line) != "t,norm_y,norm_err,norm_u")
        throw std::invalid_argument("unexpected CSV header: '" + line + "'");
      header_seen = true;
      continue;
    }
    std::array<double, 4> row{};
    std::istringstream cells(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(cells, cell, ',')) throw std::invalid_argument("short CSV row: " + line);
      row[c] = std::stod(cell);
    }
    rows.push_back(row);
  }
  SimulationTrace trace;
  const auto parsed = parse_config_text(config_text);
  if (std::holds_alternative<ScenarioConfig>(parsed))
    trace.config = std::get<ScenarioConfig>(parsed);
  const auto n = static_cast<Eigen::Index>(rows.size());
  trace.t.resize(n);
  trace.norm_y.resize(n);
  trace.norm_err.resize(n);
  trace.norm_u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    trace.t(i) = rows[i][0];
    trace.norm_y(i) = rows[i][1];
    trace.norm_err(i) = rows[i][2];
    trace.norm_u(i) = rows[i][3];
  }
  return trace;
}

std::string csv_body(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line, body;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line + "\n";
  }
  return body;
}

void write_dde_csv(const dde::Trajectory& traj, const DdeRun& run, std::ostream& out) {
  write_manifest(out, dde_run_to_text(run));
  const auto n = traj.t.size();
  Vector ny(n), ne = Vector::Zero(n), nu(n);
  const double h = run.params.h;
  const long delay_steps = run.params.tau > 0.0 ? std::lround(run.params.tau / h) : 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ny(i) = std::abs(traj.y(i));
    nu(i) = (run.params.tau > 0.0 && i >= delay_steps)
                ? std::abs(run.params.kappa * traj.y(i - delay_steps))
                : (run.params.tau == 0.0 ? std::abs(run.params.kappa * traj.y(i)) : 0.0);
  }
  write_rows(out, traj.t, ny, ne, nu);
}

void write_dde_csv(const dde::Trajectory& traj, const DdeRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dde_csv(traj, run, out);
}

}  // namespace parastab
