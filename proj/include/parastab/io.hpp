#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "parastab/dde.hpp"
#include "parastab/engine.hpp"

namespace parastab {

/// Scalar-delay run description, the second kind of parsable config.
struct DdeRun {
  dde::DDEParams params;
  double T = 40.0;
};

using ParsedConfig = std::variant<ScenarioConfig, DdeRun>;

/// Flat `key = value` text with `#` comments. An empty document yields the
/// default scenario. A `kind = dde` line switches to DdeRun keys. Unknown
/// keys, malformed lines and invariant violations throw std::invalid_argument
/// with the offending line number.
ParsedConfig parse_config_text(const std::string& text);
ParsedConfig parse_config_file(const std::string& path);

/// Canonical serialization; parse(write(cfg)) == cfg, field for field.
std::string scenario_to_text(const ScenarioConfig& cfg);
std::string dde_run_to_text(const DdeRun& run);

/// CSV with a `#`-prefixed manifest block (the config echo between
/// `# config-begin` / `# config-end`), then the header
/// `t,norm_y,norm_err,norm_u` and one row per coarse step, 17 significant
/// digits per value.
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);
void write_trace_csv(const SimulationTrace& trace, const std::string& path);

/// Reads back a trace CSV, including the embedded config echo.
SimulationTrace read_trace_csv(const std::string& path);

/// The non-comment part of a CSV document (header plus data rows); two runs
/// with identical config and seed produce byte-identical bodies.
std::string csv_body(const std::string& csv_text);

/// Scalar-delay trajectory in the trace format: norm_y = |y|, norm_err = 0,
/// norm_u = |kappa y(t - tau)| once the delayed feedback is active.
void write_dde_csv(const dde::Trajectory& traj, const DdeRun& run, std::ostream& out);
void write_dde_csv(const dde::Trajectory& traj, const DdeRun& run, const std::string& path);

std::string format_double(double v);  // shortest exact round-trip form used in files

}  // namespace parastab
