#pragma once

namespace parastab {

/// Entry point of the parastab tool. Commands: simulate, dde, spectral,
/// check-ops, sweep-tau, sweep-noise. Returns 0 on success, 1 on run
/// failures, 2 on usage errors (unknown command, bad flags).
int run_cli(int argc, const char* const* argv);

}  // namespace parastab
