#pragma once

#include "parastab/fem.hpp"
#include "parastab/patches.hpp"

namespace parastab {

/// Ring buffer of the inputs pushed at coarse steps 0,1,2,...; reads of
/// pre-time-zero entries return zero (the input history starts at rest).
class InputHistory {
 public:
  InputHistory(int window, int input_dim);

  int window() const { return window_; }
  int input_dim() const { return input_dim_; }
  long head() const { return head_; }

  /// Stores the input of the current coarse step and advances the head.
  void push(const Vector& u);

  /// Input pushed at coarse step `step_index`; zero for step_index < 0.
  /// Throws std::out_of_range outside the retained window.
  Vector at(long step_index) const;

  /// The input delayed by the full window: at(step_index - window).
  Vector delayed(long step_index) const;

 private:
  int window_;
  int input_dim_;
  long head_ = 0;  // number of pushes so far
  std::vector<Vector> ring_;
};

/// Everything the predictor needs to integrate the coarse model forward
/// by one delay window.
struct PredictorConfig {
  double tau = 0.0;
  double ts = 1e-3;       // coarse step
  int window = 0;         // tau / ts
  ImplicitStepper* stepper = nullptr;  // coarse-mesh stepper with dt = ts
  const PatchArray* actuators = nullptr;
};

/// Checks tau/ts integrality and fills `window`. Throws on misalignment.
PredictorConfig make_predictor_config(double tau, double ts, ImplicitStepper& stepper,
                                      const PatchArray& actuators);

/// Forecast of the state one delay window ahead of coarse step `step_index`:
/// runs `window` backward-Euler steps from `state`, forcing each substep with
/// the buffered input that will act on it (zero-order hold).
Vector predict_state(const PredictorConfig& cfg, long step_index, const Vector& state,
                     const InputHistory& hist);

/// The input for coarse step `step_index`: feedback applied to the forecast.
Vector compute_input(const PredictorConfig& cfg, long step_index, const Vector& state,
                     const InputHistory& hist);

}  // namespace parastab
