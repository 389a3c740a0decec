#include "parastab/predictor.hpp"

#include <cmath>
#include <stdexcept>

namespace parastab {

InputHistory::InputHistory(int window, int input_dim)
    : window_(window), input_dim_(input_dim) {
  if (window < 0 || input_dim <= 0)
    throw std::invalid_argument("InputHistory: bad window or dimension");
  ring_.assign(std::max(window, 1), Vector::Zero(input_dim));
}

void InputHistory::push(const Vector& u) {
  if (u.size() != input_dim_) throw std::invalid_argument("InputHistory::push: dimension mismatch");
  ring_[head_ % ring_.size()] = u;
  ++head_;
}

Vector InputHistory::at(long step_index) const {
  if (step_index < 0) return Vector::Zero(input_dim_);
  const long oldest = head_ - static_cast<long>(ring_.size());
  if (step_index >= head_ || step_index < oldest)
    throw std::out_of_range("InputHistory::at: index outside the retained window");
  return ring_[step_index % ring_.size()];
}

Vector InputHistory::delayed(long step_index) const { return at(step_index - window_); }

PredictorConfig make_predictor_config(double tau, double ts, ImplicitStepper& stepper,
                                      const PatchArray& actuators) {
  if (tau < 0.0 || ts <= 0.0) throw std::invalid_argument("predictor: tau >= 0 and ts > 0 required");
  const double ratio = tau / ts;
  const long window = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(window)) > 1e-12 * std::max(1.0, ratio))
    throw std::invalid_argument("predictor: tau must be an integer multiple of the coarse step");
  PredictorConfig cfg;
  cfg.tau = tau;
  cfg.ts = ts;
  cfg.window = static_cast<int>(window);
  cfg.stepper = &stepper;
  cfg.actuators = &actuators;
  return cfg;
}

Vector predict_state(const PredictorConfig& cfg, long step_index, const Vector& state,
                     const InputHistory& hist) {
  Vector y = state;
  for (int j = 0; j < cfg.window; ++j) {
    // Substep (t + j ts, t + (j+1) ts) is forced by the delayed input
    // u(t + j ts - tau), i.e. the history entry step_index - window + j.
    const Vector u = hist.at(step_index - cfg.window + j);
    const Vector load = cfg.actuators->load * u;
    y = cfg.stepper->advance(step_index + j + 1, y, load);
  }
  return y;
}

Vector compute_input(const PredictorConfig& cfg, long step_index, const Vector& state,
                     const InputHistory& hist) {
  return feedback(*cfg.actuators, predict_state(cfg, step_index, state, hist));
}

}  // namespace parastab
