#include "sarbot/loop.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace sarbot::loop {

void LdrReadout::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    for (double g : {left[i], right[i]}) {
      if (!(g >= 0.0 && g < 256.0)) {
        throw ConfigError(fmt::format("LDR value {} outside [0, 256) in pair {}", g, i + 1));
      }
    }
  }
}

void ReflexConfig::validate() const {
  for (double k : weights) {
    if (!std::isfinite(k)) throw ConfigError("reflex weights must be finite");
  }
  if (!(std::abs(weights[0]) < std::abs(weights[1]) &&
        std::abs(weights[1]) < std::abs(weights[2]))) {
    throw ConfigError(fmt::format("reflex weight magnitudes must increase: [{}, {}, {}]",
                                  weights[0], weights[1], weights[2]));
  }
  if (!std::isfinite(reflex_gain)) throw ConfigError("reflex gain must be finite");
  if (!std::isfinite(loop_gain)) throw ConfigError("loop gain must be finite");
  if (mc_limit && !(*mc_limit > 0.0 && std::isfinite(*mc_limit))) {
    throw ConfigError(fmt::format("motor command limit must be > 0, got {}", *mc_limit));
  }
}

double control_error(const LdrReadout& readout, const ReflexConfig& config) {
  double e = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    e += config.weights[i] * (readout.left[i] - readout.right[i]);
  }
  return e;
}

double reflex_action(double error, const ReflexConfig& config) {
  return config.reflex_gain * error;
}

MotorCommand motor_command(double reflex, double predictive, std::optional<double> limit) {
  if (!std::isfinite(reflex) || !std::isfinite(predictive)) {
    throw NumericError(
        fmt::format("non-finite motor command input (A_R = {}, A_P = {})", reflex, predictive));
  }
  MotorCommand mc;
  mc.command = reflex + predictive;
  mc.applied = mc.command;
  if (limit && std::abs(mc.command) > *limit) {
    mc.applied = std::clamp(mc.command, -*limit, *limit);
    mc.saturated = true;
  }
  return mc;
}

double closed_loop_gradient(double error, const ReflexConfig& config) {
  return 2.0 * error * config.loop_gain;
}

}  // namespace sarbot::loop
