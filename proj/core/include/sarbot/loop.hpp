#pragma once

#include <array>
#include <optional>

namespace sarbot::loop {

// Ground values of the three left sensors G1..G3 (inner to outer) and their
// mirrored right-hand partners G1*..G3*, in GSV.
struct LdrReadout {
  std::array<double, 3> left{};
  std::array<double, 3> right{};

  void validate() const;
};

struct ReflexConfig {
  // K_i; magnitudes must strictly increase from the inner to the outer pair.
  std::array<double, 3> weights{1.0, 2.0, 3.0};
  // A_R = reflex_gain * E, motor units per GSV.
  double reflex_gain = 0.01;
  // Signed reflex loop gain dE/dA_P used in kappa = 2 * E * loop_gain.
  double loop_gain = -0.2;
  // |MC| above this is saturated before it reaches the wheels; unset = no limit.
  std::optional<double> mc_limit = 5.0;

  void validate() const;
};

struct LoopSignals {
  double t = 0.0;
  double error = 0.0;
  double error_average = 0.0;
  double reflex_action = 0.0;
  double predictive_action = 0.0;
  double motor_command = 0.0;
  double kappa = 0.0;
};

// E = sum_i K_i (G_i - G_i*).
double control_error(const LdrReadout& readout, const ReflexConfig& config);

double reflex_action(double error, const ReflexConfig& config);

struct MotorCommand {
  // Always exactly A_R + A_P.
  double command = 0.0;
  // What the wheels receive after saturation.
  double applied = 0.0;
  bool saturated = false;
};

// Throws NumericError on non-finite input.
MotorCommand motor_command(double reflex, double predictive, std::optional<double> limit);

double closed_loop_gradient(double error, const ReflexConfig& config);

}  // namespace sarbot::loop
