#include "sarbot/errors.hpp"
#include "sarbot/exper.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace sarbot::exper {
namespace {

// Mean control error over the second half of a run with a constant
// predictive action.
double settled_error(const TrialConfig& config, const sim::World& world, double action) {
  const auto ticks = static_cast<std::size_t>(std::llround(config.calibration.probe_duration / config.dt));
  sim::Pose pose = world.start;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t tick = 0; tick < ticks; ++tick) {
    loop::LdrReadout ldr;
    try {
      ldr = sim::sample_ldr(world.canvas, pose, config.sensors);
    } catch (const OutOfBoundsError& e) {
      throw CalibrationError(fmt::format("calibration probe left the canvas: {}", e.what()));
    }
    const double error = loop::control_error(ldr, config.reflex);
    if (2 * tick >= ticks) {
      sum += error;
      ++count;
    }
    const loop::MotorCommand mc =
        loop::motor_command(loop::reflex_action(error, config.reflex), action, config.reflex.mc_limit);
    pose = sim::step(pose, mc.applied, config.dt, config.robot, config.integrator);
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

CalibrationResult measure_loop_gain(const TrialConfig& config) {
  const auto& cal = config.calibration;
  if (!(cal.probe_action > 0.0) || !(cal.probe_duration > config.dt)) {
    throw ConfigError("calibration needs probe_action > 0 and probe_duration > dt");
  }
  sim::TrackSpec straight = config.track;
  straight.kind = sim::TrackKind::kStraight;
  straight.length = cal.track_length;
  straight.start_offset = 0.0;
  // Room for a full circle drift when the reflex is weak or off.
  straight.margin = std::max(config.track.margin, std::abs(config.robot.v0) * cal.probe_duration + 10.0);
  const sim::World world = sim::make_track(straight);

  CalibrationResult result;
  result.mean_error_plus = settled_error(config, world, cal.probe_action);
  result.mean_error_minus = settled_error(config, world, -cal.probe_action);
  result.loop_gain = (result.mean_error_plus - result.mean_error_minus) / (2.0 * cal.probe_action);
  if (!std::isfinite(result.loop_gain)) {
    throw CalibrationError("calibrated loop gain is not finite");
  }
  return result;
}

double resolve_loop_gain(const TrialConfig& config) {
  if (!config.calibration.enabled) return config.reflex.loop_gain;
  const CalibrationResult r = measure_loop_gain(config);
  if (r.loop_gain == 0.0) {
    throw CalibrationError("calibration measured a zero loop gain; the sign is undetermined");
  }
  return std::copysign(std::abs(config.reflex.loop_gain), r.loop_gain);
}

}  // namespace sarbot::exper
