#include "sarbot/exper.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

namespace sarbot::exper {
namespace {

std::size_t ticks_for(double seconds, double dt) {
  return static_cast<std::size_t>(std::llround(seconds / dt));
}

}  // namespace

std::vector<net::LayerSpec> NetworkConfig::layer_specs() const {
  std::vector<net::LayerSpec> spec;
  spec.push_back({signals::kPredictorCount, activation});
  for (std::size_t n : hidden) spec.push_back({n, activation});
  spec.push_back({output_weights.size(), activation});
  return spec;
}

void NetworkConfig::validate() const {
  for (std::size_t n : hidden) {
    if (n < 1) throw ConfigError("hidden layers need at least one neuron");
  }
  if (output_weights.empty()) throw ConfigError("output weighting must not be empty");
  for (double m : output_weights) {
    if (!std::isfinite(m)) throw ConfigError("output weights must be finite");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw ConfigError("init scale must be finite and >= 0");
  }
  if (!(input_scale > 0.0) || !std::isfinite(input_scale)) {
    throw ConfigError("input scale must be finite and > 0");
  }
}

void LearningConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ConfigError(fmt::format("learning rate must be finite and >= 0, got {}", eta));
  }
  if (!(error_scale > 0.0) || !std::isfinite(error_scale)) {
    throw ConfigError("error scale must be finite and > 0");
  }
}

void TrialConfig::validate() const {
  network.validate();
  learning.validate();
  reflex.validate();
  robot.validate();
  sensors.validate();
  track.validate();
  if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
  if (!(success_threshold > 0.0)) throw ConfigError("success threshold must be > 0");
  if (!(window > 0.0)) throw ConfigError("moving-average window must be > 0");
  if (!(warmup >= 0.0)) throw ConfigError("warm-up must be >= 0");
  if (!(max_duration > 0.0)) throw ConfigError("max duration must be > 0");
  if (!(warmup < max_duration)) throw ConfigError("warm-up must be shorter than max duration");
  if (!(grace >= 0.0)) throw ConfigError("grace period must be >= 0");
  if (!(episode_gap > 0.0)) throw ConfigError("episode gap must be > 0");
  if (!(spike_threshold >= 0.0)) throw ConfigError("spike threshold must be >= 0");
  if (distance_every < 1) throw ConfigError("distance_every must be >= 1");
  if (learning.eta > 0.0 && reflex.loop_gain == 0.0) {
    throw ConfigError("learning needs a non-zero loop gain");
  }
  if (calibration.enabled &&
      (!(calibration.probe_action > 0.0) || !(calibration.probe_duration > dt) ||
       !(calibration.track_length > 0.0))) {
    throw ConfigError("calibration needs probe_action > 0, probe_duration > dt, track_length > 0");
  }
  signals::FilterArray check(filter_taps);
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kSuccess:
      return "success";
    case Outcome::kNoSuccess:
      return "no_success";
    case Outcome::kAborted:
      return "aborted";
  }
  return "?";
}

std::vector<double> TrialRecord::error_series() const {
  std::vector<double> out;
  out.reserve(ticks.size());
  for (const auto& t : ticks) out.push_back(t.error);
  return out;
}

double TrialRecord::final_distance(std::size_t layer) const {
  if (layer >= final_weights.size()) {
    throw ConfigError(fmt::format("layer index {} out of range", layer));
  }
  return (final_weights[layer] - initial_weights[layer]).norm();
}

std::vector<double> moving_average(std::span<const double> error, double window, double dt) {
  if (!(window > 0.0) || !(dt > 0.0)) throw ConfigError("window and dt must be > 0");
  const std::size_t w = std::max<std::size_t>(1, ticks_for(window, dt));
  std::vector<double> out(error.size());
  for (std::size_t n = 0; n < error.size(); ++n) {
    const std::size_t first = n + 1 >= w ? n + 1 - w : 0;
    double sum = 0.0;
    for (std::size_t m = first; m <= n; ++m) sum += std::abs(error[m]);
    out[n] = sum / static_cast<double>(n + 1 - first);
  }
  return out;
}

double error_integral(std::span<const double> error, double dt) {
  double sum = 0.0;
  for (double e : error) sum += std::abs(e) * dt;
  return sum;
}

SuccessDetector::SuccessDetector(SuccessCriterion criterion, double dt)
    : criterion_(criterion),
      dt_(dt),
      warmup_ticks_(ticks_for(criterion.warmup, dt)),
      window_ticks_(std::max<std::size_t>(1, ticks_for(criterion.window, dt))) {}

void SuccessDetector::update(double error_average) {
  const std::size_t n = tick_++;
  if (confirmed_ || n < warmup_ticks_) return;
  if (error_average < criterion_.threshold) {
    if (!candidate_) candidate_ = n;
    if (n >= *candidate_ + window_ticks_) confirmed_ = true;
  } else {
    candidate_.reset();
  }
}

std::optional<double> SuccessDetector::candidate_time() const {
  if (!candidate_) return std::nullopt;
  return static_cast<double>(*candidate_) * dt_;
}

std::optional<double> detect_success(std::span<const double> error_average, double dt,
                                     const SuccessCriterion& criterion) {
  SuccessDetector detector(criterion, dt);
  for (double e : error_average) {
    detector.update(e);
    if (detector.confirmed()) break;
  }
  return detector.success_time();
}

std::size_t count_error_episodes(std::span<const double> error, double dt, double gap,
                                 double epsilon, std::optional<double> until) {
  const std::size_t gap_ticks = std::max<std::size_t>(1, ticks_for(gap, dt));
  const std::size_t end = until ? std::min(error.size(), ticks_for(*until, dt)) : error.size();
  std::size_t episodes = 0;
  std::optional<std::size_t> last_active;
  for (std::size_t n = 0; n < end; ++n) {
    if (std::abs(error[n]) <= epsilon) continue;
    if (!last_active || n - *last_active >= gap_ticks) ++episodes;
    last_active = n;
  }
  return episodes;
}

TrialRecord run_trial(const TrialConfig& config) {
  config.validate();
  return run_trial(config, sim::make_track(config.track));
}

TrialRecord run_trial(const TrialConfig& config, const sim::World& world) {
  config.validate();
  TrialRecord record;

  const bool learning = config.learning.eta > 0.0;
  record.loop_gain = learning ? resolve_loop_gain(config) : config.reflex.loop_gain;
  loop::ReflexConfig reflex = config.reflex;
  reflex.loop_gain = record.loop_gain;

  std::optional<net::UpdateRule> rule;
  std::optional<net::LoopGainSign> loop_sign;
  if (learning) {
    rule = net::UpdateRule::make(config.learning.rule, config.learning.eta);
    loop_sign = net::sign_of(record.loop_gain);
    if (!net::probe_descent(record.loop_gain)) {
      throw ConfigError("loop gain sign fails the descent probe");
    }
  }

  const auto specs = config.network.layer_specs();
  net::Vector m = Eigen::Map<const net::Vector>(
      config.network.output_weights.data(),
      static_cast<Eigen::Index>(config.network.output_weights.size()));
  net::Network network(specs, m, config.seed, config.network.init_scale);
  for (std::size_t l = 0; l < network.layer_count(); ++l) {
    record.initial_weights.push_back(network.initial_weights(l));
  }
  signals::FilterArray filters(config.filter_taps);

  const double dt = config.dt;
  const std::size_t max_ticks = ticks_for(config.max_duration, dt);
  const std::size_t window_ticks = std::max<std::size_t>(1, ticks_for(config.window, dt));
  const double stop_after = std::max(config.grace, config.window);
  SuccessDetector detector({config.success_threshold, config.window, config.warmup}, dt);

  record.ticks.reserve(max_ticks);
  std::vector<double> abs_error;
  abs_error.reserve(max_ticks);
  std::vector<double> inputs(signals::kPredictorCount);
  sim::Pose pose = world.start;
  bool saturating = false;

  const auto sample_distances = [&](double t) {
    DistanceSample sample{t, {}};
    for (std::size_t l = 0; l < network.layer_count(); ++l) {
      sample.per_layer.push_back(network.euclidean_distance(l));
    }
    record.distances.push_back(std::move(sample));
  };

  for (std::size_t tick = 0; tick < max_ticks; ++tick) {
    const double t = static_cast<double>(tick) * dt;
    try {
      // sense
      const loop::LdrReadout ldr = sim::sample_ldr(world.canvas, pose, config.sensors);
      const signals::IntensityGrid grid = sim::sample_camera(world.canvas, pose, config.sensors);

      // predict
      const signals::DifferenceGrid differences = signals::difference_signals(grid);
      const signals::PredictorFrame frame = filters.step(differences);
      for (std::size_t k = 0; k < signals::kPredictorCount; ++k) {
        inputs[k] = frame.values[k] * config.network.input_scale;
      }
      const double predictive = network.forward(inputs);

      // error and reflex
      const double error = loop::control_error(ldr, reflex);
      const double reflex_action = loop::reflex_action(error, reflex);
      const double kappa = loop::closed_loop_gradient(error, reflex);

      // learn; a zero error leaves every weight unchanged
      if (rule && kappa != 0.0) {
        const double scaled = error * config.learning.error_scale;
        switch (rule->kind) {
          case net::RuleKind::kGdm:
            network.backprop_delta();
            break;
          case net::RuleKind::kLocalProp:
            network.local_prop(scaled);
            break;
          case net::RuleKind::kSar:
            network.sign_prop(scaled);
            network.local_prop(scaled);
            break;
        }
        network.apply_update(*rule, kappa, *loop_sign);
      }

      // act
      const loop::MotorCommand mc = loop::motor_command(reflex_action, predictive, reflex.mc_limit);
      if (mc.saturated) {
        ++record.saturation_count;
        if (!saturating) {
          record.events.push_back(
              fmt::format("t={:.2f} saturation MC={:.4g} applied={:.4g}", t, mc.command, mc.applied));
        }
      }
      saturating = mc.saturated;

      abs_error.push_back(std::abs(error));
      const std::size_t first = abs_error.size() > window_ticks ? abs_error.size() - window_ticks : 0;
      double sum = 0.0;
      for (std::size_t i = first; i < abs_error.size(); ++i) sum += abs_error[i];
      const double average = sum / static_cast<double>(abs_error.size() - first);

      record.ticks.push_back({t, error, average, reflex_action, predictive, mc.command, kappa});
      record.poses.push_back(pose);
      record.error_integral += std::abs(error) * dt;
      if (config.trace) {
        record.differences.push_back(differences);
        record.predictors.push_back(frame);
      }
      if (tick % config.distance_every == 0) sample_distances(t);

      detector.update(average);
      if (detector.confirmed() && t >= *detector.candidate_time() + stop_after) break;

      pose = sim::step(pose, mc.applied, dt, config.robot, config.integrator);
    } catch (const OutOfBoundsError& e) {
      record.outcome = Outcome::kAborted;
      record.abort_reason = e.what();
      record.events.push_back(fmt::format("t={:.2f} abort: {}", t, e.what()));
      break;
    } catch (const NumericError& e) {
      record.outcome = Outcome::kAborted;
      record.abort_reason = e.what();
      record.events.push_back(fmt::format("t={:.2f} abort: {}", t, e.what()));
      break;
    }
  }

  if (record.outcome != Outcome::kAborted) {
    record.success_time = detector.success_time();
    record.outcome = record.success_time ? Outcome::kSuccess : Outcome::kNoSuccess;
  }
  if (!record.ticks.empty()) sample_distances(record.ticks.back().t);
  for (std::size_t l = 0; l < network.layer_count(); ++l) {
    record.final_weights.push_back(network.weights(l));
  }
  record.first_layer_heatmap = network.weight_heatmap(0);
  return record;
}

TrialMetrics summarize_trial(const TrialConfig& config, const TrialRecord& record) {
  TrialMetrics m;
  m.rule = config.learning.rule;
  m.eta = config.learning.eta;
  m.seed = config.seed;
  m.outcome = record.outcome;
  m.censored = !record.success_time.has_value();
  m.success_time = record.success_time.value_or(config.max_duration);
  m.error_integral = record.error_integral;
  m.first_layer_distance = record.final_weights.empty() ? 0.0 : record.final_distance(0);
  m.duration = record.duration(config.dt);
  const auto errors = record.error_series();
  m.episodes_before_success = count_error_episodes(errors, config.dt, config.episode_gap,
                                                   config.spike_threshold, record.success_time);
  return m;
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

void BatchSpec::validate() const {
  if (rules.empty()) throw ConfigError("batch needs at least one rule");
  if (etas.empty()) throw ConfigError("batch needs at least one learning rate");
  if (seeds.empty()) throw ConfigError("batch needs at least one seed");
  for (double eta : etas) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw ConfigError(fmt::format("batch learning rates must be > 0, got {}", eta));
    }
  }
}

std::vector<CellSummary> summarize_cells(const std::vector<TrialMetrics>& trials) {
  std::map<std::pair<int, double>, std::vector<const TrialMetrics*>> groups;
  for (const auto& t : trials) groups[{static_cast<int>(t.rule), t.eta}].push_back(&t);

  std::vector<CellSummary> cells;
  for (const auto& [key, members] : groups) {
    CellSummary cell;
    cell.rule = static_cast<net::RuleKind>(key.first);
    cell.eta = key.second;
    cell.trials = members.size();
    std::vector<double> times, integrals, distances;
    for (const TrialMetrics* m : members) {
      if (!m->censored) ++cell.successes;
      times.push_back(m->success_time);
      integrals.push_back(m->error_integral);
      distances.push_back(m->first_layer_distance);
    }
    cell.success_time = quartiles(std::move(times));
    cell.error_integral = quartiles(std::move(integrals));
    cell.first_layer_distance = quartiles(std::move(distances));
    cells.push_back(cell);
  }
  return cells;
}

BatchResult run_batch(const TrialConfig& base, const BatchSpec& spec) {
  base.validate();
  spec.validate();

  BatchResult result;
  // Calibrate once; every trial shares the geometry.
  TrialConfig resolved = base;
  resolved.reflex.loop_gain = resolve_loop_gain(base);
  resolved.calibration.enabled = false;
  result.loop_gain = resolved.reflex.loop_gain;
  const sim::World world = sim::make_track(resolved.track);

  std::vector<TrialConfig> jobs;
  for (net::RuleKind rule : spec.rules) {
    for (double eta : spec.etas) {
      for (std::uint64_t seed : spec.seeds) {
        TrialConfig cfg = resolved;
        cfg.learning.rule = rule;
        cfg.learning.eta = eta;
        cfg.seed = seed;
        cfg.trace = false;
        jobs.push_back(std::move(cfg));
      }
    }
  }

  result.trials.resize(jobs.size());
  unsigned threads = spec.threads != 0 ? spec.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(threads);
  const auto worker = [&](unsigned id) {
    try {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        result.trials[i] = summarize_trial(jobs[i], run_trial(jobs[i], world));
      }
    } catch (...) {
      failures[id] = std::current_exception();
      next = jobs.size();
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned id = 1; id < threads; ++id) pool.emplace_back(worker, id);
    worker(0);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  result.cells = summarize_cells(result.trials);
  return result;
}

}  // namespace sarbot::exper
