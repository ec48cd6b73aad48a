#pragma once

#include "sarbot/loop.hpp"
#include "sarbot/netcore.hpp"
#include "sarbot/signals.hpp"
#include "sarbot/simenv.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sarbot::exper {

struct NetworkConfig {
  // Hidden layer sizes; the output layer size is the length of output_weights.
  std::vector<std::size_t> hidden{13, 12, 11, 10, 9, 8, 7, 6, 5, 4};
  net::Activation activation = net::Activation::kTanh;
  double init_scale = 0.1;
  std::vector<double> output_weights{1.0, 3.0, 5.0};
  // Predictors (GSV differences) are multiplied by this before entering the network.
  double input_scale = 1.0 / 255.0;

  std::vector<net::LayerSpec> layer_specs() const;
  void validate() const;
};

struct LearningConfig {
  net::RuleKind rule = net::RuleKind::kSar;
  // 0 disables learning (reflex-only baseline).
  double eta = 0.006737946999085467;  // e^-5
  // E (GSV) is multiplied by this before it drives sign_prop / local_prop.
  double error_scale = 1.0 / 255.0;

  void validate() const;
};

// Finite-difference probe of dE/dA_P on a straight segment.
struct CalibrationConfig {
  bool enabled = true;
  double probe_action = 0.5;    // motor units
  double probe_duration = 10.0;  // s
  double track_length = 200.0;  // cm
};

struct TrialConfig {
  std::uint64_t seed = 1;
  NetworkConfig network;
  LearningConfig learning;
  loop::ReflexConfig reflex;
  CalibrationConfig calibration;
  sim::RobotGeometry robot;
  sim::Integrator integrator = sim::Integrator::kExactArc;
  sim::SensorLayout sensors;
  signals::FilterTaps filter_taps = signals::default_filter_taps();
  sim::TrackSpec track;

  double dt = 0.05;             // s
  double max_duration = 600.0;  // s
  double success_threshold = 0.1;  // GSV
  double window = 25.0;         // s
  double warmup = 12.0;         // s
  // Time the trial keeps running after the success time; never shorter
  // than the confirmation window.
  double grace = 25.0;          // s
  double episode_gap = 1.0;     // s, used for episode counting
  std::size_t distance_every = 20;  // ticks between weight-distance samples
  // |E| above this counts towards an error episode.
  double spike_threshold = 0.1;  // GSV
  bool trace = false;           // keep difference grids and predictor frames

  void validate() const;
};

enum class Outcome {
  kSuccess,
  kNoSuccess,
  kAborted,
};

std::string_view to_string(Outcome outcome);

struct DistanceSample {
  double t = 0.0;
  std::vector<double> per_layer;
};

struct TrialRecord {
  std::vector<loop::LoopSignals> ticks;
  // Pose at which each tick's sensors were read.
  std::vector<sim::Pose> poses;
  std::optional<double> success_time;
  double error_integral = 0.0;
  std::vector<DistanceSample> distances;
  std::vector<net::Matrix> final_weights;
  std::vector<net::Matrix> initial_weights;
  net::Matrix first_layer_heatmap;
  Outcome outcome = Outcome::kNoSuccess;
  std::string abort_reason;
  double loop_gain = 0.0;
  std::size_t saturation_count = 0;
  std::vector<std::string> events;

  // Filled only when TrialConfig::trace is set.
  std::vector<signals::DifferenceGrid> differences;
  std::vector<signals::PredictorFrame> predictors;

  double duration(double dt) const { return static_cast<double>(ticks.size()) * dt; }
  std::vector<double> error_series() const;
  double final_distance(std::size_t layer) const;
};

// Mean of |E| over the trailing window (or over all samples so far when the
// trial is younger than the window).
std::vector<double> moving_average(std::span<const double> error, double window, double dt);

// sum |E| dt.
double error_integral(std::span<const double> error, double dt);

struct SuccessCriterion {
  double threshold = 0.1;
  double window = 25.0;
  double warmup = 12.0;
};

// Tracks the moving average online and latches success: the first tick at
// or after warm-up with average < threshold is a candidate, confirmed once
// the average has stayed below threshold for a further full window.
class SuccessDetector {
 public:
  SuccessDetector(SuccessCriterion criterion, double dt);

  // Feed the moving average of tick n (time n*dt).
  void update(double error_average);

  std::optional<double> candidate_time() const;
  bool confirmed() const { return confirmed_; }
  std::optional<double> success_time() const {
    return confirmed_ ? candidate_time() : std::nullopt;
  }

 private:
  SuccessCriterion criterion_;
  double dt_;
  std::size_t warmup_ticks_;
  std::size_t window_ticks_;
  std::size_t tick_ = 0;
  std::optional<std::size_t> candidate_;
  bool confirmed_ = false;
};

std::optional<double> detect_success(std::span<const double> error_average, double dt,
                                     const SuccessCriterion& criterion);

// Clusters of ticks with |E| > epsilon, where ticks closer than `gap`
// seconds belong to the same episode. Only ticks before `until` count.
std::size_t count_error_episodes(std::span<const double> error, double dt, double gap,
                                 double epsilon = 1e-9,
                                 std::optional<double> until = std::nullopt);

struct CalibrationResult {
  double loop_gain = 0.0;
  double mean_error_plus = 0.0;
  double mean_error_minus = 0.0;
};

// Applies +/- probe_action as a constant predictive action on a straight
// track with the reflex active and no learning, and returns the
// finite-difference slope of the mean control error. Throws
// CalibrationError if the robot leaves the canvas or the result is not
// finite.
CalibrationResult measure_loop_gain(const TrialConfig& config);

// The loop gain a trial uses: the configured magnitude with the calibrated
// sign when calibration is enabled.
double resolve_loop_gain(const TrialConfig& config);

// Runs one closed-loop trial: sense, predict, error, reflex, learn, act.
// Leaving the canvas ends the trial as aborted.
TrialRecord run_trial(const TrialConfig& config);
TrialRecord run_trial(const TrialConfig& config, const sim::World& world);

struct TrialMetrics {
  net::RuleKind rule = net::RuleKind::kSar;
  double eta = 0.0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::kNoSuccess;
  // Censored trials report max_duration.
  double success_time = 0.0;
  bool censored = true;
  double error_integral = 0.0;
  double first_layer_distance = 0.0;
  double duration = 0.0;
  std::size_t episodes_before_success = 0;
};

TrialMetrics summarize_trial(const TrialConfig& config, const TrialRecord& record);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear-interpolation quantiles of an unsorted sample.
Quartiles quartiles(std::vector<double> values);

struct CellSummary {
  net::RuleKind rule = net::RuleKind::kSar;
  double eta = 0.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  Quartiles success_time;
  Quartiles error_integral;
  Quartiles first_layer_distance;
};

struct BatchSpec {
  std::vector<net::RuleKind> rules{net::RuleKind::kGdm, net::RuleKind::kLocalProp,
                                   net::RuleKind::kSar};
  std::vector<double> etas{0.006737946999085467};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // 0 = hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct BatchResult {
  std::vector<TrialMetrics> trials;  // ordered by rule, eta, seed position
  std::vector<CellSummary> cells;    // ordered by rule, eta
  double loop_gain = 0.0;
};

// Runs every (rule, eta, seed) trial, possibly in parallel, and aggregates
// per (rule, eta) cell.
BatchResult run_batch(const TrialConfig& base, const BatchSpec& spec);

std::vector<CellSummary> summarize_cells(const std::vector<TrialMetrics>& trials);

}  // namespace sarbot::exper
