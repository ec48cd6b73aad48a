#include "sarbot/artifacts.hpp"

#include "sarbot/errors.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sarbot::artifacts {
namespace {

std::string header_comment(const config::RunConfig& config) {
  return fmt::format("# config_hash={} seed={}\n", config::hash_hex(config::config_hash(config)),
                     config.trial.seed);
}

}  // namespace

std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t hash,
                                   std::chrono::system_clock::time_point now) {
  const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
  const std::string base = fmt::format("{}-{:%Y%m%dT%H%M%SZ}", config::hash_hex(hash), secs);
  std::filesystem::create_directories(root);
  std::filesystem::path dir = root / base;
  for (int i = 1; std::filesystem::exists(dir); ++i) dir = root / fmt::format("{}-{}", base, i);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string trial_csv(const exper::TrialRecord& record) {
  std::string out = "t,E,Ebar,A_R,A_P,MC,kappa\n";
  for (const auto& s : record.ticks) {
    out += fmt::format("{},{},{},{},{},{},{}\n", s.t, s.error, s.error_average, s.reflex_action,
                       s.predictive_action, s.motor_command, s.kappa);
  }
  return out;
}

std::string trajectory_csv(const exper::TrialRecord& record) {
  std::string out = "t,x,y,theta\n";
  for (std::size_t n = 0; n < record.poses.size() && n < record.ticks.size(); ++n) {
    const auto& p = record.poses[n];
    out += fmt::format("{},{},{},{}\n", record.ticks[n].t, p.x, p.y, p.theta);
  }
  return out;
}

std::string distance_csv(const exper::TrialRecord& record) {
  std::string out = "t";
  const std::size_t layers = record.final_weights.size();
  for (std::size_t l = 0; l < layers; ++l) out += fmt::format(",layer{}", l + 1);
  out += '\n';
  for (const auto& d : record.distances) {
    out += fmt::format("{}", d.t);
    for (double v : d.per_layer) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

std::string predictor_trace_csv(const exper::TrialRecord& record) {
  std::string out = "tick,k,value\n";
  for (std::size_t n = 0; n < record.predictors.size(); ++n) {
    const auto& frame = record.predictors[n];
    for (std::size_t k = 0; k < frame.values.size(); ++k) {
      out += fmt::format("{},{},{}\n", n, k, frame.values[k]);
    }
  }
  return out;
}

std::string batch_trials_csv(const exper::BatchResult& result) {
  std::string out =
      "rule,eta,seed,outcome,success_time,censored,error_integral,first_layer_distance,duration,"
      "episodes\n";
  for (const auto& m : result.trials) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", net::to_string(m.rule), m.eta, m.seed,
                       exper::to_string(m.outcome), m.success_time, m.censored ? 1 : 0,
                       m.error_integral, m.first_layer_distance, m.duration,
                       m.episodes_before_success);
  }
  return out;
}

std::string batch_summary_csv(const exper::BatchResult& result) {
  std::string out =
      "rule,eta,trials,successes,time_q1,time_median,time_q3,integral_q1,integral_median,"
      "integral_q3,distance_q1,distance_median,distance_q3\n";
  for (const auto& c : result.cells) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", net::to_string(c.rule), c.eta,
                       c.trials, c.successes, c.success_time.q1, c.success_time.median,
                       c.success_time.q3, c.error_integral.q1, c.error_integral.median,
                       c.error_integral.q3, c.first_layer_distance.q1,
                       c.first_layer_distance.median, c.first_layer_distance.q3);
  }
  return out;
}

std::string trial_metrics_csv(const exper::TrialMetrics& m) {
  return fmt::format(
      "rule,eta,seed,outcome,success_time,censored,error_integral,first_layer_distance,duration,"
      "episodes\n{},{},{},{},{},{},{},{},{},{}\n",
      net::to_string(m.rule), m.eta, m.seed, exper::to_string(m.outcome), m.success_time,
      m.censored ? 1 : 0, m.error_integral, m.first_layer_distance, m.duration,
      m.episodes_before_success);
}

GrayImage heatmap_image(const net::Matrix& heatmap) {
  constexpr std::size_t kBlock = signals::kDiffCols * signals::kFilterCount;
  if (static_cast<std::size_t>(heatmap.cols()) != signals::kPredictorCount) {
    throw ConfigError(fmt::format("heatmap needs {} columns, got {}", signals::kPredictorCount,
                                  heatmap.cols()));
  }
  GrayImage image;
  image.width = signals::kPredictorCount;
  image.height = static_cast<std::size_t>(heatmap.rows());
  image.pixels.resize(image.width * image.height);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t k = 0; k < signals::kPredictorCount; ++k) {
      const std::size_t row = k / kBlock;
      const std::size_t col = (signals::kGridRows - 1 - row) * kBlock + k % kBlock;
      const double x = std::clamp(heatmap(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)), 0.0, 1.0);
      image.pixels[r * image.width + col] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - x)));
    }
  }
  image.comments.push_back("first-layer |w|, 8 blocks of 30 predictors, nearest camera row right");
  return image;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

void write_trial(const std::filesystem::path& dir, const config::RunConfig& config,
                 const exper::TrialRecord& record) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.yaml", header_comment(config) + config::dump(config));
  write_text(dir / "trial.csv", header_comment(config) + trial_csv(record));
  write_text(dir / "trajectory.csv", trajectory_csv(record));
  write_text(dir / "distances.csv", header_comment(config) + distance_csv(record));
  write_text(dir / "metrics.csv", trial_metrics_csv(exper::summarize_trial(config.trial, record)));
  std::string events;
  events += fmt::format("loop_gain {}\n", record.loop_gain);
  events += fmt::format("saturated_ticks {}\n", record.saturation_count);
  for (const auto& e : record.events) events += e + '\n';
  write_text(dir / "events.log", events);
  if (config.output.snapshots && !record.final_weights.empty()) {
    write_pgm(dir / "heatmap_layer1.pgm", heatmap_image(record.first_layer_heatmap));
    std::ostringstream w;
    net::write_weight_snapshot(w, record.final_weights);
    write_text(dir / "weights.txt", w.str());
  }
  if (config.trial.trace) write_text(dir / "predictors.csv", predictor_trace_csv(record));
}

void write_batch(const std::filesystem::path& dir, const config::RunConfig& config,
                 const exper::BatchResult& result) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.yaml", header_comment(config) + config::dump(config));
  write_text(dir / "trials.csv", batch_trials_csv(result));
  write_text(dir / "summary.csv", batch_summary_csv(result));
}

}  // namespace sarbot::artifacts
