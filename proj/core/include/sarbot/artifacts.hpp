#pragma once

#include "sarbot/config.hpp"
#include "sarbot/exper.hpp"
#include "sarbot/pgm.hpp"

#include <chrono>
#include <filesystem>
#include <string>

namespace sarbot::artifacts {

// <root>/<hash16>-<YYYYmmddTHHMMSSZ>, created on disk. A numeric suffix is
// appended if the name is taken.
std::filesystem::path make_run_dir(const std::filesystem::path& root, std::uint64_t hash,
                                   std::chrono::system_clock::time_point now =
                                       std::chrono::system_clock::now());

// Tick series: header `t,E,Ebar,A_R,A_P,MC,kappa`, shortest round-trip
// number formatting.
std::string trial_csv(const exper::TrialRecord& record);
// `t,x,y,theta`.
std::string trajectory_csv(const exper::TrialRecord& record);
// `t,layer1,...,layerL`.
std::string distance_csv(const exper::TrialRecord& record);
// `tick,k,value` for every traced predictor.
std::string predictor_trace_csv(const exper::TrialRecord& record);
std::string batch_trials_csv(const exper::BatchResult& result);
std::string batch_summary_csv(const exper::BatchResult& result);
std::string trial_metrics_csv(const exper::TrialMetrics& metrics);

// First-layer |w| heatmap (values in [0, 1]) as an image: 13 rows, 240
// columns in 8 blocks of 30, one per camera row with the nearest row on the
// right. Larger |w| is darker.
GrayImage heatmap_image(const net::Matrix& heatmap);

void write_text(const std::filesystem::path& path, const std::string& text);

// Writes config.yaml, trial.csv, trajectory.csv, distances.csv, metrics.csv, events.log and,
// when enabled, heatmap_layer1.pgm, weights.txt and predictors.csv.
void write_trial(const std::filesystem::path& dir, const config::RunConfig& config,
                 const exper::TrialRecord& record);

// Writes config.yaml, trials.csv and summary.csv.
void write_batch(const std::filesystem::path& dir, const config::RunConfig& config,
                 const exper::BatchResult& result);

}  // namespace sarbot::artifacts
