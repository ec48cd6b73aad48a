#include "sarbot/cli.hpp"

#include "sarbot/artifacts.hpp"
#include "sarbot/config.hpp"
#include "sarbot/errors.hpp"
#include "sarbot/exper.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sarbot::cli {
namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "YAML config file (defaults apply when omitted)");
  cmd->add_option("--set", c.sets, "Override a config key, e.g. --set track.kind=circle")
      ->take_all();
}

config::RunConfig load(const Common& c, std::vector<std::string> extra) {
  std::vector<std::string> overrides = c.sets;
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  std::optional<std::filesystem::path> path;
  if (!c.config_path.empty()) path = c.config_path;
  config::RunConfig cfg = config::load(path, overrides);
  if (!c.out.empty()) cfg.output.root = c.out;
  return cfg;
}

std::filesystem::path root_for(const Common& c, const config::RunConfig& cfg) {
  if (!c.out.empty()) return c.out;
  return config::output_root(cfg);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed-loop line follower with sign-and-relevance learning"};
  app.require_subcommand(1);

  Common trial_opts;
  std::string rule, eta;
  std::optional<std::uint64_t> seed;
  bool trace = false;
  auto* trial = app.add_subcommand("trial", "Run one closed-loop trial and write its artifacts");
  add_common(trial, trial_opts);
  trial->add_option("--rule", rule, "gdm, localprop or sar");
  trial->add_option("--eta", eta, "Learning rate; accepts e^-5 style values, 0 disables learning");
  trial->add_option("--seed", seed, "Network initialisation seed");
  trial->add_option("-o,--out", trial_opts.out, "Output root directory");
  trial->add_flag("--trace", trace, "Also write per-tick predictor frames");

  Common batch_opts;
  std::vector<std::string> rules, etas;
  std::vector<std::uint64_t> seeds;
  std::optional<unsigned> threads;
  auto* batch = app.add_subcommand("batch", "Run every (rule, eta, seed) trial and summarise");
  add_common(batch, batch_opts);
  batch->add_option("--rules", rules, "Rules, comma separated")->delimiter(',');
  batch->add_option("--etas", etas, "Learning rates, comma separated")->delimiter(',');
  batch->add_option("--seeds", seeds, "Seeds, comma separated")->delimiter(',');
  batch->add_option("--threads", threads, "Worker threads (0 = all cores)");
  batch->add_option("-o,--out", batch_opts.out, "Output root directory");

  Common cal_opts;
  std::string write_path;
  auto* calibrate = app.add_subcommand("calibrate", "Measure the reflex loop gain dE/dA_P");
  add_common(calibrate, cal_opts);
  calibrate->add_option("-w,--write", write_path,
                        "Write a derived config with the calibrated sign fixed");

  Common preview_opts;
  std::string image_path;
  bool mirror = false;
  auto* preview = app.add_subcommand("track-preview", "Render the track canvas as PGM");
  add_common(preview, preview_opts);
  preview->add_option("-o,--out", image_path, "Output PGM path")->required();
  preview->add_flag("--mirror", mirror, "Render the mirrored world");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (*trial) {
      std::vector<std::string> extra;
      if (!rule.empty()) extra.push_back("learning.rule=" + rule);
      if (!eta.empty()) extra.push_back(fmt::format("learning.eta={}", config::parse_number(eta)));
      if (seed) extra.push_back(fmt::format("seed={}", *seed));
      if (trace) extra.push_back("trace=true");
      const config::RunConfig cfg = load(trial_opts, extra);
      const auto dir = artifacts::make_run_dir(root_for(trial_opts, cfg), config::config_hash(cfg));
      const exper::TrialRecord record = exper::run_trial(cfg.trial);
      artifacts::write_trial(dir, cfg, record);
      const exper::TrialMetrics m = exper::summarize_trial(cfg.trial, record);
      fmt::print(out, "rule={} eta={} seed={} outcome={} success_time={}{} error_integral={:.6g} "
                      "first_layer_distance={:.6g} loop_gain={}\n",
                 net::to_string(m.rule), m.eta, m.seed, exper::to_string(m.outcome), m.success_time,
                 m.censored ? " (censored)" : "", m.error_integral, m.first_layer_distance,
                 record.loop_gain);
      if (!record.abort_reason.empty()) fmt::print(err, "aborted: {}\n", record.abort_reason);
      fmt::print(out, "artifacts: {}\n", dir.string());
      switch (record.outcome) {
        case exper::Outcome::kSuccess:
          return kExitSuccess;
        case exper::Outcome::kNoSuccess:
          return kExitNoSuccess;
        case exper::Outcome::kAborted:
          return kExitAbort;
      }
    }
    if (*batch) {
      std::vector<std::string> extra;
      if (!rules.empty()) extra.push_back(fmt::format("batch.rules=[{}]", fmt::join(rules, ",")));
      if (!etas.empty()) {
        std::vector<std::string> parsed;
        for (const auto& e : etas) parsed.push_back(fmt::format("{}", config::parse_number(e)));
        extra.push_back(fmt::format("batch.etas=[{}]", fmt::join(parsed, ",")));
      }
      if (!seeds.empty()) extra.push_back(fmt::format("batch.seeds=[{}]", fmt::join(seeds, ",")));
      if (threads) extra.push_back(fmt::format("batch.threads={}", *threads));
      const config::RunConfig cfg = load(batch_opts, extra);
      const auto dir = artifacts::make_run_dir(root_for(batch_opts, cfg), config::config_hash(cfg));
      const exper::BatchResult result = exper::run_batch(cfg.trial, cfg.batch);
      artifacts::write_batch(dir, cfg, result);
      out << artifacts::batch_summary_csv(result);
      fmt::print(out, "artifacts: {}\n", dir.string());
      return kExitSuccess;
    }
    if (*calibrate) {
      config::RunConfig cfg = load(cal_opts, {});
      const exper::CalibrationResult r = exper::measure_loop_gain(cfg.trial);
      fmt::print(out, "loop_gain {}\nmean_error_plus {}\nmean_error_minus {}\n", r.loop_gain,
                 r.mean_error_plus, r.mean_error_minus);
      if (!write_path.empty()) {
        if (r.loop_gain == 0.0) throw CalibrationError("measured loop gain is zero");
        cfg.trial.reflex.loop_gain = std::copysign(std::abs(cfg.trial.reflex.loop_gain), r.loop_gain);
        cfg.trial.calibration.enabled = false;
        artifacts::write_text(write_path,
                              fmt::format("# measured loop gain {}\n", r.loop_gain) + config::dump(cfg));
        fmt::print(out, "wrote {}\n", write_path);
      }
      return kExitSuccess;
    }
    if (*preview) {
      const config::RunConfig cfg = load(preview_opts, {});
      const sim::World world = sim::make_track(cfg.trial.track);
      (mirror ? world.canvas.mirrored() : world.canvas).save_pgm(image_path);
      fmt::print(out, "{}x{} cells, {} cm per cell, start ({:.2f}, {:.2f}) heading {:.4f}\n",
                 world.canvas.width(), world.canvas.height(), world.canvas.cell_size(),
                 world.start.x, world.start.y, world.start.theta);
      return kExitSuccess;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const CalibrationError& e) {
    err << "calibration error: " << e.what() << "\n";
    return kExitAbort;
  } catch (const StateError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace sarbot::cli
