#include "sarbot/config.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace sarbot::config {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double strict_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("'{}' is not a number", s));
  }
  if (used != s.size()) throw ConfigError(fmt::format("'{}' is not a number", s));
  return v;
}

std::string where(std::string_view source, const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null() || m.line < 0) return std::string(source);
  return fmt::format("{}:{}:{}", source, m.line + 1, m.column + 1);
}

class Reader {
 public:
  Reader(YAML::Node node, std::string path, std::string_view source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) fail(node_, "expected a mapping");
  }

  [[noreturn]] void fail(const YAML::Node& at, std::string_view msg) const {
    throw ConfigError(fmt::format("{}: {}: {}", where(source_, at), path_.empty() ? "<root>" : path_, msg));
  }

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  // Runs `decode` on the value of `key` if present, prefixing errors with the
  // value's location.
  template <class F>
  void with(const char* key, F&& decode) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node& cnode = node_;
    const YAML::Node value = cnode[key];
    if (!value) return;
    try {
      decode(value);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(std::string(source_), 0) == 0) throw;
      throw ConfigError(fmt::format("{}: {}: {}", where(source_, value), key_path(key), msg));
    } catch (const YAML::Exception& e) {
      throw ConfigError(fmt::format("{}: {}: {}", where(source_, value), key_path(key), e.msg));
    }
  }

  Reader child(const char* key) {
    seen_.insert(key);
    YAML::Node value;
    const YAML::Node& cnode = node_;
    if (cnode && cnode.IsMap() && cnode[key]) value = cnode[key];
    return Reader(value, key_path(key), source_);
  }

  void number(const char* key, double& out) {
    with(key, [&](const YAML::Node& n) { out = scalar_number(n); });
  }
  void count(const char* key, std::size_t& out) {
    with(key, [&](const YAML::Node& n) { out = scalar_count(n); });
  }
  void flag(const char* key, bool& out) {
    with(key, [&](const YAML::Node& n) { out = scalar_bool(n); });
  }
  void text(const char* key, std::string& out) {
    with(key, [&](const YAML::Node& n) { out = scalar_text(n); });
  }
  template <std::size_t N>
  void numbers(const char* key, std::array<double, N>& out) {
    with(key, [&](const YAML::Node& n) {
      const auto v = number_list(n);
      if (v.size() != N) throw ConfigError(fmt::format("expected {} numbers, got {}", N, v.size()));
      std::copy(v.begin(), v.end(), out.begin());
    });
  }
  void numbers(const char* key, std::vector<double>& out) {
    with(key, [&](const YAML::Node& n) { out = number_list(n); });
  }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.Scalar();
      if (!seen_.count(key)) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", where(source_, kv.first), key_path(key)));
      }
    }
  }

  static double scalar_number(const YAML::Node& n) {
    if (!n.IsScalar()) throw ConfigError("expected a number");
    return parse_number(n.Scalar());
  }
  static std::size_t scalar_count(const YAML::Node& n) {
    if (!n.IsScalar()) throw ConfigError("expected a non-negative integer");
    const std::string s = trim(n.Scalar());
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError(fmt::format("'{}' is not a non-negative integer", s));
    }
    return v;
  }
  static bool scalar_bool(const YAML::Node& n) {
    if (!n.IsScalar()) throw ConfigError("expected true or false");
    const std::string s = trim(n.Scalar());
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(fmt::format("'{}' is not true or false", s));
  }
  static std::string scalar_text(const YAML::Node& n) {
    if (!n.IsScalar()) throw ConfigError("expected a string");
    return n.Scalar();
  }
  static std::vector<double> number_list(const YAML::Node& n) {
    if (!n.IsSequence()) throw ConfigError("expected a list of numbers");
    std::vector<double> out;
    for (const auto& item : n) out.push_back(scalar_number(item));
    return out;
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::string_view source_;
  std::set<std::string> seen_;
};

void read_network(Reader r, exper::NetworkConfig& c) {
  r.with("hidden", [&](const YAML::Node& n) {
    if (!n.IsSequence()) throw ConfigError("expected a list of layer sizes");
    c.hidden.clear();
    for (const auto& item : n) c.hidden.push_back(Reader::scalar_count(item));
  });
  r.with("activation", [&](const YAML::Node& n) {
    c.activation = net::parse_activation(Reader::scalar_text(n));
  });
  r.number("init_scale", c.init_scale);
  r.numbers("output_weights", c.output_weights);
  r.number("input_scale", c.input_scale);
  r.finish();
}

void read_learning(Reader r, exper::LearningConfig& c) {
  r.with("rule", [&](const YAML::Node& n) { c.rule = net::parse_rule(Reader::scalar_text(n)); });
  r.number("eta", c.eta);
  r.number("error_scale", c.error_scale);
  r.finish();
}

void read_reflex(Reader r, loop::ReflexConfig& c) {
  r.numbers("weights", c.weights);
  r.number("reflex_gain", c.reflex_gain);
  r.number("loop_gain", c.loop_gain);
  r.with("mc_limit", [&](const YAML::Node& n) {
    if (n.IsNull() || (n.IsScalar() && (n.Scalar() == "none" || n.Scalar() == "~"))) {
      c.mc_limit.reset();
    } else {
      c.mc_limit = Reader::scalar_number(n);
    }
  });
  r.finish();
}

void read_calibration(Reader r, exper::CalibrationConfig& c) {
  r.flag("enabled", c.enabled);
  r.number("probe_action", c.probe_action);
  r.number("probe_duration", c.probe_duration);
  r.number("track_length", c.track_length);
  r.finish();
}

void read_robot(Reader r, sim::RobotGeometry& c) {
  r.number("wheel_base", c.wheel_base);
  r.number("v0", c.v0);
  r.finish();
}

void read_sensors(Reader r, sim::SensorLayout& c) {
  r.numbers("ldr_lateral", c.ldr_lateral);
  r.number("ldr_forward", c.ldr_forward);
  r.number("fov_radius", c.fov_radius);
  r.number("camera_near", c.camera_near);
  r.number("camera_length", c.camera_length);
  r.number("camera_width", c.camera_width);
  r.count("camera_subsamples", c.camera_subsamples);
  r.finish();
}

void read_filters(Reader r, signals::FilterTaps& taps) {
  r.with("taps", [&](const YAML::Node& n) {
    if (!n.IsSequence() || n.size() != signals::kFilterCount) {
      throw ConfigError(fmt::format("expected a list of {} tap lists", signals::kFilterCount));
    }
    for (std::size_t h = 0; h < signals::kFilterCount; ++h) {
      taps[h] = Reader::number_list(n[h]);
    }
  });
  r.finish();
}

void read_track(Reader r, sim::TrackSpec& c) {
  r.with("kind", [&](const YAML::Node& n) { c.kind = sim::parse_track_kind(Reader::scalar_text(n)); });
  r.number("line_width", c.line_width);
  r.number("cell_size", c.cell_size);
  r.number("margin", c.margin);
  r.number("start_offset", c.start_offset);
  r.number("length", c.length);
  r.number("radius", c.radius);
  r.number("width", c.width);
  r.number("height", c.height);
  r.numbers("corner_radii", c.corner_radii);
  r.with("segments", [&](const YAML::Node& n) {
    if (!n.IsSequence()) throw ConfigError("expected a list of {length, curvature} segments");
    c.segments.clear();
    for (const auto& item : n) {
      if (!item.IsMap()) throw ConfigError("expected a {length, curvature} segment");
      sim::CurvatureSegment seg;
      for (const auto& kv : item) {
        const std::string key = kv.first.Scalar();
        if (key == "length") {
          seg.length = Reader::scalar_number(kv.second);
        } else if (key == "curvature") {
          seg.curvature = Reader::scalar_number(kv.second);
        } else {
          throw ConfigError(fmt::format("unknown segment key '{}'", key));
        }
      }
      c.segments.push_back(seg);
    }
  });
  r.flag("closed", c.closed);
  r.finish();
}

void read_batch(Reader r, exper::BatchSpec& c) {
  r.with("rules", [&](const YAML::Node& n) {
    if (!n.IsSequence()) throw ConfigError("expected a list of rule names");
    c.rules.clear();
    for (const auto& item : n) c.rules.push_back(net::parse_rule(Reader::scalar_text(item)));
  });
  r.numbers("etas", c.etas);
  r.with("seeds", [&](const YAML::Node& n) {
    if (!n.IsSequence()) throw ConfigError("expected a list of seeds");
    c.seeds.clear();
    for (const auto& item : n) c.seeds.push_back(Reader::scalar_count(item));
  });
  r.with("threads", [&](const YAML::Node& n) {
    c.threads = static_cast<unsigned>(Reader::scalar_count(n));
  });
  r.finish();
}

void read_output(Reader r, OutputConfig& c) {
  r.with("root", [&](const YAML::Node& n) { c.root = Reader::scalar_text(n); });
  r.flag("snapshots", c.snapshots);
  r.finish();
}

RunConfig decode(const YAML::Node& doc, std::string_view source) {
  RunConfig cfg;
  exper::TrialConfig& t = cfg.trial;
  Reader r(doc, "", source);
  r.with("seed", [&](const YAML::Node& n) { t.seed = Reader::scalar_count(n); });
  r.number("dt", t.dt);
  r.number("max_duration", t.max_duration);
  r.with("integrator", [&](const YAML::Node& n) {
    t.integrator = sim::parse_integrator(Reader::scalar_text(n));
  });
  r.number("episode_gap", t.episode_gap);
  r.number("spike_threshold", t.spike_threshold);
  r.count("distance_every", t.distance_every);
  r.flag("trace", t.trace);
  {
    Reader s = r.child("success");
    s.number("threshold", t.success_threshold);
    s.number("window", t.window);
    s.number("warmup", t.warmup);
    s.number("grace", t.grace);
    s.finish();
  }
  read_network(r.child("network"), t.network);
  read_learning(r.child("learning"), t.learning);
  read_reflex(r.child("reflex"), t.reflex);
  read_calibration(r.child("calibration"), t.calibration);
  read_robot(r.child("robot"), t.robot);
  read_sensors(r.child("sensors"), t.sensors);
  read_filters(r.child("filters"), t.filter_taps);
  read_track(r.child("track"), t.track);
  read_batch(r.child("batch"), cfg.batch);
  read_output(r.child("output"), cfg.output);
  r.finish();
  return cfg;
}

void apply_override(YAML::Node& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not of the form key=value", assignment));
  }
  const std::string key = trim(std::string_view(assignment).substr(0, eq));
  const std::string value = trim(std::string_view(assignment).substr(eq + 1));
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError(fmt::format("override key '{}' has an empty component", key));
    parts.push_back(part);
  }
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("override '{}': {}", assignment, e.msg));
  }
  if (!doc.IsMap()) doc = YAML::Node(YAML::NodeType::Map);
  YAML::Node node = doc;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = node[parts[i]];
    if (!next.IsMap()) {
      node[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next = node[parts[i]];
    }
    node.reset(next);
  }
  node[parts.back()] = parsed;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string num_list(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out + "]";
}

std::string yaml_quoted(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

double parse_number(std::string_view text) {
  const std::string s = trim(text);
  if (s.rfind("e^", 0) == 0) return std::exp(strict_double(s.substr(2)));
  if (s.rfind("exp(", 0) == 0 && s.back() == ')') {
    return std::exp(strict_double(s.substr(4, s.size() - 5)));
  }
  return strict_double(s);
}

RunConfig parse(std::string_view text, std::string_view source,
                const std::vector<std::string>& overrides) {
  YAML::Node doc;
  try {
    doc = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  if (doc.IsNull() || !doc.IsDefined()) doc = YAML::Node(YAML::NodeType::Map);
  if (!doc.IsMap()) throw ConfigError(fmt::format("{}: top level must be a mapping", source));
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig cfg = decode(doc, source);
  try {
    cfg.trial.validate();
    cfg.batch.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.what()));
  }
  return cfg;
}

RunConfig load(const std::optional<std::filesystem::path>& path,
               const std::vector<std::string>& overrides) {
  if (!path) return parse("", "<defaults>", overrides);
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path->string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path->string(), overrides);
}

std::string dump(const RunConfig& config, bool include_output) {
  const exper::TrialConfig& t = config.trial;
  std::string o;
  const auto line = [&o](std::string_view s) {
    o += s;
    o += '\n';
  };
  line(fmt::format("seed: {}", t.seed));
  line(fmt::format("dt: {}", num(t.dt)));
  line(fmt::format("max_duration: {}", num(t.max_duration)));
  line(fmt::format("integrator: {}", sim::to_string(t.integrator)));
  line(fmt::format("episode_gap: {}", num(t.episode_gap)));
  line(fmt::format("spike_threshold: {}", num(t.spike_threshold)));
  line(fmt::format("distance_every: {}", t.distance_every));
  line(fmt::format("trace: {}", t.trace));
  line("success:");
  line(fmt::format("  threshold: {}", num(t.success_threshold)));
  line(fmt::format("  window: {}", num(t.window)));
  line(fmt::format("  warmup: {}", num(t.warmup)));
  line(fmt::format("  grace: {}", num(t.grace)));
  line("network:");
  line(fmt::format("  hidden: [{}]", fmt::join(t.network.hidden, ", ")));
  line(fmt::format("  activation: {}", net::to_string(t.network.activation)));
  line(fmt::format("  init_scale: {}", num(t.network.init_scale)));
  line(fmt::format("  output_weights: {}", num_list(t.network.output_weights)));
  line(fmt::format("  input_scale: {}", num(t.network.input_scale)));
  line("learning:");
  line(fmt::format("  rule: {}", net::to_string(t.learning.rule)));
  line(fmt::format("  eta: {}", num(t.learning.eta)));
  line(fmt::format("  error_scale: {}", num(t.learning.error_scale)));
  line("reflex:");
  line(fmt::format("  weights: {}", num_list(t.reflex.weights)));
  line(fmt::format("  reflex_gain: {}", num(t.reflex.reflex_gain)));
  line(fmt::format("  loop_gain: {}", num(t.reflex.loop_gain)));
  line(fmt::format("  mc_limit: {}", t.reflex.mc_limit ? num(*t.reflex.mc_limit) : "null"));
  line("calibration:");
  line(fmt::format("  enabled: {}", t.calibration.enabled));
  line(fmt::format("  probe_action: {}", num(t.calibration.probe_action)));
  line(fmt::format("  probe_duration: {}", num(t.calibration.probe_duration)));
  line(fmt::format("  track_length: {}", num(t.calibration.track_length)));
  line("robot:");
  line(fmt::format("  wheel_base: {}", num(t.robot.wheel_base)));
  line(fmt::format("  v0: {}", num(t.robot.v0)));
  line("sensors:");
  line(fmt::format("  ldr_lateral: {}", num_list(t.sensors.ldr_lateral)));
  line(fmt::format("  ldr_forward: {}", num(t.sensors.ldr_forward)));
  line(fmt::format("  fov_radius: {}", num(t.sensors.fov_radius)));
  line(fmt::format("  camera_near: {}", num(t.sensors.camera_near)));
  line(fmt::format("  camera_length: {}", num(t.sensors.camera_length)));
  line(fmt::format("  camera_width: {}", num(t.sensors.camera_width)));
  line(fmt::format("  camera_subsamples: {}", t.sensors.camera_subsamples));
  line("filters:");
  line("  taps:");
  for (const auto& taps : t.filter_taps) line(fmt::format("    - {}", num_list(taps)));
  line("track:");
  line(fmt::format("  kind: {}", sim::to_string(t.track.kind)));
  line(fmt::format("  line_width: {}", num(t.track.line_width)));
  line(fmt::format("  cell_size: {}", num(t.track.cell_size)));
  line(fmt::format("  margin: {}", num(t.track.margin)));
  line(fmt::format("  start_offset: {}", num(t.track.start_offset)));
  line(fmt::format("  length: {}", num(t.track.length)));
  line(fmt::format("  radius: {}", num(t.track.radius)));
  line(fmt::format("  width: {}", num(t.track.width)));
  line(fmt::format("  height: {}", num(t.track.height)));
  line(fmt::format("  corner_radii: {}", num_list(t.track.corner_radii)));
  if (t.track.segments.empty()) {
    line("  segments: []");
  } else {
    line("  segments:");
    for (const auto& s : t.track.segments) {
      line(fmt::format("    - {{length: {}, curvature: {}}}", num(s.length), num(s.curvature)));
    }
  }
  line(fmt::format("  closed: {}", t.track.closed));
  line("batch:");
  std::vector<std::string_view> rules;
  for (auto r : config.batch.rules) rules.push_back(net::to_string(r));
  line(fmt::format("  rules: [{}]", fmt::join(rules, ", ")));
  line(fmt::format("  etas: {}", num_list(config.batch.etas)));
  line(fmt::format("  seeds: [{}]", fmt::join(config.batch.seeds, ", ")));
  line(fmt::format("  threads: {}", config.batch.threads));
  if (include_output) {
    line("output:");
    line(fmt::format("  root: {}", yaml_quoted(config.output.root.string())));
    line(fmt::format("  snapshots: {}", config.output.snapshots));
  }
  return o;
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : dump(config, false)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) { return fmt::format("{:016x}", hash); }

std::filesystem::path output_root(const RunConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return config.output.root;
}

}  // namespace sarbot::config
