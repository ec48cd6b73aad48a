#include "sarbot/config.hpp"
#include "sarbot/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

namespace {

using namespace sarbot;
using config::parse;

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {}) {
  try {
    parse(text, "test.yaml", overrides);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseNumber, Forms) {
  EXPECT_DOUBLE_EQ(config::parse_number("0.25"), 0.25);
  EXPECT_DOUBLE_EQ(config::parse_number("1e-3"), 1e-3);
  EXPECT_DOUBLE_EQ(config::parse_number("e^-5"), std::exp(-5.0));
  EXPECT_DOUBLE_EQ(config::parse_number("e^-1"), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(config::parse_number("exp(-5)"), std::exp(-5.0));
  EXPECT_THROW(config::parse_number("fast"), ConfigError);
  EXPECT_THROW(config::parse_number("1.0x"), ConfigError);
}

TEST(Parse, EmptyGivesDefaults) {
  const auto c = parse("");
  EXPECT_EQ(c.trial.seed, 1u);
  EXPECT_EQ(c.trial.learning.rule, net::RuleKind::kSar);
  EXPECT_EQ(c.trial.network.hidden.size(), 10u);
  EXPECT_EQ(c.batch.seeds.size(), 10u);
}

TEST(Parse, ReadsNestedValues) {
  const auto c = parse(R"(seed: 9
learning:
  rule: gdm
  eta: e^-1
reflex:
  mc_limit: null
track:
  kind: schedule
  closed: false
  segments:
    - {length: 50, curvature: 0}
    - {length: 20, curvature: 0.02}
batch:
  rules: [sar, localprop]
)");
  EXPECT_EQ(c.trial.seed, 9u);
  EXPECT_EQ(c.trial.learning.rule, net::RuleKind::kGdm);
  EXPECT_DOUBLE_EQ(c.trial.learning.eta, std::exp(-1.0));
  EXPECT_FALSE(c.trial.reflex.mc_limit.has_value());
  ASSERT_EQ(c.trial.track.segments.size(), 2u);
  EXPECT_EQ(c.trial.track.segments[1].curvature, 0.02);
  EXPECT_EQ(c.batch.rules.size(), 2u);
}

TEST(Parse, UnknownKeyReportsLocation) {
  const std::string msg = error_of("seed: 3\nlearning:\n  rule: sar\n  etaa: 0.1\n");
  EXPECT_NE(msg.find("test.yaml:4:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("learning.etaa"), std::string::npos) << msg;
}

TEST(Parse, BadValuesReportLocation) {
  const std::string rule = error_of("learning:\n  rule: adam\n");
  EXPECT_NE(rule.find("test.yaml:2:9"), std::string::npos) << rule;
  EXPECT_FALSE(error_of("dt: -1\n").empty());
  EXPECT_FALSE(error_of("network:\n  hidden: [4, x]\n").empty());
  EXPECT_FALSE(error_of("seed: [1\n").empty());
  EXPECT_FALSE(error_of("- 1\n- 2\n").empty());
}

TEST(Overrides, ApplyBeforeDecoding) {
  const auto c = parse("seed: 3\n", "t", {"seed=5", "learning.eta=e^-1", "track.kind=circle", "batch.seeds=[4,5]"});
  EXPECT_EQ(c.trial.seed, 5u);
  EXPECT_DOUBLE_EQ(c.trial.learning.eta, std::exp(-1.0));
  EXPECT_EQ(c.trial.track.kind, sim::TrackKind::kCircle);
  EXPECT_EQ(c.batch.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_FALSE(error_of("", {"learning.nothing=1"}).empty());
  EXPECT_FALSE(error_of("", {"seed"}).empty());
}

TEST(Dump, RoundTrips) {
  auto c = parse("", "t", {"seed=77", "learning.rule=localprop", "reflex.mc_limit=null", "sensors.fov_radius=0.75"});
  const std::string text = config::dump(c);
  const auto back = parse(text);
  EXPECT_EQ(config::dump(back), text);
  EXPECT_EQ(back.trial.seed, 77u);
  EXPECT_FALSE(back.trial.reflex.mc_limit.has_value());
  EXPECT_DOUBLE_EQ(back.trial.learning.eta, c.trial.learning.eta);
}

TEST(Hash, IgnoresOutputSection) {
  const auto a = parse("seed: 1\n");
  const auto b = parse("seed: 1\noutput:\n  root: elsewhere\n  snapshots: false\n");
  const auto c = parse("seed: 2\n");
  EXPECT_EQ(config::config_hash(a), config::config_hash(b));
  EXPECT_NE(config::config_hash(a), config::config_hash(c));
  EXPECT_EQ(config::hash_hex(0x1234).size(), 16u);
  EXPECT_EQ(config::hash_hex(0xabc), "0000000000000abc");
}

TEST(OutputRoot, EnvironmentOverride) {
  const auto c = parse("output:\n  root: here\n");
  ::unsetenv(config::kOutputRootEnv);
  EXPECT_EQ(config::output_root(c), std::filesystem::path("here"));
  ::setenv(config::kOutputRootEnv, "/tmp/there", 1);
  EXPECT_EQ(config::output_root(c), std::filesystem::path("/tmp/there"));
  ::unsetenv(config::kOutputRootEnv);
}

TEST(Load, MissingFile) {
  EXPECT_THROW(config::load(std::filesystem::path("/nonexistent/sarbot.yaml")), ConfigError);
  EXPECT_NO_THROW(config::load(std::nullopt));
}

}  // namespace
