#pragma once

#include "sarbot/exper.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sarbot::config {

struct OutputConfig {
  std::filesystem::path root = "runs";
  // Heatmap and weight snapshot export.
  bool snapshots = true;
};

struct RunConfig {
  exper::TrialConfig trial;
  exper::BatchSpec batch;
  OutputConfig output;
};

// Environment variable that replaces output.root when set.
inline constexpr const char* kOutputRootEnv = "SARBOT_OUTPUT_ROOT";

// Accepts plain numbers and the forms "e^-5", "e-5" style exponents of e.
double parse_number(std::string_view text);

// Parses YAML text. Unknown keys and bad values throw ConfigError carrying
// `source:line:col`. Each override is "dotted.key=value" and is applied to
// the document before validation.
RunConfig parse(std::string_view text, std::string_view source = "<config>",
                const std::vector<std::string>& overrides = {});
RunConfig load(const std::optional<std::filesystem::path>& path,
               const std::vector<std::string>& overrides = {});

// Canonical YAML; parse(dump(c)) reproduces c.
std::string dump(const RunConfig& config, bool include_output = true);

// FNV-1a over the canonical dump without the output section.
std::uint64_t config_hash(const RunConfig& config);
std::string hash_hex(std::uint64_t hash);

// output.root, or the environment override.
std::filesystem::path output_root(const RunConfig& config);

}  // namespace sarbot::config
