#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "millopt/driver.hpp"

namespace millopt {

struct ParsedConfig {
  RunConfig config;
  std::vector<std::string> warnings;
};

/// Parses the TOML subset used for run files: sections [grid], [filter],
/// [shadow], [project], [material], [loads], [mma], [run] and [solver];
/// numbers, strings, booleans and (nested) arrays. Unknown sections and keys,
/// duplicates and missing required keys raise ConfigError with the line.
ParsedConfig parse_config_text(std::string_view text, std::string_view source = "<config>");
ParsedConfig parse_config(const std::filesystem::path& path);

/// Fully resolved configuration, every default written out with 17
/// significant digits so that parsing it again gives an identical RunConfig.
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace millopt
