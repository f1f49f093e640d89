#pragma once

#include <stdexcept>
#include <string>

#include "oasis/sim.hpp"

namespace oasis {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A parsed run configuration: the experiment settings plus output paths.
struct RunConfig {
    RunSettings settings;
    std::string summary_path;  // empty: derived from --out or the default
    std::string steps_path;
};

/// Parses the sectioned key-value configuration format (see README for the
/// grammar). Unknown sections or keys and out-of-range values raise
/// ConfigError with the offending name in the message.
RunConfig parse_run_config_text(const std::string& text);

/// Reads and parses a configuration file. Missing or unreadable files raise
/// ConfigError.
RunConfig parse_run_config_file(const std::string& path);

/// Serializes settings back to the configuration text format. Parsing the
/// result yields semantically identical settings.
std::string settings_to_config_text(const RunSettings& settings);

}  // namespace oasis
