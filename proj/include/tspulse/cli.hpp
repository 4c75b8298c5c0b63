#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace tspulse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

inline constexpr const char* kVersion = "0.1.0";

const std::vector<std::string>& commands();

/// Every key a command accepts, with its default value. "model" holds the
/// model configuration.
nlohmann::json default_config(const std::string& command);

/// defaults <- file <- flags. ConfigError naming the key on unknown keys or
/// values of the wrong type.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file, const nlohmann::json& flags);

/// Runs a resolved command and writes its artifacts plus manifest.json into
/// cfg["out"]. Errors propagate as exceptions.
void run_command(const std::string& command, const nlohmann::json& cfg, std::ostream& log);

/// Maps an exception to an exit status: 2 configuration, 3 data, 4 numerical.
int exit_code_for(const std::exception& e);

/// Full command line entry point.
int main(int argc, char** argv);

}  // namespace tspulse::cli
