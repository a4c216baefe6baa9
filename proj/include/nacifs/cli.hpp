#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace nacifs {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitValidation = 3,
  kExitEstimation = 4,
};

/// Entry point of the `nacifs` tool. argv[0] is the program name.
int run_cli(int argc, const char* const* argv);
/// Same with the program name omitted.
int run_cli(const std::vector<std::string>& args);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Human-readable rendering of a run manifest.
std::string render_manifest(const nlohmann::json& manifest);

}  // namespace nacifs
