#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace citeforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // unexpected internal error
inline constexpr int kExitInvalid = 2;  // bad arguments or invalid inputs

/// Record written next to every command's artifact. Contains no clock
/// values, so equal configurations over equal inputs give equal manifests.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  /// Hashes every input; throws IoError if one is unreadable.
  nlohmann::ordered_json to_json() const;
};

/// `<artifact>.manifest.json` for files, `<dir>/manifest.json` for directories.
std::filesystem::path manifest_path(const std::filesystem::path& artifact);
void write_manifest(const RunManifest& m, const std::filesystem::path& artifact);

/// Data directory from CITEFORGE_DATA_DIR, else "./citeforge-data".
std::filesystem::path default_data_dir();

/// Full command line entry point; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace citeforge::cli
