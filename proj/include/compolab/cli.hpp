#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "compolab/json_io.hpp"

namespace compolab::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Flags shared by every subcommand.
struct RunOptions {
  std::optional<std::filesystem::path> config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "out";
  bool force = false;
  std::optional<double> tol;
  /// Geometry name for generate-geometry.
  std::optional<std::string> name;
};

/// File name -> exact bytes. Every payload file is a pure function of the
/// resolved configuration.
using Payload = std::map<std::string, std::string>;

/// Raw configuration object ({} without --config). Throws Parse/InvalidInput.
json load_config(const RunOptions& options);

/// Directory used to resolve relative paths inside the configuration.
std::filesystem::path config_base(const RunOptions& options);

/// SHA-256 of the canonical dump of a resolved configuration and the tool version.
std::string config_digest(const std::string& subcommand, const json& resolved);

/**
 * Resolution fills every default, applies flag overrides and inlines the
 * contents of referenced files, so the result fully determines the payload.
 */
json resolve_laminate(const json& raw, const RunOptions& options);
json resolve_cell(const json& raw, const RunOptions& options);
json resolve_twowell(const json& raw, const RunOptions& options);
json resolve_bounds(const json& raw, const RunOptions& options);
json resolve_generate(const json& raw, const RunOptions& options);

Payload run_laminate(const json& cfg, int jobs);
Payload run_cell(const json& cfg, int jobs);
Payload run_twowell(const json& cfg, int jobs);
Payload run_bounds(const json& cfg, int jobs);
Payload run_generate(const json& cfg, int jobs);

/**
 * Resolves, hashes and runs one subcommand, writing the payload and
 * envelope.json under options.out/<subcommand>-<digest prefix>/. An existing
 * result directory is reused unless options.force is set. Returns the
 * result directory.
 */
std::filesystem::path execute(const std::string& subcommand, const RunOptions& options,
                              std::ostream& log);

/// Process entry point; maps failures to exit codes 2 (input), 3 (numerical)
/// and 4 (internal).
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace compolab::cli
