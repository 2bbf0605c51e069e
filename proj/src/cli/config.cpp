#include <chrono>
#include <fstream>
#include <ostream>

#include "compolab/cli.hpp"
#include "compolab/digest.hpp"
#include "compolab/errors.hpp"

namespace compolab::cli {

namespace fs = std::filesystem;

json load_config(const RunOptions& options) {
  if (!options.config) return json::object();
  if (!fs::exists(*options.config))
    fail(ErrorKind::InvalidInput, "config file " + options.config->string() + " does not exist");
  json cfg = read_json_file(*options.config);
  if (!cfg.is_object()) fail(ErrorKind::Parse, options.config->string() + ": config must be a JSON object");
  return cfg;
}

fs::path config_base(const RunOptions& options) {
  if (!options.config) return fs::current_path();
  const fs::path parent = options.config->parent_path();
  return parent.empty() ? fs::current_path() : parent;
}

std::string config_digest(const std::string& subcommand, const json& resolved) {
  const json keyed = {{"subcommand", subcommand}, {"version", kVersion}, {"config", resolved}};
  return sha256_hex(keyed.dump());
}

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::InvalidInput, "failed writing " + path.string());
}

}  // namespace

fs::path execute(const std::string& subcommand, const RunOptions& options, std::ostream& log) {
  const json raw = load_config(options);
  json resolved;
  Payload (*runner)(const json&, int) = nullptr;
  if (subcommand == "laminate") {
    resolved = resolve_laminate(raw, options);
    runner = run_laminate;
  } else if (subcommand == "cell") {
    resolved = resolve_cell(raw, options);
    runner = run_cell;
  } else if (subcommand == "twowell") {
    resolved = resolve_twowell(raw, options);
    runner = run_twowell;
  } else if (subcommand == "bounds") {
    resolved = resolve_bounds(raw, options);
    runner = run_bounds;
  } else if (subcommand == "generate-geometry") {
    resolved = resolve_generate(raw, options);
    runner = run_generate;
  } else {
    fail(ErrorKind::InvalidInput, "unknown subcommand '" + subcommand + "'");
  }

  const std::string digest = config_digest(subcommand, resolved);
  const fs::path dir = options.out / (subcommand + "-" + digest.substr(0, 16));
  const fs::path envelope_path = dir / "envelope.json";
  if (!options.force && fs::exists(envelope_path)) {
    log << "cached " << dir.string() << "\n";
    return dir;
  }

  const auto start = std::chrono::steady_clock::now();
  const Payload payload = runner(resolved, std::max(1, options.jobs));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(dir);
  json files = json::array();
  for (const auto& [name, bytes] : payload) {
    write_file(dir / name, bytes);
    files.push_back(name);
  }
  const json envelope = {{"subcommand", subcommand},
                         {"digest", digest},
                         {"version", kVersion},
                         {"timing_seconds", seconds},
                         {"jobs", options.jobs},
                         {"config", resolved},
                         {"files", files}};
  write_file(envelope_path, envelope.dump(2) + "\n");
  log << dir.string() << "\n";
  return dir;
}

}  // namespace compolab::cli
