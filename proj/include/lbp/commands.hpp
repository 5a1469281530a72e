#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "lbp/run_config.hpp"

namespace lbp {

struct Artifact {
    std::filesystem::path path;
    std::string sha256;
};

struct CommandResult {
    std::string command;
    std::vector<Artifact> artifacts;
    std::filesystem::path manifest;
};

/// simulate, train, eval, gradcheck, wiring, pipeline
const std::vector<std::string>& command_names();

/// Runs one command with a fully resolved config, prints a human summary to
/// `out`, and writes `run_manifest_<command>.json` under paths.out_dir.
/// Throws ConfigError / IoError / NumericError (a failing gradcheck is a
/// NumericError, raised after its report and manifest are written).
CommandResult run_command(const RunConfig& config, const std::string& command, std::ostream& out);

/// Deterministic manifest document: command, resolved config, seeds and
/// artifact hashes (paths relative to out_dir when possible).
nlohmann::json run_manifest(const RunConfig& config, const std::string& command,
                            const std::vector<Artifact>& artifacts);

std::filesystem::path checkpoint_path(const RunConfig& config, int horizon);
std::filesystem::path history_path(const RunConfig& config, int horizon);
std::filesystem::path scenario_path(const RunConfig& config, const std::string& scenario_name);

struct GradcheckEntry {
    int instance = 0;
    std::string parameter;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradcheckReport {
    int instances = 0;
    std::size_t scalars_checked = 0;
    int redraws = 0;  // instances replaced because a gradient was below FD resolution
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<GradcheckEntry> worst;  // largest relative errors first
};

/// Random (wiring, params, window) instances derived from config.seed;
/// BPTT gradients against central finite differences.
GradcheckReport run_gradcheck(const RunConfig& config);
std::string gradcheck_text(const GradcheckReport& report);

}  // namespace lbp
