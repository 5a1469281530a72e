#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lbp/dataset.hpp"
#include "lbp/linksim.hpp"
#include "lbp/training.hpp"
#include "lbp/wiring.hpp"

namespace lbp {

struct GradcheckConfig {
    int instances = 24;
    double eps = 1e-5;
    double tolerance = 1e-4;
    int min_rows = 4;
    int max_rows = 12;
    int worst_offenders = 5;
    /// Test seam: corrupts the analytic gradient so the check must fail.
    bool inject_bug = false;

    bool operator==(const GradcheckConfig&) const = default;
};

struct RunPaths {
    std::filesystem::path out_dir = "runs/default";
    /// Empty means a fixed subdirectory of out_dir (scenarios/, checkpoints/, report/).
    std::filesystem::path scenario_dir;
    std::filesystem::path checkpoint_dir;
    std::filesystem::path report_dir;

    std::filesystem::path scenarios() const { return scenario_dir.empty() ? out_dir / "scenarios" : scenario_dir; }
    std::filesystem::path checkpoints() const {
        return checkpoint_dir.empty() ? out_dir / "checkpoints" : checkpoint_dir;
    }
    std::filesystem::path reports() const { return report_dir.empty() ? out_dir / "report" : report_dir; }

    bool operator==(const RunPaths&) const = default;
};

/// Every knob of a run, fully resolved. The model seed drives wiring
/// generation, parameter initialization and training order; scenario
/// profiles carry their own seeds.
struct RunConfig {
    std::uint64_t seed = 1;
    int t_ob = kDefaultObservationLength;
    std::vector<int> horizons{1, 5, 10};
    int stride = 1;
    int ode_unfolds = kDefaultOdeUnfolds;
    int workers = 1;
    double threshold = kWeakBeamThreshold;
    ExclusionMode exclusion = ExclusionMode::Beam;
    LayerCounts counts;
    FanoutConfig fanout;
    TrainConfig train;
    ScenarioProfile indoor = default_indoor_profile();
    std::vector<ScenarioProfile> outdoor = default_outdoor_profiles();
    GradcheckConfig gradcheck;
    RunPaths paths;

    bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError on out-of-range values.
void validate_run_config(const RunConfig& config);

/// Full resolved form; round-trips through run_config_from_json.
nlohmann::json run_config_to_json(const RunConfig& config);

/// Keys absent from `j` keep their defaults; unknown keys are rejected.
/// A run manifest (an object with "command" and "config") is accepted and
/// its "config" member used. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);

std::string exclusion_name(ExclusionMode mode);
ExclusionMode exclusion_from_name(const std::string& name);

}  // namespace lbp
