#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lbp/dataset.hpp"

namespace lbp {

inline constexpr int kGeneratorVersion = 1;

/// Pre-blockage ripple. Each event draws lead time, amplitude and frequency
/// uniformly from [min, max]; min == max gives a fixed (controlled) signature.
struct SignatureSpec {
    int lead_time_min = 12;
    int lead_time_max = 12;
    double amplitude_min = 0.15;
    double amplitude_max = 0.15;
    double frequency_min = 0.2;  // cycles per sample
    double frequency_max = 0.2;
    double decay = 0.08;         // per sample, measured backwards from onset

    bool operator==(const SignatureSpec&) const = default;
};

struct ScenarioProfile {
    std::string name = "indoor";
    int n_beams = 64;
    int trace_length = 384;
    double strong_beam_fraction = 0.75;
    double noise_std = 0.02;
    double blockage_rate = 12.0;  // expected events per 1000 samples
    int duration_min = 8;
    int duration_max = 12;
    double depth = 0.05;
    SignatureSpec signature;
    std::uint64_t seed = 1;

    bool operator==(const ScenarioProfile&) const = default;
};

struct BlockageEvent {
    int onset = 0;
    int duration = 0;
    double depth = 0.0;
    int lead_time = 0;
    double ripple_amplitude = 0.0;
    double ripple_frequency = 0.0;

    bool operator==(const BlockageEvent&) const = default;
};

/// Throws ConfigError when the profile cannot produce a valid trace.
void validate_profile(const ScenarioProfile& profile, int min_length = 0);

/// Link-level events shared by every beam of the profile. Throws ConfigError
/// when non-overlapping placement fails after bounded retries.
std::vector<BlockageEvent> generate_events(const ScenarioProfile& profile);

/// Per-beam baseline level; strong beams in [0.5, 1.0], weak in [0.05, 0.35].
double beam_baseline(const ScenarioProfile& profile, int beam_id);

/// Multiplicative ripple factor at time t for the given event (1 outside its lead window).
double signature_factor(const BlockageEvent& event, double decay, int t);

PowerTrace generate_trace(const ScenarioProfile& profile, int beam_id);
PowerTrace generate_trace(const ScenarioProfile& profile, int beam_id, const std::vector<BlockageEvent>& events);

struct GeneratedScenario {
    Scenario scenario;
    std::vector<BlockageEvent> events;
};

GeneratedScenario generate_scenario(const ScenarioProfile& profile);

ScenarioProfile default_indoor_profile();
/// Six outdoor profiles named 17..22.
std::vector<ScenarioProfile> default_outdoor_profiles();

nlohmann::json profile_to_json(const ScenarioProfile& profile);
/// Missing keys keep the defaults of `base`.
ScenarioProfile profile_from_json(const nlohmann::json& j, const ScenarioProfile& base = {});

struct ScenarioFile {
    std::string name;
    std::string role;  // "indoor" or "outdoor"
    std::filesystem::path path;
    std::string sha256;
};

struct ScenarioSetManifest {
    std::vector<ScenarioFile> files;
    nlohmann::json json;
};

/// Writes `<name>.csv` per profile and `scenario_manifest.json` under out_dir.
/// File paths inside the manifest are relative to out_dir.
ScenarioSetManifest generate_scenario_set(const ScenarioProfile& indoor, const std::vector<ScenarioProfile>& outdoor,
                                          const std::filesystem::path& out_dir);

}  // namespace lbp
