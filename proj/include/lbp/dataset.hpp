#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lbp/ltc.hpp"

namespace lbp {

inline constexpr double kWeakBeamThreshold = 0.4;
inline constexpr int kDefaultObservationLength = 32;

/// Normalized received power r[t] and link blockage labels x[t] for one beam.
struct PowerTrace {
    int beam_id = 0;
    std::vector<double> power;
    std::vector<std::uint8_t> labels;

    std::size_t length() const noexcept { return power.size(); }
    bool operator==(const PowerTrace&) const = default;
};

/// All beams of one scenario file. Labels are link-level, so every trace
/// carries the same label vector.
struct Scenario {
    std::string id;
    std::vector<long> t;
    std::vector<PowerTrace> traces;

    std::size_t length() const noexcept { return t.size(); }
    int n_beams() const noexcept { return static_cast<int>(traces.size()); }
};

/// Column name for beam b, zero-padded to the width implied by n_beams.
std::string power_column_name(int beam, int n_beams);

std::string scenario_to_csv(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Strict reader for `t,p00,...,pNN,blocked`. Tolerates CRLF and one
/// trailing newline. Throws SchemaError with row/column on bad content and
/// IoError when the file cannot be read. The scenario id is the file stem.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario_csv(const std::string& text, const std::string& scenario_id);

/// Divide by the maximum. Requires a positive maximum and nonnegative input.
std::vector<double> normalize_power(std::span<const double> raw);

/// Scenario-wide max normalization across all beams.
void normalize_scenario(Scenario& scenario);

enum class ExclusionMode { Beam, Sample };

/// mask[b] is true when beam b is kept: mean power over unblocked samples >= threshold.
std::vector<bool> filter_weak_beams(std::span<const PowerTrace> traces, double threshold = kWeakBeamThreshold);

/// One labelled training/evaluation instance.
struct Sample {
    ObservationWindow window;
    int horizon = 1;
    int label = 0;
    int beam_id = 0;
    std::string scenario_id;
};

struct WindowedDataset {
    std::vector<Sample> samples;
    std::vector<std::string> warnings;
};

/// Features [r[t], r[t] - r[t-1]] for rows t_end-T_ob+1 .. t_end; the first
/// row's difference is 0.
ObservationWindow make_window(const PowerTrace& trace, int t_end, int t_ob);

/// Sliding windows over every masked-in beam; t_end advances by `stride`
/// starting at T_ob-1. An empty mask keeps every beam.
WindowedDataset window_dataset(std::span<const PowerTrace> traces, int t_ob, int horizon, int stride,
                               const std::vector<bool>& mask, const std::string& scenario_id = "");

/// n_included_beams * floor((L - T_ob - K) / stride + 1), or 0 when L < T_ob + K.
std::size_t expected_sample_count(std::size_t n_included, std::size_t length, int t_ob, int horizon, int stride);

}  // namespace lbp
