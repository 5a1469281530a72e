#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lbp/checkpoint.hpp"
#include "lbp/dataset.hpp"

namespace lbp {

struct Metrics {
    std::string scenario_id;
    int horizon = 1;
    long n_samples = 0;
    double accuracy = 0.0;
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    /// tp / (tp + fp), 0 when nothing was predicted blocked.
    double precision() const noexcept;
    /// tp / (tp + fn), 0 when nothing was blocked.
    double recall() const noexcept;

    bool operator==(const Metrics&) const = default;
};

/// Fraction of exact matches. Requires equal, non-zero lengths.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Confusion counts and accuracy for one prediction/label pairing.
Metrics tally(std::span<const int> predictions, std::span<const int> labels, const std::string& scenario_id = "",
              int horizon = 1);

struct EvalOptions {
    double threshold = kWeakBeamThreshold;
    ExclusionMode exclusion = ExclusionMode::Beam;
    int stride = 1;
};

/// Maps one sample to a 0/1 prediction. Used as a seam for stub predictors.
using Predictor = std::function<int(const Sample&)>;

/// Normalizes, applies the weak-beam rule, windows with the given T_ob and
/// horizon, and tallies predictions. The scenario is taken by value since
/// it is normalized in place.
Metrics evaluate_predictor(const Predictor& predictor, Scenario scenario, int t_ob, int horizon,
                           const EvalOptions& options = {});

/// Throws ConfigError when the checkpoint was trained for a different horizon.
Metrics evaluate(const Checkpoint& checkpoint, const Scenario& scenario, int horizon, const EvalOptions& options = {});

/// Published accuracies on the measured dataset, per outdoor scenario and
/// horizon. Report annotations only; never acceptance targets.
struct ReferenceAccuracy {
    const char* scenario;
    int horizon;
    double ltc;
    double baseline;
};

std::span<const ReferenceAccuracy> reference_accuracies();

inline constexpr double kReferenceT1Floor = 0.9785;
inline constexpr double kReferenceRangeLow = 0.7395;
inline constexpr double kReferenceRangeHigh = 0.996;

/// `scenario,K,n,accuracy,precision,recall,tp,fp,tn,fn`
std::string report_csv(std::span<const Metrics> metrics);
std::vector<Metrics> parse_report_csv(const std::string& text);

/// Plain-text table of synthetic results next to the published reference
/// numbers, labelled as non-comparable.
std::string report_table(std::span<const Metrics> metrics);

struct ReportFiles {
    std::filesystem::path csv;
    std::filesystem::path table;
};

/// Writes metrics.csv and comparison.txt under out_dir. Throws ConfigError on empty input.
ReportFiles write_report(std::span<const Metrics> metrics, const std::filesystem::path& out_dir);

}  // namespace lbp
