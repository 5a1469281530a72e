#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lbp/checkpoint.hpp"
#include "lbp/dataset.hpp"
#include "lbp/ltc.hpp"

namespace lbp {

inline constexpr double kProbabilityClamp = 1e-12;

/// One entry per stored scalar, in LtcParameters' canonical flat order.
struct GradientSet {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

/// Gradient with respect to the materialized cell quantities (tau, w, A
/// after their positive maps).
struct CellGradient {
    std::vector<double> tau;
    std::vector<double> w;
    std::vector<double> gamma;
    std::vector<double> mu;
    std::vector<double> reversal;
    std::vector<double> input_scale;
    std::vector<double> input_bias;
    std::vector<double> output_scale;
    double output_bias = 0.0;
};

struct CellBackward {
    double loss = 0.0;
    double probability = 0.0;
    CellGradient grad;
};

struct Backward {
    double loss = 0.0;
    double probability = 0.0;
    GradientSet grad;
};

/// Binary cross-entropy with p clamped to [1e-12, 1 - 1e-12].
double loss_bce(double probability, int label);

/// Reverse-mode pass through every fused step and the output sigmoid.
CellBackward backward_cell(const ObservationWindow& window, int label, const CompiledCell& cell, int ode_unfolds);

/// Chain rule through the softplus / exp storage maps.
GradientSet storage_gradient(const LtcParameters& params, const NcpWiring& wiring, const CellGradient& cell_grad);

Backward backward(const ObservationWindow& window, int label, const LtcParameters& params, const NcpWiring& wiring,
                  int ode_unfolds = kDefaultOdeUnfolds);

/// Loss of a forward pass with the given parameters.
double sample_loss(const ObservationWindow& window, int label, const LtcParameters& params, const NcpWiring& wiring,
                   int ode_unfolds = kDefaultOdeUnfolds);

/// Central differences over every stored scalar: two forward passes each.
GradientSet finite_diff_grad(const ObservationWindow& window, int label, const LtcParameters& params,
                             const NcpWiring& wiring, double eps, int ode_unfolds = kDefaultOdeUnfolds);

/// |a - b| / max(1e-8, |a| + |b|)
double relative_error(double a, double b) noexcept;

struct AdamHyper {
    double learning_rate = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamMoments {
    std::vector<double> m;
    std::vector<double> v;

    static AdamMoments zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
};

struct AdamResult {
    std::vector<double> params;
    AdamMoments moments;
};

/// Bias-corrected Adam on flat storage values. step_index starts at 1.
AdamResult adam_step(std::span<const double> params, const GradientSet& grads, const AdamMoments& moments,
                     const AdamHyper& hyper, long step_index);

struct TrainConfig {
    int epochs = 40;
    double learning_rate = 0.02;
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 10.0;  // <= 0 disables clipping
    bool balanced_sampling = true;
    std::uint64_t seed = 1;
    int workers = 1;

    bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
};

/// An epoch draws dataset.size() samples. With balanced sampling each class
/// is cycled through its own reshuffled passes and every batch is split
/// evenly (difference at most 1); otherwise an epoch is one shuffled pass.
/// Called with every mini-batch before its update (test seam).
using BatchObserver = std::function<void(std::span<const Sample* const> batch)>;

TrainResult train(std::span<const Sample> dataset, const TrainConfig& config, const NcpWiring& wiring,
                  int ode_unfolds = kDefaultOdeUnfolds, const BatchObserver& observer = {});

/// `epoch,mean_loss,train_accuracy` with one row per epoch.
std::string history_to_csv(std::span<const EpochRecord> history);

/// Mean loss and gradient over a batch; per-sample passes may run on
/// `workers` threads but are reduced in sample order.
struct BatchResult {
    double loss_sum = 0.0;
    int correct = 0;
    GradientSet grad;  // mean over the batch
};

BatchResult batch_gradient(std::span<const Sample* const> batch, const LtcParameters& params, const NcpWiring& wiring,
                           int ode_unfolds, int workers);

/// Scales in place so the L2 norm is at most max_norm. Returns the original norm.
double clip_global_norm(GradientSet& grad, double max_norm);

}  // namespace lbp
