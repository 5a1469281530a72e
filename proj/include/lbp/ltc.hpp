#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lbp/wiring.hpp"

namespace lbp {

inline constexpr int kDefaultOdeUnfolds = 6;
inline constexpr double kPositiveFloor = 1e-3;

/// Hidden potentials of the non-sensory neurons, indexed by state index.
struct NeuronState {
    std::vector<double> values;

    bool operator==(const NeuronState&) const = default;
};

/// T_ob rows of F features, row-major. t_end is the trace index of the last row.
struct ObservationWindow {
    std::vector<double> features;
    int n_features = 2;
    int t_end = 0;

    int rows() const noexcept { return n_features > 0 ? static_cast<int>(features.size()) / n_features : 0; }
    std::span<const double> row(int r) const {
        return {features.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(n_features),
                static_cast<std::size_t>(n_features)};
    }
};

/// Trainable quantities in their unconstrained storage form.
///
/// tau = softplus(tau_raw) + 1e-3, w = softplus(w_raw) + 1e-3 and
/// A = polarity * exp(rev_log), so gradient steps on the stored values can
/// never break positivity or flip a synapse's sign.
struct LtcParameters {
    std::vector<double> tau_raw;       // per ODE neuron
    std::vector<double> w_raw;         // per synapse
    std::vector<double> gamma;         // per synapse
    std::vector<double> mu;            // per synapse
    std::vector<double> rev_log;       // per synapse
    std::vector<double> input_scale;   // per sensory feature
    std::vector<double> input_bias;    // per sensory feature
    std::vector<double> output_scale;  // per motor neuron
    double output_bias = 0.0;

    double tau(std::size_t i) const;
    double weight(std::size_t s) const;
    double reversal(std::size_t s, int polarity) const;

    /// Canonical flat ordering: tau_raw, w_raw, gamma, mu, rev_log,
    /// input_scale, input_bias, output_scale, output_bias.
    std::size_t size() const noexcept;
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    /// Human-readable label of a flat index, e.g. "syn_gamma[3]".
    std::string name_of(std::size_t flat_index) const;

    bool operator==(const LtcParameters&) const = default;
};

/// Number of stored scalars implied by a wiring.
std::size_t parameter_count(const NcpWiring& wiring);

/// Deterministic in (wiring, seed). Throws ConfigError on invalid wiring.
LtcParameters init_parameters(const NcpWiring& wiring, std::uint64_t seed);

/// Throws ConfigError when vector lengths disagree with the wiring.
void check_shapes(const LtcParameters& params, const NcpWiring& wiring);

double sigmoid(double z) noexcept;
double softplus(double u) noexcept;
double softplus_inverse(double y);

/// Materialized cell: positive maps applied, synapses resolved to state or
/// feature indices. Built once per parameter set and reused for every window.
struct CompiledCell {
    struct Syn {
        int source = 0;  // feature index when sensory, else state index
        int target = 0;  // state index
        bool sensory = false;
        double w = 0.0;
        double gamma = 0.0;
        double mu = 0.0;
        double reversal = 0.0;
    };

    int n_state = 0;
    int n_features = 0;
    std::vector<double> tau;
    std::vector<Syn> synapses;
    std::vector<double> input_scale;
    std::vector<double> input_bias;
    std::vector<int> motor;  // state indices
    std::vector<double> output_scale;
    double output_bias = 0.0;

    std::vector<std::size_t> sensory_synapses;    // indices into synapses
    std::vector<std::size_t> recurrent_synapses;  // indices into synapses

    static CompiledCell compile(const LtcParameters& params, const NcpWiring& wiring);

    /// One semi-implicit step. `inputs` are already affine-mapped.
    void step(std::span<const double> x, std::span<const double> inputs, double dt, std::span<double> out) const;

    /// Sensory contributions are constant within an input row:
    /// num_i = sum w sigma A, den_i = sum w sigma over sensory synapses into i.
    void sensory_drive(std::span<const double> inputs, std::span<double> num, std::span<double> den) const;
    /// step() with the sensory part supplied by sensory_drive().
    void step_driven(std::span<const double> x, std::span<const double> drive_num, std::span<const double> drive_den,
                     double dt, std::span<double> out) const;
    double logit(std::span<const double> x) const;
    void map_inputs(std::span<const double> raw, std::span<double> out) const;
};

/// One fused semi-implicit step of
///   dx_i/dt = -x_i/tau_i + sum_j w_ij sigma(gamma_ij pre_j + mu_ij) (A_ij - x_i).
/// `input` holds the raw sensory features (the input affine map is applied here).
NeuronState fused_step(const NeuronState& state, std::span<const double> input, const LtcParameters& params,
                       const NcpWiring& wiring, double dt);

struct ForwardResult {
    std::vector<NeuronState> trajectory;  // state after each input row
    double logit = 0.0;
    double probability = 0.5;
};

/// Zero initial state, `ode_unfolds` fused steps of dt = 1/ode_unfolds per row.
ForwardResult forward_sequence(const ObservationWindow& window, const LtcParameters& params, const NcpWiring& wiring,
                               int ode_unfolds = kDefaultOdeUnfolds);

/// Final probability only; no trajectory is kept.
double predict_probability(const ObservationWindow& window, const CompiledCell& cell,
                           int ode_unfolds = kDefaultOdeUnfolds);

/// 1 when probability >= 0.5 (ties count as blockage).
int classify(double probability);

void check_window(const ObservationWindow& window, int n_features);

}  // namespace lbp
