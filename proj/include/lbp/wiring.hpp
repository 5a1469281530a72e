#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace lbp {

enum class Layer { Sensory, Inter, Command, Motor };

const char* layer_name(Layer layer) noexcept;

struct LayerCounts {
    int n_sensory = 2;
    int n_inter = 4;
    int n_command = 2;
    int n_motor = 1;

    int total() const noexcept { return n_sensory + n_inter + n_command + n_motor; }
    /// Neurons that carry ODE state (everything but the sensory inputs).
    int ode_neurons() const noexcept { return n_inter + n_command + n_motor; }

    bool operator==(const LayerCounts&) const = default;
};

struct FanoutConfig {
    int sensory_fanout = 2;        // inter targets per sensory neuron
    int inter_fanout = 1;          // command targets per inter neuron
    int command_recurrent = 2;     // random command->command edges
    int motor_fanin = 2;           // command sources per motor neuron

    bool operator==(const FanoutConfig&) const = default;
};

struct Synapse {
    int source = 0;
    int target = 0;
    int polarity = 1;  // +1 excitatory, -1 inhibitory

    bool operator==(const Synapse&) const = default;
};

/// Four-layer NCP graph. Neuron ids are global and laid out
/// sensory | inter | command | motor; ODE state index = id - n_sensory.
struct NcpWiring {
    LayerCounts counts;
    std::vector<Synapse> synapses;
    std::uint64_t seed = 0;

    Layer layer_of(int neuron) const;
    int state_index(int neuron) const noexcept { return neuron - counts.n_sensory; }
    int first_id(Layer layer) const noexcept;
    int layer_size(Layer layer) const noexcept;
    int motor_state_index(int m) const noexcept { return counts.n_inter + counts.n_command + m; }

    bool operator==(const NcpWiring&) const = default;
};

struct WiringViolation {
    std::string kind;  // e.g. "layer-skipping edge", "no incoming synapse"
    int neuron = -1;
    int synapse = -1;  // index into synapses, -1 if not edge-specific
    std::string detail;
};

struct ValidationReport {
    std::vector<WiringViolation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(const std::string& kind) const;
    std::string summary() const;
};

struct WiringStats {
    int n_synapses = 0;
    int n_legal_pairs = 0;
    double density = 0.0;
    std::vector<int> fan_in;   // per global neuron id
    std::vector<int> fan_out;  // per global neuron id
    int sensory_to_inter = 0;
    int inter_to_command = 0;
    int command_recurrent = 0;
    int command_to_motor = 0;
};

/// Throws ConfigError for non-positive counts or infeasible fanouts.
NcpWiring build_ncp(const LayerCounts& counts, const FanoutConfig& fanout, std::uint64_t seed);

ValidationReport validate_wiring(const NcpWiring& wiring);

WiringStats wiring_stats(const NcpWiring& wiring);

/// Throws ConfigError if the wiring does not validate.
void require_valid(const NcpWiring& wiring);

nlohmann::json wiring_to_json(const NcpWiring& wiring);
NcpWiring wiring_from_json(const nlohmann::json& j);

/// Graphviz digraph, one cluster per layer; edge style encodes polarity.
std::string wiring_to_dot(const NcpWiring& wiring);

}  // namespace lbp
