#include "lbp/ltc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lbp/errors.hpp"

namespace lbp {

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double u) noexcept {
    // log(1 + e^u) without overflow
    return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw ConfigError("softplus inverse needs a positive argument");
    return y + std::log(-std::expm1(-y));
}

double LtcParameters::tau(std::size_t i) const { return softplus(tau_raw[i]) + kPositiveFloor; }

double LtcParameters::weight(std::size_t s) const { return softplus(w_raw[s]) + kPositiveFloor; }

double LtcParameters::reversal(std::size_t s, int polarity) const {
    return static_cast<double>(polarity) * std::exp(rev_log[s]);
}

std::size_t LtcParameters::size() const noexcept {
    return tau_raw.size() + 4 * w_raw.size() + input_scale.size() + input_bias.size() + output_scale.size() + 1;
}

std::vector<double> LtcParameters::flatten() const {
    std::vector<double> flat;
    flat.reserve(size());
    for (const auto* v : {&tau_raw, &w_raw, &gamma, &mu, &rev_log, &input_scale, &input_bias, &output_scale}) {
        flat.insert(flat.end(), v->begin(), v->end());
    }
    flat.push_back(output_bias);
    return flat;
}

void LtcParameters::assign(std::span<const double> flat) {
    if (flat.size() != size()) throw ConfigError("flat parameter vector has wrong length");
    std::size_t k = 0;
    for (auto* v : {&tau_raw, &w_raw, &gamma, &mu, &rev_log, &input_scale, &input_bias, &output_scale}) {
        for (double& x : *v) x = flat[k++];
    }
    output_bias = flat[k];
}

std::string LtcParameters::name_of(std::size_t flat_index) const {
    const std::pair<const char*, std::size_t> blocks[] = {
        {"tau", tau_raw.size()},           {"syn_weight", w_raw.size()},      {"syn_gamma", gamma.size()},
        {"syn_mu", mu.size()},             {"syn_reversal", rev_log.size()},  {"input_scale", input_scale.size()},
        {"input_bias", input_bias.size()}, {"output_scale", output_scale.size()},
    };
    std::size_t k = flat_index;
    for (const auto& [name, n] : blocks) {
        if (k < n) return std::string(name) + "[" + std::to_string(k) + "]";
        k -= n;
    }
    return k == 0 ? "output_bias" : "out_of_range";
}

std::size_t parameter_count(const NcpWiring& wiring) {
    const auto& c = wiring.counts;
    return static_cast<std::size_t>(c.ode_neurons()) + 4 * wiring.synapses.size() +
           2 * static_cast<std::size_t>(c.n_sensory) + static_cast<std::size_t>(c.n_motor) + 1;
}

void check_shapes(const LtcParameters& p, const NcpWiring& wiring) {
    const auto n_syn = wiring.synapses.size();
    const auto& c = wiring.counts;
    const bool ok = p.tau_raw.size() == static_cast<std::size_t>(c.ode_neurons()) && p.w_raw.size() == n_syn &&
                    p.gamma.size() == n_syn && p.mu.size() == n_syn && p.rev_log.size() == n_syn &&
                    p.input_scale.size() == static_cast<std::size_t>(c.n_sensory) &&
                    p.input_bias.size() == static_cast<std::size_t>(c.n_sensory) &&
                    p.output_scale.size() == static_cast<std::size_t>(c.n_motor);
    if (!ok) throw ConfigError("parameter shapes do not match the wiring");
}

LtcParameters init_parameters(const NcpWiring& wiring, std::uint64_t seed) {
    require_valid(wiring);
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const auto n_syn = wiring.synapses.size();
    LtcParameters p;
    p.tau_raw.resize(static_cast<std::size_t>(wiring.counts.ode_neurons()));
    for (double& u : p.tau_raw) u = softplus_inverse(uniform(1.0, 5.0) - kPositiveFloor);
    p.w_raw.resize(n_syn);
    p.gamma.resize(n_syn);
    p.mu.resize(n_syn);
    p.rev_log.assign(n_syn, 0.0);
    for (std::size_t s = 0; s < n_syn; ++s) {
        p.w_raw[s] = softplus_inverse(uniform(0.01, 1.0) - kPositiveFloor);
        p.gamma[s] = uniform(3.0, 8.0);
        p.mu[s] = uniform(0.3, 0.8);
    }
    p.input_scale.assign(static_cast<std::size_t>(wiring.counts.n_sensory), 1.0);
    p.input_bias.assign(static_cast<std::size_t>(wiring.counts.n_sensory), 0.0);
    p.output_scale.assign(static_cast<std::size_t>(wiring.counts.n_motor), 1.0);
    p.output_bias = 0.0;
    return p;
}

CompiledCell CompiledCell::compile(const LtcParameters& params, const NcpWiring& wiring) {
    check_shapes(params, wiring);
    CompiledCell cell;
    cell.n_state = wiring.counts.ode_neurons();
    cell.n_features = wiring.counts.n_sensory;
    cell.tau.resize(static_cast<std::size_t>(cell.n_state));
    for (std::size_t i = 0; i < cell.tau.size(); ++i) cell.tau[i] = params.tau(i);
    cell.synapses.reserve(wiring.synapses.size());
    for (std::size_t s = 0; s < wiring.synapses.size(); ++s) {
        const auto& syn = wiring.synapses[s];
        Syn c;
        c.sensory = syn.source < wiring.counts.n_sensory;
        c.source = c.sensory ? syn.source : wiring.state_index(syn.source);
        c.target = wiring.state_index(syn.target);
        c.w = params.weight(s);
        c.gamma = params.gamma[s];
        c.mu = params.mu[s];
        c.reversal = params.reversal(s, syn.polarity);
        (c.sensory ? cell.sensory_synapses : cell.recurrent_synapses).push_back(s);
        cell.synapses.push_back(c);
    }
    cell.input_scale = params.input_scale;
    cell.input_bias = params.input_bias;
    for (int m = 0; m < wiring.counts.n_motor; ++m) cell.motor.push_back(wiring.motor_state_index(m));
    cell.output_scale = params.output_scale;
    cell.output_bias = params.output_bias;
    return cell;
}

void CompiledCell::map_inputs(std::span<const double> raw, std::span<double> out) const {
    for (std::size_t f = 0; f < raw.size(); ++f) out[f] = input_scale[f] * raw[f] + input_bias[f];
}

void CompiledCell::step(std::span<const double> x, std::span<const double> inputs, double dt,
                        std::span<double> out) const {
    // out accumulates the numerator; den lives on the stack for small cells
    constexpr int kStackNeurons = 64;
    double den_stack[kStackNeurons];
    std::vector<double> den_heap;
    double* den = den_stack;
    if (n_state > kStackNeurons) {
        den_heap.resize(static_cast<std::size_t>(n_state));
        den = den_heap.data();
    }
    for (int i = 0; i < n_state; ++i) {
        out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
        den[i] = 1.0 + dt / tau[static_cast<std::size_t>(i)];
    }
    for (const Syn& s : synapses) {
        const double pre = s.sensory ? inputs[static_cast<std::size_t>(s.source)] : x[static_cast<std::size_t>(s.source)];
        const double a = s.w * sigmoid(s.gamma * pre + s.mu);
        out[static_cast<std::size_t>(s.target)] += dt * a * s.reversal;
        den[s.target] += dt * a;
    }
    for (int i = 0; i < n_state; ++i) out[static_cast<std::size_t>(i)] /= den[i];
}

void CompiledCell::sensory_drive(std::span<const double> inputs, std::span<double> num, std::span<double> den) const {
    std::fill(num.begin(), num.end(), 0.0);
    std::fill(den.begin(), den.end(), 0.0);
    for (std::size_t k : sensory_synapses) {
        const Syn& s = synapses[k];
        const double a = s.w * sigmoid(s.gamma * inputs[static_cast<std::size_t>(s.source)] + s.mu);
        num[static_cast<std::size_t>(s.target)] += a * s.reversal;
        den[static_cast<std::size_t>(s.target)] += a;
    }
}

void CompiledCell::step_driven(std::span<const double> x, std::span<const double> drive_num,
                               std::span<const double> drive_den, double dt, std::span<double> out) const {
    constexpr int kStackNeurons = 64;
    double den_stack[kStackNeurons];
    std::vector<double> den_heap;
    double* den = den_stack;
    if (n_state > kStackNeurons) {
        den_heap.resize(static_cast<std::size_t>(n_state));
        den = den_heap.data();
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_state); ++i) {
        out[i] = x[i] + dt * drive_num[i];
        den[i] = 1.0 + dt / tau[i] + dt * drive_den[i];
    }
    for (std::size_t k : recurrent_synapses) {
        const Syn& s = synapses[k];
        const double a = s.w * sigmoid(s.gamma * x[static_cast<std::size_t>(s.source)] + s.mu);
        out[static_cast<std::size_t>(s.target)] += dt * a * s.reversal;
        den[s.target] += dt * a;
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_state); ++i) out[i] /= den[i];
}

double CompiledCell::logit(std::span<const double> x) const {
    double z = output_bias;
    for (std::size_t m = 0; m < motor.size(); ++m) z += output_scale[m] * x[static_cast<std::size_t>(motor[m])];
    return z;
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
    }
}

}  // namespace

void check_window(const ObservationWindow& window, int n_features) {
    if (window.n_features != n_features) {
        throw ConfigError("window has " + std::to_string(window.n_features) + " features, cell expects " +
                          std::to_string(n_features));
    }
    if (window.features.empty() || window.features.size() % static_cast<std::size_t>(n_features) != 0) {
        throw ConfigError("window feature matrix is empty or ragged");
    }
    require_finite(window.features, "window feature");
}

NeuronState fused_step(const NeuronState& state, std::span<const double> input, const LtcParameters& params,
                       const NcpWiring& wiring, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("fused step needs dt > 0");
    const CompiledCell cell = CompiledCell::compile(params, wiring);
    if (state.values.size() != static_cast<std::size_t>(cell.n_state)) throw ConfigError("state length mismatch");
    if (input.size() != static_cast<std::size_t>(cell.n_features)) throw ConfigError("input length mismatch");
    require_finite(state.values, "neuron state");
    require_finite(input, "input");

    std::vector<double> mapped(input.size());
    cell.map_inputs(input, mapped);
    NeuronState next;
    next.values.resize(state.values.size());
    cell.step(state.values, mapped, dt, next.values);
    return next;
}

namespace {

template <typename OnRow>
double run_sequence(const ObservationWindow& window, const CompiledCell& cell, int ode_unfolds, OnRow&& on_row) {
    if (ode_unfolds < 1) throw ConfigError("ode_unfolds must be >= 1");
    check_window(window, cell.n_features);
    const double dt = 1.0 / ode_unfolds;
    const auto n = static_cast<std::size_t>(cell.n_state);
    std::vector<double> x(n, 0.0), next(n), mapped(static_cast<std::size_t>(cell.n_features));
    std::vector<double> drive_num(n), drive_den(n);
    for (int r = 0; r < window.rows(); ++r) {
        cell.map_inputs(window.row(r), mapped);
        cell.sensory_drive(mapped, drive_num, drive_den);
        for (int u = 0; u < ode_unfolds; ++u) {
            cell.step_driven(x, drive_num, drive_den, dt, next);
            x.swap(next);
        }
        for (double v : x) {
            if (!std::isfinite(v)) throw NumericError("non-finite neuron state after input row " + std::to_string(r));
        }
        on_row(x);
    }
    return cell.logit(x);
}

}  // namespace

ForwardResult forward_sequence(const ObservationWindow& window, const LtcParameters& params, const NcpWiring& wiring,
                               int ode_unfolds) {
    const CompiledCell cell = CompiledCell::compile(params, wiring);
    ForwardResult res;
    res.trajectory.reserve(static_cast<std::size_t>(window.rows()));
    res.logit = run_sequence(window, cell, ode_unfolds,
                             [&](const std::vector<double>& x) { res.trajectory.push_back(NeuronState{x}); });
    res.probability = sigmoid(res.logit);
    return res;
}

double predict_probability(const ObservationWindow& window, const CompiledCell& cell, int ode_unfolds) {
    return sigmoid(run_sequence(window, cell, ode_unfolds, [](const std::vector<double>&) {}));
}

int classify(double probability) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw ConfigError("probability " + std::to_string(probability) + " outside [0, 1]");
    }
    return probability >= 0.5 ? 1 : 0;
}

}  // namespace lbp
