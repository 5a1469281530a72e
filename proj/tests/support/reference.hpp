#pragma once
// Naive reference evaluator: one synapse at a time, straight from the stored
// parameters and the wiring, without the compiled cell or any caching.

#include <cmath>
#include <vector>

#include "lbp/ltc.hpp"
#include "lbp/wiring.hpp"

namespace lbp::reference {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double positive(double u) { return std::log1p(std::exp(u)) + 1e-3; }

struct Result {
    std::vector<std::vector<double>> trajectory;
    double probability = 0.0;
};

inline Result forward(const ObservationWindow& window, const LtcParameters& p, const NcpWiring& wiring, int unfolds) {
    const int ns = wiring.counts.n_sensory;
    const int n = wiring.counts.ode_neurons();
    const double dt = 1.0 / unfolds;
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    Result out;
    for (int r = 0; r < window.rows(); ++r) {
        std::vector<double> input(static_cast<std::size_t>(window.n_features));
        for (int f = 0; f < window.n_features; ++f) {
            input[f] = window.features[static_cast<std::size_t>(r * window.n_features + f)] * p.input_scale[f] +
                       p.input_bias[f];
        }
        for (int u = 0; u < unfolds; ++u) {
            std::vector<double> next(x.size());
            for (int i = 0; i < n; ++i) {
                double num = x[i];
                double den = 1.0 + dt / positive(p.tau_raw[i]);
                for (std::size_t s = 0; s < wiring.synapses.size(); ++s) {
                    const auto& syn = wiring.synapses[s];
                    if (syn.target - ns != i) continue;
                    const double pre = syn.source < ns ? input[syn.source] : x[syn.source - ns];
                    const double act = positive(p.w_raw[s]) * logistic(p.gamma[s] * pre + p.mu[s]);
                    const double a = syn.polarity * std::exp(p.rev_log[s]);
                    num += dt * act * a;
                    den += dt * act;
                }
                next[i] = num / den;
            }
            x = next;
        }
        out.trajectory.push_back(x);
    }
    double logit = p.output_bias;
    for (int m = 0; m < wiring.counts.n_motor; ++m) logit += p.output_scale[m] * x[wiring.motor_state_index(m)];
    out.probability = logistic(logit);
    return out;
}

}  // namespace lbp::reference
