#include <cmath>
#include <random>

#include "doctest.h"
#include "lbp/errors.hpp"
#include "lbp/ltc.hpp"
#include "support/reference.hpp"

using namespace lbp;

namespace {

// Synapses switched off: weights cannot go below the 1e-3 positivity floor,
// so the activations are pushed to sigma(-60) ~ 1e-26 and the reversal
// targets to exp(-60) instead. Used where exact arithmetic matters.
LtcParameters zero_params(const NcpWiring& w) {
    auto p = init_parameters(w, 1);
    for (auto& v : p.mu) v = -60.0;
    for (auto& v : p.gamma) v = 1.0;
    for (auto& v : p.rev_log) v = -60.0;
    p.output_bias = 0.0;
    return p;
}

ObservationWindow random_window(std::mt19937_64& rng, int rows) {
    std::uniform_real_distribution<double> power(0.0, 1.0);
    ObservationWindow w;
    w.t_end = rows - 1;
    double prev = 0.0;
    for (int r = 0; r < rows; ++r) {
        const double p = power(rng);
        w.features.push_back(p);
        w.features.push_back(r == 0 ? 0.0 : p - prev);
        prev = p;
    }
    return w;
}

NcpWiring random_wiring(std::mt19937_64& rng) {
    LayerCounts c;
    c.n_inter = std::uniform_int_distribution<int>(2, 6)(rng);
    c.n_command = std::uniform_int_distribution<int>(2, 4)(rng);
    c.n_motor = std::uniform_int_distribution<int>(1, 2)(rng);
    return build_ncp(c, {}, rng());
}

LtcParameters jittered(const NcpWiring& w, std::mt19937_64& rng) {
    auto p = init_parameters(w, rng());
    auto flat = p.flatten();
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& v : flat) v += n(rng);
    p.assign(flat);
    return p;
}

}  // namespace

TEST_CASE("init_parameters ranges and determinism") {
    const auto w = build_ncp({}, {}, 1);
    const auto a = init_parameters(w, 7);
    const auto b = init_parameters(w, 7);
    const auto c = init_parameters(w, 8);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(a.size() == parameter_count(w));
    for (std::size_t i = 0; i < a.tau_raw.size(); ++i) {
        CHECK(a.tau(i) >= 1.0 - 1e-12);
        CHECK(a.tau(i) <= 5.0 + 1e-12);
    }
    for (std::size_t s = 0; s < w.synapses.size(); ++s) {
        CHECK(a.weight(s) >= 0.01 - 1e-12);
        CHECK(a.weight(s) <= 1.0 + 1e-12);
        CHECK(a.gamma[s] >= 3.0);
        CHECK(a.gamma[s] <= 8.0);
        CHECK(a.mu[s] >= 0.3);
        CHECK(a.mu[s] <= 0.8);
        CHECK(a.reversal(s, w.synapses[s].polarity) == doctest::Approx(w.synapses[s].polarity));
    }
    for (double s : a.input_scale) CHECK(s == 1.0);
    for (double s : a.input_bias) CHECK(s == 0.0);
    for (double s : a.output_scale) CHECK(s == 1.0);
    CHECK(a.output_bias == 0.0);
}

TEST_CASE("init_parameters rejects invalid wiring") {
    auto w = build_ncp({}, {}, 1);
    w.synapses.push_back({0, w.counts.total() - 1, 1});  // sensory -> motor
    CHECK_THROWS_AS(init_parameters(w, 1), ConfigError);
}

TEST_CASE("positive maps and their inverse") {
    for (double y : {1e-6, 0.01, 1.0, 5.0, 40.0}) CHECK(softplus(softplus_inverse(y)) == doctest::Approx(y).epsilon(1e-12));
    CHECK(softplus(-800.0) >= 0.0);
    CHECK(std::isfinite(softplus(800.0)));
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-1000.0) >= 0.0);
    CHECK(sigmoid(1000.0) <= 1.0);
    CHECK_THROWS_AS(softplus_inverse(0.0), ConfigError);
}

TEST_CASE("flatten / assign round-trip and names") {
    const auto w = build_ncp({}, {}, 3);
    auto p = init_parameters(w, 3);
    const auto flat = p.flatten();
    LtcParameters q = p;
    q.assign(flat);
    CHECK(q == p);
    CHECK(p.name_of(0) == "tau[0]");
    CHECK(p.name_of(flat.size() - 1) == "output_bias");
    CHECK_THROWS_AS(q.assign(std::span<const double>(flat.data(), flat.size() - 1)), ConfigError);
}

TEST_CASE("check_shapes catches mismatched vectors") {
    const auto w = build_ncp({}, {}, 3);
    auto p = init_parameters(w, 3);
    CHECK_NOTHROW(check_shapes(p, w));
    p.mu.pop_back();
    CHECK_THROWS_AS(check_shapes(p, w), ConfigError);
}

TEST_CASE("fused step: leak-only neuron, x=1, tau=1, dt=0.1 -> 1/1.1") {
    // One sensory, one inter, one command, one motor neuron; every synapse
    // switched off so the inter neuron only leaks.
    LayerCounts counts{1, 1, 1, 1};
    FanoutConfig fan{1, 1, 1, 1};
    const auto w = build_ncp(counts, fan, 1);
    auto p = zero_params(w);
    p.tau_raw.assign(p.tau_raw.size(), softplus_inverse(1.0 - kPositiveFloor));
    const NeuronState s{{1.0, 0.0, 0.0}};
    const double in[] = {0.0};
    const auto next = fused_step(s, in, p, w, 0.1);
    CHECK(next.values[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
}

TEST_CASE("fused step: one synapse at sigma=0.5, w=2, A=1 -> 0.1/1.2") {
    LayerCounts counts{1, 1, 1, 1};
    FanoutConfig fan{1, 1, 1, 1};
    auto w = build_ncp(counts, fan, 1);
    auto p = zero_params(w);
    p.tau_raw.assign(p.tau_raw.size(), softplus_inverse(1.0 - kPositiveFloor));
    // Sensory synapse 0 -> inter neuron: sigma argument 0, weight 2, A = +1.
    std::size_t s = 0;
    while (!(w.synapses[s].source == 0 && w.synapses[s].target == 1)) ++s;
    w.synapses[s].polarity = 1;
    p.w_raw[s] = softplus_inverse(2.0 - kPositiveFloor);
    p.gamma[s] = 1.0;
    p.mu[s] = 0.0;
    p.rev_log[s] = 0.0;
    const NeuronState zero{{0.0, 0.0, 0.0}};
    const double in[] = {0.0};
    const auto next = fused_step(zero, in, p, w, 0.1);
    CHECK(next.values[0] == doctest::Approx(0.1 / 1.2).epsilon(1e-12));
    CHECK(next.values[0] == doctest::Approx(0.0833333333333).epsilon(1e-10));
}

TEST_CASE("fused step: zero state and zero weights stay zero") {
    const auto w = build_ncp({}, {}, 2);
    const auto p = zero_params(w);
    NeuronState s{std::vector<double>(7, 0.0)};
    const double in[] = {0.7, -0.3};
    const auto next = fused_step(s, in, p, w, 1.0 / 6);
    for (double v : next.values) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("fused step errors") {
    const auto w = build_ncp({}, {}, 2);
    const auto p = init_parameters(w, 2);
    NeuronState s{std::vector<double>(7, 0.0)};
    const double in[] = {0.5, 0.0};
    CHECK_THROWS_AS(fused_step(s, in, p, w, 0.0), ConfigError);
    CHECK_THROWS_AS(fused_step(s, in, p, w, -1.0), ConfigError);
    const double bad[] = {std::nan(""), 0.0};
    CHECK_THROWS_AS(fused_step(s, bad, p, w, 0.1), NumericError);
    s.values[0] = INFINITY;
    CHECK_THROWS_AS(fused_step(s, in, p, w, 0.1), NumericError);
}

TEST_CASE("forward_sequence: zero weights give sigma(output_bias)") {
    const auto w = build_ncp({}, {}, 4);
    auto p = zero_params(w);
    std::mt19937_64 rng(4);
    const auto win = random_window(rng, 32);
    const auto res = forward_sequence(win, p, w);
    CHECK(res.trajectory.size() == 32);
    CHECK(res.probability == doctest::Approx(0.5).epsilon(1e-12));
    p.output_bias = 1.3;
    CHECK(forward_sequence(win, p, w).probability == doctest::Approx(sigmoid(1.3)).epsilon(1e-12));
}

TEST_CASE("leak-only decay matches the closed form") {
    const auto w = build_ncp({}, {}, 5);
    auto p = zero_params(w);
    const int U = 6;
    const double dt = 1.0 / U;
    NeuronState s{{0.9, -0.4, 0.3, 1.0, -1.0, 0.5, 0.25}};
    const NeuronState x0 = s;
    const double in[] = {0.0, 0.0};
    const int rows = 5;
    for (int n = 0; n < rows * U; ++n) s = fused_step(s, in, p, w, dt);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        // sigma(-60) ~ 1e-26 is not exactly zero; tolerance covers it.
        const double expected = x0.values[i] * std::pow(1.0 + dt / p.tau(i), -rows * U);
        CHECK(s.values[i] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("forward_sequence equals the naive reference evaluator (100 random triples)") {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto w = random_wiring(rng);
        const auto p = jittered(w, rng);
        const auto win = random_window(rng, std::uniform_int_distribution<int>(1, 40)(rng));
        const int U = std::uniform_int_distribution<int>(1, 8)(rng);
        const auto fast = forward_sequence(win, p, w, U);
        const auto ref = reference::forward(win, p, w, U);
        REQUIRE(fast.trajectory.size() == ref.trajectory.size());
        for (std::size_t r = 0; r < ref.trajectory.size(); ++r) {
            for (std::size_t i = 0; i < ref.trajectory[r].size(); ++i) {
                worst = std::max(worst, std::abs(fast.trajectory[r].values[i] - ref.trajectory[r][i]));
            }
        }
        worst = std::max(worst, std::abs(fast.probability - ref.probability));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("predict_probability agrees with forward_sequence bit for bit") {
    std::mt19937_64 rng(9);
    const auto w = build_ncp({}, {}, 9);
    const auto p = jittered(w, rng);
    const auto win = random_window(rng, 32);
    const auto cell = CompiledCell::compile(p, w);
    CHECK(predict_probability(win, cell) == forward_sequence(win, p, w).probability);
    CHECK(forward_sequence(win, p, w).probability == forward_sequence(win, p, w).probability);
}

TEST_CASE("boundedness: states stay in [-1, 1] with |A| = 1 from zero state") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> input(-1.0, 1.0);
    double lo = 0.0;
    double hi = 0.0;
    for (int m = 0; m < 50; ++m) {
        const auto w = random_wiring(rng);
        auto p = jittered(w, rng);
        std::fill(p.rev_log.begin(), p.rev_log.end(), 0.0);
        NeuronState s{std::vector<double>(static_cast<std::size_t>(w.counts.ode_neurons()), 0.0)};
        for (int t = 0; t < 1000; ++t) {
            const double in[] = {input(rng), input(rng)};
            s = fused_step(s, in, p, w, 1.0 / 6);
            for (double v : s.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    CHECK(lo >= -1.0 - 1e-9);
    CHECK(hi <= 1.0 + 1e-9);
}

TEST_CASE("monotone sigma: raising a sensory feature never lowers an excitatory activation") {
    const auto w = build_ncp({}, {}, 11);
    const auto p = init_parameters(w, 11);  // gamma > 0 by initialization
    const auto cell = CompiledCell::compile(p, w);
    for (const auto& syn : cell.synapses) {
        if (!syn.sensory) continue;
        double prev = -1.0;
        for (double pre = -1.0; pre <= 1.0; pre += 0.05) {
            const double act = syn.w * sigmoid(syn.gamma * pre + syn.mu);
            CHECK(act >= prev);
            prev = act;
        }
    }
}

TEST_CASE("classify threshold and range") {
    CHECK(classify(0.7) == 1);
    CHECK(classify(0.3) == 0);
    CHECK(classify(0.5) == 1);
    CHECK(classify(0.0) == 0);
    CHECK(classify(1.0) == 1);
    CHECK_THROWS_AS(classify(1.5), ConfigError);
    CHECK_THROWS_AS(classify(-0.1), ConfigError);
    CHECK_THROWS_AS(classify(std::nan("")), ConfigError);
}

TEST_CASE("check_window validates shape and feature range") {
    ObservationWindow w;
    w.features = {0.5, 0.0, 0.6, 0.1};
    CHECK_NOTHROW(check_window(w, 2));
    w.features.push_back(0.7);  // ragged
    CHECK_THROWS(check_window(w, 2));
    w.features.pop_back();
    CHECK_THROWS(check_window(w, 3));
    w.features[2] = std::nan("");
    CHECK_THROWS(check_window(w, 2));
}
