#include "lbp/wiring.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "lbp/errors.hpp"

namespace lbp {

const char* layer_name(Layer layer) noexcept {
    switch (layer) {
        case Layer::Sensory: return "sensory";
        case Layer::Inter: return "inter";
        case Layer::Command: return "command";
        case Layer::Motor: return "motor";
    }
    return "?";
}

int NcpWiring::first_id(Layer layer) const noexcept {
    switch (layer) {
        case Layer::Sensory: return 0;
        case Layer::Inter: return counts.n_sensory;
        case Layer::Command: return counts.n_sensory + counts.n_inter;
        case Layer::Motor: return counts.n_sensory + counts.n_inter + counts.n_command;
    }
    return 0;
}

int NcpWiring::layer_size(Layer layer) const noexcept {
    switch (layer) {
        case Layer::Sensory: return counts.n_sensory;
        case Layer::Inter: return counts.n_inter;
        case Layer::Command: return counts.n_command;
        case Layer::Motor: return counts.n_motor;
    }
    return 0;
}

Layer NcpWiring::layer_of(int neuron) const {
    if (neuron < 0 || neuron >= counts.total()) {
        throw ConfigError("neuron id " + std::to_string(neuron) + " out of range");
    }
    if (neuron < first_id(Layer::Inter)) return Layer::Sensory;
    if (neuron < first_id(Layer::Command)) return Layer::Inter;
    if (neuron < first_id(Layer::Motor)) return Layer::Command;
    return Layer::Motor;
}

namespace {

void check_counts(const LayerCounts& c) {
    if (c.n_sensory < 1 || c.n_inter < 1 || c.n_command < 1 || c.n_motor < 1) {
        throw ConfigError("every layer needs at least one neuron (got " + std::to_string(c.n_sensory) + "/" +
                          std::to_string(c.n_inter) + "/" + std::to_string(c.n_command) + "/" +
                          std::to_string(c.n_motor) + ")");
    }
}

void check_fanout(const char* name, int value, int lo, int hi) {
    if (value < lo || value > hi) {
        std::ostringstream os;
        os << "infeasible " << name << " " << value << " (must be in [" << lo << ", " << hi << "])";
        throw ConfigError(os.str());
    }
}

// k distinct picks from [first, first + n) in generator order
std::vector<int> pick_distinct(std::mt19937_64& rng, int first, int n, int k) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), first);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(k));
    return ids;
}

int draw_polarity(std::mt19937_64& rng) {
    return (rng() >> 63) != 0 ? 1 : -1;
}

}  // namespace

NcpWiring build_ncp(const LayerCounts& counts, const FanoutConfig& fanout, std::uint64_t seed) {
    check_counts(counts);
    check_fanout("sensory fanout", fanout.sensory_fanout, 1, counts.n_inter);
    check_fanout("inter fanout", fanout.inter_fanout, 1, counts.n_command);
    check_fanout("command recurrence", fanout.command_recurrent, 0, counts.n_command * counts.n_command);
    check_fanout("motor fan-in", fanout.motor_fanin, 1, counts.n_command);

    NcpWiring w;
    w.counts = counts;
    w.seed = seed;
    std::mt19937_64 rng(seed);
    std::set<std::pair<int, int>> edges;

    auto add = [&](int src, int dst) {
        if (edges.insert({src, dst}).second) {
            w.synapses.push_back({src, dst, draw_polarity(rng)});
        }
    };

    const int inter0 = w.first_id(Layer::Inter);
    const int cmd0 = w.first_id(Layer::Command);
    const int motor0 = w.first_id(Layer::Motor);

    for (int s = 0; s < counts.n_sensory; ++s) {
        for (int t : pick_distinct(rng, inter0, counts.n_inter, fanout.sensory_fanout)) add(s, t);
    }
    for (int i = inter0; i < cmd0; ++i) {
        for (int t : pick_distinct(rng, cmd0, counts.n_command, fanout.inter_fanout)) add(i, t);
    }
    {
        const int n_pairs = counts.n_command * counts.n_command;
        for (int p : pick_distinct(rng, 0, n_pairs, fanout.command_recurrent)) {
            add(cmd0 + p / counts.n_command, cmd0 + p % counts.n_command);
        }
    }
    for (int m = motor0; m < motor0 + counts.n_motor; ++m) {
        for (int s : pick_distinct(rng, cmd0, counts.n_command, fanout.motor_fanin)) add(s, m);
    }

    // Repair pass: lowest-id source first for any neuron left without input.
    std::vector<int> fan_in(static_cast<std::size_t>(counts.total()), 0);
    for (const auto& s : w.synapses) ++fan_in[static_cast<std::size_t>(s.target)];
    for (int i = inter0; i < cmd0; ++i) {
        if (fan_in[static_cast<std::size_t>(i)] == 0) add(0, i);
    }
    for (int c = cmd0; c < motor0; ++c) {
        if (fan_in[static_cast<std::size_t>(c)] == 0) add(inter0, c);
    }

    std::sort(w.synapses.begin(), w.synapses.end(), [](const Synapse& a, const Synapse& b) {
        return std::pair(a.source, a.target) < std::pair(b.source, b.target);
    });
    return w;
}

bool ValidationReport::has(const std::string& kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
    if (ok()) return "ok";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        const auto& v = violations[i];
        if (i) os << "; ";
        os << v.kind;
        if (v.neuron >= 0) os << " [neuron " << v.neuron << "]";
        if (v.synapse >= 0) os << " [synapse " << v.synapse << "]";
        if (!v.detail.empty()) os << ": " << v.detail;
    }
    return os.str();
}

namespace {

bool legal_edge(Layer from, Layer to) {
    return (from == Layer::Sensory && to == Layer::Inter) || (from == Layer::Inter && to == Layer::Command) ||
           (from == Layer::Command && to == Layer::Command) || (from == Layer::Command && to == Layer::Motor);
}

}  // namespace

ValidationReport validate_wiring(const NcpWiring& w) {
    ValidationReport rep;
    const auto& c = w.counts;
    if (c.n_sensory < 1 || c.n_inter < 1 || c.n_command < 1 || c.n_motor < 1) {
        rep.violations.push_back({"empty layer", -1, -1, "every layer needs at least one neuron"});
        return rep;
    }
    const int total = c.total();
    std::vector<int> fan_in(static_cast<std::size_t>(total), 0);
    std::vector<int> fan_out(static_cast<std::size_t>(total), 0);
    std::set<std::pair<int, int>> seen;

    for (std::size_t k = 0; k < w.synapses.size(); ++k) {
        const auto& s = w.synapses[k];
        const int idx = static_cast<int>(k);
        if (s.source < 0 || s.source >= total || s.target < 0 || s.target >= total) {
            rep.violations.push_back({"neuron id out of range", -1, idx,
                                      std::to_string(s.source) + "->" + std::to_string(s.target)});
            continue;
        }
        if (s.polarity != 1 && s.polarity != -1) {
            rep.violations.push_back({"invalid polarity", -1, idx, std::to_string(s.polarity)});
        }
        if (!seen.insert({s.source, s.target}).second) {
            rep.violations.push_back({"duplicate synapse", -1, idx,
                                      std::to_string(s.source) + "->" + std::to_string(s.target)});
        }
        const Layer from = w.layer_of(s.source);
        const Layer to = w.layer_of(s.target);
        const std::string edge = std::string(layer_name(from)) + "->" + layer_name(to);
        if (!legal_edge(from, to)) {
            const int gap = static_cast<int>(to) - static_cast<int>(from);
            if (gap > 1) {
                rep.violations.push_back({"layer-skipping edge", s.target, idx, edge});
            } else if (s.source == s.target) {
                rep.violations.push_back({"self-loop", s.source, idx, edge});
            } else if (gap == 0) {
                rep.violations.push_back({"lateral edge", s.target, idx, edge});
            } else {
                rep.violations.push_back({"backward edge", s.target, idx, edge});
            }
        }
        ++fan_out[static_cast<std::size_t>(s.source)];
        ++fan_in[static_cast<std::size_t>(s.target)];
    }

    for (int n = 0; n < total; ++n) {
        const Layer layer = w.layer_of(n);
        const auto un = static_cast<std::size_t>(n);
        if (layer != Layer::Sensory && fan_in[un] == 0) {
            rep.violations.push_back({"no incoming synapse", n, -1, layer_name(layer)});
        }
        if ((layer == Layer::Sensory || layer == Layer::Inter) && fan_out[un] == 0) {
            rep.violations.push_back({"no outgoing synapse", n, -1, layer_name(layer)});
        }
    }
    return rep;
}

void require_valid(const NcpWiring& wiring) {
    auto rep = validate_wiring(wiring);
    if (!rep.ok()) throw ConfigError("invalid wiring: " + rep.summary());
}

WiringStats wiring_stats(const NcpWiring& w) {
    require_valid(w);
    const auto& c = w.counts;
    WiringStats st;
    st.n_synapses = static_cast<int>(w.synapses.size());
    st.n_legal_pairs = c.n_sensory * c.n_inter + c.n_inter * c.n_command + c.n_command * c.n_command +
                       c.n_command * c.n_motor;
    st.density = static_cast<double>(st.n_synapses) / static_cast<double>(st.n_legal_pairs);
    st.fan_in.assign(static_cast<std::size_t>(c.total()), 0);
    st.fan_out.assign(static_cast<std::size_t>(c.total()), 0);
    for (const auto& s : w.synapses) {
        ++st.fan_in[static_cast<std::size_t>(s.target)];
        ++st.fan_out[static_cast<std::size_t>(s.source)];
        switch (w.layer_of(s.source)) {
            case Layer::Sensory: ++st.sensory_to_inter; break;
            case Layer::Inter: ++st.inter_to_command; break;
            case Layer::Command:
                (w.layer_of(s.target) == Layer::Command ? st.command_recurrent : st.command_to_motor)++;
                break;
            case Layer::Motor: break;
        }
    }
    return st;
}

nlohmann::json wiring_to_json(const NcpWiring& w) {
    nlohmann::json syn = nlohmann::json::array();
    for (const auto& s : w.synapses) syn.push_back({s.source, s.target, s.polarity});
    return {
        {"counts",
         {{"n_sensory", w.counts.n_sensory},
          {"n_inter", w.counts.n_inter},
          {"n_command", w.counts.n_command},
          {"n_motor", w.counts.n_motor}}},
        {"seed", w.seed},
        {"synapses", std::move(syn)},
    };
}

NcpWiring wiring_from_json(const nlohmann::json& j) {
    try {
        NcpWiring w;
        const auto& c = j.at("counts");
        w.counts.n_sensory = c.at("n_sensory").get<int>();
        w.counts.n_inter = c.at("n_inter").get<int>();
        w.counts.n_command = c.at("n_command").get<int>();
        w.counts.n_motor = c.at("n_motor").get<int>();
        w.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("synapses")) {
            if (!s.is_array() || s.size() != 3) throw ConfigError("synapse entry must be [source, target, polarity]");
            w.synapses.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
        }
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed wiring JSON: ") + e.what());
    }
}

std::string wiring_to_dot(const NcpWiring& w) {
    std::ostringstream os;
    os << "digraph ncp {\n  rankdir=LR;\n";
    for (Layer layer : {Layer::Sensory, Layer::Inter, Layer::Command, Layer::Motor}) {
        os << "  subgraph cluster_" << layer_name(layer) << " {\n    label=\"" << layer_name(layer) << "\";\n";
        const int first = w.first_id(layer);
        for (int n = first; n < first + w.layer_size(layer); ++n) os << "    n" << n << ";\n";
        os << "  }\n";
    }
    for (const auto& s : w.synapses) {
        os << "  n" << s.source << " -> n" << s.target << " [polarity=" << (s.polarity > 0 ? "\"+1\"" : "\"-1\"")
           << ", style=" << (s.polarity > 0 ? "solid" : "dashed") << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace lbp
