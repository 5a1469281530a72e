#include "lbp/run_config.hpp"

#include <algorithm>
#include <initializer_list>
#include <set>
#include <string>

#include "lbp/errors.hpp"

namespace lbp {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    require_object(j, where);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& field, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

const std::initializer_list<const char*> kProfileKeys = {
    "name", "n_beams", "trace_length", "strong_beam_fraction", "noise_std", "blockage_rate",
    "blockage_duration", "depth", "signature", "seed"};

ScenarioProfile read_profile(const json& j, const ScenarioProfile& base, const std::string& where) {
    reject_unknown(j, where, kProfileKeys);
    if (j.contains("signature")) {
        reject_unknown(j.at("signature"), where + ".signature",
                       {"lead_time", "ripple_amplitude", "ripple_frequency", "decay"});
    }
    return profile_from_json(j, base);
}

}  // namespace

std::string exclusion_name(ExclusionMode mode) { return mode == ExclusionMode::Beam ? "beam" : "sample"; }

ExclusionMode exclusion_from_name(const std::string& name) {
    if (name == "beam") return ExclusionMode::Beam;
    if (name == "sample") return ExclusionMode::Sample;
    throw ConfigError("exclusion must be \"beam\" or \"sample\", got \"" + name + "\"");
}

void validate_run_config(const RunConfig& c) {
    if (c.t_ob < 1) throw ConfigError("t_ob must be >= 1");
    if (c.horizons.empty()) throw ConfigError("horizons must not be empty");
    for (int k : c.horizons) {
        if (k < 1) throw ConfigError("every horizon must be >= 1");
    }
    auto sorted = c.horizons;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("duplicate horizon");
    if (c.stride < 1) throw ConfigError("stride must be >= 1");
    if (c.ode_unfolds < 1) throw ConfigError("ode_unfolds must be >= 1");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
    if (c.train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (!(c.train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (c.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(c.train.beta1 >= 0.0 && c.train.beta1 < 1.0 && c.train.beta2 >= 0.0 && c.train.beta2 < 1.0)) {
        throw ConfigError("adam betas must be in [0, 1)");
    }
    if (!(c.train.adam_eps > 0.0)) throw ConfigError("adam eps must be > 0");
    if (c.gradcheck.instances < 1) throw ConfigError("gradcheck.instances must be >= 1");
    if (!(c.gradcheck.eps > 0.0)) throw ConfigError("gradcheck.eps must be > 0");
    if (!(c.gradcheck.tolerance > 0.0)) throw ConfigError("gradcheck.tolerance must be > 0");
    if (c.gradcheck.min_rows < 1 || c.gradcheck.min_rows > c.gradcheck.max_rows) {
        throw ConfigError("gradcheck needs 1 <= min_rows <= max_rows");
    }
    if (c.gradcheck.worst_offenders < 0) throw ConfigError("gradcheck.worst_offenders must be >= 0");
    if (c.paths.out_dir.empty()) throw ConfigError("paths.out_dir must not be empty");
    if (c.outdoor.empty()) throw ConfigError("at least one outdoor profile is required");
    build_ncp(c.counts, c.fanout, c.seed);  // rejects infeasible layer sizes and fanouts

    const int max_k = *std::max_element(c.horizons.begin(), c.horizons.end());
    validate_profile(c.indoor, c.t_ob + max_k);
    std::set<std::string> names{c.indoor.name};
    for (const auto& p : c.outdoor) {
        validate_profile(p, c.t_ob + max_k);
        if (!names.insert(p.name).second) throw ConfigError("duplicate scenario name '" + p.name + "'");
    }
}

json run_config_to_json(const RunConfig& c) {
    json outdoor = json::array();
    for (const auto& p : c.outdoor) outdoor.push_back(profile_to_json(p));
    return {
        {"seed", c.seed},
        {"t_ob", c.t_ob},
        {"horizons", c.horizons},
        {"stride", c.stride},
        {"ode_unfolds", c.ode_unfolds},
        {"workers", c.workers},
        {"threshold", c.threshold},
        {"exclusion", exclusion_name(c.exclusion)},
        {"wiring",
         {{"counts",
           {{"sensory", c.counts.n_sensory},
            {"inter", c.counts.n_inter},
            {"command", c.counts.n_command},
            {"motor", c.counts.n_motor}}},
          {"fanout",
           {{"sensory", c.fanout.sensory_fanout},
            {"inter", c.fanout.inter_fanout},
            {"command_recurrent", c.fanout.command_recurrent},
            {"motor_fanin", c.fanout.motor_fanin}}}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"learning_rate", c.train.learning_rate},
          {"batch_size", c.train.batch_size},
          {"adam", {{"beta1", c.train.beta1}, {"beta2", c.train.beta2}, {"eps", c.train.adam_eps}}},
          {"clip_norm", c.train.clip_norm},
          {"balanced_sampling", c.train.balanced_sampling}}},
        {"profiles", {{"indoor", profile_to_json(c.indoor)}, {"outdoor", outdoor}}},
        {"gradcheck",
         {{"instances", c.gradcheck.instances},
          {"eps", c.gradcheck.eps},
          {"tolerance", c.gradcheck.tolerance},
          {"min_rows", c.gradcheck.min_rows},
          {"max_rows", c.gradcheck.max_rows},
          {"worst_offenders", c.gradcheck.worst_offenders},
          {"inject_bug", c.gradcheck.inject_bug}}},
        {"paths",
         {{"out_dir", c.paths.out_dir.generic_string()},
          {"scenario_dir", c.paths.scenario_dir.generic_string()},
          {"checkpoint_dir", c.paths.checkpoint_dir.generic_string()},
          {"report_dir", c.paths.report_dir.generic_string()}}},
    };
}

RunConfig run_config_from_json(const json& input) {
    require_object(input, "config");
    const json& j = (input.contains("command") && input.contains("config")) ? input.at("config") : input;
    reject_unknown(j, "config",
                   {"seed", "t_ob", "horizons", "stride", "ode_unfolds", "workers", "threshold", "exclusion", "wiring",
                    "train", "profiles", "gradcheck", "paths"});

    RunConfig c;
    read(j, "seed", c.seed, "config");
    read(j, "t_ob", c.t_ob, "config");
    read(j, "horizons", c.horizons, "config");
    read(j, "stride", c.stride, "config");
    read(j, "ode_unfolds", c.ode_unfolds, "config");
    read(j, "workers", c.workers, "config");
    read(j, "threshold", c.threshold, "config");
    if (j.contains("exclusion")) {
        std::string name;
        read(j, "exclusion", name, "config");
        c.exclusion = exclusion_from_name(name);
    }

    if (j.contains("wiring")) {
        const auto& w = j.at("wiring");
        reject_unknown(w, "wiring", {"counts", "fanout"});
        if (w.contains("counts")) {
            const auto& n = w.at("counts");
            reject_unknown(n, "wiring.counts", {"sensory", "inter", "command", "motor"});
            read(n, "sensory", c.counts.n_sensory, "wiring.counts");
            read(n, "inter", c.counts.n_inter, "wiring.counts");
            read(n, "command", c.counts.n_command, "wiring.counts");
            read(n, "motor", c.counts.n_motor, "wiring.counts");
        }
        if (w.contains("fanout")) {
            const auto& f = w.at("fanout");
            reject_unknown(f, "wiring.fanout", {"sensory", "inter", "command_recurrent", "motor_fanin"});
            read(f, "sensory", c.fanout.sensory_fanout, "wiring.fanout");
            read(f, "inter", c.fanout.inter_fanout, "wiring.fanout");
            read(f, "command_recurrent", c.fanout.command_recurrent, "wiring.fanout");
            read(f, "motor_fanin", c.fanout.motor_fanin, "wiring.fanout");
        }
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t, "train", {"epochs", "learning_rate", "batch_size", "adam", "clip_norm", "balanced_sampling"});
        read(t, "epochs", c.train.epochs, "train");
        read(t, "learning_rate", c.train.learning_rate, "train");
        read(t, "batch_size", c.train.batch_size, "train");
        read(t, "clip_norm", c.train.clip_norm, "train");
        read(t, "balanced_sampling", c.train.balanced_sampling, "train");
        if (t.contains("adam")) {
            const auto& a = t.at("adam");
            reject_unknown(a, "train.adam", {"beta1", "beta2", "eps"});
            read(a, "beta1", c.train.beta1, "train.adam");
            read(a, "beta2", c.train.beta2, "train.adam");
            read(a, "eps", c.train.adam_eps, "train.adam");
        }
    }

    if (j.contains("profiles")) {
        const auto& p = j.at("profiles");
        reject_unknown(p, "profiles", {"indoor", "outdoor"});
        if (p.contains("indoor")) c.indoor = read_profile(p.at("indoor"), c.indoor, "profiles.indoor");
        if (p.contains("outdoor")) {
            const auto& list = p.at("outdoor");
            if (!list.is_array()) throw ConfigError("profiles.outdoor must be an array");
            const auto defaults = default_outdoor_profiles();
            c.outdoor.clear();
            for (std::size_t i = 0; i < list.size(); ++i) {
                const ScenarioProfile base = i < defaults.size() ? defaults[i] : ScenarioProfile{};
                c.outdoor.push_back(read_profile(list[i], base, "profiles.outdoor[" + std::to_string(i) + "]"));
            }
        }
    }

    if (j.contains("gradcheck")) {
        const auto& g = j.at("gradcheck");
        reject_unknown(g, "gradcheck",
                       {"instances", "eps", "tolerance", "min_rows", "max_rows", "worst_offenders", "inject_bug"});
        read(g, "instances", c.gradcheck.instances, "gradcheck");
        read(g, "eps", c.gradcheck.eps, "gradcheck");
        read(g, "tolerance", c.gradcheck.tolerance, "gradcheck");
        read(g, "min_rows", c.gradcheck.min_rows, "gradcheck");
        read(g, "max_rows", c.gradcheck.max_rows, "gradcheck");
        read(g, "worst_offenders", c.gradcheck.worst_offenders, "gradcheck");
        read(g, "inject_bug", c.gradcheck.inject_bug, "gradcheck");
    }

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        reject_unknown(p, "paths", {"out_dir", "scenario_dir", "checkpoint_dir", "report_dir"});
        std::string s;
        auto path = [&](const char* key, std::filesystem::path& field) {
            if (!p.contains(key)) return;
            s.clear();
            read(p, key, s, "paths");
            field = s;
        };
        path("out_dir", c.paths.out_dir);
        path("scenario_dir", c.paths.scenario_dir);
        path("checkpoint_dir", c.paths.checkpoint_dir);
        path("report_dir", c.paths.report_dir);
    }

    c.train.seed = c.seed;
    c.train.workers = c.workers;
    validate_run_config(c);
    return c;
}

}  // namespace lbp
