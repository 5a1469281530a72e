#include "lbp/checkpoint.hpp"

#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"

namespace lbp {

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
    const auto& p = ckpt.params;
    return {
        {"format_version", kCheckpointFormatVersion},
        {"config",
         {{"ode_unfolds", ckpt.config.ode_unfolds},
          {"t_ob", ckpt.config.t_ob},
          {"horizon", ckpt.config.horizon},
          {"feature_spec", ckpt.config.feature_spec}}},
        {"wiring", wiring_to_json(ckpt.wiring)},
        {"parameters",
         {{"tau_raw", p.tau_raw},
          {"syn_weight_raw", p.w_raw},
          {"syn_gamma", p.gamma},
          {"syn_mu", p.mu},
          {"syn_reversal_log", p.rev_log},
          {"input_scale", p.input_scale},
          {"input_bias", p.input_bias},
          {"output_scale", p.output_scale},
          {"output_bias", p.output_bias}}},
    };
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kCheckpointFormatVersion) {
            throw ConfigError("unsupported checkpoint format_version " + std::to_string(version));
        }
        Checkpoint c;
        const auto& cfg = j.at("config");
        c.config.ode_unfolds = cfg.at("ode_unfolds").get<int>();
        c.config.t_ob = cfg.at("t_ob").get<int>();
        c.config.horizon = cfg.at("horizon").get<int>();
        c.config.feature_spec = cfg.at("feature_spec").get<std::string>();
        if (c.config.feature_spec != kFeatureSpec) {
            throw ConfigError("unknown feature spec '" + c.config.feature_spec + "'");
        }
        c.wiring = wiring_from_json(j.at("wiring"));
        require_valid(c.wiring);
        const auto& p = j.at("parameters");
        c.params.tau_raw = p.at("tau_raw").get<std::vector<double>>();
        c.params.w_raw = p.at("syn_weight_raw").get<std::vector<double>>();
        c.params.gamma = p.at("syn_gamma").get<std::vector<double>>();
        c.params.mu = p.at("syn_mu").get<std::vector<double>>();
        c.params.rev_log = p.at("syn_reversal_log").get<std::vector<double>>();
        c.params.input_scale = p.at("input_scale").get<std::vector<double>>();
        c.params.input_bias = p.at("input_bias").get<std::vector<double>>();
        c.params.output_scale = p.at("output_scale").get<std::vector<double>>();
        c.params.output_bias = p.at("output_bias").get<double>();
        check_shapes(c.params, c.wiring);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) { return checkpoint_to_json(ckpt).dump(2) + "\n"; }

Checkpoint parse_checkpoint(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    return checkpoint_from_json(j);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace lbp
