#include "lbp/lbp.h"

#include <cstring>
#include <exception>
#include <iostream>
#include <string>

#include "lbp/checkpoint.hpp"
#include "lbp/commands.hpp"
#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"
#include "lbp/ltc.hpp"
#include "lbp/run_config.hpp"
#include "lbp/wiring.hpp"

struct lbp_config {
    nlohmann::json layer = nlohmann::json::object();  // user-supplied values only
};

struct lbp_wiring {
    lbp::NcpWiring wiring;
};

struct lbp_model {
    lbp::Checkpoint checkpoint;
    lbp::CompiledCell cell;
};

namespace {

thread_local std::string g_last_error;

lbp_status fail(lbp_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Maps the library's exception hierarchy onto status codes.
template <typename F>
lbp_status guarded(F&& body) {
    try {
        g_last_error.clear();
        body();
        return LBP_OK;
    } catch (const lbp::ConfigError& e) {
        return fail(LBP_ERR_CONFIG, e.what());
    } catch (const lbp::IoError& e) {
        return fail(LBP_ERR_IO, e.what());
    } catch (const lbp::NumericError& e) {
        return fail(LBP_ERR_NUMERIC, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(LBP_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(LBP_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(LBP_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(LBP_ERR_INTERNAL, "unknown error");
    }
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

nlohmann::json::json_pointer dotted_pointer(const std::string& key) {
    if (key.empty()) throw lbp::ConfigError("config key must not be empty");
    std::string ptr = "/";
    for (char ch : key) {
        if (ch == '.') ptr += '/';
        else if (ch == '~') ptr += "~0";
        else if (ch == '/') ptr += "~1";
        else ptr += ch;
    }
    return nlohmann::json::json_pointer(ptr);
}

}  // namespace

extern "C" {

const char* lbp_version(void) { return "1.0.0"; }

const char* lbp_last_error(void) { return g_last_error.c_str(); }

void lbp_string_free(char* s) { delete[] s; }

lbp_status lbp_config_create(lbp_config** out) {
    if (!out) return fail(LBP_ERR_CONFIG, "null output pointer");
    return guarded([&] { *out = new lbp_config(); });
}

void lbp_config_free(lbp_config* cfg) { delete cfg; }

lbp_status lbp_config_load_file(lbp_config* cfg, const char* path) {
    if (!cfg || !path) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        if (!std::filesystem::exists(path)) throw lbp::IoError(std::string("config file not found: ") + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lbp::read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw lbp::ConfigError(std::string("config file ") + path + " is not valid JSON: " + e.what());
        }
        if (j.is_object() && j.contains("command") && j.contains("config")) j = j.at("config");
        auto merged = cfg->layer;
        merged.merge_patch(j);
        lbp::run_config_from_json(merged);  // reject before committing
        cfg->layer = std::move(merged);
    });
}

lbp_status lbp_config_set(lbp_config* cfg, const char* key, const char* json_value) {
    if (!cfg || !key || !json_value) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(json_value);
        } catch (const nlohmann::json::exception&) {
            throw lbp::ConfigError(std::string("value for '") + key + "' is not valid JSON: " + json_value);
        }
        auto merged = cfg->layer;
        merged[dotted_pointer(key)] = value;
        lbp::run_config_from_json(merged);
        cfg->layer = std::move(merged);
    });
}

lbp_status lbp_config_to_json(const lbp_config* cfg, char** out_json) {
    if (!cfg || !out_json) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        const auto resolved = lbp::run_config_from_json(cfg->layer);
        *out_json = copy_string(lbp::run_config_to_json(resolved).dump(2) + "\n");
    });
}

lbp_status lbp_run(const lbp_config* cfg, const char* command) {
    if (!cfg || !command) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        const auto resolved = lbp::run_config_from_json(cfg->layer);
        lbp::run_command(resolved, command, std::cout);
        std::cout.flush();
    });
}

lbp_status lbp_wiring_build(int n_sensory, int n_inter, int n_command, int n_motor, uint64_t seed, lbp_wiring** out) {
    if (!out) return fail(LBP_ERR_CONFIG, "null output pointer");
    return guarded([&] {
        lbp::LayerCounts counts{n_sensory, n_inter, n_command, n_motor};
        *out = new lbp_wiring{lbp::build_ncp(counts, {}, seed)};
    });
}

lbp_status lbp_wiring_from_json(const char* json, lbp_wiring** out) {
    if (!json || !out) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] { *out = new lbp_wiring{lbp::wiring_from_json(nlohmann::json::parse(json))}; });
}

void lbp_wiring_free(lbp_wiring* wiring) { delete wiring; }

lbp_status lbp_wiring_synapse_count(const lbp_wiring* wiring, size_t* out) {
    if (!wiring || !out) return fail(LBP_ERR_CONFIG, "null argument");
    *out = wiring->wiring.synapses.size();
    g_last_error.clear();
    return LBP_OK;
}

lbp_status lbp_wiring_validate(const lbp_wiring* wiring) {
    if (!wiring) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        const auto report = lbp::validate_wiring(wiring->wiring);
        if (!report.ok()) throw lbp::ConfigError(report.summary());
    });
}

lbp_status lbp_wiring_to_json(const lbp_wiring* wiring, char** out_json) {
    if (!wiring || !out_json) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] { *out_json = copy_string(lbp::wiring_to_json(wiring->wiring).dump(2) + "\n"); });
}

lbp_status lbp_wiring_to_dot(const lbp_wiring* wiring, char** out_dot) {
    if (!wiring || !out_dot) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] { *out_dot = copy_string(lbp::wiring_to_dot(wiring->wiring)); });
}

lbp_status lbp_model_load(const char* checkpoint_path, lbp_model** out) {
    if (!checkpoint_path || !out) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        auto ckpt = lbp::load_checkpoint(checkpoint_path);
        auto cell = lbp::CompiledCell::compile(ckpt.params, ckpt.wiring);
        *out = new lbp_model{std::move(ckpt), std::move(cell)};
    });
}

void lbp_model_free(lbp_model* model) { delete model; }

lbp_status lbp_model_info(const lbp_model* model, int* t_ob, int* horizon) {
    if (!model) return fail(LBP_ERR_CONFIG, "null argument");
    if (t_ob) *t_ob = model->checkpoint.config.t_ob;
    if (horizon) *horizon = model->checkpoint.config.horizon;
    g_last_error.clear();
    return LBP_OK;
}

lbp_status lbp_model_predict(const lbp_model* model, const double* power, size_t n, double* probability) {
    if (!model || !power || !probability) return fail(LBP_ERR_CONFIG, "null argument");
    return guarded([&] {
        const int t_ob = model->checkpoint.config.t_ob;
        if (n != static_cast<size_t>(t_ob)) {
            throw lbp::ConfigError("window has " + std::to_string(n) + " samples but the model expects T_ob=" +
                                   std::to_string(t_ob));
        }
        lbp::PowerTrace trace;
        trace.power.assign(power, power + n);
        trace.labels.assign(n, 0);
        const auto window = lbp::make_window(trace, t_ob - 1, t_ob);
        lbp::check_window(window, model->cell.n_features);
        *probability = lbp::predict_probability(window, model->cell, model->checkpoint.config.ode_unfolds);
    });
}

}  // extern "C"
