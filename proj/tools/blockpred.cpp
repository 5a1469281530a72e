// blockpred: simulate -> train -> eval pipeline for proactive link-blockage
// prediction with a liquid-time-constant cell. Links only the C API.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lbp/lbp.h"

namespace {

struct Flags {
    std::string config;
    long long seed = 0;
    std::vector<int> horizons;
    std::string out_dir;
    int workers = 0;
    double threshold = -1.0;
    int t_ob = 0;
    bool inject_gradient_bug = false;
    std::string dump_format = "json";
};

int report(lbp_status status) {
    if (status != LBP_OK) std::fprintf(stderr, "blockpred: error: %s\n", lbp_last_error());
    return static_cast<int>(status);
}

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

// Builds the config: file first, then command-line overrides.
lbp_status resolve(const CLI::App& app, const Flags& f, lbp_config* cfg) {
    lbp_status st = LBP_OK;
    auto set = [&](const char* key, const std::string& value) {
        if (st == LBP_OK) st = lbp_config_set(cfg, key, value.c_str());
    };
    if (!f.config.empty()) st = lbp_config_load_file(cfg, f.config.c_str());
    if (app.count("--seed")) set("seed", std::to_string(f.seed));
    if (app.count("--horizons")) set("horizons", nlohmann::json(f.horizons).dump());
    if (app.count("--out-dir")) set("paths.out_dir", json_string(f.out_dir));
    if (app.count("--workers")) set("workers", std::to_string(f.workers));
    if (app.count("--threshold")) set("threshold", nlohmann::json(f.threshold).dump());
    if (app.count("--t-ob")) set("t_ob", std::to_string(f.t_ob));
    if (f.inject_gradient_bug) set("gradcheck.inject_bug", "true");
    return st;
}

int wiring_dump(const lbp_config* cfg, const std::string& format) {
    char* text = nullptr;
    if (lbp_status st = lbp_config_to_json(cfg, &text); st != LBP_OK) return report(st);
    const auto resolved = nlohmann::json::parse(text);
    lbp_string_free(text);
    const auto& n = resolved.at("wiring").at("counts");
    lbp_wiring* wiring = nullptr;
    lbp_status st = lbp_wiring_build(n.at("sensory").get<int>(), n.at("inter").get<int>(), n.at("command").get<int>(),
                                     n.at("motor").get<int>(), resolved.at("seed").get<std::uint64_t>(), &wiring);
    if (st != LBP_OK) return report(st);
    char* out = nullptr;
    st = format == "dot" ? lbp_wiring_to_dot(wiring, &out) : lbp_wiring_to_json(wiring, &out);
    if (st == LBP_OK) {
        std::fputs(out, stdout);
        lbp_string_free(out);
    }
    lbp_wiring_free(wiring);
    return report(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proactive mmWave link-blockage prediction with a liquid-time-constant network"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(lbp_version()));

    Flags f;
    app.add_option("--config", f.config, "JSON config file or a run manifest to reproduce");
    app.add_option("--seed", f.seed, "Model seed (wiring, initialization, training order)")->check(CLI::NonNegativeNumber);
    app.add_option("--horizons", f.horizons, "Prediction horizons K, comma separated")->delimiter(',');
    app.add_option("--out-dir", f.out_dir, "Directory for all outputs");
    app.add_option("--workers", f.workers, "Worker threads (results do not depend on this)");
    app.add_option("--threshold", f.threshold, "Weak-beam exclusion threshold on normalized power");
    app.add_option("--t-ob", f.t_ob, "Observation window length T_ob in samples");
    app.add_flag("--inject-gradient-bug", f.inject_gradient_bug, "Corrupt analytic gradients (negative control)")
        ->group("");

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"simulate", "Generate the indoor and outdoor scenario files"},
        {"train", "Train one checkpoint per horizon on the indoor scenario"},
        {"eval", "Evaluate checkpoints on the outdoor scenarios and write the report"},
        {"gradcheck", "Compare BPTT gradients against finite differences"},
        {"wiring", "Write the NCP wiring as JSON and DOT"},
        {"pipeline", "simulate, train and eval in one run"},
        {"config", "Print the fully resolved configuration"},
    };
    for (const auto& s : subs) app.add_subcommand(s.name, s.help);
    auto* dump = app.get_subcommand("wiring")->add_subcommand("dump", "Print the wiring to standard output");
    dump->add_option("--format", f.dump_format, "json or dot")->check(CLI::IsMember({"json", "dot"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return LBP_ERR_CONFIG;
    }

    lbp_config* cfg = nullptr;
    if (lbp_status st = lbp_config_create(&cfg); st != LBP_OK) return report(st);
    int code = report(resolve(app, f, cfg));
    if (code == LBP_OK) {
        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "config") {
            char* text = nullptr;
            code = report(lbp_config_to_json(cfg, &text));
            if (code == LBP_OK) {
                std::fputs(text, stdout);
                lbp_string_free(text);
            }
        } else if (command == "wiring" && dump->parsed()) {
            code = wiring_dump(cfg, f.dump_format);
        } else {
            code = report(lbp_run(cfg, command.c_str()));
        }
    }
    lbp_config_free(cfg);
    return code;
}
