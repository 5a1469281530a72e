#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "lbp/ltc.hpp"
#include "lbp/wiring.hpp"

namespace lbp {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr const char* kFeatureSpec = "power,first_difference";

struct ModelConfig {
    int ode_unfolds = kDefaultOdeUnfolds;
    int t_ob = 32;
    int horizon = 1;
    std::string feature_spec = kFeatureSpec;

    bool operator==(const ModelConfig&) const = default;
};

struct Checkpoint {
    NcpWiring wiring;
    LtcParameters params;
    ModelConfig config;

    bool operator==(const Checkpoint&) const = default;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Canonical bytes: sorted keys, shortest round-trip doubles, trailing newline.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lbp
