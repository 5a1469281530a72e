#include "lbp/linksim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"

namespace lbp {

namespace {

constexpr std::uint64_t kEventStream = 0xE7E7;
constexpr std::uint64_t kBeamStream = 0xB0B0;
constexpr std::uint64_t kLayoutStream = 0x1A1A;
constexpr int kPlacementRetries = 1000;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

void validate_profile(const ScenarioProfile& p, int min_length) {
    auto fail = [&](const std::string& what) { throw ConfigError("profile '" + p.name + "': " + what); };
    if (p.n_beams < 1) fail("n_beams must be >= 1");
    if (p.trace_length < 2 || p.trace_length <= min_length) {
        fail("trace_length " + std::to_string(p.trace_length) + " must exceed " + std::to_string(min_length));
    }
    if (!(p.strong_beam_fraction > 0.0 && p.strong_beam_fraction <= 1.0)) fail("strong_beam_fraction must be in (0, 1]");
    if (!(p.noise_std >= 0.0)) fail("noise_std must be >= 0");
    if (!(p.blockage_rate >= 0.0)) fail("blockage_rate must be >= 0");
    if (p.duration_min < 1 || p.duration_min > p.duration_max) fail("need 1 <= duration min <= max");
    if (!(p.depth >= 0.0 && p.depth <= 1.0)) fail("depth must be in [0, 1]");
    const auto& s = p.signature;
    if (s.lead_time_min < 0 || s.lead_time_min > s.lead_time_max) fail("need 0 <= lead_time min <= max");
    if (!(s.amplitude_min >= 0.0 && s.amplitude_min <= s.amplitude_max && s.amplitude_max < 1.0)) {
        fail("ripple amplitude range must satisfy 0 <= min <= max < 1");
    }
    if (!(s.frequency_min >= 0.0 && s.frequency_min <= s.frequency_max)) fail("bad ripple frequency range");
    if (!(s.decay >= 0.0)) fail("decay must be >= 0");
    if (p.trace_length <= s.lead_time_max + p.duration_max + 1) fail("trace too short for a single event");
}

std::vector<BlockageEvent> generate_events(const ScenarioProfile& p) {
    validate_profile(p);
    auto rng = stream_rng(p.seed, kEventStream);
    const double mean_count = p.blockage_rate * p.trace_length / 1000.0;
    const int n_events = mean_count > 0.0 ? std::poisson_distribution<int>(mean_count)(rng) : 0;
    const auto& sig = p.signature;

    std::vector<BlockageEvent> events;
    for (int k = 0; k < n_events; ++k) {
        BlockageEvent ev;
        ev.depth = p.depth;
        ev.lead_time = std::uniform_int_distribution<int>(sig.lead_time_min, sig.lead_time_max)(rng);
        ev.duration = std::uniform_int_distribution<int>(p.duration_min, p.duration_max)(rng);
        ev.ripple_amplitude = std::uniform_real_distribution<double>(sig.amplitude_min, sig.amplitude_max)(rng);
        ev.ripple_frequency = std::uniform_real_distribution<double>(sig.frequency_min, sig.frequency_max)(rng);
        std::uniform_int_distribution<int> onset_dist(ev.lead_time, p.trace_length - ev.duration - 1);
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
            ev.onset = onset_dist(rng);
            // occupied span [onset - lead, onset + duration) plus a one-sample guard
            placed = std::none_of(events.begin(), events.end(), [&](const BlockageEvent& o) {
                return ev.onset - ev.lead_time <= o.onset + o.duration && o.onset - o.lead_time <= ev.onset + ev.duration;
            });
        }
        if (!placed) {
            throw ConfigError("profile '" + p.name + "': could not place event " + std::to_string(k + 1) + " of " +
                              std::to_string(n_events) + " without overlap");
        }
        events.push_back(ev);
    }
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.onset < b.onset; });
    return events;
}

double beam_baseline(const ScenarioProfile& p, int beam_id) {
    validate_profile(p);
    if (beam_id < 0 || beam_id >= p.n_beams) throw ConfigError("beam id out of range");
    auto layout = stream_rng(p.seed, kLayoutStream);
    std::vector<int> order(static_cast<std::size_t>(p.n_beams));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), layout);
    const int n_strong = std::max(1, static_cast<int>(std::lround(p.strong_beam_fraction * p.n_beams)));
    const auto rank = std::find(order.begin(), order.end(), beam_id) - order.begin();

    auto rng = stream_rng(p.seed, kBeamStream, static_cast<std::uint64_t>(beam_id));
    return rank < n_strong ? std::uniform_real_distribution<double>(0.5, 1.0)(rng)
                           : std::uniform_real_distribution<double>(0.05, 0.35)(rng);
}

double signature_factor(const BlockageEvent& ev, double decay, int t) {
    const int s = ev.onset - t;
    if (s < 1 || s > ev.lead_time) return 1.0;
    return 1.0 + ev.ripple_amplitude * std::exp(-decay * (s - 1)) *
                     std::sin(2.0 * std::numbers::pi * ev.ripple_frequency * s);
}

PowerTrace generate_trace(const ScenarioProfile& p, int beam_id, const std::vector<BlockageEvent>& events) {
    const double base = beam_baseline(p, beam_id);
    // baseline consumed the first draw of this stream; noise continues after it
    auto rng = stream_rng(p.seed, kBeamStream, static_cast<std::uint64_t>(beam_id));
    rng.discard(1);
    std::normal_distribution<double> noise(0.0, 1.0);

    PowerTrace tr;
    tr.beam_id = beam_id;
    tr.power.resize(static_cast<std::size_t>(p.trace_length));
    tr.labels.assign(static_cast<std::size_t>(p.trace_length), 0);
    for (int t = 0; t < p.trace_length; ++t) {
        double factor = 1.0;
        for (const auto& ev : events) {
            if (t >= ev.onset && t < ev.onset + ev.duration) {
                factor = ev.depth;
                tr.labels[static_cast<std::size_t>(t)] = 1;
                break;
            }
            if (t < ev.onset && t >= ev.onset - ev.lead_time) {
                factor = signature_factor(ev, p.signature.decay, t);
                break;
            }
        }
        const double n = noise(rng);
        const double value = base * factor + (p.noise_std > 0.0 ? p.noise_std * n : 0.0);
        tr.power[static_cast<std::size_t>(t)] = std::clamp(value, 0.0, 1.0);
    }
    return tr;
}

PowerTrace generate_trace(const ScenarioProfile& p, int beam_id) {
    return generate_trace(p, beam_id, generate_events(p));
}

GeneratedScenario generate_scenario(const ScenarioProfile& p) {
    GeneratedScenario g;
    g.events = generate_events(p);
    g.scenario.id = p.name;
    g.scenario.t.resize(static_cast<std::size_t>(p.trace_length));
    std::iota(g.scenario.t.begin(), g.scenario.t.end(), 0L);
    for (int b = 0; b < p.n_beams; ++b) g.scenario.traces.push_back(generate_trace(p, b, g.events));
    return g;
}

ScenarioProfile default_indoor_profile() {
    // Controlled scene: fixed ripple frequency, slow envelope decay and a noise
    // floor high enough that the detector does not key on outdoor sensor noise.
    ScenarioProfile p;
    p.noise_std = 0.04;
    p.signature.frequency_min = 0.25;
    p.signature.frequency_max = 0.25;
    p.signature.decay = 0.03;
    return p;
}

std::vector<ScenarioProfile> default_outdoor_profiles() {
    struct Row {
        const char* name;
        int lead_lo, lead_hi;
        double amp_lo, amp_hi, freq_lo, freq_hi;
        int dur_lo, dur_hi;
        double noise, rate, strong, depth;
    };
    // Traffic scenes: randomized signatures, wider blockage durations.
    static constexpr Row rows[] = {
        {"17", 8, 14, 0.12, 0.18, 0.15, 0.25, 6, 20, 0.02, 6.0, 0.70, 0.05},
        {"18", 10, 16, 0.14, 0.20, 0.15, 0.25, 8, 16, 0.02, 6.0, 0.80, 0.05},
        {"19", 6, 12, 0.10, 0.16, 0.12, 0.28, 4, 24, 0.03, 5.0, 0.60, 0.05},
        {"20", 10, 18, 0.12, 0.20, 0.15, 0.25, 8, 30, 0.03, 4.0, 0.75, 0.05},
        {"21", 6, 18, 0.08, 0.14, 0.12, 0.30, 10, 40, 0.04, 2.0, 0.65, 0.05},
        {"22", 8, 16, 0.08, 0.16, 0.12, 0.30, 4, 40, 0.06, 2.5, 0.70, 0.05},
    };
    std::vector<ScenarioProfile> out;
    std::uint64_t seed = 17;
    for (const auto& r : rows) {
        ScenarioProfile p;
        p.name = r.name;
        p.trace_length = 1000;
        p.strong_beam_fraction = r.strong;
        p.noise_std = r.noise;
        p.blockage_rate = r.rate;
        p.duration_min = r.dur_lo;
        p.duration_max = r.dur_hi;
        p.depth = r.depth;
        p.signature = {r.lead_lo, r.lead_hi, r.amp_lo, r.amp_hi, r.freq_lo, r.freq_hi, 0.03};
        p.seed = seed++;
        out.push_back(p);
    }
    return out;
}

nlohmann::json profile_to_json(const ScenarioProfile& p) {
    const auto& s = p.signature;
    return {
        {"name", p.name},
        {"n_beams", p.n_beams},
        {"trace_length", p.trace_length},
        {"strong_beam_fraction", p.strong_beam_fraction},
        {"noise_std", p.noise_std},
        {"blockage_rate", p.blockage_rate},
        {"blockage_duration", {{"min", p.duration_min}, {"max", p.duration_max}}},
        {"depth", p.depth},
        {"signature",
         {{"lead_time", {{"min", s.lead_time_min}, {"max", s.lead_time_max}}},
          {"ripple_amplitude", {{"min", s.amplitude_min}, {"max", s.amplitude_max}}},
          {"ripple_frequency", {{"min", s.frequency_min}, {"max", s.frequency_max}}},
          {"decay", s.decay}}},
        {"seed", p.seed},
    };
}

ScenarioProfile profile_from_json(const nlohmann::json& j, const ScenarioProfile& base) {
    ScenarioProfile p = base;
    try {
        auto opt = [&j](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        auto range = [](const nlohmann::json& r, auto& lo, auto& hi) {
            if (r.contains("min")) lo = r.at("min").get<std::decay_t<decltype(lo)>>();
            if (r.contains("max")) hi = r.at("max").get<std::decay_t<decltype(hi)>>();
        };
        opt("name", p.name);
        opt("n_beams", p.n_beams);
        opt("trace_length", p.trace_length);
        opt("strong_beam_fraction", p.strong_beam_fraction);
        opt("noise_std", p.noise_std);
        opt("blockage_rate", p.blockage_rate);
        opt("depth", p.depth);
        opt("seed", p.seed);
        if (j.contains("blockage_duration")) range(j.at("blockage_duration"), p.duration_min, p.duration_max);
        if (j.contains("signature")) {
            const auto& s = j.at("signature");
            if (s.contains("lead_time")) range(s.at("lead_time"), p.signature.lead_time_min, p.signature.lead_time_max);
            if (s.contains("ripple_amplitude")) {
                range(s.at("ripple_amplitude"), p.signature.amplitude_min, p.signature.amplitude_max);
            }
            if (s.contains("ripple_frequency")) {
                range(s.at("ripple_frequency"), p.signature.frequency_min, p.signature.frequency_max);
            }
            if (s.contains("decay")) p.signature.decay = s.at("decay").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario profile: ") + e.what());
    }
    return p;
}

ScenarioSetManifest generate_scenario_set(const ScenarioProfile& indoor, const std::vector<ScenarioProfile>& outdoor,
                                          const std::filesystem::path& out_dir) {
    if (outdoor.empty()) throw ConfigError("need at least one outdoor profile");
    std::vector<std::pair<const ScenarioProfile*, const char*>> all{{&indoor, "indoor"}};
    for (const auto& p : outdoor) all.emplace_back(&p, "outdoor");
    {
        std::vector<std::string> names;
        for (const auto& [p, role] : all) names.push_back(p->name);
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
            throw ConfigError("scenario profile names must be unique");
        }
    }

    ScenarioSetManifest m;
    nlohmann::json profiles = nlohmann::json::array();
    nlohmann::json seeds = nlohmann::json::object();
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [p, role] : all) {
        auto gen = generate_scenario(*p);
        const std::string bytes = scenario_to_csv(gen.scenario);
        const std::filesystem::path rel = p->name + ".csv";
        write_file_atomic(out_dir / rel, bytes);
        ScenarioFile f{p->name, role, out_dir / rel, sha256_hex(bytes)};
        files.push_back({{"name", f.name},
                         {"role", f.role},
                         {"path", rel.string()},
                         {"sha256", f.sha256},
                         {"n_events", gen.events.size()}});
        auto pj = profile_to_json(*p);
        pj["role"] = role;
        profiles.push_back(std::move(pj));
        seeds[p->name] = p->seed;
        m.files.push_back(std::move(f));
    }
    m.json = {{"generator_version", kGeneratorVersion}, {"profiles", profiles}, {"seeds", seeds}, {"files", files}};
    write_file_atomic(out_dir / "scenario_manifest.json", m.json.dump(2) + "\n");
    return m;
}

}  // namespace lbp
