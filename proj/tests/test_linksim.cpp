#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"
#include "lbp/linksim.hpp"

using namespace lbp;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("lbp_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

double variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("blockage rate 0 gives no blocked samples") {
    ScenarioProfile p = default_indoor_profile();
    p.blockage_rate = 0.0;
    const auto g = generate_scenario(p);
    CHECK(g.events.empty());
    for (const auto& tr : g.scenario.traces)
        for (auto l : tr.labels) CHECK(l == 0);
}

TEST_CASE("noise 0 and depth 0: blocked samples are exactly zero, others at the baseline") {
    ScenarioProfile p = default_indoor_profile();
    p.noise_std = 0.0;
    p.depth = 0.0;
    p.signature.amplitude_min = p.signature.amplitude_max = 0.0;
    const auto g = generate_scenario(p);
    REQUIRE(!g.events.empty());
    for (const auto& tr : g.scenario.traces) {
        const double base = beam_baseline(p, tr.beam_id);
        for (std::size_t t = 0; t < tr.length(); ++t) {
            if (tr.labels[t]) CHECK(tr.power[t] == 0.0);
            else CHECK(tr.power[t] == doctest::Approx(base).epsilon(1e-15));
        }
    }
}

TEST_CASE("power values stay in [0, 1] for every default profile") {
    auto profiles = default_outdoor_profiles();
    profiles.push_back(default_indoor_profile());
    for (const auto& p : profiles) {
        const auto g = generate_scenario(p);
        CHECK(g.scenario.n_beams() == 64);
        for (const auto& tr : g.scenario.traces)
            for (double v : tr.power) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("blocked-sample density matches rate x mean duration within 20% over 100 traces") {
    ScenarioProfile p = default_indoor_profile();
    p.n_beams = 1;
    p.trace_length = 2000;
    double blocked = 0.0;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        p.seed = seed;
        const auto tr = generate_trace(p, 0);
        for (auto l : tr.labels) blocked += l;
        total += static_cast<double>(tr.length());
    }
    const double expected = p.blockage_rate / 1000.0 * 0.5 * (p.duration_min + p.duration_max);
    CHECK(std::abs(blocked / total - expected) / expected <= 0.20);
}

TEST_CASE("events do not overlap and the ripple precedes every onset") {
    const auto p = default_outdoor_profiles()[5];
    const auto g = generate_scenario(p);
    for (std::size_t k = 1; k < g.events.size(); ++k) {
        const auto& a = g.events[k - 1];
        const auto& b = g.events[k];
        CHECK(a.onset + a.duration < b.onset - b.lead_time);
    }
    for (const auto& ev : g.events) {
        CHECK(ev.onset >= ev.lead_time);
        CHECK(ev.duration >= p.duration_min);
        CHECK(ev.duration <= p.duration_max);
        CHECK(ev.lead_time >= p.signature.lead_time_min);
        CHECK(ev.lead_time <= p.signature.lead_time_max);
        CHECK(signature_factor(ev, p.signature.decay, ev.onset) == 1.0);
        CHECK(signature_factor(ev, p.signature.decay, ev.onset - ev.lead_time - 1) == 1.0);
    }
}

TEST_CASE("pre-onset windows correlate with the ripple template at least 3x more than background") {
    ScenarioProfile p = default_indoor_profile();
    const auto g = generate_scenario(p);
    REQUIRE(g.events.size() >= 3);
    const double f = p.signature.frequency_min;
    const int lead = p.signature.lead_time_max;
    auto score = [&](const PowerTrace& tr, double base, int onset) {
        double c = 0.0;
        for (int s = 1; s <= lead; ++s) {
            c += (tr.power[static_cast<std::size_t>(onset - s)] / base - 1.0) * std::sin(2.0 * std::numbers::pi * f * s);
        }
        return std::abs(c);
    };
    double signal = 0.0;
    double background = 0.0;
    int n_signal = 0;
    int n_background = 0;
    for (const auto& tr : g.scenario.traces) {
        const double base = beam_baseline(p, tr.beam_id);
        if (base < 0.5) continue;
        for (const auto& ev : g.events) {
            signal += score(tr, base, ev.onset);
            ++n_signal;
        }
        // Background: positions whose preceding window is clear of any event.
        for (int t = lead + 1; t < p.trace_length; t += 7) {
            const bool clear = std::none_of(g.events.begin(), g.events.end(), [&](const BlockageEvent& ev) {
                return t - lead <= ev.onset + ev.duration && ev.onset - ev.lead_time <= t;
            });
            if (!clear) continue;
            background += score(tr, base, t);
            ++n_background;
        }
    }
    REQUIRE(n_background > 0);
    CHECK(signal / n_signal >= 3.0 * (background / n_background));
}

TEST_CASE("generation is deterministic; seeds matter") {
    const auto p = default_outdoor_profiles()[2];
    CHECK(generate_scenario(p).scenario.traces == generate_scenario(p).scenario.traces);
    auto q = p;
    q.seed += 100;
    CHECK(generate_scenario(q).scenario.traces != generate_scenario(p).scenario.traces);
}

TEST_CASE("scenario set: 7 files plus a manifest, byte-identical across runs") {
    const auto a = temp_dir("simset_a");
    const auto b = temp_dir("simset_b");
    const auto ma = generate_scenario_set(default_indoor_profile(), default_outdoor_profiles(), a);
    const auto mb = generate_scenario_set(default_indoor_profile(), default_outdoor_profiles(), b);
    REQUIRE(ma.files.size() == 7);
    CHECK(ma.files.front().role == "indoor");
    for (std::size_t i = 0; i < ma.files.size(); ++i) {
        CHECK(ma.files[i].sha256 == mb.files[i].sha256);
        CHECK(read_file(ma.files[i].path) == read_file(mb.files[i].path));
        CHECK(sha256_hex(read_file(ma.files[i].path)) == ma.files[i].sha256);
    }
    CHECK(read_file(a / "scenario_manifest.json") == read_file(b / "scenario_manifest.json"));
    CHECK(ma.json.at("files").size() == 7);
    CHECK(ma.json.at("seeds").at("indoor").get<std::uint64_t>() == default_indoor_profile().seed);

    auto dup = default_outdoor_profiles();
    dup[1].name = dup[0].name;
    CHECK_THROWS_AS(generate_scenario_set(default_indoor_profile(), dup, a), ConfigError);
}

TEST_CASE("outdoor blockage durations spread wider than indoor") {
    std::vector<double> indoor;
    std::vector<double> outdoor;
    for (const auto& ev : generate_scenario(default_indoor_profile()).events) indoor.push_back(ev.duration);
    for (const auto& p : default_outdoor_profiles())
        for (const auto& ev : generate_scenario(p).events) outdoor.push_back(ev.duration);
    REQUIRE(indoor.size() > 2);
    REQUIRE(outdoor.size() > 2);
    CHECK(variance(outdoor) > variance(indoor));
}

TEST_CASE("profile JSON round trip and validation") {
    for (const auto& p : default_outdoor_profiles()) CHECK(profile_from_json(profile_to_json(p)) == p);
    ScenarioProfile bad = default_indoor_profile();
    bad.duration_min = 20;
    CHECK_THROWS_AS(validate_profile(bad), ConfigError);
    bad = default_indoor_profile();
    bad.signature.amplitude_max = 1.0;
    CHECK_THROWS_AS(validate_profile(bad), ConfigError);
    CHECK_THROWS_AS(validate_profile(default_indoor_profile(), 400), ConfigError);
    CHECK_THROWS_AS(profile_from_json(nlohmann::json::parse(R"({"noise_std": "x"})")), ConfigError);
}
