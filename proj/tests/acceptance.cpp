// Acceptance suite: one PASS/FAIL line per criterion. Criteria 1 and 5-8 go
// through the blockpred binary exactly as a user would; 2-4 are property
// checks on the library.
//
// Usage: acceptance --blockpred PATH --work DIR

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "CLI11.hpp"
#include "lbp/eval.hpp"
#include "lbp/fileutil.hpp"
#include "lbp/ltc.hpp"
#include "lbp/wiring.hpp"
#include "support/reference.hpp"

using namespace lbp;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
    if (!pass) ++g_failures;
}

struct Timed {
    int status;
    double seconds;
};

Timed run(const std::string& cmd) {
    const auto t0 = std::chrono::steady_clock::now();
    const int raw = std::system(cmd.c_str());
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, s};
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
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

void criterion_gradcheck(const std::string& bp, const fs::path& work) {
    const auto out = work / "gradcheck.txt";
    const auto t = run(quote(bp) + " --out-dir " + quote(work / "gradcheck") + " gradcheck > " + quote(out) + " 2>&1");
    const std::string text = read_file(out);
    const std::string first = text.substr(0, text.find('\n'));
    const bool ok = t.status == 0 && first.rfind("PASS", 0) == 0 && t.seconds < 60.0;
    verdict(1, ok, first + "; " + fmt("%.1f s", t.seconds) + " (limit 60 s)");
}

void criterion_boundedness() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> input(-1.0, 1.0);
    double lo = 0.0;
    double hi = 0.0;
    for (int m = 0; m < 50; ++m) {
        const auto w = random_wiring(rng);
        auto p = jittered(w, rng);
        std::fill(p.rev_log.begin(), p.rev_log.end(), 0.0);  // |A| = 1
        NeuronState s{std::vector<double>(static_cast<std::size_t>(w.counts.ode_neurons()), 0.0)};
        for (int t = 0; t < 1000; ++t) {
            const double in[] = {input(rng), input(rng)};
            s = fused_step(s, in, p, w, 1.0 / kDefaultOdeUnfolds);
            for (double v : s.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    const bool ok = lo >= -1.0 - 1e-9 && hi <= 1.0 + 1e-9;
    verdict(2, ok, "50 models x 1000 steps, state range [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "]");
}

void criterion_oracle() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto w = random_wiring(rng);
        const auto p = jittered(w, rng);
        const auto win = random_window(rng, std::uniform_int_distribution<int>(1, 40)(rng));
        const auto fast = forward_sequence(win, p, w);
        const auto ref = reference::forward(win, p, w, kDefaultOdeUnfolds);
        for (std::size_t r = 0; r < ref.trajectory.size(); ++r)
            for (std::size_t i = 0; i < ref.trajectory[r].size(); ++i)
                worst = std::max(worst, std::abs(fast.trajectory[r].values[i] - ref.trajectory[r][i]));
        worst = std::max(worst, std::abs(fast.probability - ref.probability));
    }
    verdict(3, worst <= 1e-12, "100 random triples, max abs difference " + fmt("%.3e", worst) + " (limit 1e-12)");
}

void criterion_wiring() {
    int valid = 0;
    for (std::uint64_t s = 0; s < 100; ++s) valid += validate_wiring(build_ncp({}, {}, s)).ok();

    const auto base = build_ncp({}, {}, 1);
    const int S = base.first_id(Layer::Sensory);
    const int I = base.first_id(Layer::Inter);
    const int C = base.first_id(Layer::Command);
    const int M = base.first_id(Layer::Motor);
    struct Mutation {
        const char* expect;
        std::function<void(NcpWiring&)> apply;
    };
    const Mutation mutations[] = {
        {"layer-skipping edge", [&](NcpWiring& w) { w.synapses.push_back({S, M, 1}); }},
        {"backward edge", [&](NcpWiring& w) { w.synapses.push_back({C, I, 1}); }},
        {"lateral edge", [&](NcpWiring& w) { w.synapses.push_back({I, I + 1, 1}); }},
        {"self-loop", [&](NcpWiring& w) { w.synapses.push_back({I, I, 1}); }},
        {"duplicate synapse", [&](NcpWiring& w) { w.synapses.push_back(w.synapses.front()); }},
        {"invalid polarity", [&](NcpWiring& w) { w.synapses.front().polarity = 0; }},
        {"no incoming synapse",
         [&](NcpWiring& w) { std::erase_if(w.synapses, [&](const Synapse& s) { return s.target == M; }); }},
        {"no outgoing synapse",
         [&](NcpWiring& w) { std::erase_if(w.synapses, [&](const Synapse& s) { return s.source == I; }); }},
    };
    int caught = 0;
    for (const auto& m : mutations) {
        auto w = base;
        m.apply(w);
        caught += validate_wiring(w).has(m.expect);
    }
    const int n_mut = static_cast<int>(std::size(mutations));
    verdict(4, valid == 100 && caught == n_mut,
            std::to_string(valid) + "/100 seeds valid, " + std::to_string(caught) + "/" + std::to_string(n_mut) +
                " negative controls caught");
}

std::map<int, double> mean_by_horizon(const std::vector<Metrics>& ms) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& m : ms) {
        acc[m.horizon].first += m.accuracy;
        acc[m.horizon].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [k, v] : acc) out[k] = v.first / v.second;
    return out;
}

struct LossHistory {
    std::size_t rows = 0;
    double first = 0.0;
    double last = 0.0;
};

LossHistory read_history(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);  // header
    LossHistory h;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        const double loss = std::stod(line.substr(a + 1, b - a - 1));
        if (h.rows == 0) h.first = loss;
        h.last = loss;
        ++h.rows;
    }
    return h;
}

void criteria_pipeline(const std::string& bp, const fs::path& work) {
    const fs::path run_a = work / "pipeline";
    const fs::path run_b = work / "pipeline_rerun";
    const auto t = run(quote(bp) + " --out-dir " + quote(run_a) + " pipeline > " + quote(work / "pipeline.log") + " 2>&1");
    if (t.status != 0) {
        for (int id = 5; id <= 8; ++id) verdict(id, false, "pipeline exited with status " + std::to_string(t.status));
        return;
    }
    std::cout << "pipeline finished in " << fmt("%.1f", t.seconds) << " s" << std::endl;
    const auto metrics = parse_report_csv(read_file(run_a / "report" / "metrics.csv"));
    const auto means = mean_by_horizon(metrics);

    // 5: t+1 accuracy on every outdoor scenario.
    double worst_t1 = 1.0;
    std::string worst_name;
    int n_t1 = 0;
    for (const auto& m : metrics) {
        if (m.horizon != 1) continue;
        ++n_t1;
        if (m.accuracy < worst_t1) {
            worst_t1 = m.accuracy;
            worst_name = m.scenario_id;
        }
    }
    verdict(5, n_t1 == 6 && worst_t1 >= 0.95 && t.seconds < 900.0,
            std::to_string(n_t1) + " outdoor scenarios, min t+1 accuracy " + fmt("%.4f", worst_t1) + " (" +
                worst_name + "), threshold 0.95; pipeline " + fmt("%.0f s", t.seconds) + " (limit 900 s)");

    // 6: horizon trend.
    const double a1 = means.count(1) ? means.at(1) : 0.0;
    const double a5 = means.count(5) ? means.at(5) : 0.0;
    const double a10 = means.count(10) ? means.at(10) : 0.0;
    verdict(6, a5 >= 0.80 && a10 >= 0.70 && a1 >= a5 && a5 >= a10,
            "mean outdoor accuracy K=1 " + fmt("%.4f", a1) + ", K=5 " + fmt("%.4f", a5) + " (>= 0.80), K=10 " +
                fmt("%.4f", a10) + " (>= 0.70), non-increasing");

    // 7: rerun from the manifest, compare bytes.
    const auto t2 = run(quote(bp) + " --config " + quote(run_a / "run_manifest_pipeline.json") + " --out-dir " +
                        quote(run_b) + " pipeline > " + quote(work / "pipeline_rerun.log") + " 2>&1");
    int identical = 0;
    int compared = 0;
    std::string differing;
    if (t2.status == 0) {
        std::vector<fs::path> files{"report/metrics.csv"};
        for (int k : {1, 5, 10}) files.push_back("checkpoints/ckpt_K" + std::to_string(k) + ".json");
        for (const auto& f : files) {
            ++compared;
            const bool same = fs::exists(run_b / f) && read_file(run_a / f) == read_file(run_b / f);
            identical += same;
            if (!same) differing += " " + f.string();
        }
    }
    verdict(7, t2.status == 0 && identical == compared && compared == 4,
            "rerun from run_manifest_pipeline.json: " + std::to_string(identical) + "/" + std::to_string(compared) +
                " checkpoint and metrics files byte-identical" + (differing.empty() ? "" : "; differ:" + differing));

    // 8: training progress on the t+1 task.
    const auto h1 = read_history(run_a / "checkpoints" / "history_K1.csv");
    std::string others;
    for (int k : {5, 10}) {
        const auto hk = read_history(run_a / "checkpoints" / ("history_K" + std::to_string(k) + ".csv"));
        others += "; K=" + std::to_string(k) + " (informational) ratio " + fmt("%.3f", hk.last / hk.first);
    }
    verdict(8, h1.rows == 40 && h1.last < 0.5 * h1.first,
            "K=1 history has " + std::to_string(h1.rows) + " rows, epoch-40 loss " + fmt("%.4f", h1.last) +
                " vs epoch-1 " + fmt("%.4f", h1.first) + " (ratio " + fmt("%.3f", h1.last / h1.first) +
                ", limit 0.5)" + others);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
    std::string blockpred;
    std::string work;
    app.add_option("--blockpred", blockpred, "Path to the blockpred binary")->required();
    app.add_option("--work", work, "Scratch directory (wiped first)")->required();
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(work);
    fs::create_directories(work);
    try {
        criterion_gradcheck(blockpred, work);
        criterion_boundedness();
        criterion_oracle();
        criterion_wiring();
        criteria_pipeline(blockpred, work);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance harness error: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (g_failures == 0 ? "all acceptance criteria passed" : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
