#include "lbp/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"

namespace lbp {

double Metrics::precision() const noexcept {
    return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
}

double Metrics::recall() const noexcept {
    return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw ConfigError("accuracy needs equal, non-zero lengths");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

Metrics tally(std::span<const int> predictions, std::span<const int> labels, const std::string& scenario_id,
              int horizon) {
    Metrics m;
    m.scenario_id = scenario_id;
    m.horizon = horizon;
    m.accuracy = accuracy(predictions, labels);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) throw ConfigError("predictions and labels must be 0 or 1");
        if (p == 1) {
            (y == 1 ? m.tp : m.fp)++;
        } else {
            (y == 0 ? m.tn : m.fn)++;
        }
    }
    m.n_samples = static_cast<long>(predictions.size());
    return m;
}

Metrics evaluate_predictor(const Predictor& predictor, Scenario scenario, int t_ob, int horizon,
                           const EvalOptions& options) {
    normalize_scenario(scenario);
    std::vector<bool> mask(scenario.traces.size(), true);
    if (options.exclusion == ExclusionMode::Beam) mask = filter_weak_beams(scenario.traces, options.threshold);

    std::vector<int> predictions, labels;
    // one beam at a time keeps memory flat on long traces
    for (std::size_t b = 0; b < scenario.traces.size(); ++b) {
        if (!mask[b]) continue;
        auto ds = window_dataset(std::span<const PowerTrace>(&scenario.traces[b], 1), t_ob, horizon, options.stride,
                                 {}, scenario.id);
        for (const auto& s : ds.samples) {
            if (options.exclusion == ExclusionMode::Sample) {
                const double r_end = s.window.features[static_cast<std::size_t>(s.window.rows() - 1) * 2];
                if (r_end < options.threshold) continue;
            }
            predictions.push_back(predictor(s));
            labels.push_back(s.label);
        }
    }
    if (predictions.empty()) {
        throw ConfigError("scenario '" + scenario.id + "' yields no evaluable samples for K=" + std::to_string(horizon));
    }
    return tally(predictions, labels, scenario.id, horizon);
}

Metrics evaluate(const Checkpoint& checkpoint, const Scenario& scenario, int horizon, const EvalOptions& options) {
    if (checkpoint.config.horizon != horizon) {
        throw ConfigError("checkpoint was trained for K=" + std::to_string(checkpoint.config.horizon) +
                          " but evaluation asked for K=" + std::to_string(horizon));
    }
    const auto cell = CompiledCell::compile(checkpoint.params, checkpoint.wiring);
    const int unfolds = checkpoint.config.ode_unfolds;
    return evaluate_predictor(
        [&](const Sample& s) { return classify(predict_probability(s.window, cell, unfolds)); }, scenario,
        checkpoint.config.t_ob, horizon, options);
}

std::span<const ReferenceAccuracy> reference_accuracies() {
    static constexpr ReferenceAccuracy table[] = {
        {"17", 1, 0.9785, 0.8936}, {"17", 5, 0.8931, 0.5682}, {"17", 10, 0.8676, 0.4886},
        {"18", 1, 0.9960, 0.9348}, {"18", 5, 0.8809, 0.7217}, {"18", 10, 0.7604, 0.5870},
        {"19", 1, 0.9865, 0.9386}, {"19", 5, 0.8701, 0.7474}, {"19", 10, 0.7620, 0.5870},
        {"20", 1, 0.9960, 0.9815}, {"20", 5, 0.8815, 0.6630}, {"20", 10, 0.7741, 0.5353},
        {"21", 1, 0.9960, 0.9268}, {"21", 5, 0.8404, 0.5571}, {"21", 10, 0.7395, 0.4571},
        {"22", 1, 0.9920, 0.8330}, {"22", 5, 0.8571, 0.4667}, {"22", 10, 0.7528, 0.4500},
    };
    return table;
}

std::string report_csv(std::span<const Metrics> metrics) {
    std::ostringstream os;
    os << "scenario,K,n,accuracy,precision,recall,tp,fp,tn,fn\n";
    for (const auto& m : metrics) {
        os << m.scenario_id << ',' << m.horizon << ',' << m.n_samples << ',' << format_double(m.accuracy) << ','
           << format_double(m.precision()) << ',' << format_double(m.recall()) << ',' << m.tp << ',' << m.fp << ','
           << m.tn << ',' << m.fn << '\n';
    }
    return os.str();
}

namespace {

template <typename T>
T parse_field(const std::string& cell, long row, long col) {
    T v{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) throw SchemaError("bad report field '" + cell + "'", row, col);
    return v;
}

}  // namespace

std::vector<Metrics> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "scenario,K,n,accuracy,precision,recall,tp,fp,tn,fn") {
        throw SchemaError("unexpected report header", 1, 1);
    }
    std::vector<Metrics> out;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        if (cells.size() != 10) throw SchemaError("expected 10 report columns", row, 1);
        Metrics m;
        m.scenario_id = cells[0];
        m.horizon = parse_field<int>(cells[1], row, 2);
        m.n_samples = parse_field<long>(cells[2], row, 3);
        m.accuracy = parse_field<double>(cells[3], row, 4);
        m.tp = parse_field<long>(cells[6], row, 7);
        m.fp = parse_field<long>(cells[7], row, 8);
        m.tn = parse_field<long>(cells[8], row, 9);
        m.fn = parse_field<long>(cells[9], row, 10);
        out.push_back(m);
    }
    return out;
}

std::string report_table(std::span<const Metrics> metrics) {
    std::map<std::pair<std::string, int>, const ReferenceAccuracy*> ref;
    for (const auto& r : reference_accuracies()) ref[{r.scenario, r.horizon}] = &r;

    std::ostringstream os;
    char buf[160];
    os << "Blockage prediction accuracy (synthetic outdoor scenarios)\n";
    os << "Reference columns are published results on the measured 60 GHz dataset;\n";
    os << "they are NOT comparable with the synthetic runs and are shown for context only.\n\n";
    std::snprintf(buf, sizeof buf, "%-10s %3s %8s %10s %10s %8s %12s %12s\n", "scenario", "K", "n", "accuracy",
                  "precision", "recall", "ref LTC", "ref baseline");
    os << buf;
    for (const auto& m : metrics) {
        const auto it = ref.find({m.scenario_id, m.horizon});
        char ref_ltc[16] = "-";
        char ref_base[16] = "-";
        if (it != ref.end()) {
            std::snprintf(ref_ltc, sizeof ref_ltc, "%.2f%%", 100.0 * it->second->ltc);
            std::snprintf(ref_base, sizeof ref_base, "%.2f%%", 100.0 * it->second->baseline);
        }
        std::snprintf(buf, sizeof buf, "%-10s %3d %8ld %9.2f%% %9.2f%% %7.2f%% %12s %12s\n", m.scenario_id.c_str(),
                      m.horizon, m.n_samples, 100.0 * m.accuracy, 100.0 * m.precision(), 100.0 * m.recall(), ref_ltc,
                      ref_base);
        os << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "\nPublished reference: t+1 accuracy of at least %.2f%% on every outdoor scenario;\n"
                  "accuracy over all scenarios and horizons spans %.2f%% to %.1f%%.\n",
                  100.0 * kReferenceT1Floor, 100.0 * kReferenceRangeLow, 100.0 * kReferenceRangeHigh);
    os << buf;
    return os.str();
}

ReportFiles write_report(std::span<const Metrics> metrics, const std::filesystem::path& out_dir) {
    if (metrics.empty()) throw ConfigError("report needs at least one metrics entry");
    ReportFiles files{out_dir / "metrics.csv", out_dir / "comparison.txt"};
    write_file_atomic(files.csv, report_csv(metrics));
    write_file_atomic(files.table, report_table(metrics));
    return files;
}

}  // namespace lbp
