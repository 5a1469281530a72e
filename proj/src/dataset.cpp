#include "lbp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>

#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"

namespace lbp {

namespace {

int column_width(int n_beams) {
    int width = 1;
    for (int v = std::max(n_beams - 1, 0); v >= 10; v /= 10) ++width;
    return std::max(width, 2);
}

}  // namespace

std::string power_column_name(int beam, int n_beams) {
    std::string digits = std::to_string(beam);
    const auto width = static_cast<std::size_t>(column_width(n_beams));
    if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
    return "p" + digits;
}

std::string scenario_to_csv(const Scenario& sc) {
    if (sc.traces.empty()) throw ConfigError("scenario has no beams");
    const std::size_t len = sc.length();
    for (const auto& tr : sc.traces) {
        if (tr.power.size() != len || tr.labels.size() != len) throw ConfigError("trace length mismatch in scenario");
    }
    std::string out = "t";
    for (int b = 0; b < sc.n_beams(); ++b) out += "," + power_column_name(b, sc.n_beams());
    out += ",blocked\n";
    for (std::size_t i = 0; i < len; ++i) {
        out += std::to_string(sc.t[i]);
        for (const auto& tr : sc.traces) {
            out += ',';
            out += format_double(tr.power[i]);
        }
        out += sc.traces.front().labels[i] ? ",1\n" : ",0\n";
    }
    return out;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    write_file_atomic(path, scenario_to_csv(scenario));
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <typename T>
bool parse_number(std::string_view cell, T& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (*first == '+') return false;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

Scenario parse_scenario_csv(const std::string& text, const std::string& scenario_id) {
    std::vector<std::string_view> lines;
    {
        std::string_view rest(text);
        while (!rest.empty()) {
            const auto nl = rest.find('\n');
            std::string_view line = rest.substr(0, nl);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    if (lines.empty()) throw SchemaError("empty scenario file", 1, 1);

    const auto header = split_commas(lines[0]);
    if (header.size() < 3 || header.front() != "t" || header.back() != "blocked") {
        throw SchemaError("header must be t,p00,...,blocked", 1, 1);
    }
    const int n_beams = static_cast<int>(header.size()) - 2;
    for (int b = 0; b < n_beams; ++b) {
        if (header[static_cast<std::size_t>(b) + 1] != power_column_name(b, n_beams)) {
            throw SchemaError("unexpected column name '" + std::string(header[static_cast<std::size_t>(b) + 1]) +
                                  "', expected '" + power_column_name(b, n_beams) + "'",
                              1, b + 2);
        }
    }

    Scenario sc;
    sc.id = scenario_id;
    sc.traces.resize(static_cast<std::size_t>(n_beams));
    for (int b = 0; b < n_beams; ++b) sc.traces[static_cast<std::size_t>(b)].beam_id = b;

    const std::size_t n_cols = header.size();
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const long row = static_cast<long>(li) + 1;
        if (lines[li].empty()) {
            if (li + 1 == lines.size()) break;  // single trailing newline
            throw SchemaError("empty line", row, 1);
        }
        const auto cells = split_commas(lines[li]);
        if (cells.size() != n_cols) {
            throw SchemaError("expected " + std::to_string(n_cols) + " columns, found " + std::to_string(cells.size()),
                              row, static_cast<long>(std::min(cells.size(), n_cols)) + 1);
        }
        long t = 0;
        if (!parse_number(cells[0], t)) throw SchemaError("non-integer time index", row, 1);
        if (!sc.t.empty() && t <= sc.t.back()) throw SchemaError("time index not strictly increasing", row, 1);
        sc.t.push_back(t);

        int blocked = 0;
        if (!parse_number(cells.back(), blocked) || (blocked != 0 && blocked != 1)) {
            throw SchemaError("blocked must be 0 or 1", row, static_cast<long>(n_cols));
        }
        for (int b = 0; b < n_beams; ++b) {
            double p = 0.0;
            const auto col = static_cast<std::size_t>(b) + 1;
            if (!parse_number(cells[col], p)) throw SchemaError("non-numeric power", row, static_cast<long>(col) + 1);
            if (!(p >= 0.0 && p <= 1.0)) throw SchemaError("power outside [0, 1]", row, static_cast<long>(col) + 1);
            auto& tr = sc.traces[static_cast<std::size_t>(b)];
            tr.power.push_back(p);
            tr.labels.push_back(static_cast<std::uint8_t>(blocked));
        }
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario_csv(read_file(path), path.stem().string());
}

std::vector<double> normalize_power(std::span<const double> raw) {
    double peak = 0.0;
    for (double v : raw) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("raw power must be finite and nonnegative");
        peak = std::max(peak, v);
    }
    if (!(peak > 0.0)) throw ConfigError("cannot normalize power without a positive sample");
    std::vector<double> out(raw.size());
    std::transform(raw.begin(), raw.end(), out.begin(), [peak](double v) { return v / peak; });
    return out;
}

void normalize_scenario(Scenario& scenario) {
    std::vector<double> all;
    for (const auto& tr : scenario.traces) all.insert(all.end(), tr.power.begin(), tr.power.end());
    const auto scaled = normalize_power(all);
    std::size_t k = 0;
    for (auto& tr : scenario.traces) {
        for (double& p : tr.power) p = scaled[k++];
    }
}

std::vector<bool> filter_weak_beams(std::span<const PowerTrace> traces, double threshold) {
    std::vector<bool> mask;
    mask.reserve(traces.size());
    for (const auto& tr : traces) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < tr.power.size(); ++i) {
            if (tr.labels[i] == 0) {
                sum += tr.power[i];
                ++n;
            }
        }
        // a beam that is blocked for the whole trace has no usable statistic
        mask.push_back(n > 0 && sum / static_cast<double>(n) >= threshold);
    }
    return mask;
}

ObservationWindow make_window(const PowerTrace& trace, int t_end, int t_ob) {
    if (t_ob < 1 || t_end < t_ob - 1 || static_cast<std::size_t>(t_end) >= trace.length()) {
        throw ConfigError("window [" + std::to_string(t_end - t_ob + 1) + ", " + std::to_string(t_end) +
                          "] outside trace");
    }
    ObservationWindow w;
    w.n_features = 2;
    w.t_end = t_end;
    w.features.resize(static_cast<std::size_t>(t_ob) * 2);
    const int first = t_end - t_ob + 1;
    for (int r = 0; r < t_ob; ++r) {
        const auto t = static_cast<std::size_t>(first + r);
        w.features[2 * static_cast<std::size_t>(r)] = trace.power[t];
        w.features[2 * static_cast<std::size_t>(r) + 1] = r == 0 ? 0.0 : trace.power[t] - trace.power[t - 1];
    }
    return w;
}

std::size_t expected_sample_count(std::size_t n_included, std::size_t length, int t_ob, int horizon, int stride) {
    const long span = static_cast<long>(length) - t_ob - horizon;
    if (span < 0) return 0;
    return n_included * static_cast<std::size_t>(span / stride + 1);
}

WindowedDataset window_dataset(std::span<const PowerTrace> traces, int t_ob, int horizon, int stride,
                               const std::vector<bool>& mask, const std::string& scenario_id) {
    if (t_ob < 2) throw ConfigError("T_ob must be >= 2");
    if (horizon < 1) throw ConfigError("horizon K must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (!mask.empty() && mask.size() != traces.size()) throw ConfigError("beam mask length mismatch");

    WindowedDataset out;
    for (std::size_t b = 0; b < traces.size(); ++b) {
        if (!mask.empty() && !mask[b]) continue;
        const auto& tr = traces[b];
        if (tr.labels.size() != tr.power.size()) throw ConfigError("trace power/label length mismatch");
        const long len = static_cast<long>(tr.length());
        if (len < t_ob + horizon) {
            out.warnings.push_back("beam " + std::to_string(tr.beam_id) + ": trace length " + std::to_string(len) +
                                   " shorter than T_ob + K = " + std::to_string(t_ob + horizon));
            continue;
        }
        for (long t_end = t_ob - 1; t_end + horizon < len; t_end += stride) {
            Sample s;
            s.window = make_window(tr, static_cast<int>(t_end), t_ob);
            s.horizon = horizon;
            s.label = tr.labels[static_cast<std::size_t>(t_end + horizon)];
            s.beam_id = tr.beam_id;
            s.scenario_id = scenario_id;
            out.samples.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace lbp
