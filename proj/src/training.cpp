#include "lbp/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "lbp/errors.hpp"
#include "lbp/fileutil.hpp"

namespace lbp {

double loss_bce(double probability, int label) {
    const double p = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return label == 1 ? -std::log(p) : -std::log1p(-p);
}

double relative_error(double a, double b) noexcept {
    return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

CellBackward backward_cell(const ObservationWindow& window, int label, const CompiledCell& cell, int ode_unfolds) {
    if (ode_unfolds < 1) throw ConfigError("ode_unfolds must be >= 1");
    if (label != 0 && label != 1) throw ConfigError("label must be 0 or 1");
    check_window(window, cell.n_features);

    const auto n = static_cast<std::size_t>(cell.n_state);
    const auto nf = static_cast<std::size_t>(cell.n_features);
    const auto n_sens = cell.sensory_synapses.size();
    const auto n_rec = cell.recurrent_synapses.size();
    const int rows = window.rows();
    const int steps = rows * ode_unfolds;
    const double dt = 1.0 / ode_unfolds;

    // Forward tape: state before every step, denominators, and every sigmoid.
    std::vector<double> states(static_cast<std::size_t>(steps + 1) * n, 0.0);
    std::vector<double> dens(static_cast<std::size_t>(steps) * n);
    std::vector<double> mapped(static_cast<std::size_t>(rows) * nf);
    std::vector<double> sens_sig(static_cast<std::size_t>(rows) * n_sens);
    std::vector<double> rec_sig(static_cast<std::size_t>(steps) * n_rec);
    std::vector<double> drive_num(n), drive_den(n);
    for (int r = 0; r < rows; ++r) {
        const auto ur = static_cast<std::size_t>(r);
        double* in = mapped.data() + ur * nf;
        cell.map_inputs(window.row(r), std::span<double>(in, nf));
        std::fill(drive_num.begin(), drive_num.end(), 0.0);
        std::fill(drive_den.begin(), drive_den.end(), 0.0);
        for (std::size_t j = 0; j < n_sens; ++j) {
            const auto& syn = cell.synapses[cell.sensory_synapses[j]];
            const double sg = sigmoid(syn.gamma * in[syn.source] + syn.mu);
            sens_sig[ur * n_sens + j] = sg;
            drive_num[static_cast<std::size_t>(syn.target)] += syn.w * sg * syn.reversal;
            drive_den[static_cast<std::size_t>(syn.target)] += syn.w * sg;
        }
        for (int u = 0; u < ode_unfolds; ++u) {
            const auto k = static_cast<std::size_t>(r * ode_unfolds + u);
            const double* x = states.data() + k * n;
            double* next = states.data() + (k + 1) * n;
            double* den = dens.data() + k * n;
            for (std::size_t i = 0; i < n; ++i) {
                next[i] = x[i] + dt * drive_num[i];
                den[i] = 1.0 + dt / cell.tau[i] + dt * drive_den[i];
            }
            for (std::size_t j = 0; j < n_rec; ++j) {
                const auto& syn = cell.synapses[cell.recurrent_synapses[j]];
                const double sg = sigmoid(syn.gamma * x[syn.source] + syn.mu);
                rec_sig[k * n_rec + j] = sg;
                next[syn.target] += dt * syn.w * sg * syn.reversal;
                den[syn.target] += dt * syn.w * sg;
            }
            for (std::size_t i = 0; i < n; ++i) {
                next[i] /= den[i];
                if (!std::isfinite(next[i])) throw NumericError("non-finite neuron state at fused step " + std::to_string(k));
            }
        }
    }

    CellBackward out;
    std::span<const double> final_x(states.data() + static_cast<std::size_t>(steps) * n, n);
    const double logit = cell.logit(final_x);
    const double p = sigmoid(logit);
    out.probability = p;
    out.loss = loss_bce(p, label);
    if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");

    const auto n_syn = cell.synapses.size();
    auto& g = out.grad;
    g.tau.assign(n, 0.0);
    g.w.assign(n_syn, 0.0);
    g.gamma.assign(n_syn, 0.0);
    g.mu.assign(n_syn, 0.0);
    g.reversal.assign(n_syn, 0.0);
    g.input_scale.assign(nf, 0.0);
    g.input_bias.assign(nf, 0.0);
    g.output_scale.assign(cell.motor.size(), 0.0);

    // d loss / d logit; the clamp makes the loss flat outside [1e-12, 1 - 1e-12]
    const bool clamped = p < kProbabilityClamp || p > 1.0 - kProbabilityClamp;
    const double dlogit = clamped ? 0.0 : p - static_cast<double>(label);
    g.output_bias = dlogit;

    std::vector<double> gx(n, 0.0), gx_prev(n), dnum(n), dden(n), row_dnum(n), row_dden(n);
    for (std::size_t m = 0; m < cell.motor.size(); ++m) {
        const auto idx = static_cast<std::size_t>(cell.motor[m]);
        g.output_scale[m] = dlogit * final_x[idx];
        gx[idx] += dlogit * cell.output_scale[m];
    }

    for (int r = rows - 1; r >= 0; --r) {
        const auto ur = static_cast<std::size_t>(r);
        std::fill(row_dnum.begin(), row_dnum.end(), 0.0);
        std::fill(row_dden.begin(), row_dden.end(), 0.0);
        for (int u = ode_unfolds - 1; u >= 0; --u) {
            const auto k = static_cast<std::size_t>(r * ode_unfolds + u);
            const double* x = states.data() + k * n;
            const double* x_next = states.data() + (k + 1) * n;
            const double* den = dens.data() + k * n;
            for (std::size_t i = 0; i < n; ++i) {
                dnum[i] = gx[i] / den[i];
                dden[i] = -gx[i] * x_next[i] / den[i];
                gx_prev[i] = dnum[i];
                row_dnum[i] += dnum[i];
                row_dden[i] += dden[i];
                g.tau[i] += dden[i] * (-dt / (cell.tau[i] * cell.tau[i]));
            }
            for (std::size_t j = 0; j < n_rec; ++j) {
                const std::size_t s = cell.recurrent_synapses[j];
                const auto& syn = cell.synapses[s];
                const auto t = static_cast<std::size_t>(syn.target);
                const double sg = rec_sig[k * n_rec + j];
                const double coupling = dnum[t] * syn.reversal + dden[t];
                const double pre = x[syn.source];
                g.w[s] += dt * sg * coupling;
                g.reversal[s] += dnum[t] * dt * syn.w * sg;
                const double dz = dt * syn.w * coupling * sg * (1.0 - sg);
                g.gamma[s] += dz * pre;
                g.mu[s] += dz;
                gx_prev[static_cast<std::size_t>(syn.source)] += dz * syn.gamma;
            }
            gx.swap(gx_prev);
        }
        // sensory activations are constant over the row's unfolds
        const double* in = mapped.data() + ur * nf;
        const auto raw = window.row(r);
        for (std::size_t j = 0; j < n_sens; ++j) {
            const std::size_t s = cell.sensory_synapses[j];
            const auto& syn = cell.synapses[s];
            const auto t = static_cast<std::size_t>(syn.target);
            const double sg = sens_sig[ur * n_sens + j];
            const double coupling = row_dnum[t] * syn.reversal + row_dden[t];
            const double pre = in[syn.source];
            g.w[s] += dt * sg * coupling;
            g.reversal[s] += row_dnum[t] * dt * syn.w * sg;
            const double dz = dt * syn.w * coupling * sg * (1.0 - sg);
            g.gamma[s] += dz * pre;
            g.mu[s] += dz;
            const double dpre = dz * syn.gamma;
            const auto f = static_cast<std::size_t>(syn.source);
            g.input_scale[f] += dpre * raw[f];
            g.input_bias[f] += dpre;
        }
    }
    return out;
}

GradientSet storage_gradient(const LtcParameters& params, const NcpWiring& wiring, const CellGradient& cg) {
    GradientSet gs;
    gs.values.reserve(params.size());
    for (std::size_t i = 0; i < params.tau_raw.size(); ++i) gs.values.push_back(cg.tau[i] * sigmoid(params.tau_raw[i]));
    for (std::size_t s = 0; s < params.w_raw.size(); ++s) gs.values.push_back(cg.w[s] * sigmoid(params.w_raw[s]));
    gs.values.insert(gs.values.end(), cg.gamma.begin(), cg.gamma.end());
    gs.values.insert(gs.values.end(), cg.mu.begin(), cg.mu.end());
    for (std::size_t s = 0; s < params.rev_log.size(); ++s) {
        gs.values.push_back(cg.reversal[s] * params.reversal(s, wiring.synapses[s].polarity));
    }
    gs.values.insert(gs.values.end(), cg.input_scale.begin(), cg.input_scale.end());
    gs.values.insert(gs.values.end(), cg.input_bias.begin(), cg.input_bias.end());
    gs.values.insert(gs.values.end(), cg.output_scale.begin(), cg.output_scale.end());
    gs.values.push_back(cg.output_bias);
    for (double v : gs.values) {
        if (!std::isfinite(v)) throw NumericError("non-finite gradient entry");
    }
    return gs;
}

Backward backward(const ObservationWindow& window, int label, const LtcParameters& params, const NcpWiring& wiring,
                  int ode_unfolds) {
    const auto cell = CompiledCell::compile(params, wiring);
    auto cb = backward_cell(window, label, cell, ode_unfolds);
    return {cb.loss, cb.probability, storage_gradient(params, wiring, cb.grad)};
}

double sample_loss(const ObservationWindow& window, int label, const LtcParameters& params, const NcpWiring& wiring,
                   int ode_unfolds) {
    const auto cell = CompiledCell::compile(params, wiring);
    return loss_bce(predict_probability(window, cell, ode_unfolds), label);
}

GradientSet finite_diff_grad(const ObservationWindow& window, int label, const LtcParameters& params,
                             const NcpWiring& wiring, double eps, int ode_unfolds) {
    if (!(eps > 0.0)) throw ConfigError("finite-difference eps must be > 0");
    const auto base = params.flatten();
    GradientSet gs;
    gs.values.resize(base.size());
    LtcParameters probe = params;
    auto flat = base;
    for (std::size_t k = 0; k < base.size(); ++k) {
        flat[k] = base[k] + eps;
        probe.assign(flat);
        const double up = sample_loss(window, label, probe, wiring, ode_unfolds);
        flat[k] = base[k] - eps;
        probe.assign(flat);
        const double down = sample_loss(window, label, probe, wiring, ode_unfolds);
        flat[k] = base[k];
        gs.values[k] = (up - down) / (2.0 * eps);
    }
    return gs;
}

AdamResult adam_step(std::span<const double> params, const GradientSet& grads, const AdamMoments& moments,
                     const AdamHyper& hyper, long step_index) {
    if (step_index < 1) throw ConfigError("adam step_index must be >= 1");
    const std::size_t n = params.size();
    if (grads.size() != n || moments.m.size() != n || moments.v.size() != n) {
        throw ConfigError("adam shapes do not align");
    }
    AdamResult res{std::vector<double>(params.begin(), params.end()), moments};
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step_index));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step_index));
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = grads.values[i];
        double& m = res.moments.m[i];
        double& v = res.moments.v[i];
        m = hyper.beta1 * m + (1.0 - hyper.beta1) * gi;
        v = hyper.beta2 * v + (1.0 - hyper.beta2) * gi * gi;
        res.params[i] -= hyper.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + hyper.eps);
    }
    return res;
}

double clip_global_norm(GradientSet& grad, double max_norm) {
    double sq = 0.0;
    for (double v : grad.values) sq += v * v;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& v : grad.values) v *= scale;
    }
    return norm;
}

BatchResult batch_gradient(std::span<const Sample* const> batch, const LtcParameters& params, const NcpWiring& wiring,
                           int ode_unfolds, int workers) {
    if (batch.empty()) throw ConfigError("empty batch");
    const auto cell = CompiledCell::compile(params, wiring);
    std::vector<CellBackward> per(batch.size());

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            per[i] = backward_cell(batch[i]->window, batch[i]->label, cell, ode_unfolds);
        }
    };
    const auto n_workers = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(batch.size())));
    if (n_workers == 1) {
        run(0, batch.size());
    } else {
        std::vector<std::exception_ptr> errors(n_workers);
        std::vector<std::thread> pool;
        const std::size_t chunk = (batch.size() + n_workers - 1) / n_workers;
        for (std::size_t w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(batch.size(), begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    // Reduction in sample order keeps results independent of worker count.
    BatchResult res;
    CellGradient sum = per.front().grad;
    auto add = [](std::vector<double>& acc, const std::vector<double>& v) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    };
    for (std::size_t i = 0; i < per.size(); ++i) {
        res.loss_sum += per[i].loss;
        if (classify(per[i].probability) == batch[i]->label) ++res.correct;
        if (i == 0) continue;
        const auto& g = per[i].grad;
        add(sum.tau, g.tau);
        add(sum.w, g.w);
        add(sum.gamma, g.gamma);
        add(sum.mu, g.mu);
        add(sum.reversal, g.reversal);
        add(sum.input_scale, g.input_scale);
        add(sum.input_bias, g.input_bias);
        add(sum.output_scale, g.output_scale);
        sum.output_bias += g.output_bias;
    }
    res.grad = storage_gradient(params, wiring, sum);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : res.grad.values) v *= inv;
    return res;
}

namespace {

void check_train_inputs(std::span<const Sample> dataset, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    const auto& first = dataset.front();
    for (const auto& s : dataset) {
        if (s.window.rows() != first.window.rows() || s.horizon != first.horizon) {
            throw ConfigError("training samples must share T_ob and horizon K");
        }
        if (s.label != 0 && s.label != 1) throw ConfigError("training label must be 0 or 1");
    }
}

// Cycles through reshuffled passes over a fixed index pool.
class IndexStream {
public:
    IndexStream(std::vector<std::size_t> pool, std::mt19937_64& rng) : pool_(std::move(pool)), rng_(rng) {
        reshuffle();
    }

    std::size_t next() {
        if (pos_ == pool_.size()) reshuffle();
        return pool_[pos_++];
    }

    std::size_t size() const noexcept { return pool_.size(); }

private:
    void reshuffle() {
        std::shuffle(pool_.begin(), pool_.end(), rng_);
        pos_ = 0;
    }

    std::vector<std::size_t> pool_;
    std::mt19937_64& rng_;
    std::size_t pos_ = 0;
};

}  // namespace

TrainResult train(std::span<const Sample> dataset, const TrainConfig& cfg, const NcpWiring& wiring, int ode_unfolds,
                  const BatchObserver& observer) {
    check_train_inputs(dataset, cfg);
    require_valid(wiring);

    std::vector<std::size_t> pos, neg, all;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (dataset[i].label == 1 ? pos : neg).push_back(i);
        all.push_back(i);
    }
    if (cfg.balanced_sampling && pos.empty()) throw ConfigError("balanced sampling needs blocked (label 1) samples");
    if (cfg.balanced_sampling && neg.empty()) throw ConfigError("balanced sampling needs unblocked (label 0) samples");

    TrainResult result;
    result.checkpoint.wiring = wiring;
    result.checkpoint.config.ode_unfolds = ode_unfolds;
    result.checkpoint.config.t_ob = dataset.front().window.rows();
    result.checkpoint.config.horizon = dataset.front().horizon;

    LtcParameters params = init_parameters(wiring, cfg.seed);
    std::vector<double> flat = params.flatten();
    AdamMoments moments = AdamMoments::zeros(flat.size());
    const AdamHyper hyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps};

    std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66DULL);
    IndexStream pos_stream(pos, rng), neg_stream(neg, rng), all_stream(all, rng);
    const std::size_t per_epoch = dataset.size();
    const auto bsz = static_cast<std::size_t>(cfg.batch_size);

    long step = 0;
    std::vector<const Sample*> batch;
    batch.reserve(bsz);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        long correct = 0;
        for (std::size_t done = 0; done < per_epoch; done += batch.size()) {
            const std::size_t n = std::min(bsz, per_epoch - done);
            batch.clear();
            for (std::size_t j = 0; j < n; ++j) {
                std::size_t idx = 0;
                if (cfg.balanced_sampling) {
                    // alternate classes; odd batches put the extra sample on the side the global step picks
                    const bool take_pos = ((j + static_cast<std::size_t>(step)) % 2) == 0;
                    idx = take_pos ? pos_stream.next() : neg_stream.next();
                } else {
                    idx = all_stream.next();
                }
                batch.push_back(&dataset[idx]);
            }
            if (observer) observer(batch);
            auto br = batch_gradient(batch, params, wiring, ode_unfolds, cfg.workers);
            loss_sum += br.loss_sum;
            correct += br.correct;
            clip_global_norm(br.grad, cfg.clip_norm);
            auto upd = adam_step(flat, br.grad, moments, hyper, ++step);
            flat = std::move(upd.params);
            moments = std::move(upd.moments);
            params.assign(flat);
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(per_epoch),
                                  static_cast<double>(correct) / static_cast<double>(per_epoch)});
    }
    result.checkpoint.params = params;
    return result;
}

std::string history_to_csv(std::span<const EpochRecord> history) {
    std::ostringstream os;
    os << "epoch,mean_loss,train_accuracy\n";
    for (const auto& h : history) {
        os << h.epoch << ',' << format_double(h.mean_loss) << ',' << format_double(h.train_accuracy) << '\n';
    }
    return os.str();
}

}  // namespace lbp
