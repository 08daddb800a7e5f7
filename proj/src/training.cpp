#include "natcsnn/training.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace natcsnn {

int argmax_lowest(const std::vector<std::size_t>& counts, bool* tie) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(counts.size()); ++k)
        if (counts[k] > counts[best])
            best = k;
    if (tie != nullptr) {
        int n_best = 0;
        for (const auto c : counts)
            n_best += c == counts[best];
        *tie = n_best > 1;
    }
    return best;
}

ClassificationResult winner_take_all(const NetworkTopology& net, const SpikeRecord& l3) {
    if (l3.neurons() != static_cast<std::size_t>(net.size(Layer::L3)))
        throw UsageError("winner_take_all: readout record has the wrong size");
    ClassificationResult r;
    r.neuron_counts.resize(l3.neurons());
    r.class_counts.assign(net.config.n_classes, 0);
    for (std::size_t j = 0; j < l3.neurons(); ++j) {
        r.neuron_counts[j] = l3.times[j].size();
        r.class_counts[net.class_of[j]] += r.neuron_counts[j];
    }
    r.predicted = argmax_lowest(r.class_counts, &r.tie);
    return r;
}

void prepare_phase1(NetworkTopology& net, const RunConfig& cfg) {
    net.projection(ProjectionId::P1).synapses.set_rule(cfg.stdp_ex);
    net.projection(ProjectionId::P2).synapses.set_rule(cfg.stdp_ex);
    net.projection(ProjectionId::P3).synapses.set_rule(cfg.stdp_ih);
    net.projection(ProjectionId::P4).synapses.set_rule(StaticRule{});
    net.projection(ProjectionId::P5).synapses.set_rule(StaticRule{});
}

void prepare_phase2(NetworkTopology& net, const RunConfig& cfg) {
    freeze(net.projection(ProjectionId::P1).synapses);
    freeze(net.projection(ProjectionId::P2).synapses);
    freeze(net.projection(ProjectionId::P3).synapses);
    if (!net.teachers_attached())
        attach_teachers(net);
    net.projection(ProjectionId::P4).synapses.set_rule(cfg.resume);
    if (cfg.sim.train_readout_inhibition)
        net.projection(ProjectionId::P5).synapses.set_rule(cfg.resume);
    else
        freeze(net.projection(ProjectionId::P5).synapses);
}

void prepare_testing(NetworkTopology& net) {
    for (auto& p : net.projections)
        freeze(p.synapses);
}

void set_readout_weight(NetworkTopology& net, double weight) {
    auto& syn = net.projection(ProjectionId::P4).synapses;
    syn.set_weights(Eigen::VectorXd::Constant(syn.size(), weight));
}

std::vector<std::size_t> epoch_order(std::size_t n, int epoch, std::optional<std::uint64_t> seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    if (seed && n > 1) {
        std::mt19937_64 rng(*seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1)));
        for (std::size_t i = n - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
    }
    return order;
}

namespace {

void check_compatible(const NetworkTopology& net, const Dataset& data) {
    if (data.empty())
        return;
    if (Eigen::Index(data.rows) * data.cols != net.size(Layer::L1))
        throw FormatError("dataset images are " + std::to_string(data.rows) + "x" +
                          std::to_string(data.cols) + " but Layer 1 has " +
                          std::to_string(net.size(Layer::L1)) + " neurons");
    if (data.n_classes > net.config.n_classes)
        throw FormatError("dataset has more classes than the network readout");
}

std::array<WeightStats, projection_count> all_stats(const NetworkTopology& net) {
    std::array<WeightStats, projection_count> s;
    for (std::size_t p = 0; p < projection_count; ++p)
        s[p] = weight_stats(net.projections[p].synapses.weight());
    return s;
}

bool run_phase(NetworkTopology& net,
               const Dataset& data,
               const RunConfig& cfg,
               TrainingState& state,
               const TrainingHooks& hooks,
               Phase phase) {
    check_compatible(net, data);
    state.phase          = phase;
    const bool readout   = phase == Phase::phase2;
    const std::size_t n  = data.size();
    const int epochs     = readout ? cfg.sim.epochs_phase2 : cfg.sim.epochs_phase1;
    const std::uint64_t total    = std::uint64_t(n) * epochs;
    const std::uint64_t interval = static_cast<std::uint64_t>(cfg.sim.checkpoint_interval);

    Simulator sim(cfg);
    std::vector<std::size_t> order;
    int order_epoch = -1;
    std::size_t seen = 0, correct = 0;

    for (std::uint64_t p = state.presentations; p < total; ++p) {
        const int epoch = static_cast<int>(p / n);
        if (epoch != order_epoch) {
            order       = epoch_order(n, epoch, cfg.sim.shuffle_seed);
            order_epoch = epoch;
        }
        const ImageSample& sample = data.samples[order[p % n]];
        PresentOptions opts;
        opts.plastic         = true;
        opts.include_readout = readout;
        if (readout)
            opts.teacher_class = sample.label;
        const auto record = sim.present(net, sample.pixels, opts);
        if (readout) {
            ++seen;
            correct += winner_take_all(net, record[Layer::L3]).predicted == sample.label;
        }
        state.presentations = p + 1;

        if (hooks.on_checkpoint && state.presentations % interval == 0)
            hooks.on_checkpoint(capture(net, phase, state.presentations, state.rng), false);
        if (state.presentations % n == 0) {
            if (hooks.on_epoch) {
                EpochLog log{phase, epoch + 1, state.presentations, std::nullopt, all_stats(net)};
                if (readout && seen > 0)
                    log.train_accuracy = double(correct) / double(seen);
                hooks.on_epoch(log);
            }
            seen = correct = 0;
        }
        if (hooks.stop_after && state.presentations >= *hooks.stop_after && state.presentations < total)
            return false;
    }
    if (hooks.on_checkpoint)
        hooks.on_checkpoint(capture(net, phase, state.presentations, state.rng), true);
    return true;
}

} // namespace

bool run_phase1(NetworkTopology& net,
                const Dataset& data,
                const RunConfig& cfg,
                TrainingState& state,
                const TrainingHooks& hooks) {
    for (const auto id : {ProjectionId::P1, ProjectionId::P2, ProjectionId::P3})
        if (!net.projection(id).synapses.is_stdp())
            throw UsageError("run_phase1: P1-P3 must be in STDP mode (call prepare_phase1)");
    return run_phase(net, data, cfg, state, hooks, Phase::phase1);
}

bool run_phase2(NetworkTopology& net,
                const Dataset& data,
                const RunConfig& cfg,
                TrainingState& state,
                const TrainingHooks& hooks) {
    for (const auto id : {ProjectionId::P1, ProjectionId::P2, ProjectionId::P3})
        if (!net.projection(id).synapses.is_static())
            throw UsageError("run_phase2: P1-P3 must be frozen (call prepare_phase2)");
    if (!net.teachers_attached() || !net.projection(ProjectionId::P4).synapses.is_resume())
        throw UsageError("run_phase2: readout must be in ReSuMe mode with teachers attached");
    return run_phase(net, data, cfg, state, hooks, Phase::phase2);
}

ClassificationResult classify(const NetworkTopology& net,
                              Simulator& sim,
                              std::span<const double> pixels) {
    if (!net.all_static())
        throw UsageError("classify: testing mode requires every projection to be static");
    const auto record = sim.present(net, pixels, true);
    return winner_take_all(net, record[Layer::L3]);
}

EvaluationReport evaluate(const NetworkTopology& net,
                          const Dataset& data,
                          const RunConfig& cfg,
                          int workers) {
    if (data.empty())
        throw UsageError("evaluate: dataset is empty");
    if (!net.all_static())
        throw UsageError("evaluate: testing mode requires every projection to be static");
    check_compatible(net, data);

    const std::size_t n = data.size();
    std::vector<int> predictions(n, 0);
    const std::size_t threads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, n);
    auto work = [&](std::size_t begin, std::size_t end) {
        Simulator sim(cfg);
        for (std::size_t i = begin; i < end; ++i)
            predictions[i] = classify(net, sim, data.samples[i].pixels).predicted;
    };
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = n * t / threads, e = n * (t + 1) / threads;
            pool.emplace_back([&, b, e, t] {
                try {
                    work(b, e);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool)
            th.join();
        for (const auto& err : errors)
            if (err)
                std::rethrow_exception(err);
    }

    EvaluationReport r;
    r.predictions = predictions;
    const int k   = net.config.n_classes;
    std::vector<std::size_t> hits(k, 0);
    r.class_samples.assign(k, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = data.samples[i].label;
        r.class_samples[label]++;
        if (predictions[i] == label) {
            ++correct;
            ++hits[label];
        }
    }
    r.correct  = correct;
    r.accuracy = double(correct) / double(n);
    r.class_accuracy.assign(k, std::numeric_limits<double>::quiet_NaN());
    double sum = 0, sq = 0;
    int present = 0;
    for (int c = 0; c < k; ++c) {
        if (r.class_samples[c] == 0)
            continue;
        r.class_accuracy[c] = double(hits[c]) / double(r.class_samples[c]);
        sum += r.class_accuracy[c];
        ++present;
    }
    r.class_mean = sum / present;
    for (int c = 0; c < k; ++c)
        if (r.class_samples[c] > 0)
            sq += (r.class_accuracy[c] - r.class_mean) * (r.class_accuracy[c] - r.class_mean);
    r.class_stddev = std::sqrt(sq / present);
    return r;
}

std::string format_report(const EvaluationReport& report, const std::vector<std::string>& names) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    os << std::left << std::setw(14) << "Class" << "Accuracy [%]\n";
    for (std::size_t c = 0; c < report.class_accuracy.size(); ++c) {
        const std::string name = c < names.size() ? names[c] : "class_" + std::to_string(c);
        os << std::left << std::setw(14) << name;
        if (std::isnan(report.class_accuracy[c]))
            os << "n/a\n";
        else
            os << 100.0 * report.class_accuracy[c] << '\n';
    }
    os << "Mean accuracy: " << 100.0 * report.class_mean << " % (std " << 100.0 * report.class_stddev
       << " %)\n";
    os << "Overall accuracy: " << 100.0 * report.accuracy << " % (" << report.correct << '/' << report.predictions.size() << ")\n";
    return os.str();
}

MonteCarloResult monte_carlo_weight_search(const NetworkTopology& phase1_net,
                                           const Dataset& subset,
                                           const RunConfig& cfg,
                                           double lo,
                                           double hi,
                                           int trials,
                                           std::mt19937_64& rng,
                                           int workers) {
    if (!(lo <= hi) || lo < 0)
        throw UsageError("monte_carlo_weight_search: empty or negative weight range");
    if (subset.empty())
        throw UsageError("monte_carlo_weight_search: evaluation subset is empty");
    if (trials < 1)
        throw UsageError("monte_carlo_weight_search: trials must be >= 1");

    MonteCarloResult result;
    for (int t = 0; t < trials; ++t) {
        const double w = lo == hi ? lo : lo + (hi - lo) * uniform01(rng);
        result.trials.push_back({t, w, 0.0});
    }

    RunConfig proxy         = cfg;
    proxy.sim.epochs_phase2 = 1;
    bool first              = true;
    for (auto& trial : result.trials) {
        NetworkTopology net = phase1_net;
        prepare_phase2(net, proxy);
        set_readout_weight(net, trial.weight);
        TrainingState state;
        run_phase2(net, subset, proxy, state);
        prepare_testing(net);
        trial.accuracy = evaluate(net, subset, proxy, workers).accuracy;
        if (first || trial.accuracy > result.best_accuracy ||
            (trial.accuracy == result.best_accuracy && trial.weight < result.best_weight)) {
            result.best_accuracy = trial.accuracy;
            result.best_weight   = trial.weight;
            first                = false;
        }
    }
    return result;
}

} // namespace natcsnn
