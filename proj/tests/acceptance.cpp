// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "natcsnn/encoding.hpp"
#include "natcsnn/errors.hpp"
#include "natcsnn/training.hpp"
#include "oracles.hpp"
#include "toy_run.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace natcsnn;
using namespace natcsnn::testing;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v, int digits = 3) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

Outcome neuron_oracle() {
    const NeuronParams<> p{};
    const double dt = 0.1;
    const Propagator<> prop(p, dt);
    double worst_v = 0;
    for (const double I : {0.0, 50.0, 200.0, 379.0}) {
        auto s = NeuronState<>::resting(p);
        for (int n = 1; n <= 1000; ++n) {
            if (step_neuron(s, p, prop, I))
                return {false, "unexpected spike at I=" + fmt(I)};
            worst_v = std::max(worst_v, std::abs(s.V_m - lif_closed_form(p, I, n * dt)));
        }
    }

    auto s = NeuronState<>::resting(p);
    s.V_m  = 0.0;
    if (!step_neuron(s, p, prop, 0.0))
        return {false, "forced spike did not fire"};
    s.V_m = -300.0; // keep the membrane out of the way while the threshold relaxes
    double worst_th = std::abs(threshold_at(s, p) - (p.alpha1 + p.alpha2 + p.omega));
    for (int n = 1; n <= 1000; ++n) {
        if (step_neuron(s, p, prop, 0.0))
            return {false, "second spike during threshold decay"};
        const double t = n * dt;
        const double oracle = p.alpha1 * std::exp(-t / p.tau1) + p.alpha2 * std::exp(-t / p.tau2) + p.omega;
        worst_th = std::max(worst_th, std::abs(threshold_at(s, p) - oracle));
    }
    return {worst_v < 1e-9 && worst_th < 1e-9,
            "max |V - closed form| " + fmt(worst_v) + " mV, max threshold error " + fmt(worst_th) + " mV, tol 1e-9"};
}

Outcome encoding_endpoints() {
    const NeuronParams<> p{};
    const auto cal = calibrate_IK(p, 100.0, 10, 0.1);
    EncodingConfig cfg;
    cfg.I_K = cal.I_K;
    std::vector<int> counts;
    for (int k = 0; k <= 10; ++k)
        counts.push_back(dc_spike_count(p, pixel_to_current(k / 10.0, cfg), 100.0, 0.1));
    bool monotone = true;
    for (std::size_t k = 1; k < counts.size(); ++k)
        monotone = monotone && counts[k] >= counts[k - 1];
    std::string seq;
    for (int c : counts)
        seq += std::to_string(c) + ' ';
    seq.pop_back();
    return {counts.front() == 0 && counts.back() == 10 && monotone,
            "I_K " + fmt(cal.I_K, 5) + " pA, counts over p=0..1: " + seq};
}

Outcome stdp_equivalence() {
    std::mt19937_64 rng(4242);
    double worst = 0;
    bool bounded = true;
    for (int trial = 0; trial < 100; ++trial) {
        const auto pre  = random_train(rng, 100, 1000.0, 0.1);
        const auto post = random_train(rng, 100, 1000.0, 0.1);
        const Sign sign = trial % 2 ? Sign::inhibitory : Sign::excitatory;
        const double s  = sign == Sign::excitatory ? 1.0 : -1.0;
        const double w0 = s * std::uniform_real_distribution<double>(0.0, 1200.0)(rng);
        StdpParams<> params{};
        // alternate the published rates with fast ones that hit the bounds
        if (trial % 4 >= 2)
            params.A_plus = params.A_minus = 0.02;
        SynapsePopulation<> pop(1, 1, Eigen::VectorXi::Zero(1), Eigen::VectorXi::Zero(1),
                                Eigen::VectorXd::Constant(1, w0), sign);
        pop.set_rule(params);
        const double w = replay_stdp(pop, pre, post, 1000.0, 0.1);
        worst          = std::max(worst, std::abs(w - stdp_pairs_oracle(w0, sign, pre, post, params)));
        bounded        = bounded && s * w >= 0.0 && s * w <= 1200.0;
    }
    return {worst < 1e-9 && bounded, "100 trains, max |trace - oracle| " + fmt(worst) + " pA, tol 1e-9, bounds " +
                                         (bounded ? "held" : "violated")};
}

Outcome resume_properties() {
    auto single = [](double w, Sign sign = Sign::excitatory) {
        SynapsePopulation<> pop(1, 1, Eigen::VectorXi::Zero(1), Eigen::VectorXi::Zero(1),
                                Eigen::VectorXd::Constant(1, w), sign);
        pop.set_rule(ResumeParams<>{});
        return pop;
    };
    auto rec = [](std::vector<double> t) {
        SpikeRecord r(1);
        r.times[0] = std::move(t);
        return r;
    };
    const ResumeParams<> params{};

    auto pair = single(241.0);
    resume_update(pair, rec({20.0}), rec({}), rec({10.0}));
    const double closed = params.A_ex * params.W_max * std::exp(-10.0 / params.tau_ex);
    const double pair_err = std::abs((pair.weight()(0) - 241.0) - closed);

    std::mt19937_64 rng(77);
    int fixed_ok = 0, sign_ok = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto pre     = random_train(rng, 30, 100.0, 0.1);
        const auto teacher = random_train(rng, 10, 100.0, 0.1);
        const double w0    = std::uniform_real_distribution<double>(0.0, 1200.0)(rng);

        auto same = single(w0);
        resume_update(same, rec(teacher), rec(teacher), rec(pre));
        fixed_ok += same.weight()(0) == w0;

        auto up = single(w0), down = single(w0);
        resume_update(up, rec(teacher), rec({}), rec(pre));
        resume_update(down, rec({}), rec(teacher), rec(pre));
        sign_ok += up.weight()(0) >= w0 && down.weight()(0) <= w0;
    }
    return {pair_err < 1e-12 && fixed_ok == 1000 && sign_ok == 1000,
            "single pair error " + fmt(pair_err) + " (tol 1e-12), fixed point " + std::to_string(fixed_ok) +
                "/1000, sign contract " + std::to_string(sign_ok) + "/1000"};
}

bool counts_hold(const NetworkTopology& net) {
    const auto& c     = net.config;
    const auto l1     = Eigen::Index(c.rows) * c.cols;
    const auto l2     = static_cast<Eigen::Index>(std::llround(l1 * c.l2_fraction));
    const auto l3     = Eigen::Index(c.n_classes) * c.neurons_per_class;
    const auto& p     = net.projections;
    bool ok           = net.size(Layer::L1) == l1 && net.size(Layer::L2a) == l2 && net.size(Layer::L2b) == l2 &&
              net.size(Layer::L3) == l3 && p[0].synapses.size() == l1 * l2 && p[1].synapses.size() == l2 &&
              p[2].synapses.size() == l2 * (l2 - 1) && p[3].synapses.size() == l2 * l3 &&
              p[4].synapses.size() == l3 * (l3 - c.neurons_per_class);
    const auto& p5 = p[4].synapses;
    for (Eigen::Index k = 0; k < p5.size() && ok; ++k)
        ok = net.class_of[p5.pre()(k)] != net.class_of[p5.post()(k)];
    const auto& p3 = p[2].synapses;
    for (Eigen::Index k = 0; k < p3.size() && ok; ++k)
        ok = p3.pre()(k) != p3.post()(k);
    return ok;
}

Outcome topology_counts() {
    const auto net   = build_network(NatCsnnConfig{});
    const bool sizes = net.size(Layer::L1) == 1024 && net.size(Layer::L2a) == 256 && net.size(Layer::L2b) == 256 &&
                       net.size(Layer::L3) == 100 && net.projections[0].synapses.size() == 262144 &&
                       net.projections[1].synapses.size() == 256 &&
                       net.projections[2].synapses.size() == 256 * 255;
    const bool base = sizes && counts_hold(net);

    std::mt19937_64 rng(50);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const double fractions[] = {0.25, 0.5, 0.75, 1.0};
    int ok = 0;
    for (int trial = 0; trial < 50; ++trial) {
        NatCsnnConfig cfg;
        cfg.rows              = 2 * pick(1, 10);
        cfg.cols              = 2 * pick(1, 10);
        cfg.l2_fraction       = fractions[pick(0, 3)];
        cfg.n_classes         = pick(2, 10);
        cfg.neurons_per_class = pick(1, 10);
        cfg.seed              = rng();
        ok += counts_hold(build_network(cfg));
    }
    return {base && ok == 50, std::string("default 1024/256/256/100, P1 262144, P3 65280: ") +
                                  (base ? "ok" : "MISMATCH") + "; random configs " + std::to_string(ok) + "/50"};
}

const ToyRun& toy_reference() {
    static const ToyRun run = run_toy();
    return run;
}

Outcome toy_end_to_end() {
    const auto& run = toy_reference();
    return {run.report.accuracy >= 0.80,
            "test accuracy " + fmt(100 * run.report.accuracy, 4) + " % (" + std::to_string(run.report.correct) +
                "/60), threshold 80 %, best P4 init " + fmt(run.search.best_weight, 5) + " pA"};
}

#ifdef NATCSNN_CIFAR_SMOKE
Outcome cifar_smoke() {
    RunConfig cfg            = RunConfig{};
    cfg.network.n_classes    = 2;
    cfg.sim.epochs_phase1    = 2;
    cfg.sim.epochs_phase2    = 2;
    cfg.monte_carlo.trials   = 5;
    cfg.monte_carlo.subset   = 100;
    cfg.encoding.I_K = calibrate_IK(cfg.neuron, cfg.sim.window, cfg.encoding.target_max_spikes, cfg.sim.dt).I_K;
    const std::string dir    = NATCSNN_CIFAR_DIR;
    const auto train         = open_dataset("cifar10:" + dir + ",classes=0+1,limit=500", Split::train);
    const auto test          = open_dataset("cifar10:" + dir + ",classes=0+1,limit=100", Split::test);

    NetworkTopology net = build_network(cfg.network);
    TrainingState s1;
    s1.rng.seed(cfg.network.seed);
    prepare_phase1(net, cfg);
    run_phase1(net, train, cfg, s1);
    const auto base = capture(net, Phase::phase1, s1.presentations, s1.rng);
    auto rng        = restore_rng(base);
    const auto mc   = monte_carlo_weight_search(net, train.head(cfg.monte_carlo.subset), cfg, cfg.monte_carlo.range_lo,
                                                cfg.monte_carlo.range_hi, cfg.monte_carlo.trials, rng, 4);
    set_readout_weight(net, mc.best_weight);
    TrainingState s2;
    s2.rng = restore_rng(base);
    prepare_phase2(net, cfg);
    run_phase2(net, train, cfg, s2);
    prepare_testing(net);
    const auto report = evaluate(net, test, cfg, 4);
    return {report.accuracy > 0.60, "test accuracy " + fmt(100 * report.accuracy, 4) + " %, threshold > 60 %"};
}
#endif

Outcome persistence() {
    const auto& a = toy_reference();
    const auto b  = run_toy(3); // same seeds, different worker count
    const std::string bytes = encode_checkpoint(a.phase2);
    const bool round_trip   = encode_checkpoint(decode_checkpoint(bytes)) == bytes && decode_checkpoint(bytes) == a.phase2;
    const bool identical    = encode_checkpoint(b.phase1) == encode_checkpoint(a.phase1) &&
                              encode_checkpoint(b.phase2) == bytes &&
                              format_report(b.report, {}) == format_report(a.report, {}) &&
                              b.report.predictions == a.report.predictions;

    // interrupted phase 2, resumed from the last periodic checkpoint
    RunConfig cfg               = a.cfg;
    cfg.sim.checkpoint_interval = 40;
    const auto train            = make_synthetic(toy_train_spec);
    auto start = [&](NetworkTopology& net, TrainingState& st) {
        net = build_network(cfg.network);
        apply(a.phase1, net);
        const auto fresh = build_network(cfg.network);
        for (const auto id : {ProjectionId::P4, ProjectionId::P5})
            net.projection(id).synapses.set_weights(fresh.projection(id).synapses.weight());
        st.rng = restore_rng(a.phase1);
        prepare_phase2(net, cfg);
    };
    NetworkTopology full, cut, resumed;
    TrainingState s_full, s_cut, s_resumed;
    start(full, s_full);
    run_phase2(full, train, cfg, s_full);
    start(cut, s_cut);
    std::optional<Checkpoint> last;
    TrainingHooks hooks;
    hooks.stop_after    = 333;
    hooks.on_checkpoint = [&](const Checkpoint& ck, bool) { last = ck; };
    run_phase2(cut, train, cfg, s_cut, hooks);
    start(resumed, s_resumed);
    apply(*last, resumed);
    s_resumed.presentations = last->presentations;
    s_resumed.rng           = restore_rng(*last);
    run_phase2(resumed, train, cfg, s_resumed);
    const bool resume_ok = encode_checkpoint(capture(resumed, Phase::phase2, s_resumed.presentations, s_resumed.rng)) ==
                           encode_checkpoint(capture(full, Phase::phase2, s_full.presentations, s_full.rng));

    return {round_trip && identical && resume_ok,
            std::string("round trip ") + (round_trip ? "bit-exact" : "DIFFERS") + ", rerun " +
                (identical ? "byte-identical" : "DIFFERS") + ", resume at " + std::to_string(last->presentations) +
                " " + (resume_ok ? "matches" : "DIFFERS")};
}

Outcome report_shape() {
    RunConfig cfg         = calibrated_toy_config();
    cfg.network.n_classes = 10;
    auto net              = build_network(cfg.network);
    prepare_testing(net);
    const auto data   = make_synthetic({10, 8, 8, 2, 0.2, 3});
    const auto report = evaluate(net, data, cfg);
    std::vector<std::string> names;
    for (int k = 0; k < 10; ++k)
        names.push_back("class_" + std::to_string(k));
    const auto text = format_report(report, names);

    int rows = 0;
    for (const auto& n : names)
        rows += text.find(n + ' ') != std::string::npos;
    double mean = 0, var = 0;
    for (double a : report.class_accuracy)
        mean += a / 10;
    for (double a : report.class_accuracy)
        var += (a - mean) * (a - mean) / 10;
    const bool stats = report.class_accuracy.size() == 10 && std::abs(report.class_mean - mean) < 1e-12 &&
                       std::abs(report.class_stddev - std::sqrt(var)) < 1e-12;
    const bool line = text.find("Mean accuracy: ") != std::string::npos && text.find("(std ") != std::string::npos;
    return {rows == 10 && stats && line,
            std::to_string(rows) + " per-class rows, mean +- std line " + (line ? "present" : "missing") +
                ", statistics " + (stats ? "consistent" : "INCONSISTENT")};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> check;
    };
    std::vector<Criterion> criteria = {
        {"neuron analytic oracle", neuron_oracle},
        {"encoding endpoints", encoding_endpoints},
        {"STDP brute-force equivalence", stdp_equivalence},
        {"ReSuMe properties", resume_properties},
        {"topology counts", topology_counts},
        {"end-to-end toy run", toy_end_to_end},
#ifdef NATCSNN_CIFAR_SMOKE
        {"CIFAR-10 subset smoke", cifar_smoke},
#endif
        {"persistence and determinism", persistence},
        {"evaluation report shape", report_shape},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " [" << std::fixed
                  << std::setprecision(2) << secs << " s]" << std::defaultfloat << std::endl;
    }
#ifndef NATCSNN_CIFAR_SMOKE
    std::cout << "SKIP CIFAR-10 subset smoke: optional, configure with -DNATCSNN_CIFAR_SMOKE=ON "
                 "-DNATCSNN_CIFAR_DIR=<cifar-10-batches-bin>"
              << std::endl;
#endif
    return failed == 0 ? 0 : 1;
}
