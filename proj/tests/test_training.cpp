#include "natcsnn/errors.hpp"
#include "natcsnn/training.hpp"
#include "toy_run.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace natcsnn;
using namespace natcsnn::testing;

namespace {

const RunConfig& toy() {
    static const RunConfig cfg = calibrated_toy_config();
    return cfg;
}

Dataset blank_images(std::size_t n, int label, int n_classes = 3) {
    Dataset d;
    d.rows = d.cols = 8;
    d.n_classes     = n_classes;
    for (int k = 0; k < n_classes; ++k)
        d.class_names.push_back("c" + std::to_string(k));
    for (std::size_t i = 0; i < n; ++i)
        d.samples.push_back({std::vector<double>(64, 0.0), label, "blank"});
    return d;
}

std::array<Eigen::VectorXd, projection_count> weights_of(const NetworkTopology& net) {
    std::array<Eigen::VectorXd, projection_count> w;
    for (std::size_t p = 0; p < projection_count; ++p)
        w[p] = net.projections[p].synapses.weight();
    return w;
}

SpikeRecord readout(const std::vector<std::size_t>& per_neuron) {
    SpikeRecord r(per_neuron.size());
    for (std::size_t j = 0; j < per_neuron.size(); ++j)
        for (std::size_t s = 0; s < per_neuron[j]; ++s)
            r.times[j].push_back(1.0 + s);
    return r;
}

const ToyRun& reference_run() {
    static const ToyRun run = run_toy();
    return run;
}

} // namespace

TEST_CASE("blank image gives no spikes, white image 10 per input neuron") {
    const auto net = build_network(toy().network);
    Simulator sim(toy());
    const auto rec = sim.present(net, std::vector<double>(64, 0.0));
    for (std::size_t l = 0; l < layer_count; ++l)
        CHECK(rec.layers[l].total() == 0);

    const auto white = sim.present(net, std::vector<double>(64, 1.0));
    for (const auto& t : white[Layer::L1].times)
        CHECK(t.size() == 10);
    for (std::size_t l = 0; l < layer_count; ++l) {
        CHECK(white.layers[l].strictly_increasing());
        for (const auto& t : white.layers[l].times)
            for (double x : t) {
                CHECK(x >= 0.0);
                CHECK(x < toy().sim.window);
            }
    }
}

TEST_CASE("presentations are deterministic and independent of history") {
    const auto net  = build_network(toy().network);
    const auto data = make_synthetic(toy_train_spec);
    Simulator a(toy()), b(toy());
    const auto first = a.present(net, data.samples[0].pixels);
    CHECK(a.present(net, data.samples[0].pixels) == first);
    for (int i = 1; i < 6; ++i)
        (void)b.present(net, data.samples[i].pixels);
    CHECK(b.present(net, data.samples[0].pixels) == first);
}

TEST_CASE("teacher train is evenly spaced on the dt grid") {
    const auto t = teacher_train(100.0, 0.1, 10);
    REQUIRE(t.size() == 10);
    for (int k = 0; k < 10; ++k)
        CHECK(t[k] == doctest::Approx(5.0 + 10.0 * k).epsilon(1e-12));
}

TEST_CASE("winner-take-all picks the largest group, lowest index on ties") {
    CHECK(argmax_lowest({3, 9, 1}) == 1);
    bool tie = false;
    CHECK(argmax_lowest({0, 0, 0}, &tie) == 0);
    CHECK(tie);
    CHECK(argmax_lowest({4, 7, 7}, &tie) == 1);
    CHECK(tie);
    CHECK(argmax_lowest({4, 8, 7}, &tie) == 1);
    CHECK_FALSE(tie);

    const auto net = build_network(toy().network);
    const std::vector<std::size_t> counts = {1, 0, 2, 0, 0, 3, 3, 0, 0, 1, 0, 0, 0, 2, 1};
    const auto r = winner_take_all(net, readout(counts));
    CHECK(r.class_counts == std::vector<std::size_t>{3, 7, 3});
    CHECK(r.predicted == 1);
    CHECK(r.neuron_counts == counts);

    auto scaled = counts;
    for (auto& c : scaled)
        c *= 4;
    CHECK(winner_take_all(net, readout(scaled)).predicted == 1);

    auto permuted = counts;
    std::reverse(permuted.begin() + 5, permuted.begin() + 10);
    CHECK(winner_take_all(net, readout(permuted)).predicted == 1);

    CHECK_THROWS_AS(winner_take_all(net, readout({1, 2})), UsageError);
}

TEST_CASE("phase 1 on an empty dataset writes one final checkpoint and changes nothing") {
    auto net          = build_network(toy().network);
    const auto before = weights_of(net);
    prepare_phase1(net, toy());
    TrainingState state;
    int finals = 0, periodic = 0;
    TrainingHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& ck, bool final) {
        (final ? finals : periodic)++;
        CHECK(ck.phase == Phase::phase1);
    };
    CHECK(run_phase1(net, blank_images(0, 0), toy(), state, hooks));
    CHECK(finals == 1);
    CHECK(periodic == 0);
    CHECK(weights_of(net) == before);

    CHECK(run_phase1(net, blank_images(1, 0), toy(), state, hooks));
    CHECK(weights_of(net) == before);
}

TEST_CASE("periodic checkpoints follow the presentation interval") {
    auto cfg                     = toy();
    cfg.sim.checkpoint_interval  = 4;
    cfg.sim.epochs_phase1        = 2;
    auto net                     = build_network(cfg.network);
    prepare_phase1(net, cfg);
    TrainingState state;
    std::vector<std::uint64_t> at;
    TrainingHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& ck, bool final) {
        if (!final)
            at.push_back(ck.presentations);
    };
    run_phase1(net, make_synthetic({3, 8, 8, 3, 0.2, 4}), cfg, state, hooks);
    CHECK(at == std::vector<std::uint64_t>{4, 8, 12, 16});
    CHECK(state.presentations == 18);
}

TEST_CASE("resuming from an interrupted phase equals the uninterrupted run") {
    auto cfg                    = toy();
    cfg.sim.epochs_phase1       = 2;
    cfg.sim.checkpoint_interval = 5;
    const auto data             = make_synthetic({3, 8, 8, 4, 0.2, 11});

    auto full = build_network(cfg.network);
    prepare_phase1(full, cfg);
    TrainingState s_full;
    s_full.rng.seed(cfg.network.seed);
    run_phase1(full, data, cfg, s_full);

    auto first = build_network(cfg.network);
    prepare_phase1(first, cfg);
    TrainingState s_first;
    s_first.rng.seed(cfg.network.seed);
    std::optional<Checkpoint> last;
    TrainingHooks hooks;
    hooks.stop_after    = 17;
    hooks.on_checkpoint = [&](const Checkpoint& ck, bool) { last = ck; };
    CHECK_FALSE(run_phase1(first, data, cfg, s_first, hooks));
    REQUIRE(last);
    CHECK(last->presentations == 15); // the stop itself writes nothing, like a crash

    auto resumed = build_network(cfg.network);
    prepare_phase1(resumed, cfg);
    apply(*last, resumed);
    TrainingState s_resumed;
    s_resumed.presentations = last->presentations;
    s_resumed.rng           = restore_rng(*last);
    CHECK(run_phase1(resumed, data, cfg, s_resumed));

    CHECK(encode_checkpoint(capture(resumed, Phase::phase1, s_resumed.presentations, s_resumed.rng)) ==
          encode_checkpoint(capture(full, Phase::phase1, s_full.presentations, s_full.rng)));
}

TEST_CASE("phase 2 leaves the lower layers alone and testing changes nothing") {
    const auto data = make_synthetic({3, 8, 8, 4, 0.2, 3});
    auto net        = build_network(toy().network);
    prepare_phase1(net, toy());
    TrainingState s1;
    run_phase1(net, data, toy(), s1);
    const auto after1 = weights_of(net);

    prepare_phase2(net, toy());
    CHECK_THROWS_AS(run_phase1(net, data, toy(), s1), UsageError);
    TrainingState s2;
    run_phase2(net, data, toy(), s2);
    const auto after2 = weights_of(net);
    for (auto p : {ProjectionId::P1, ProjectionId::P2, ProjectionId::P3})
        CHECK(after2[static_cast<std::size_t>(p)] == after1[static_cast<std::size_t>(p)]);
    CHECK(after2[3] != after1[3]);

    CHECK_THROWS_AS(evaluate(net, data, toy()), UsageError);
    prepare_testing(net);
    CHECK(net.all_static());
    const auto r1 = evaluate(net, data, toy());
    const auto r2 = evaluate(net, data, toy(), 3);
    CHECK(weights_of(net) == after2);
    CHECK(r1.predictions == r2.predictions);
    CHECK(r1.accuracy == r2.accuracy);
}

TEST_CASE("Monte Carlo search contracts") {
    const auto net  = build_network(toy().network);
    const auto data = make_synthetic({3, 8, 8, 3, 0.2, 3});
    std::mt19937_64 rng(5);

    const auto one = monte_carlo_weight_search(net, data, toy(), 50, 600, 1, rng);
    REQUIRE(one.trials.size() == 1);
    CHECK(one.best_weight == one.trials[0].weight);
    CHECK(one.best_weight >= 50);
    CHECK(one.best_weight <= 600);

    const auto fixed = monte_carlo_weight_search(net, data, toy(), 241, 241, 3, rng);
    CHECK(fixed.best_weight == 241.0);

    const auto degenerate = monte_carlo_weight_search(net, blank_images(6, 0), toy(), 50, 600, 4, rng);
    double smallest       = 1e300;
    for (const auto& t : degenerate.trials) {
        CHECK(t.accuracy == 1.0);
        smallest = std::min(smallest, t.weight);
    }
    CHECK(degenerate.best_weight == smallest);

    CHECK_THROWS_AS(monte_carlo_weight_search(net, data, toy(), 600, 50, 1, rng), UsageError);
    CHECK_THROWS_AS(monte_carlo_weight_search(net, blank_images(0, 0), toy(), 50, 600, 1, rng), UsageError);
    CHECK_THROWS_AS(monte_carlo_weight_search(net, data, toy(), 50, 600, 0, rng), UsageError);
}

TEST_CASE("evaluation report and its table") {
    auto net = build_network(toy().network);
    prepare_testing(net);

    const auto right = evaluate(net, blank_images(4, 0), toy());
    CHECK(right.accuracy == 1.0);
    CHECK(right.correct == 4);

    const auto wrong = evaluate(net, blank_images(1, 1), toy());
    CHECK(wrong.accuracy == 0.0);
    CHECK(wrong.class_accuracy[1] == 0.0);
    CHECK(std::isnan(wrong.class_accuracy[0]));
    CHECK(wrong.class_samples == std::vector<std::size_t>{0, 1, 0});

    CHECK_THROWS_AS(evaluate(net, blank_images(0, 0), toy()), UsageError);

    EvaluationReport r;
    r.class_accuracy = {0.8, 0.9, 1.0};
    r.class_samples  = {10, 10, 10};
    r.class_mean     = 0.9;
    r.class_stddev   = std::sqrt(0.02 / 3);
    r.accuracy       = 0.9;
    r.correct        = 27;
    const auto text  = format_report(r, {"a", "b", "c"});
    CHECK(text.find("a ") != std::string::npos);
    CHECK(text.find("80.000") != std::string::npos);
    CHECK(text.find("Mean accuracy: 90.000 % (std 8.165 %)") != std::string::npos);
}

TEST_CASE("epoch order is fixed unless a shuffle seed is given") {
    const auto fixed = epoch_order(6, 2, std::nullopt);
    CHECK(fixed == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    const auto a = epoch_order(50, 1, 9), b = epoch_order(50, 1, 9), c = epoch_order(50, 2, 9);
    CHECK(a == b);
    CHECK(a != c);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == epoch_order(50, 0, std::nullopt));
}

TEST_CASE("reference toy run: phase 1 spreads P1, phase 2 accuracy rises") {
    const auto& run = reference_run();
    REQUIRE(run.phase1_epochs.size() == 5);
    REQUIRE(run.phase2_epochs.size() == 5);

    const auto before = weight_stats(run.initial.weights[0]);
    const auto after  = weight_stats(run.phase1.weights[0]);
    // regression values from the reference run
    CHECK(after.mean == doctest::Approx(54.682391621628483).epsilon(1e-6));
    CHECK(after.stddev == doctest::Approx(26.30904153880256).epsilon(1e-6));
    CHECK(after.max == doctest::Approx(121.24908000739779).epsilon(1e-6));
    CHECK(after.stddev > 1.15 * before.stddev);

    // weights from pixels some template lights up end above the rest
    const auto tmpl = synthetic_templates(3, 8, 8);
    const auto& w1  = run.phase1.weights[0];
    double on = 0, off = 0;
    int n_on = 0, n_off = 0;
    for (Eigen::Index c = 0; c < w1.size(); ++c) {
        const auto pixel = c / 16; // all-to-all, pre-major over 16 L2a neurons
        const bool lit   = tmpl[0][pixel] + tmpl[1][pixel] + tmpl[2][pixel] > 0;
        (lit ? on : off) += w1(c);
        ++(lit ? n_on : n_off);
    }
    CHECK(on / n_on > off / n_off + 10.0);

    CHECK(*run.phase2_epochs[0].train_accuracy == doctest::Approx(0.39333333333333331).epsilon(1e-9));
    CHECK(*run.phase2_epochs[1].train_accuracy == doctest::Approx(0.57333333333333336).epsilon(1e-9));
    CHECK(*run.phase2_epochs[1].train_accuracy > *run.phase2_epochs[0].train_accuracy);
    for (auto p : {0, 1, 2})
        CHECK(run.phase2.weights[p] == run.phase1.weights[p]);
    CHECK(run.report.accuracy >= 0.80);
}
