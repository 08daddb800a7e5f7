#pragma once

// Two-phase training protocol, Monte Carlo initial-weight search, and
// winner-takes-all evaluation.

#include "natcsnn/checkpoint.hpp"
#include "natcsnn/config.hpp"
#include "natcsnn/dataset.hpp"
#include "natcsnn/simulator.hpp"

#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace natcsnn {

struct ClassificationResult {
    int predicted = 0;
    std::vector<std::size_t> neuron_counts; // per L3 neuron
    std::vector<std::size_t> class_counts;  // summed per class group
    bool tie = false;

    bool operator==(const ClassificationResult&) const = default;
};

// Argmax of summed group counts; ties go to the lowest class index.
ClassificationResult winner_take_all(const NetworkTopology& net, const SpikeRecord& l3);
int argmax_lowest(const std::vector<std::size_t>& counts, bool* tie = nullptr);

struct EvaluationReport {
    double accuracy = 0;
    std::size_t correct = 0;
    std::vector<double> class_accuracy; // per class; NaN when the class is absent
    std::vector<std::size_t> class_samples;
    double class_mean   = 0; // over classes present
    double class_stddev = 0; // population std over classes present
    std::vector<int> predictions;
};

// Per-class table (class name, accuracy percent) followed by mean +- std and
// the overall accuracy.
std::string format_report(const EvaluationReport& report, const std::vector<std::string>& names);

// Mode switches for the protocol stages.
void prepare_phase1(NetworkTopology& net, const RunConfig& cfg);
void prepare_phase2(NetworkTopology& net, const RunConfig& cfg);
void prepare_testing(NetworkTopology& net);

struct TrainingState {
    Phase phase = Phase::phase1;
    std::uint64_t presentations = 0; // completed presentations within the phase
    std::mt19937_64 rng{1};
};

struct EpochLog {
    Phase phase;
    int epoch;
    std::uint64_t presentations;
    std::optional<double> train_accuracy; // phase 2 only, over the epoch's presentations
    std::array<WeightStats, projection_count> weights;
};

struct TrainingHooks {
    std::function<void(const Checkpoint&, bool final)> on_checkpoint;
    std::function<void(const EpochLog&)> on_epoch;
    // Stop once this many presentations have completed (simulated interruption).
    std::optional<std::uint64_t> stop_after;
};

// Presentation order for one epoch: identity unless a shuffle seed is set.
std::vector<std::size_t> epoch_order(std::size_t n, int epoch, std::optional<std::uint64_t> seed);

// Runs (or resumes, from state.presentations) a training phase. The network
// must have been prepared for that phase. Returns false if stopped early.
bool run_phase1(NetworkTopology& net,
                const Dataset& data,
                const RunConfig& cfg,
                TrainingState& state,
                const TrainingHooks& hooks = {});

bool run_phase2(NetworkTopology& net,
                const Dataset& data,
                const RunConfig& cfg,
                TrainingState& state,
                const TrainingHooks& hooks = {});

ClassificationResult classify(const NetworkTopology& net,
                              Simulator& sim,
                              std::span<const double> pixels);

EvaluationReport evaluate(const NetworkTopology& net,
                          const Dataset& data,
                          const RunConfig& cfg,
                          int workers = 1);

struct MonteCarloTrial {
    int index;
    double weight;
    double accuracy;
};

struct MonteCarloResult {
    double best_weight   = 0;
    double best_accuracy = 0;
    std::vector<MonteCarloTrial> trials; // in sampling order
};

// Samples `trials` P4 initial weights uniformly from [lo, hi]; each candidate
// gets one phase-2 epoch on `subset` followed by frozen evaluation on the
// same subset. Best accuracy wins; ties go to the smaller weight.
MonteCarloResult monte_carlo_weight_search(const NetworkTopology& phase1_net,
                                           const Dataset& subset,
                                           const RunConfig& cfg,
                                           double lo,
                                           double hi,
                                           int trials,
                                           std::mt19937_64& rng,
                                           int workers = 1);

// Sets every P4 weight to `weight` (the Monte Carlo outcome).
void set_readout_weight(NetworkTopology& net, double weight);

} // namespace natcsnn
