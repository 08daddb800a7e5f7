#pragma once

// Run configuration: every tunable of a run in one flat key=value file.

#include "natcsnn/encoding.hpp"
#include "natcsnn/neuron.hpp"
#include "natcsnn/plasticity.hpp"
#include "natcsnn/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace natcsnn {

struct SimulationConfig {
    double dt                 = 0.1;   // ms, integration step
    double window             = 100.0; // ms, one presentation
    int epochs_phase1         = 5;
    int epochs_phase2         = 5;
    long checkpoint_interval  = 500; // presentations
    std::optional<std::uint64_t> shuffle_seed;
    bool train_readout_inhibition = true; // ReSuMe on P5 as well as P4

    long steps() const;
    void validate() const;
    bool operator==(const SimulationConfig&) const = default;
};

struct MonteCarloConfig {
    int trials          = 20;
    double range_lo     = 50.0;
    double range_hi     = 600.0;
    std::size_t subset  = 500;
    bool operator==(const MonteCarloConfig&) const = default;
};

struct RunConfig {
    NatCsnnConfig network;
    NeuronParams<> neuron;
    SimulationConfig sim;
    EncodingConfig encoding;
    StdpParams<> stdp_ex{0.001, 0.0005, 10.0, 1200.0, 0.0};
    StdpParams<> stdp_ih{0.001, 0.0005, 10.0, 1200.0, 0.0};
    ResumeParams<> resume{0.001, -0.001, 10.0, 10.0, 1200.0};
    MonteCarloConfig monte_carlo;

    void validate() const;

    // Flat key=value text, one key per line, every key present.
    std::string serialize() const;
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    static std::vector<std::string> keys();

    bool operator==(const RunConfig&) const = default;
};

// Desk-scale settings: 8x8 images, 3 classes x 5 readout neurons, weights and
// learning rates rescaled for 64 inputs. I_K is left uncalibrated.
RunConfig toy_config();

} // namespace natcsnn
