#pragma once

// Clock-driven simulation of one presentation window.

#include "natcsnn/config.hpp"
#include "natcsnn/topology.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace natcsnn {

struct PresentationRecord {
    std::array<SpikeRecord, layer_count> layers;

    const SpikeRecord& operator[](Layer l) const { return layers[static_cast<std::size_t>(l)]; }
    SpikeRecord& operator[](Layer l) { return layers[static_cast<std::size_t>(l)]; }
    bool operator==(const PresentationRecord&) const = default;
};

struct PresentOptions {
    bool plastic         = false;
    bool include_readout = true;      // simulate L3 (phase 1 leaves it out)
    std::optional<int> teacher_class; // class whose teacher fires (plastic runs)
};

// Evenly spaced teacher spikes at (k + 1/2) * window / count, on the dt grid.
std::vector<double> teacher_train(double window, double dt, int count);

class Simulator {
  public:
    explicit Simulator(const RunConfig& cfg);

    // Resets every neuron, injects the encoded image for one window and
    // propagates spikes with a one-step delay. When plastic, STDP projections
    // learn online and ReSuMe projections are updated at window end.
    PresentationRecord present(NetworkTopology& net,
                               std::span<const double> pixels,
                               const PresentOptions& opts);

    // Non-plastic overload for read-only networks.
    PresentationRecord present(const NetworkTopology& net,
                               std::span<const double> pixels,
                               bool include_readout = true);

    const RunConfig& config() const { return cfg_; }

  private:
    template <typename Net>
    PresentationRecord run(Net& net, std::span<const double> pixels, const PresentOptions& opts);

    RunConfig cfg_;
    Propagator<> prop_;
    std::array<NeuronPopulation<>, layer_count> pops_;
    std::array<std::vector<Eigen::Index>, layer_count> previous_, current_;
};

} // namespace natcsnn
