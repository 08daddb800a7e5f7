#include "natcsnn/simulator.hpp"

#include "natcsnn/encoding.hpp"

#include <cmath>
#include <type_traits>

namespace natcsnn {

std::vector<double> teacher_train(double window, double dt, int count) {
    std::vector<double> times;
    times.reserve(count);
    for (int k = 0; k < count; ++k) {
        const long step = std::lround((k + 0.5) * window / count / dt);
        times.push_back(step * dt);
    }
    return times;
}

Simulator::Simulator(const RunConfig& cfg) : cfg_(cfg), prop_(cfg.neuron, cfg.sim.dt) {
    cfg_.sim.validate();
}

PresentationRecord Simulator::present(NetworkTopology& net,
                                      std::span<const double> pixels,
                                      const PresentOptions& opts) {
    return run(net, pixels, opts);
}

PresentationRecord Simulator::present(const NetworkTopology& net,
                                      std::span<const double> pixels,
                                      bool include_readout) {
    return run(net, pixels, PresentOptions{false, include_readout, std::nullopt});
}

template <typename Net>
PresentationRecord Simulator::run(Net& net,
                                  std::span<const double> pixels,
                                  const PresentOptions& opts) {
    constexpr bool writable = !std::is_const_v<Net>;
    if constexpr (!writable) {
        if (opts.plastic)
            throw UsageError("present: plastic presentation needs a mutable network");
    }

    EncodingConfig enc = cfg_.encoding;
    enc.window         = cfg_.sim.window;
    const Eigen::VectorXd drive = encode_image(pixels, enc, net.size(Layer::L1));
    const Eigen::VectorXd none;

    std::array<bool, layer_count> active{true, true, true, opts.include_readout};
    PresentationRecord record;
    for (std::size_t l = 0; l < layer_count; ++l) {
        const Eigen::Index n = net.layer_size[l];
        if (pops_[l].size() != n)
            pops_[l] = NeuronPopulation<>(n, cfg_.neuron);
        else
            pops_[l].reset();
        record.layers[l] = SpikeRecord(active[l] ? n : 0);
        previous_[l].clear();
        current_[l].clear();
    }

    auto live = [&](const Projection& p) {
        return active[static_cast<std::size_t>(p.source)] &&
               active[static_cast<std::size_t>(p.target)];
    };

    if constexpr (writable) {
        if (opts.plastic)
            for (auto& p : net.projections)
                if (p.synapses.is_stdp())
                    p.synapses.reset_traces();
    }

    const long steps = cfg_.sim.steps();
    const double dt  = cfg_.sim.dt;
    for (long n = 0; n < steps; ++n) {
        const double t = n * dt;

        // Spikes emitted last step arrive now (one-step delay).
        for (const auto& p : net.projections) {
            if (!live(p))
                continue;
            const auto& syn = p.synapses;
            auto& target    = pops_[static_cast<std::size_t>(p.target)];
            for (const Eigen::Index i : previous_[static_cast<std::size_t>(p.source)])
                for (const Eigen::Index c : syn.outgoing(i))
                    target.add_input(syn.post()(c), syn.weight()(c), syn.sign());
        }

        for (std::size_t l = 0; l < layer_count; ++l) {
            if (!active[l])
                continue;
            current_[l].clear();
            pops_[l].step(prop_, l == 0 ? drive : none, current_[l]);
            for (const Eigen::Index j : current_[l])
                record.layers[l].times[j].push_back(t);
        }

        if constexpr (writable) {
            if (opts.plastic) {
                for (auto& p : net.projections) {
                    if (!p.synapses.is_stdp() || !live(p))
                        continue;
                    decay_traces(p.synapses, dt);
                    // Pre before post: coincident pairs count as causal.
                    for (const Eigen::Index i : current_[static_cast<std::size_t>(p.source)])
                        stdp_on_pre(p.synapses, i);
                    for (const Eigen::Index j : current_[static_cast<std::size_t>(p.target)])
                        stdp_on_post(p.synapses, j);
                }
            }
        }
        std::swap(previous_, current_);
    }

    if constexpr (writable) {
        if (opts.plastic && opts.include_readout) {
            const SpikeRecord& l3 = record[Layer::L3];
            SpikeRecord teacher(l3.neurons());
            if (opts.teacher_class) {
                if (!net.teachers_attached())
                    throw UsageError("present: teacher requested but teachers are not attached");
                const int k = *opts.teacher_class;
                if (k < 0 || k >= static_cast<int>(net.teacher_targets.size()))
                    throw UsageError("present: teacher class out of range");
                const auto train =
                    teacher_train(cfg_.sim.window, dt, cfg_.encoding.target_max_spikes);
                for (const Eigen::Index j : net.teacher_targets[k])
                    teacher.times[j] = train;
            }
            for (auto& p : net.projections) {
                if (!p.synapses.is_resume() || p.target != Layer::L3)
                    continue;
                resume_update(p.synapses, teacher, l3, record[p.source]);
            }
        }
    }
    return record;
}

template PresentationRecord Simulator::run<NetworkTopology>(NetworkTopology&,
                                                            std::span<const double>,
                                                            const PresentOptions&);
template PresentationRecord Simulator::run<const NetworkTopology>(const NetworkTopology&,
                                                                  std::span<const double>,
                                                                  const PresentOptions&);

} // namespace natcsnn
