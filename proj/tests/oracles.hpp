#pragma once
// Independent reference computations shared by the unit and acceptance tests.
// These deliberately avoid the library's incremental machinery: sums run over
// all spike pairs directly.

#include "natcsnn/plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace natcsnn::testing {

inline double lif_closed_form(const NeuronParams<>& p, double current, double t) {
    return p.E_L + p.resistance() * current * (1.0 - std::exp(-t / p.tau_m));
}

// Sorted, distinct spike times on the dt grid in [0, window).
inline std::vector<double> random_train(std::mt19937_64& rng, int max_spikes, double window, double dt) {
    const long steps = std::lround(window / dt);
    std::uniform_int_distribution<int> count(0, max_spikes);
    std::uniform_int_distribution<long> step(0, steps - 1);
    std::vector<long> k;
    const int n = count(rng);
    while (static_cast<int>(k.size()) < n) {
        k.push_back(step(rng));
        std::sort(k.begin(), k.end());
        k.erase(std::unique(k.begin(), k.end()), k.end());
    }
    std::vector<double> t;
    for (const long s : k)
        t.push_back(s * dt);
    return t;
}

// Drives a 1x1 STDP population step by step the way the simulator does:
// decay, then pre events, then post events.
inline double replay_stdp(SynapsePopulation<>& pop,
                          const std::vector<double>& pre,
                          const std::vector<double>& post,
                          double window,
                          double dt) {
    const long steps = std::lround(window / dt);
    std::size_t a = 0, b = 0;
    for (long n = 0; n < steps; ++n) {
        decay_traces(pop, dt);
        if (a < pre.size() && std::lround(pre[a] / dt) == n) {
            stdp_on_pre(pop, 0);
            ++a;
        }
        if (b < post.size() && std::lround(post[b] / dt) == n) {
            stdp_on_post(pop, 0);
            ++b;
        }
    }
    return pop.weight()(0);
}

// Event-ordered double sum over all pairs, clipping after every event.
// Pre events at time t see post spikes strictly before t; post events see pre
// spikes at or before t (pre is processed first within a step).
inline double stdp_pairs_oracle(double w0,
                                Sign sign,
                                const std::vector<double>& pre,
                                const std::vector<double>& post,
                                const StdpParams<>& p) {
    struct Event {
        double t;
        int kind; // 0 pre, 1 post
    };
    std::vector<Event> ev;
    for (const double t : pre)
        ev.push_back({t, 0});
    for (const double t : post)
        ev.push_back({t, 1});
    std::sort(ev.begin(), ev.end(), [](const Event& x, const Event& y) {
        return x.t != y.t ? x.t < y.t : x.kind < y.kind;
    });
    const double s = sign == Sign::excitatory ? 1.0 : -1.0;
    double mag     = s * w0;
    for (const auto& e : ev) {
        double sum = 0;
        if (e.kind == 0) {
            for (const double tp : post)
                if (tp < e.t)
                    sum += std::exp(-(e.t - tp) / p.tau_trace);
            mag -= p.A_minus * p.W_max * sum;
        } else {
            for (const double tp : pre)
                if (tp <= e.t)
                    sum += std::exp(-(e.t - tp) / p.tau_trace);
            mag += p.A_plus * p.W_max * sum;
        }
        mag = std::clamp(mag, p.W_min, p.W_max);
    }
    return s * mag;
}

// Unclipped ReSuMe change of |w| for one connection.
inline double resume_pairs_oracle(const std::vector<double>& teacher,
                                  const std::vector<double>& actual,
                                  const std::vector<double>& pre,
                                  const ResumeParams<>& p,
                                  bool excitatory) {
    const double A   = excitatory ? p.A_ex : p.A_ih;
    const double tau = excitatory ? p.tau_ex : p.tau_ih;
    double dw        = 0;
    for (const double t : teacher)
        for (const double tp : pre)
            if (tp < t)
                dw += p.W_max * A * std::exp(-(t - tp) / tau);
    for (const double t : actual)
        for (const double tp : pre)
            if (tp < t)
                dw -= p.W_max * A * std::exp(-(t - tp) / tau);
    return dw;
}

} // namespace natcsnn::testing
