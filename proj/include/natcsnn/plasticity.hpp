#pragma once

// Synaptic projections and their learning rules: additive pair-based STDP
// with exponential traces, ReSuMe remote supervision, and static synapses.
//
// Weights are signed (inhibitory <= 0) but every rule works on the weight
// magnitude, so "potentiation" always means a stronger synapse of the
// projection's sign. Magnitudes are clipped to [W_min, W_max] after every
// update.

#include "natcsnn/errors.hpp"
#include "natcsnn/neuron.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace natcsnn {

template <typename Scalar = double>
struct StdpParams {
    Scalar A_plus    = 0.001;
    Scalar A_minus   = 0.0005;
    Scalar tau_trace = 10.0;   // ms, shared by pre and post traces
    Scalar W_max     = 1200.0; // pA, magnitude bound
    Scalar W_min     = 0.0;    // pA, magnitude floor

    void validate() const {
        if (!(A_plus >= 0) || !(A_minus >= 0))
            throw UsageError("STDP amplitudes must be >= 0");
        if (!(tau_trace > 0))
            throw UsageError("STDP trace time constant must be > 0");
        if (!(W_min >= 0) || !(W_max >= W_min))
            throw UsageError("STDP bounds must satisfy 0 <= W_min <= W_max");
    }
    bool operator==(const StdpParams&) const = default;
};

// A_ex > 0 for the excitatory window, A_ih < 0 for the inhibitory one.
template <typename Scalar = double>
struct ResumeParams {
    Scalar A_ex   = 0.001;
    Scalar A_ih   = -0.001;
    Scalar tau_ex = 10.0;
    Scalar tau_ih = 10.0;
    Scalar W_max  = 1200.0;

    void validate() const {
        if (!(tau_ex > 0) || !(tau_ih > 0))
            throw UsageError("ReSuMe window time constants must be > 0");
        if (A_ex < 0 || A_ih > 0)
            throw UsageError("ReSuMe requires A_ex >= 0 and A_ih <= 0");
        if (!(W_max >= 0))
            throw UsageError("ReSuMe W_max must be >= 0");
    }
    bool operator==(const ResumeParams&) const = default;
};

struct StaticRule {
    bool operator==(const StaticRule&) const = default;
};

template <typename Scalar>
using PlasticityRule = std::variant<StaticRule, StdpParams<Scalar>, ResumeParams<Scalar>>;

// Per-neuron ordered spike times (ms) for one presentation window.
struct SpikeRecord {
    std::vector<std::vector<double>> times;

    SpikeRecord() = default;
    explicit SpikeRecord(std::size_t neurons) : times(neurons) {}

    std::size_t neurons() const { return times.size(); }
    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& t : times)
            n += t.size();
        return n;
    }
    bool strictly_increasing() const {
        for (const auto& t : times)
            if (std::adjacent_find(t.begin(), t.end(), std::greater_equal<>()) != t.end())
                return false;
        return true;
    }
    bool operator==(const SpikeRecord&) const = default;
};

// Compressed adjacency: the connection ids touching node k are
// ids[offsets[k] .. offsets[k+1]).
struct Adjacency {
    std::vector<Eigen::Index> offsets;
    std::vector<Eigen::Index> ids;

    std::span<const Eigen::Index> of(Eigen::Index k) const {
        return {ids.data() + offsets[k], ids.data() + offsets[k + 1]};
    }

    static Adjacency build(const Eigen::VectorXi& endpoint, Eigen::Index nodes) {
        Adjacency a;
        a.offsets.assign(nodes + 1, 0);
        for (Eigen::Index c = 0; c < endpoint.size(); ++c)
            ++a.offsets[endpoint(c) + 1];
        for (Eigen::Index k = 0; k < nodes; ++k)
            a.offsets[k + 1] += a.offsets[k];
        a.ids.resize(endpoint.size());
        std::vector<Eigen::Index> fill(a.offsets.begin(), a.offsets.end() - 1);
        for (Eigen::Index c = 0; c < endpoint.size(); ++c)
            a.ids[fill[endpoint(c)]++] = c;
        return a;
    }
};

template <typename Scalar = double>
class SynapsePopulation {
  public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Array  = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    SynapsePopulation() = default;
    SynapsePopulation(Eigen::Index n_pre,
                      Eigen::Index n_post,
                      Eigen::VectorXi pre,
                      Eigen::VectorXi post,
                      Vector weight,
                      Sign sign)
        : n_pre_(n_pre), n_post_(n_post), pre_(std::move(pre)), post_(std::move(post)),
          weight_(std::move(weight)), sign_(sign) {
        if (pre_.size() != post_.size() || pre_.size() != weight_.size())
            throw UsageError("SynapsePopulation: index and weight arrays differ in length");
        for (Eigen::Index c = 0; c < pre_.size(); ++c) {
            if (pre_(c) < 0 || pre_(c) >= n_pre_ || post_(c) < 0 || post_(c) >= n_post_)
                throw UsageError("SynapsePopulation: connection index out of range");
            if (!std::isfinite(weight_(c)))
                throw NumericError("SynapsePopulation: non-finite weight");
            if (signum() * weight_(c) < 0)
                throw UsageError("SynapsePopulation: weight sign disagrees with synapse sign");
        }
        outgoing_ = Adjacency::build(pre_, n_pre_);
        incoming_ = Adjacency::build(post_, n_post_);
    }

    Eigen::Index size() const { return weight_.size(); }
    Eigen::Index n_pre() const { return n_pre_; }
    Eigen::Index n_post() const { return n_post_; }
    const Eigen::VectorXi& pre() const { return pre_; }
    const Eigen::VectorXi& post() const { return post_; }
    const Vector& weight() const { return weight_; }
    Sign sign() const { return sign_; }
    Scalar signum() const { return sign_ == Sign::excitatory ? Scalar(1) : Scalar(-1); }
    const PlasticityRule<Scalar>& rule() const { return rule_; }
    const Array& pre_trace() const { return pre_trace_; }
    const Array& post_trace() const { return post_trace_; }
    std::span<const Eigen::Index> outgoing(Eigen::Index pre) const { return outgoing_.of(pre); }
    std::span<const Eigen::Index> incoming(Eigen::Index post) const { return incoming_.of(post); }

    bool is_static() const { return std::holds_alternative<StaticRule>(rule_); }
    bool is_stdp() const { return std::holds_alternative<StdpParams<Scalar>>(rule_); }
    bool is_resume() const { return std::holds_alternative<ResumeParams<Scalar>>(rule_); }

    void set_rule(PlasticityRule<Scalar> rule) {
        std::visit([](const auto& r) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(r)>, StaticRule>)
                r.validate();
        }, rule);
        rule_ = std::move(rule);
        if (is_stdp()) {
            pre_trace_  = Array::Zero(n_pre_);
            post_trace_ = Array::Zero(n_post_);
            clip_all();
        } else {
            pre_trace_.resize(0);
            post_trace_.resize(0);
            if (is_resume())
                clip_all();
        }
    }

    // Overwrites weights; lengths and signs are checked, magnitudes clipped when
    // the rule has bounds.
    void set_weights(const Vector& w) {
        if (w.size() != size())
            throw FormatError("SynapsePopulation: weight array length mismatch");
        for (Eigen::Index c = 0; c < w.size(); ++c)
            if (!std::isfinite(w(c)) || signum() * w(c) < 0)
                throw FormatError("SynapsePopulation: weight with wrong sign or non-finite");
        weight_ = w;
        if (!is_static())
            clip_all();
    }

    void reset_traces() {
        pre_trace_.setZero();
        post_trace_.setZero();
    }

    // Adds `delta` to the magnitude of connection c and clips.
    void adjust_magnitude(Eigen::Index c, Scalar delta, Scalar w_min, Scalar w_max) {
        const Scalar s = signum();
        weight_(c)     = s * std::clamp(s * weight_(c) + delta, w_min, w_max);
    }

    Array& mutable_pre_trace() { return pre_trace_; }
    Array& mutable_post_trace() { return post_trace_; }

  private:
    void clip_all() {
        Scalar lo = 0, hi = 0;
        if (const auto* p = std::get_if<StdpParams<Scalar>>(&rule_)) {
            lo = p->W_min;
            hi = p->W_max;
        } else if (const auto* r = std::get_if<ResumeParams<Scalar>>(&rule_)) {
            hi = r->W_max;
        } else {
            return;
        }
        for (Eigen::Index c = 0; c < size(); ++c)
            adjust_magnitude(c, Scalar(0), lo, hi);
    }

    Eigen::Index n_pre_ = 0;
    Eigen::Index n_post_ = 0;
    Eigen::VectorXi pre_, post_;
    Vector weight_;
    Sign sign_ = Sign::excitatory;
    PlasticityRule<Scalar> rule_ = StaticRule{};
    Array pre_trace_, post_trace_;
    Adjacency outgoing_, incoming_;
};

namespace detail {

template <typename Scalar>
const StdpParams<Scalar>& stdp_params(const SynapsePopulation<Scalar>& pop, const char* op) {
    const auto* p = std::get_if<StdpParams<Scalar>>(&pop.rule());
    if (p == nullptr)
        throw UsageError(std::string(op) + ": population is not in STDP mode");
    return *p;
}

} // namespace detail

// Multiplies every trace by exp(-dt / tau_trace). No-op for non-STDP modes.
template <typename Scalar>
void decay_traces(SynapsePopulation<Scalar>& pop, Scalar dt) {
    if (!(dt > 0))
        throw UsageError("decay_traces: dt must be > 0");
    const auto* p = std::get_if<StdpParams<Scalar>>(&pop.rule());
    if (p == nullptr)
        return;
    const Scalar f = std::exp(-dt / p->tau_trace);
    pop.mutable_pre_trace() *= f;
    pop.mutable_post_trace() *= f;
}

// Pre-synaptic spike: depress every outgoing connection by the post trace,
// then bump the pre trace.
template <typename Scalar>
void stdp_on_pre(SynapsePopulation<Scalar>& pop, Eigen::Index pre_neuron) {
    const auto& p = detail::stdp_params(pop, "stdp_on_pre");
    if (pre_neuron < 0 || pre_neuron >= pop.n_pre())
        throw UsageError("stdp_on_pre: pre neuron index out of range");
    const auto& post_trace = pop.post_trace();
    const Scalar scale     = p.A_minus * p.W_max;
    for (const Eigen::Index c : pop.outgoing(pre_neuron)) {
        const Scalar trace = post_trace(pop.post()(c));
        if (trace != 0)
            pop.adjust_magnitude(c, -scale * trace, p.W_min, p.W_max);
    }
    pop.mutable_pre_trace()(pre_neuron) += Scalar(1);
}

// Post-synaptic spike: potentiate every incoming connection by the pre trace,
// then bump the post trace.
template <typename Scalar>
void stdp_on_post(SynapsePopulation<Scalar>& pop, Eigen::Index post_neuron) {
    const auto& p = detail::stdp_params(pop, "stdp_on_post");
    if (post_neuron < 0 || post_neuron >= pop.n_post())
        throw UsageError("stdp_on_post: post neuron index out of range");
    const auto& pre_trace = pop.pre_trace();
    const Scalar scale    = p.A_plus * p.W_max;
    for (const Eigen::Index c : pop.incoming(post_neuron)) {
        const Scalar trace = pre_trace(pop.pre()(c));
        if (trace != 0)
            pop.adjust_magnitude(c, scale * trace, p.W_min, p.W_max);
    }
    pop.mutable_post_trace()(post_neuron) += Scalar(1);
}

enum class WindowKind { ex, ih };

// Learning window: A * exp(-s / tau) for s > 0, zero otherwise.
template <typename Scalar>
Scalar resume_window(Scalar s, const ResumeParams<Scalar>& p, WindowKind kind) {
    if (!(s > 0))
        return Scalar(0);
    return kind == WindowKind::ex ? p.A_ex * std::exp(-s / p.tau_ex)
                                  : p.A_ih * std::exp(-s / p.tau_ih);
}

namespace detail {

// Merges teacher (+1) and actual (-1) spike times into (time, net count) pairs,
// dropping times where they cancel.
inline std::vector<std::pair<double, int>> signed_targets(std::span<const double> teacher,
                                                          std::span<const double> actual) {
    std::vector<std::pair<double, int>> out;
    std::size_t a = 0, b = 0;
    while (a < teacher.size() || b < actual.size()) {
        double t;
        if (b == actual.size() || (a < teacher.size() && teacher[a] < actual[b]))
            t = teacher[a];
        else
            t = actual[b];
        int net = 0;
        while (a < teacher.size() && teacher[a] == t) {
            ++net;
            ++a;
        }
        while (b < actual.size() && actual[b] == t) {
            --net;
            ++b;
        }
        if (net != 0)
            out.emplace_back(t, net);
    }
    return out;
}

} // namespace detail

// Batch ReSuMe update over one presentation. For each connection (i, j):
//   dw = W_max * (sum_{t_d in teacher(j)} K_i(t_d) - sum_{t_o in actual(j)} K_i(t_o))
// where K_i(t) sums the window over pre spikes of i strictly before t. The
// window (and its sign) follows the projection's sign.
template <typename Scalar>
void resume_update(SynapsePopulation<Scalar>& pop,
                   const SpikeRecord& teacher,
                   const SpikeRecord& actual,
                   const SpikeRecord& pre_spikes) {
    const auto* p = std::get_if<ResumeParams<Scalar>>(&pop.rule());
    if (p == nullptr)
        throw UsageError("resume_update: population is not in ReSuMe mode");
    if (teacher.neurons() != static_cast<std::size_t>(pop.n_post()) ||
        actual.neurons() != static_cast<std::size_t>(pop.n_post()) ||
        pre_spikes.neurons() != static_cast<std::size_t>(pop.n_pre()))
        throw UsageError("resume_update: spike record size does not match the projection");
    if (!teacher.strictly_increasing() || !actual.strictly_increasing() ||
        !pre_spikes.strictly_increasing())
        throw UsageError("resume_update: spike records must be strictly increasing");

    const bool excit = pop.sign() == Sign::excitatory;
    const Scalar amp = excit ? p->A_ex : p->A_ih;
    const Scalar tau = excit ? p->tau_ex : p->tau_ih;

    for (Eigen::Index j = 0; j < pop.n_post(); ++j) {
        const auto targets = detail::signed_targets(teacher.times[j], actual.times[j]);
        if (targets.empty())
            continue;
        for (const Eigen::Index c : pop.incoming(j)) {
            const auto& pre = pre_spikes.times[pop.pre()(c)];
            if (pre.empty())
                continue;
            // Walk both sorted lists, carrying sum_k exp(-(t - t_k)/tau).
            Scalar trace = 0, acc = 0;
            double last  = 0;
            std::size_t k = 0;
            for (const auto& [t, net] : targets) {
                while (k < pre.size() && pre[k] < t) {
                    trace = trace * std::exp(-(pre[k] - last) / tau) + Scalar(1);
                    last  = pre[k];
                    ++k;
                }
                if (k > 0)
                    acc += Scalar(net) * trace * std::exp(-(t - last) / tau);
            }
            if (acc != 0)
                pop.adjust_magnitude(c, p->W_max * amp * acc, Scalar(0), p->W_max);
        }
    }
}

// Testing-mode conversion: weights kept bit-exact, traces discarded.
template <typename Scalar>
void freeze(SynapsePopulation<Scalar>& pop) {
    if (!pop.is_static())
        pop.set_rule(StaticRule{});
}

} // namespace natcsnn
