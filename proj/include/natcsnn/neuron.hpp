#pragma once

// MAT-variant leaky integrate-and-fire neuron with alpha-shaped synaptic
// currents. The membrane is a non-resetting leaky integrator; spiking raises
// a double-exponential adaptive threshold instead of resetting the voltage.
//
// All subthreshold dynamics are linear, so one step is an exact propagator
// (matrix exponential of the generator), not an Euler update.

#include "natcsnn/errors.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace natcsnn {

enum class Sign { excitatory, inhibitory };

template <typename Scalar = double>
struct NeuronParams {
    Scalar C_m        = 100.0; // pF
    Scalar tau_m      = 5.0;   // ms
    Scalar E_L        = -70.0; // mV, resting and between-image reset potential
    Scalar tau_syn_ex = 1.0;   // ms
    Scalar tau_syn_in = 3.0;   // ms
    Scalar t_ref      = 2.0;   // ms
    Scalar tau1       = 10.0;  // ms
    Scalar tau2       = 20.0;  // ms
    Scalar alpha1     = 37.0;  // mV
    Scalar alpha2     = 2.0;   // mV
    Scalar omega      = -51.0; // mV, threshold baseline

    // Membrane resistance in GOhm (mV/pA).
    Scalar resistance() const { return tau_m / C_m; }

    bool operator==(const NeuronParams&) const = default;

    void validate() const {
        auto positive = [](Scalar v, const char* name) {
            if (!(v > 0) || !std::isfinite(v))
                throw UsageError(std::string("neuron parameter ") + name + " must be finite and > 0");
        };
        positive(C_m, "C_m");
        positive(tau_m, "tau_m");
        positive(tau_syn_ex, "tau_syn_ex");
        positive(tau_syn_in, "tau_syn_in");
        positive(tau1, "tau1");
        positive(tau2, "tau2");
        if (!(t_ref >= 0) || !std::isfinite(t_ref))
            throw UsageError("neuron parameter t_ref must be finite and >= 0");
        if (!std::isfinite(E_L) || !std::isfinite(omega) || !std::isfinite(alpha1) ||
            !std::isfinite(alpha2))
            throw UsageError("neuron potentials must be finite");
        if (alpha1 < 0 || alpha2 < 0)
            throw UsageError("threshold jumps alpha1, alpha2 must be >= 0");
    }
};

// Rheobase of the non-adapted neuron: the DC current whose steady state sits
// exactly on the resting threshold omega.
template <typename Scalar>
Scalar rheobase(const NeuronParams<Scalar>& p) {
    return (p.omega - p.E_L) / p.resistance();
}

template <typename Scalar = double>
struct NeuronState {
    Scalar V_m   = -70.0;
    Scalar h1    = 0.0;
    Scalar h2    = 0.0;
    Scalar dI_ex = 0.0; // alpha kernel auxiliary variable, pA/ms
    Scalar I_ex  = 0.0; // pA
    Scalar dI_in = 0.0;
    Scalar I_in  = 0.0;
    Scalar refractory_remaining = 0.0; // ms
    std::optional<Scalar> last_spike_time;

    static NeuronState resting(const NeuronParams<Scalar>& p) {
        NeuronState s;
        s.V_m = p.E_L;
        return s;
    }

    bool operator==(const NeuronState&) const = default;
};

// Exact one-step map for the linear part of the dynamics. The state vector is
// (dI_ex, I_ex, dI_in, I_in, V_m - E_L); a constant external current enters
// through `input`.
template <typename Scalar = double>
class Propagator {
  public:
    using Matrix5 = Eigen::Matrix<Scalar, 5, 5>;
    using Vector5 = Eigen::Matrix<Scalar, 5, 1>;

    Propagator(const NeuronParams<Scalar>& p, Scalar dt) : dt_(dt) {
        p.validate();
        if (!(dt > 0) || !std::isfinite(dt))
            throw UsageError("dt must be finite and > 0");

        // Augmented generator: the 6th coordinate is the held external current.
        Eigen::Matrix<double, 6, 6> gen = Eigen::Matrix<double, 6, 6>::Zero();
        const double te = static_cast<double>(p.tau_syn_ex);
        const double ti = static_cast<double>(p.tau_syn_in);
        const double tm = static_cast<double>(p.tau_m);
        const double cm = static_cast<double>(p.C_m);
        gen(0, 0) = -1.0 / te;
        gen(1, 0) = 1.0;
        gen(1, 1) = -1.0 / te;
        gen(2, 2) = -1.0 / ti;
        gen(3, 2) = 1.0;
        gen(3, 3) = -1.0 / ti;
        gen(4, 1) = 1.0 / cm;
        gen(4, 3) = 1.0 / cm;
        gen(4, 4) = -1.0 / tm;
        gen(4, 5) = 1.0 / cm;

        const Eigen::Matrix<double, 6, 6> full = (gen * static_cast<double>(dt)).exp();
        state_ = full.template topLeftCorner<5, 5>().template cast<Scalar>();
        input_ = full.template topRightCorner<5, 1>().template cast<Scalar>();

        // The membrane row is closed-form; pin it so constant-input trajectories
        // reproduce the analytic LIF solution to rounding.
        const Scalar decay = std::exp(-dt / p.tau_m);
        state_(4, 4) = decay;
        input_(4)    = p.resistance() * (Scalar(1) - decay);

        threshold_decay1_ = std::exp(-dt / p.tau1);
        threshold_decay2_ = std::exp(-dt / p.tau2);
        kick_ex_          = std::numbers::e_v<Scalar> / p.tau_syn_ex;
        kick_in_          = std::numbers::e_v<Scalar> / p.tau_syn_in;
    }

    Scalar dt() const { return dt_; }
    const Matrix5& state() const { return state_; }
    const Vector5& input() const { return input_; }
    Scalar threshold_decay1() const { return threshold_decay1_; }
    Scalar threshold_decay2() const { return threshold_decay2_; }
    // Jump of the auxiliary variable per pA of weight, so the current pulse
    // peaks at exactly the weight after tau_syn.
    Scalar kick_ex() const { return kick_ex_; }
    Scalar kick_in() const { return kick_in_; }

  private:
    Scalar dt_;
    Matrix5 state_;
    Vector5 input_;
    Scalar threshold_decay1_;
    Scalar threshold_decay2_;
    Scalar kick_ex_;
    Scalar kick_in_;
};

template <typename Scalar>
Scalar threshold_at(const NeuronState<Scalar>& s, const NeuronParams<Scalar>& p) {
    return s.h1 + s.h2 + p.omega;
}

namespace detail {

template <typename Scalar>
bool finite_state(const NeuronState<Scalar>& s) {
    return std::isfinite(s.V_m) && std::isfinite(s.h1) && std::isfinite(s.h2) &&
           std::isfinite(s.dI_ex) && std::isfinite(s.I_ex) && std::isfinite(s.dI_in) &&
           std::isfinite(s.I_in) && std::isfinite(s.refractory_remaining);
}

// Refractory countdown; values below half a step snap to zero so a period of
// k*dt expires after exactly k steps.
template <typename Scalar>
Scalar count_down(Scalar remaining, Scalar dt) {
    const Scalar next = remaining - dt;
    return next < dt / 2 ? Scalar(0) : next;
}

} // namespace detail

// Advances one neuron by prop.dt() under a constant external current. `t` is
// the time stamp recorded if the neuron fires in this step. Returns whether it
// fired.
template <typename Scalar>
[[nodiscard]] bool step_neuron(NeuronState<Scalar>& s,
                               const NeuronParams<Scalar>& p,
                               const Propagator<Scalar>& prop,
                               Scalar i_ext,
                               Scalar t = 0) {
    if (!std::isfinite(i_ext) || !detail::finite_state(s))
        throw NumericError("step_neuron: non-finite state or input current");

    typename Propagator<Scalar>::Vector5 x;
    x << s.dI_ex, s.I_ex, s.dI_in, s.I_in, s.V_m - p.E_L;
    x = prop.state() * x + prop.input() * i_ext;
    s.dI_ex = x(0);
    s.I_ex  = x(1);
    s.dI_in = x(2);
    s.I_in  = x(3);
    s.V_m   = x(4) + p.E_L;
    s.h1 *= prop.threshold_decay1();
    s.h2 *= prop.threshold_decay2();
    s.refractory_remaining = detail::count_down(s.refractory_remaining, prop.dt());

    if (s.refractory_remaining == 0 && s.V_m >= threshold_at(s, p)) {
        s.h1 += p.alpha1;
        s.h2 += p.alpha2;
        s.refractory_remaining = p.t_ref;
        s.last_spike_time      = t;
        return true;
    }
    return false;
}

// Convenience overload that builds the propagator on the fly.
template <typename Scalar>
[[nodiscard]] bool step_neuron(NeuronState<Scalar>& s,
                               const NeuronParams<Scalar>& p,
                               Scalar i_ext,
                               Scalar dt,
                               Scalar t) {
    return step_neuron(s, p, Propagator<Scalar>(p, dt), i_ext, t);
}

template <typename Scalar>
void deliver_spike(NeuronState<Scalar>& s,
                   Scalar weight,
                   Sign sign,
                   const NeuronParams<Scalar>& p) {
    if (!std::isfinite(weight))
        throw NumericError("deliver_spike: non-finite weight");
    if (sign == Sign::excitatory) {
        if (weight < 0)
            throw UsageError("deliver_spike: excitatory weight must be >= 0");
        s.dI_ex += weight * (std::numbers::e_v<Scalar> / p.tau_syn_ex);
    } else {
        if (weight > 0)
            throw UsageError("deliver_spike: inhibitory weight must be <= 0");
        s.dI_in += weight * (std::numbers::e_v<Scalar> / p.tau_syn_in);
    }
}

template <typename Scalar>
void reset_state(NeuronState<Scalar>& s, const NeuronParams<Scalar>& p) {
    s = NeuronState<Scalar>::resting(p);
}

// Struct-of-arrays population sharing one parameter set. Column j of `x`
// holds neuron j's linear state in the propagator layout.
template <typename Scalar = double>
class NeuronPopulation {
  public:
    using Array  = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, 5, Eigen::Dynamic>;

    NeuronPopulation() = default;
    NeuronPopulation(Eigen::Index size, const NeuronParams<Scalar>& p)
        : params_(p), x_(5, size), h1_(size), h2_(size), refractory_(size),
          ex_input_(size), in_input_(size) {
        reset();
    }

    Eigen::Index size() const { return x_.cols(); }
    const NeuronParams<Scalar>& params() const { return params_; }

    void reset() {
        x_.setZero();
        h1_.setZero();
        h2_.setZero();
        refractory_.setZero();
        ex_input_.setZero();
        in_input_.setZero();
    }

    // Synaptic input accumulates here (pA of weight) until the next step.
    void add_input(Eigen::Index neuron, Scalar weight, Sign sign) {
        (sign == Sign::excitatory ? ex_input_ : in_input_)(neuron) += weight;
    }

    // Applies pending input, integrates one step and appends the indices of
    // neurons that fired to `spiked`. `i_ext` may be empty (no external drive).
    void step(const Propagator<Scalar>& prop,
              const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& i_ext,
              std::vector<Eigen::Index>& spiked) {
        x_.row(0).array() += ex_input_.transpose() * prop.kick_ex();
        x_.row(2).array() += in_input_.transpose() * prop.kick_in();
        ex_input_.setZero();
        in_input_.setZero();

        if (i_ext.size() == 0) {
            x_ = prop.state() * x_;
        } else {
            if (i_ext.size() != size())
                throw UsageError("NeuronPopulation::step: external current size mismatch");
            if (!i_ext.allFinite())
                throw NumericError("NeuronPopulation::step: non-finite external current");
            x_ = prop.state() * x_ + prop.input() * i_ext.transpose();
        }
        h1_ *= prop.threshold_decay1();
        h2_ *= prop.threshold_decay2();

        const Scalar dt = prop.dt();
        for (Eigen::Index j = 0; j < size(); ++j) {
            refractory_(j) = detail::count_down(refractory_(j), dt);
            const Scalar v = x_(4, j) + params_.E_L;
            if (!std::isfinite(v))
                throw NumericError("NeuronPopulation::step: membrane diverged");
            if (refractory_(j) == 0 && v >= h1_(j) + h2_(j) + params_.omega) {
                h1_(j) += params_.alpha1;
                h2_(j) += params_.alpha2;
                refractory_(j) = params_.t_ref;
                spiked.push_back(j);
            }
        }
    }

    Scalar membrane(Eigen::Index j) const { return x_(4, j) + params_.E_L; }
    Scalar threshold(Eigen::Index j) const { return h1_(j) + h2_(j) + params_.omega; }
    Scalar current_ex(Eigen::Index j) const { return x_(1, j); }
    Scalar current_in(Eigen::Index j) const { return x_(3, j); }

  private:
    NeuronParams<Scalar> params_;
    Matrix x_;
    Array h1_, h2_, refractory_;
    Array ex_input_, in_input_;
};

} // namespace natcsnn
