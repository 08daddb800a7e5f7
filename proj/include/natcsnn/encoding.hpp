#pragma once

// Rate coding of pixel intensities: each Layer-1 neuron receives a constant
// current p * I_K for the whole presentation window.

#include "natcsnn/neuron.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace natcsnn {

struct EncodingConfig {
    double I_K           = 0.0;   // pA; 0 means not calibrated yet
    double window        = 100.0; // ms
    int target_max_spikes = 10;

    bool calibrated() const { return I_K > 0; }
    void validate() const;
    bool operator==(const EncodingConfig&) const = default;
};

double pixel_to_current(double intensity, const EncodingConfig& cfg);

// Row-major current vector for Layer 1. Throws on a pixel count other than
// `layer_size` or an uncalibrated config.
Eigen::VectorXd encode_image(std::span<const double> pixels,
                             const EncodingConfig& cfg,
                             Eigen::Index layer_size);

// Spike times of one neuron driven from rest by a constant current.
std::vector<double> dc_spike_times(const NeuronParams<>& params,
                                   double current,
                                   double window,
                                   double dt);

int dc_spike_count(const NeuronParams<>& params, double current, double window, double dt);

struct Calibration {
    double I_K;        // returned current, midpoint of the band below
    double band_low;   // smallest current giving `target` spikes (0.1 pA resolution)
    double band_high;  // smallest current giving more than `target` spikes
};

// Finds the current band over which a resting neuron fires exactly `target`
// spikes in `window` ms, and returns its midpoint. Throws NumericError when
// the target is beyond what the refractory period allows.
Calibration calibrate_IK(const NeuronParams<>& params, double window, int target, double dt);

} // namespace natcsnn
