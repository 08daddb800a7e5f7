#include "natcsnn/encoding.hpp"

#include <cmath>
#include <string>

namespace natcsnn {

void EncodingConfig::validate() const {
    if (!(window > 0))
        throw UsageError("encoding window must be > 0");
    if (target_max_spikes < 1)
        throw UsageError("target_max_spikes must be >= 1");
    if (!(I_K >= 0) || !std::isfinite(I_K))
        throw UsageError("I_K must be finite and >= 0");
}

double pixel_to_current(double intensity, const EncodingConfig& cfg) {
    if (!(intensity >= 0.0 && intensity <= 1.0))
        throw UsageError("pixel intensity outside [0, 1]: " + std::to_string(intensity));
    return intensity * cfg.I_K;
}

Eigen::VectorXd encode_image(std::span<const double> pixels,
                             const EncodingConfig& cfg,
                             Eigen::Index layer_size) {
    if (!cfg.calibrated())
        throw UsageError("encode_image: encoding is not calibrated (I_K unset)");
    if (static_cast<Eigen::Index>(pixels.size()) != layer_size)
        throw UsageError("encode_image: image has " + std::to_string(pixels.size()) +
                         " pixels, Layer 1 has " + std::to_string(layer_size));
    Eigen::VectorXd current(layer_size);
    for (Eigen::Index i = 0; i < layer_size; ++i)
        current(i) = pixel_to_current(pixels[i], cfg);
    return current;
}

std::vector<double> dc_spike_times(const NeuronParams<>& params,
                                   double current,
                                   double window,
                                   double dt) {
    const Propagator<> prop(params, dt);
    auto state          = NeuronState<>::resting(params);
    const long steps    = std::lround(window / dt);
    std::vector<double> times;
    for (long n = 0; n < steps; ++n)
        if (step_neuron(state, params, prop, current, n * dt))
            times.push_back(n * dt);
    return times;
}

int dc_spike_count(const NeuronParams<>& params, double current, double window, double dt) {
    return static_cast<int>(dc_spike_times(params, current, window, dt).size());
}

namespace {

// Smallest current (to `resolution`) with at least `count` spikes, given a
// bracket where lo fires fewer and hi fires at least that many.
double lower_edge(const NeuronParams<>& params, double window, double dt, int count, double lo,
                  double hi, double resolution) {
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        if (dc_spike_count(params, mid, window, dt) >= count)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace

Calibration calibrate_IK(const NeuronParams<>& params, double window, int target, double dt) {
    params.validate();
    if (target < 1)
        throw UsageError("calibration target must be >= 1 spike");
    if (!(window > 0))
        throw UsageError("calibration window must be > 0");
    if (params.t_ref > 0 && target * params.t_ref >= window)
        throw NumericError("calibration target of " + std::to_string(target) +
                           " spikes is unreachable within " + std::to_string(window) +
                           " ms with t_ref = " + std::to_string(params.t_ref) + " ms");

    constexpr double resolution = 0.1;
    constexpr double ceiling    = 1e9;
    const double floor_current  = std::max(0.0, rheobase(params));

    // Expand until the bracket covers target + 1 spikes.
    double hi = std::max(2.0 * floor_current, 1.0);
    while (dc_spike_count(params, hi, window, dt) < target + 1) {
        hi *= 2.0;
        if (hi > ceiling) {
            const int best = dc_spike_count(params, ceiling, window, dt);
            if (best < target)
                throw NumericError("calibration target " + std::to_string(target) +
                                   " unreachable; achievable maximum is " + std::to_string(best) +
                                   " spikes");
            hi = ceiling;
            break;
        }
    }

    const double low = lower_edge(params, window, dt, target, floor_current, hi, resolution);
    double high      = hi;
    if (dc_spike_count(params, hi, window, dt) > target)
        high = lower_edge(params, window, dt, target + 1, low, hi, resolution);

    const double mid = std::round(5.0 * (low + high)) / 10.0; // midpoint on the 0.1 pA grid
    if (dc_spike_count(params, mid, window, dt) != target)
        throw NumericError("calibration could not find a current giving exactly " +
                           std::to_string(target) + " spikes (count skips this value)");
    return {mid, low, high};
}

} // namespace natcsnn
