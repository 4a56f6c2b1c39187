#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxonium/pumping.hpp"

namespace fluxonium {

// Preparation/readout imperfections folded into the trace as
// signal = offset + contrast * population.
struct SpamModel {
    double contrast = 0.8;
    double offset = 0.1;
    void validate() const;
};

struct TraceData {
    std::vector<double> times_us;
    std::vector<double> signal;
    std::string protocol;
    double flux = 0.5;
    uint64_t seed = 0;
    void validate() const;  // strictly increasing times, finite values
};

enum class DecayModel { Exponential, DampedCosine };

struct DecayFit {
    DecayModel model = DecayModel::Exponential;
    double amplitude = 0.0, offset = 0.0;
    double time_constant_us = 0.0;
    double frequency_hz = 0.0;  // damped cosine only
    double phase_rad = 0.0;     // damped cosine only
    double amplitude_err = 0.0, offset_err = 0.0, time_constant_err_us = 0.0;
    double frequency_err_hz = 0.0, phase_err_rad = 0.0;
    double rms_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool span_limited = false;  // fitted time constant exceeds the trace span
    std::string message;
};

TraceData simulate_t1(double t1_ms, const SpamModel& spam,
                      const std::vector<double>& t_grid_us, double noise_sigma,
                      uint64_t seed);

// signal = offset + contrast * exp(-t/T2) * cos(2 pi detuning t + phi0)
TraceData simulate_ramsey(double t2_ms, double detuning_khz, const SpamModel& spam,
                          const std::vector<double>& t_grid_us, double noise_sigma,
                          uint64_t seed, double phi0_rad = 0.0);

// Least-squares fit of amplitude * exp(-t/tau) (+ cosine factor) + offset.
// Non-convergence is reported in the result, not thrown; rms_residual always
// carries the final residual scale.
DecayFit fit_decay(const TraceData& trace, DecayModel model);

struct PulseCalibration {
    std::vector<double> amplitudes;      // relative to a calibrated pi/2 pulse
    std::vector<double> signal_std;      // spread across the pulse train
    std::vector<int> pulse_counts;
    int optimal_index = -1;
    double optimal_amplitude = 0.0;
    bool bracketed = false;  // false when the minimum sits on the grid edge
};

// Repeats trains of n pulses (n = 0, 12, ..., 120), each pulse rotating by
// (pi/2) * amplitude, and picks the amplitude whose signal spread across the
// train is smallest.
PulseCalibration calibrate_pulse_train(const std::vector<double>& amplitude_grid,
                                       const SpamModel& spam = SpamModel{},
                                       double noise_sigma = 0.0, uint64_t seed = 0);

struct T102ProtocolResult {
    std::vector<double> durations_us;
    std::vector<double> p0_measured;
    DecayFit saturation_fit;
    T102Estimate estimate;
};

// End-to-end extraction: drive the 1-2 transition for each duration, fit the
// exponential saturation of p0, convert the effective rate into T1^02 with
// propagated uncertainty. Estimates falling inside the cooling-analysis blind
// window are demoted to lower bounds. t1_12_ms, when supplied, guards the
// protocol's validity (T1^01 must exceed it twentyfold).
T102ProtocolResult run_t102_protocol(const QutritRates& rates,
                                     const std::vector<double>& duration_grid_us,
                                     double noise_sigma, uint64_t seed,
                                     double blind_precision = 0.01,
                                     double t1_12_ms = 0.0);

}  // namespace fluxonium
