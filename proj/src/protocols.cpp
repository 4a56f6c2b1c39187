#include "fluxonium/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "fluxonium/circuit.hpp"
#include "fluxonium/fitting.hpp"
#include "fluxonium/rng.hpp"

namespace fluxonium {

void SpamModel::validate() const {
    if (!std::isfinite(contrast) || !std::isfinite(offset)) {
        throw std::invalid_argument("spam parameters must be finite");
    }
    if (contrast <= 0.0) throw std::invalid_argument("contrast must be positive");
}

void TraceData::validate() const {
    if (times_us.empty()) throw std::invalid_argument("empty trace");
    if (times_us.size() != signal.size()) {
        throw std::invalid_argument("times and signal length mismatch");
    }
    for (size_t k = 0; k < times_us.size(); ++k) {
        if (!std::isfinite(times_us[k]) || !std::isfinite(signal[k])) {
            throw std::invalid_argument("non-finite trace entry");
        }
        if (k > 0 && times_us[k] <= times_us[k - 1]) {
            throw std::invalid_argument("times must be strictly increasing");
        }
    }
}

namespace {

void check_grid(const std::vector<double>& t_grid_us) {
    if (t_grid_us.empty()) throw std::invalid_argument("empty time grid");
    for (size_t k = 0; k < t_grid_us.size(); ++k) {
        if (!std::isfinite(t_grid_us[k]) || t_grid_us[k] < 0.0) {
            throw std::invalid_argument("time grid must be finite and non-negative");
        }
        if (k > 0 && t_grid_us[k] <= t_grid_us[k - 1]) {
            throw std::invalid_argument("time grid must be strictly increasing");
        }
    }
}

}  // namespace

TraceData simulate_t1(double t1_ms, const SpamModel& spam,
                      const std::vector<double>& t_grid_us, double noise_sigma,
                      uint64_t seed) {
    if (!(t1_ms > 0.0)) throw std::invalid_argument("t1 must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    spam.validate();
    check_grid(t_grid_us);
    const double tau_us = 1e3 * t1_ms;
    Rng rng(seed);
    TraceData trace;
    trace.times_us = t_grid_us;
    trace.signal.reserve(t_grid_us.size());
    for (double t : t_grid_us) {
        double s = spam.offset + spam.contrast * std::exp(-t / tau_us);
        if (noise_sigma > 0.0) s += noise_sigma * rng.normal();
        trace.signal.push_back(s);
    }
    trace.protocol = "t1";
    trace.seed = seed;
    return trace;
}

TraceData simulate_ramsey(double t2_ms, double detuning_khz, const SpamModel& spam,
                          const std::vector<double>& t_grid_us, double noise_sigma,
                          uint64_t seed, double phi0_rad) {
    if (!(t2_ms > 0.0)) throw std::invalid_argument("t2 must be positive");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    if (!std::isfinite(detuning_khz) || !std::isfinite(phi0_rad)) {
        throw std::invalid_argument("detuning and phase must be finite");
    }
    spam.validate();
    check_grid(t_grid_us);
    const double tau_us = 1e3 * t2_ms;
    const double cycles_per_us = detuning_khz * 1e-3;
    Rng rng(seed);
    TraceData trace;
    trace.times_us = t_grid_us;
    trace.signal.reserve(t_grid_us.size());
    for (double t : t_grid_us) {
        double s = spam.offset + spam.contrast * std::exp(-t / tau_us) *
                                     std::cos(2.0 * M_PI * cycles_per_us * t + phi0_rad);
        if (noise_sigma > 0.0) s += noise_sigma * rng.normal();
        trace.signal.push_back(s);
    }
    trace.protocol = "ramsey";
    trace.seed = seed;
    return trace;
}

DecayFit fit_decay(const TraceData& trace, DecayModel model) {
    trace.validate();
    const int m = static_cast<int>(trace.times_us.size());
    if (m < 8) throw std::invalid_argument("decay fit needs at least 8 points");

    const auto& t = trace.times_us;
    const auto& s = trace.signal;
    const double span = t.back() - t.front();
    const double s_min = *std::min_element(s.begin(), s.end());
    const double s_max = *std::max_element(s.begin(), s.end());

    const int n_params = (model == DecayModel::Exponential) ? 3 : 5;
    Eigen::VectorXd init(n_params);
    if (model == DecayModel::Exponential) {
        const double offset0 = s.back();
        double amp0 = s.front() - offset0;
        if (amp0 == 0.0) amp0 = std::max(s_max - s_min, 1e-3);
        init << amp0, offset0, span / 3.0;
    } else {
        // coarse periodogram picks the dominant fringe frequency and phase
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= m;
        const double f_max = 0.5 * (m - 1) / span;
        const int n_freq = std::max(64, 4 * m);
        double best_f = f_max / n_freq, best_power = -1.0, best_phase = 0.0;
        for (int j = 1; j <= n_freq; ++j) {
            const double f = f_max * j / n_freq;
            std::complex<double> acc(0.0, 0.0);
            for (int k = 0; k < m; ++k) {
                acc += (s[k] - mean) *
                       std::exp(std::complex<double>(0.0, -2.0 * M_PI * f * t[k]));
            }
            const double power = std::norm(acc);
            if (power > best_power) {
                best_power = power;
                best_f = f;
                best_phase = std::arg(acc);
            }
        }
        init << 0.5 * (s_max - s_min), mean, span / 2.0, best_f, best_phase;
    }

    FitProblem problem;
    problem.residual = [&t, &s, m, model](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(m);
        for (int k = 0; k < m; ++k) {
            double v = p[0] * std::exp(-t[k] / p[2]) + p[1];
            if (model == DecayModel::DampedCosine) {
                v = p[0] * std::exp(-t[k] / p[2]) *
                        std::cos(2.0 * M_PI * p[3] * t[k] + p[4]) +
                    p[1];
            }
            r[k] = v - s[k];
        }
        return r;
    };
    problem.init = init;
    const double inf = std::numeric_limits<double>::infinity();
    problem.lower = Eigen::VectorXd::Constant(n_params, -inf);
    problem.upper = Eigen::VectorXd::Constant(n_params, inf);
    problem.lower[2] = 1e-9 * span;  // the time constant stays positive
    if (model == DecayModel::DampedCosine) problem.lower[3] = 0.0;
    // noiseless round trips should run down to roundoff, not stop at a cost
    // plateau; iterations stay cheap at this problem size
    problem.cost_tol = 1e-30;
    problem.max_iterations = 400;

    const FitResult res = nlls_fit(problem);

    DecayFit fit;
    fit.model = model;
    fit.amplitude = res.params[0];
    fit.offset = res.params[1];
    fit.time_constant_us = res.params[2];
    fit.amplitude_err = res.std_errors[0];
    fit.offset_err = res.std_errors[1];
    fit.time_constant_err_us = res.std_errors[2];
    if (model == DecayModel::DampedCosine) {
        fit.frequency_hz = res.params[3] * 1e6;  // cycles/us to Hz
        fit.phase_rad = res.params[4];
        fit.frequency_err_hz = res.std_errors[3] * 1e6;
        fit.phase_err_rad = res.std_errors[4];
    }
    fit.rms_residual = std::sqrt(res.cost / m);
    fit.iterations = res.iterations;
    fit.converged = res.converged;
    fit.span_limited = fit.time_constant_us > span;
    fit.message = res.message;
    if (!res.converged) {
        fit.message += " (rms residual " + std::to_string(fit.rms_residual) + ")";
    }
    return fit;
}

PulseCalibration calibrate_pulse_train(const std::vector<double>& amplitude_grid,
                                       const SpamModel& spam, double noise_sigma,
                                       uint64_t seed) {
    if (amplitude_grid.size() < 3) {
        throw std::invalid_argument("amplitude grid needs at least 3 points");
    }
    for (size_t k = 0; k < amplitude_grid.size(); ++k) {
        if (!std::isfinite(amplitude_grid[k]) || amplitude_grid[k] <= 0.0) {
            throw std::invalid_argument("amplitudes must be positive");
        }
        if (k > 0 && amplitude_grid[k] <= amplitude_grid[k - 1]) {
            throw std::invalid_argument("amplitude grid must be strictly increasing");
        }
    }
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    spam.validate();

    PulseCalibration cal;
    cal.amplitudes = amplitude_grid;
    for (int n = 0; n <= 120; n += 12) cal.pulse_counts.push_back(n);

    Rng root(seed);
    std::vector<double> train(cal.pulse_counts.size());
    for (size_t a = 0; a < amplitude_grid.size(); ++a) {
        Rng rng = root.child(a);
        for (size_t k = 0; k < cal.pulse_counts.size(); ++k) {
            // n rotations by (pi/2)*amplitude leave p1 = sin^2(n pi amplitude / 4)
            const double half_angle = cal.pulse_counts[k] * M_PI * amplitude_grid[a] / 4.0;
            const double p1 = std::sin(half_angle) * std::sin(half_angle);
            train[k] = spam.offset + spam.contrast * p1;
            if (noise_sigma > 0.0) train[k] += noise_sigma * rng.normal();
        }
        double mean = 0.0;
        for (double v : train) mean += v;
        mean /= static_cast<double>(train.size());
        double var = 0.0;
        for (double v : train) var += (v - mean) * (v - mean);
        var /= static_cast<double>(train.size());
        cal.signal_std.push_back(std::sqrt(var));
    }

    cal.optimal_index = static_cast<int>(
        std::min_element(cal.signal_std.begin(), cal.signal_std.end()) -
        cal.signal_std.begin());
    cal.optimal_amplitude = amplitude_grid[cal.optimal_index];
    cal.bracketed = cal.optimal_index > 0 &&
                    cal.optimal_index + 1 < static_cast<int>(amplitude_grid.size());
    return cal;
}

T102ProtocolResult run_t102_protocol(const QutritRates& rates,
                                     const std::vector<double>& duration_grid_us,
                                     double noise_sigma, uint64_t seed,
                                     double blind_precision, double t1_12_ms) {
    rates.validate();
    rates.assert_saturating();
    if (noise_sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
    check_grid(duration_grid_us);
    if (duration_grid_us.size() < 8) {
        throw std::invalid_argument("duration grid needs at least 8 points");
    }
    if (!(rates.gamma_01 > 0.0)) {
        throw std::invalid_argument("gamma_01 must be positive to anchor the inversion");
    }
    const double t1_01_ms = 1.0 / rates.gamma_01;
    if (t1_12_ms > 0.0 && t1_01_ms / t1_12_ms <= 20.0) {
        throw std::invalid_argument(
            "protocol needs T1^01 / T1^12 > 20 to separate the scales");
    }

    T102ProtocolResult out;
    out.durations_us = duration_grid_us;

    const std::array<double, 3> thermal{rates.p0_th, rates.p1_th, 0.0};
    const PopulationTrace trace = simulate_qutrit(rates, thermal, duration_grid_us);
    Rng rng(seed);
    out.p0_measured.reserve(trace.p0.size());
    for (double p : trace.p0) {
        out.p0_measured.push_back(noise_sigma > 0.0 ? p + noise_sigma * rng.normal() : p);
    }

    TraceData saturation;
    saturation.times_us = duration_grid_us;
    saturation.signal = out.p0_measured;
    saturation.protocol = "t102-saturation";
    saturation.seed = seed;
    out.saturation_fit = fit_decay(saturation, DecayModel::Exponential);
    if (!out.saturation_fit.converged) {
        throw NumericError("saturation fit failed: " + out.saturation_fit.message);
    }

    const CoolingAnalysis cooling =
        cooling_analysis(t1_01_ms, rates.p0_th, blind_precision);

    // a saturation level within the measurement precision of the thermal
    // population means the drive moved nothing visible: the trace is flat and
    // the fitted rate carries no information, so only the blind-window lower
    // edge survives
    const double saturation_level = out.saturation_fit.offset;
    if (std::abs(saturation_level - rates.p0_th) < blind_precision) {
        out.estimate.kind = T102Estimate::Kind::LowerBound;
        out.estimate.t102_ms = cooling.t102_low_ms;
        out.estimate.stderr_ms = 0.0;
        return out;
    }

    const double t_eff_ms = out.saturation_fit.time_constant_us * 1e-3;
    const double t_eff_err_ms = out.saturation_fit.time_constant_err_us * 1e-3;
    out.estimate = invert_t102(t_eff_ms, t1_01_ms, rates.p0_th, t_eff_err_ms);

    if (out.estimate.kind == T102Estimate::Kind::Value &&
        out.estimate.t102_ms >= cooling.t102_low_ms &&
        out.estimate.t102_ms <= cooling.t102_high_ms) {
        out.estimate.kind = T102Estimate::Kind::LowerBound;
        out.estimate.t102_ms = cooling.t102_low_ms;
    }
    return out;
}

}  // namespace fluxonium
