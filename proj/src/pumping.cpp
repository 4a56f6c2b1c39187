#include "fluxonium/pumping.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fluxonium/circuit.hpp"
#include "fluxonium/csv.hpp"
#include "fluxonium/dissipation.hpp"

namespace fluxonium {

void QutritRates::validate() const {
    if (!(gamma_01 >= 0.0) || !(gamma_02 >= 0.0) || !(omega_12 >= 0.0)) {
        throw std::invalid_argument("rates must be nonnegative and finite");
    }
    if (p0_th < 0.0 || p0_th > 1.0 || p1_th < 0.0 || p1_th > 1.0) {
        throw std::invalid_argument("thermal populations must lie in [0, 1]");
    }
    if (std::abs(p0_th + p1_th - 1.0) > 1e-12) {
        throw std::invalid_argument("p0_th + p1_th must equal 1");
    }
}

void QutritRates::assert_saturating() const {
    validate();
    const double omega_per_ms = omega_12 * 1e3;
    const double fastest_decay = std::max(gamma_01, gamma_02);
    if (fastest_decay <= 0.0) return;
    const double ratio = omega_per_ms / fastest_decay;
    if (ratio <= 50.0) {
        throw std::invalid_argument(
            "drive is not saturating: omega_12/gamma = " + csv::format_double(ratio) +
            " (need > 50)");
    }
}

PopulationTrace simulate_qutrit(const QutritRates& rates,
                                const std::array<double, 3>& initial,
                                const std::vector<double>& t_grid_us) {
    rates.validate();
    if (t_grid_us.empty()) throw std::invalid_argument("empty time grid");
    double prev = -1.0;
    for (double t : t_grid_us) {
        if (!(t >= 0.0) || t <= prev) {
            throw std::invalid_argument("time grid must be nonnegative and strictly increasing");
        }
        prev = t;
    }
    const double sum0 = initial[0] + initial[1] + initial[2];
    if (std::abs(sum0 - 1.0) > 1e-9) {
        throw std::invalid_argument("initial populations must sum to 1");
    }
    for (double p : initial) {
        if (p < 0.0 || p > 1.0) {
            throw std::invalid_argument("initial populations must lie in [0, 1]");
        }
    }

    // per-us rates
    const double gu = rates.gamma_up() * 1e-3;
    const double gd = rates.gamma_down() * 1e-3;
    const double g02 = rates.gamma_02 * 1e-3;
    const double w = rates.omega_12;

    const double span = t_grid_us.back();
    double h = span > 0.0 ? span / 2000.0 : 1.0;
    if (w > 0.0) h = std::min(h, 1.0 / (20.0 * w));
    const double total_steps = span > 0.0 ? span / h : 0.0;
    if (total_steps > 5e7) {
        throw NumericError("step-size failure: omega_12 * span = " +
                           csv::format_double(w * span) +
                           " forces " + csv::format_double(total_steps) + " steps");
    }

    auto deriv = [&](const std::array<double, 3>& p) {
        return std::array<double, 3>{
            -gu * p[0] + gd * p[1] + g02 * p[2],
            gu * p[0] - gd * p[1] + w * (p[2] - p[1]),
            -g02 * p[2] - w * (p[2] - p[1]),
        };
    };
    auto axpy = [](const std::array<double, 3>& p, double a,
                   const std::array<double, 3>& d) {
        return std::array<double, 3>{p[0] + a * d[0], p[1] + a * d[1], p[2] + a * d[2]};
    };

    PopulationTrace trace;
    trace.times = t_grid_us;
    std::array<double, 3> p = initial;
    double t = 0.0;
    for (double target : t_grid_us) {
        const double dt = target - t;
        if (dt > 0.0) {
            const int n_steps = std::max(1, static_cast<int>(std::ceil(dt / h)));
            const double step = dt / n_steps;
            for (int s = 0; s < n_steps; ++s) {
                const auto k1 = deriv(p);
                const auto k2 = deriv(axpy(p, step / 2.0, k1));
                const auto k3 = deriv(axpy(p, step / 2.0, k2));
                const auto k4 = deriv(axpy(p, step, k3));
                for (int i = 0; i < 3; ++i) {
                    p[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            t = target;
        }
        trace.p0.push_back(p[0]);
        trace.p1.push_back(p[1]);
        trace.p2.push_back(p[2]);
    }
    return trace;
}

double effective_rate(const QutritRates& rates) {
    rates.validate();
    return rates.gamma_up() + (rates.gamma_down() + rates.gamma_02) / 2.0;
}

double cooling_saturation_p0(double p0_th, double r) {
    if (p0_th < 0.0 || p0_th > 1.0) throw std::invalid_argument("p0_th must lie in [0, 1]");
    if (r < 0.0) throw std::invalid_argument("rate ratio must be nonnegative");
    return (p0_th + r) / (2.0 - p0_th + r);
}

T102Estimate invert_t102(double t_eff_ms, double t1_01_ms, double p0_th,
                         double t_eff_stderr_ms) {
    if (t_eff_ms <= 0.0 || t1_01_ms <= 0.0) {
        throw std::invalid_argument("times must be positive");
    }
    if (p0_th < 0.0 || p0_th > 1.0) throw std::invalid_argument("p0_th must lie in [0, 1]");

    T102Estimate est;
    const double denom = 2.0 * t1_01_ms - (2.0 - p0_th) * t_eff_ms;
    // a T_eff within roundoff of the no-decay ceiling 2 T1/(2 - p0_th) carries
    // no information about the decay rate
    if (denom <= 1e-9 * 2.0 * t1_01_ms) {
        est.kind = T102Estimate::Kind::Unbounded;
        est.t102_ms = std::numeric_limits<double>::infinity();
        return est;
    }
    est.kind = T102Estimate::Kind::Value;
    est.t102_ms = t1_01_ms * t_eff_ms / denom;
    // d(T102)/d(Teff) = 2 T1^2 / denom^2
    est.stderr_ms =
        t_eff_stderr_ms * 2.0 * t1_01_ms * t1_01_ms / (denom * denom);
    return est;
}

CoolingAnalysis cooling_analysis(double t1_01_ms, double p0_th, double precision) {
    if (t1_01_ms <= 0.0) throw std::invalid_argument("t1_01 must be positive");
    if (precision <= 0.0) throw std::invalid_argument("precision must be positive");
    if (p0_th <= 0.0 || p0_th >= 1.0) {
        throw std::invalid_argument("p0_th must lie strictly inside (0, 1)");
    }

    CoolingAnalysis out;
    out.p0_heat_limit = cooling_saturation_p0(p0_th, 0.0);
    out.blind_center_r = p0_th;  // where the saturation value equals p0_th

    // saturation = y solved for r: r = (2y - p0_th(1 + y)) / (1 - y)
    auto r_for = [&](double y) { return (2.0 * y - p0_th * (1.0 + y)) / (1.0 - y); };
    out.r_low = std::max(0.0, r_for(p0_th - precision));
    out.r_high = r_for(p0_th + precision);
    out.t102_low_ms = t1_01_ms / out.r_high;
    out.t102_high_ms =
        out.r_low > 0.0 ? t1_01_ms / out.r_low : std::numeric_limits<double>::infinity();

    // curve sampled on a logarithmic T1^02 grid around T1^01
    for (int i = 0; i <= 80; ++i) {
        const double t102 = t1_01_ms * std::pow(10.0, -2.0 + 4.0 * i / 80.0);
        out.curve.emplace_back(t102, cooling_saturation_p0(p0_th, t1_01_ms / t102));
    }
    return out;
}

double gamma_02_with_escape(double gamma_02, double gamma_23_down, double f23_ghz,
                            double temperature_k) {
    if (gamma_02 < 0.0) throw std::invalid_argument("gamma_02 must be nonnegative");
    return gamma_02 + thermal_excitation_rate(gamma_23_down, f23_ghz, temperature_k);
}

}  // namespace fluxonium
