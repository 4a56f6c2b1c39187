#pragma once

#include <array>
#include <vector>

namespace fluxonium {

// Three-level rate model under a saturating 1-2 drive. Gammas are 1/ms,
// omega_12 is 1/us (it is orders of magnitude faster than the decay rates).
struct QutritRates {
    double gamma_01 = 1.0;  // total qubit rate, down plus up
    double p0_th = 0.58;    // thermal equilibrium population of |0>
    double p1_th = 0.42;
    double gamma_02 = 0.0;  // direct |2> -> |0> rate
    double omega_12 = 1.0;  // incoherent drive rate equalizing p1, p2

    double gamma_down() const { return p0_th * gamma_01; }
    double gamma_up() const { return p1_th * gamma_01; }

    void validate() const;
    // drive must dominate every decay rate for the analytic reduction to hold
    void assert_saturating() const;
};

struct PopulationTrace {
    std::vector<double> times;  // us
    std::vector<double> p0, p1, p2;
};

// Fixed-step RK4 integration of
//   dp0/dt = -G_up p0 + G_down p1 + G_02 p2
//   dp1/dt = +G_up p0 - G_down p1 + W (p2 - p1)
//   dp2/dt = -G_02 p2 - W (p2 - p1)
// from t = 0 through the (ascending, us) grid. Step = min(1/(20 W), span/2000).
PopulationTrace simulate_qutrit(const QutritRates& rates,
                                const std::array<double, 3>& initial,
                                const std::vector<double>& t_grid_us);

// Saturation-regime relaxation rate of p0: G_up + (G_down + G_02)/2, in 1/ms.
double effective_rate(const QutritRates& rates);

// Steady-state p0 under a saturating drive, as a function of r = G_02/G_01.
double cooling_saturation_p0(double p0_th, double r);

struct T102Estimate {
    enum class Kind { Value, Unbounded, LowerBound } kind = Kind::Value;
    double t102_ms = 0.0;    // value, or the lower bound; +inf when unbounded
    double stderr_ms = 0.0;  // propagated from the T_eff uncertainty when known
};

// T1^02 = T1^01 T_eff / (2 T1^01 - (2 - p0_th) T_eff). A nonpositive
// denominator means the decay is indistinguishable from G_02 = 0 at this
// measurement precision, reported as Unbounded.
T102Estimate invert_t102(double t_eff_ms, double t1_01_ms, double p0_th,
                         double t_eff_stderr_ms = 0.0);

struct CoolingAnalysis {
    double p0_heat_limit = 0.0;    // saturation value as T1^02 -> infinity
    double blind_center_r = 0.0;   // r = T1^01/T1^02 where saturation equals p0_th
    double r_low = 0.0;            // blind window in r
    double r_high = 0.0;
    double t102_low_ms = 0.0;      // same window expressed in T1^02
    double t102_high_ms = 0.0;
    std::vector<std::pair<double, double>> curve;  // (t102_ms, p0_saturation)
};

// Saturation curve p0(inf) vs T1^02 plus the window where the shift from
// p0_th is smaller than the stated measurement precision.
CoolingAnalysis cooling_analysis(double t1_01_ms, double p0_th, double precision);

// Folds the thermally activated 2 -> 3 -> 0 escape into an effective direct
// rate, for modeling the apparent sweet-spot saturation.
double gamma_02_with_escape(double gamma_02, double gamma_23_down, double f23_ghz,
                            double temperature_k);

}  // namespace fluxonium
