#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fluxonium {

struct NoiseEnvironment {
    double temperature = 0.025;  // K
    double tan_delta_c = 1.5e-6; // dielectric loss tangent
    double x_qp = 5e-9;          // quasiparticle density per Cooper pair
    double gap_delta = 180.0;    // superconducting gap, ueV
    double kappa = 20.2;         // cavity linewidth /2pi, MHz
    double chi01 = 1.3;          // dispersive shift /2pi, MHz
    double n_th = 4e-4;          // mean thermal photon number
    double g_coupling = 40.0;    // qubit-cavity coupling /2pi, MHz (informational)

    void validate() const;
};

// All rates return 1/ms. Energies are E/h in GHz, temperature in kelvin,
// gap in ueV, cavity parameters in linear-frequency MHz.

// Capacitive loss: 16 pi (E_C/h) |n_ij|^2 tan_delta (1 + coth(h f / 2 kB T)).
// temperature = 0 is the coth -> 1 limit.
double dielectric_rate(double e_c, double n_elem, double f_ij, double temperature,
                       double tan_delta);

// Quasiparticle tunneling across the small junction:
// (16 E_J / pi hbar) sqrt(2 Delta / h f) |<j|sin((phi-phi_e)/2)|i>|^2 x_qp.
double qp_junction_rate(double e_j, double gap_delta, double f_ij,
                        double halfsin_elem, double x_qp);

// Quasiparticle tunneling in the array junctions; same form with E_L and
// |<1|phi/2|0>|^2.
double qp_array_rate(double e_l, double gap_delta, double f01,
                     double half_phi_elem, double x_qp);

// Dephasing from cavity thermal photons: n_th kappa chi^2 / (kappa^2 + chi^2)
// in angular units.
double thermal_photon_dephasing(double n_th, double kappa, double chi01);

// Linear inversions of the two loss parameters from a measured time.
double n_th_from_dephasing(double t_phi_ms, double kappa, double chi01);
double x_qp_from_t1(double rate_per_unit_xqp, double t1_ms);

// Upward rate from detailed balance: [e^-x / (1 + e^-x)] Gamma_down with
// x = h f / kB T. temperature = 0 returns 0.
double thermal_excitation_rate(double downward_rate, double f_ij, double temperature);

enum class ChannelKind { Relaxation, Dephasing };

struct RateChannel {
    std::string name;
    double rate_per_ms = 0.0;
    ChannelKind kind = ChannelKind::Relaxation;
    // rate per unit x_qp for quasiparticle channels, used for inverse bounds
    double rate_per_unit_xqp = 0.0;
};

struct XqpBound {
    std::string channel;
    double x_qp_max = 0.0;
};

struct RateBudget {
    std::vector<RateChannel> channels;
    double t1_ms = 0.0;
    bool t1_unbounded = false;
    double t_phi_ms = 0.0;
    bool t_phi_unbounded = false;
    double t2_ms = 0.0;
    std::vector<XqpBound> xqp_bounds;
};

// T1 = 1/sum(relaxation), T_phi = 1/sum(dephasing), 1/T2 = 1/(2 T1) + 1/T_phi.
// When t1_measured_ms is given, each quasiparticle channel also reports the
// x_qp that alone would saturate 1/t1_measured.
RateBudget compose_budget(const std::vector<RateChannel>& channels,
                          std::optional<double> t1_measured_ms = std::nullopt);

// 1 / (1/T2 - 1/(2 T1)), the pure-dephasing time implied by measured T1, T2.
double pure_dephasing_time(double t1_ms, double t2_ms);

}  // namespace fluxonium
