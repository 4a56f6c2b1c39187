#include "fluxonium/dissipation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fluxonium/units.hpp"

namespace fluxonium {

void NoiseEnvironment::validate() const {
    const double fields[] = {temperature, tan_delta_c, x_qp,  gap_delta,
                             kappa,       chi01,       n_th,  g_coupling};
    for (double v : fields) {
        if (!std::isfinite(v) || v < 0.0) {
            throw std::invalid_argument("noise environment fields must be finite and nonnegative");
        }
    }
}

double dielectric_rate(double e_c, double n_elem, double f_ij, double temperature,
                       double tan_delta) {
    if (f_ij <= 0.0) throw std::invalid_argument("transition frequency must be positive");
    if (tan_delta < 0.0) throw std::invalid_argument("tan_delta must be nonnegative");
    if (temperature < 0.0) throw std::invalid_argument("temperature must be nonnegative");
    double thermal_factor = 2.0;  // T -> 0 limit of 1 + coth
    if (temperature > 0.0) {
        const double x = units::thermal_exponent(f_ij, temperature) / 2.0;
        thermal_factor = 1.0 + 1.0 / std::tanh(x);
    }
    const double rate_per_s =
        16.0 * M_PI * (e_c * 1e9) * n_elem * n_elem * tan_delta * thermal_factor;
    return units::per_second_to_per_ms(rate_per_s);
}

namespace {

// (16 E / pi hbar) sqrt(2 Delta / h f) |elem|^2 x_qp, with E/h in GHz. The
// prefactor reduces to 32 * (E/h in Hz).
double qp_rate(double e_ghz, double gap_delta_uev, double f_ij, double elem,
               double x_qp) {
    if (f_ij <= 0.0) throw std::invalid_argument("transition frequency must be positive");
    if (gap_delta_uev <= 0.0) throw std::invalid_argument("gap must be positive");
    if (x_qp < 0.0) throw std::invalid_argument("x_qp must be nonnegative");
    const double ratio =
        2.0 * units::uev_to_joule(gap_delta_uev) / units::ghz_to_joule(f_ij);
    const double rate_per_s = 32.0 * (e_ghz * 1e9) * std::sqrt(ratio) * elem * elem * x_qp;
    return units::per_second_to_per_ms(rate_per_s);
}

}  // namespace

double qp_junction_rate(double e_j, double gap_delta, double f_ij,
                        double halfsin_elem, double x_qp) {
    return qp_rate(e_j, gap_delta, f_ij, halfsin_elem, x_qp);
}

double qp_array_rate(double e_l, double gap_delta, double f01,
                     double half_phi_elem, double x_qp) {
    return qp_rate(e_l, gap_delta, f01, half_phi_elem, x_qp);
}

double thermal_photon_dephasing(double n_th, double kappa, double chi01) {
    if (n_th < 0.0 || kappa < 0.0 || chi01 < 0.0) {
        throw std::invalid_argument("cavity parameters must be nonnegative");
    }
    const double kappa_ang = units::mhz_to_angular(kappa);
    const double chi_ang = units::mhz_to_angular(chi01);
    const double denom = kappa_ang * kappa_ang + chi_ang * chi_ang;
    if (denom == 0.0) return 0.0;
    const double rate_per_s = n_th * kappa_ang * chi_ang * chi_ang / denom;
    return units::per_second_to_per_ms(rate_per_s);
}

double n_th_from_dephasing(double t_phi_ms, double kappa, double chi01) {
    if (t_phi_ms <= 0.0) throw std::invalid_argument("t_phi must be positive");
    const double per_unit = thermal_photon_dephasing(1.0, kappa, chi01);
    if (per_unit == 0.0) throw std::invalid_argument("no cavity: n_th unconstrained");
    return (1.0 / t_phi_ms) / per_unit;
}

double x_qp_from_t1(double rate_per_unit_xqp, double t1_ms) {
    if (rate_per_unit_xqp <= 0.0) {
        throw std::invalid_argument("rate per unit x_qp must be positive");
    }
    if (t1_ms <= 0.0) throw std::invalid_argument("t1 must be positive");
    return (1.0 / t1_ms) / rate_per_unit_xqp;
}

double thermal_excitation_rate(double downward_rate, double f_ij, double temperature) {
    if (downward_rate < 0.0) throw std::invalid_argument("downward rate must be nonnegative");
    if (f_ij <= 0.0) throw std::invalid_argument("transition frequency must be positive");
    if (temperature < 0.0) throw std::invalid_argument("temperature must be nonnegative");
    if (temperature == 0.0) return 0.0;
    const double boltzmann = std::exp(-units::thermal_exponent(f_ij, temperature));
    return downward_rate * boltzmann / (1.0 + boltzmann);
}

RateBudget compose_budget(const std::vector<RateChannel>& channels,
                          std::optional<double> t1_measured_ms) {
    RateBudget budget;
    budget.channels = channels;
    double relax = 0.0, dephase = 0.0;
    for (const auto& ch : channels) {
        if (!std::isfinite(ch.rate_per_ms) || ch.rate_per_ms < 0.0) {
            throw std::invalid_argument("channel '" + ch.name +
                                        "' has a negative or non-finite rate");
        }
        (ch.kind == ChannelKind::Relaxation ? relax : dephase) += ch.rate_per_ms;
    }

    const double inf = std::numeric_limits<double>::infinity();
    budget.t1_unbounded = (relax == 0.0);
    budget.t1_ms = budget.t1_unbounded ? inf : 1.0 / relax;
    budget.t_phi_unbounded = (dephase == 0.0);
    budget.t_phi_ms = budget.t_phi_unbounded ? inf : 1.0 / dephase;

    const double inv_t2 = relax / 2.0 + dephase;
    budget.t2_ms = (inv_t2 == 0.0) ? inf : 1.0 / inv_t2;

    if (t1_measured_ms) {
        if (*t1_measured_ms <= 0.0) {
            throw std::invalid_argument("measured t1 must be positive");
        }
        for (const auto& ch : channels) {
            if (ch.rate_per_unit_xqp > 0.0) {
                budget.xqp_bounds.push_back(
                    {ch.name, x_qp_from_t1(ch.rate_per_unit_xqp, *t1_measured_ms)});
            }
        }
    }
    return budget;
}

double pure_dephasing_time(double t1_ms, double t2_ms) {
    if (t1_ms <= 0.0 || t2_ms <= 0.0) {
        throw std::invalid_argument("t1 and t2 must be positive");
    }
    const double inv = 1.0 / t2_ms - 0.5 / t1_ms;
    if (inv <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / inv;
}

}  // namespace fluxonium
