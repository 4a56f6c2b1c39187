#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "fluxonium/circuit.hpp"
#include "fluxonium/rng.hpp"

namespace fluxonium {

// Two-mode data where the modes cannot be told apart (single blob, overlapping
// blobs).
class NonIdentifiableError : public NumericError {
public:
    using NumericError::NumericError;
};

struct IQHistogram {
    int bins = 0;                 // per axis
    double i_min = 0.0, i_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    std::vector<double> counts;   // row-major, bins x bins
    double total = 0.0;

    static IQHistogram from_shots(const std::vector<std::pair<double, double>>& shots,
                                  int bins = 81);
    double bin_center_i(int ix) const;
    double bin_center_q(int iq) const;
};

struct BlobInit {
    std::array<double, 2> c0;  // (I, Q) of the blob labeled 0
    std::array<double, 2> c1;
};

struct ReadoutFit {
    std::array<double, 2> center0;  // (I, Q)
    std::array<double, 2> center1;
    double sigma = 0.0;             // shared width of both modes
    double a0 = 0.0, a1 = 0.0;      // amplitudes
    double p0 = 0.0, p1 = 0.0;      // populations from the amplitude ratio
    double blob_angle = 0.0;        // angle between the two centers seen from the origin
    bool low_population = false;    // one mode carries under 1% of the weight
};

// Projects the histogram onto its principal axis and least-squares fits
//   A0 exp(-(x-x0)^2/sigma^2) + A1 exp(-(x-x1)^2/sigma^2).
// Without init, blob 0 is the mode at the lower projected coordinate (axis
// oriented toward positive I); with init, labels follow the init centers.
// Throws NonIdentifiableError when only one mode is resolvable and no init
// says where the second one should sit.
ReadoutFit fit_double_gaussian(const IQHistogram& hist,
                               const std::optional<BlobInit>& init = std::nullopt);

// chi = kappa * tan(angle/2) / 2; the inverse of blob_angle_from_shift.
double dispersive_shift_from_angle(double blob_angle_rad, double kappa_mhz);
double blob_angle_from_shift(double chi_mhz, double kappa_mhz);

// T = (h f01 / kB) / ln(p0/(1-p0)); requires 0.5 < p0 < 1 (no inversion).
double temperature_from_populations(double p0, double f01_ghz);
double populations_from_temperature(double temperature_k, double f01_ghz);

// Inverse of averaging an exponential decay over the readout window:
// p0(0) = p0_inf + (p0_meas - p0_inf) / [(T1/T)(1 - exp(-T/T1))].
double deconvolve_readout_decay(double p0_measured, double p0_infinity,
                                double t1_ro_us, double t_ro_us);
// The forward map: time-average of the decaying population over [0, T].
double average_during_readout(double p0_at_zero, double p0_infinity,
                              double t1_ro_us, double t_ro_us);

// Initial qutrit populations after a measurement-based reset of the given
// fidelity.
std::array<double, 3> reset_populations(double fidelity);

// Deterministic synthetic shot generator used by the CLI demo and tests.
std::vector<std::pair<double, double>> simulate_shots(
    int n_shots, double p0, const std::array<double, 2>& center0,
    const std::array<double, 2>& center1, double sigma, Rng& rng);

}  // namespace fluxonium
