#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxonium {

// physical gate alphabet; pi rotations are played as two concatenated pi/2
// pulses, so they pick up noise twice
enum class Gate : int { I = 0, Xp, Xm, Yp, Ym, Xp2, Xm2, Yp2, Ym2 };

std::string gate_name(Gate g);
int gate_pulse_count(Gate g);  // 0 for I, 2 for pi gates, 1 for pi/2 gates

struct CliffordElement {
    int index = 0;
    Eigen::Matrix3i rotation;     // exact Bloch-sphere action
    Eigen::Matrix2cd unitary;     // product of the decomposition, up to phase
    std::vector<Gate> gates;      // minimal decomposition, lexicographic tie-break
    int gate_count = 0;           // non-identity gates in the decomposition
};

class CliffordTable {
public:
    static const CliffordTable& instance();

    int size() const { return static_cast<int>(elements_.size()); }
    const CliffordElement& element(int index) const;
    // compose(first, then): the element acting as "first, then then"
    int compose(int first, int then) const;
    int inverse(int index) const;
    int find(const Eigen::Matrix3i& rotation) const;  // -1 when absent
    int clifford_of_gate(Gate g) const;
    double average_gate_count() const;

private:
    CliffordTable();
    std::vector<CliffordElement> elements_;
    std::vector<int> rotation_lookup_;  // base-3 encoded rotation -> index
};

// per-pulse noise; all knobs compose (unitary overrotation, then amplitude
// damping, then dephasing, then depolarizing)
struct NoiseChannel {
    double depolarizing = 0.0;      // Bloch contraction weight in [0, 1]
    double overrotation = 0.0;      // relative pulse-angle error
    double amplitude_damping = 0.0; // decay probability per pulse in [0, 1]
    double dephasing = 0.0;         // off-diagonal suppression in [0, 1]

    static NoiseChannel none();
    static NoiseChannel make_depolarizing(double lambda);
    static NoiseChannel make_overrotation(double epsilon);
    static NoiseChannel make_amplitude_dephasing(double gamma, double lambda_phi);
    void validate() const;  // throws invalid_argument when not CPTP
};

struct SpamReadout {
    double prep_fidelity = 0.9;   // weight on the intended basis state
    double meas_scale = 0.875;    // measured = offset + scale * population
    double meas_offset = 0.0125;
    static SpamReadout ideal();
    void validate() const;
};

struct RBOutcome {
    std::vector<int> lengths;
    std::vector<double> mean;       // survival, or purity for the purity variant
    std::vector<double> std_error;  // standard error of the mean
    int n_random = 0;
    bool purity = false;
    std::optional<int> interleaved_clifford;
    uint64_t seed = 0;
};

// density-matrix Monte Carlo: m random Cliffords (optionally with a fixed
// Clifford interleaved), recovery gate, survival of the prepared state
RBOutcome run_rb(const std::vector<int>& lengths, int n_random,
                 const NoiseChannel& noise, const SpamReadout& spam, uint64_t seed,
                 std::optional<int> interleaved_clifford = std::nullopt);

// purity benchmarking: no recovery gate, tr(rho^2) per sequence
RBOutcome run_pb(const std::vector<int>& lengths, int n_random,
                 const NoiseChannel& noise, const SpamReadout& spam, uint64_t seed,
                 double shot_noise_sigma = 0.0);

struct RBFit {
    double a = 0.0, b = 0.0, p = 1.0;
    double a_err = 0.0, b_err = 0.0, p_err = 0.0;
    double r_cliff = 0.0, r_cliff_err = 0.0;
    double avg_fidelity = 1.0;  // 1 - r_cliff / average gates per Clifford
};

struct PBFit {
    double a = 0.0, b = 0.0, u = 1.0;
    double a_err = 0.0, b_err = 0.0, u_err = 0.0;
    double r_dec_cliff = 0.0, r_dec_cliff_err = 0.0;
    double r_dec_gate = 0.0;
};

// survival = A + B p^m; rejects fitted p outside (0, 1]
RBFit fit_rb(const RBOutcome& outcome);
// purity = A' + B' u^(m-1); r_dec_cliff = (1 - sqrt(u))/2
PBFit fit_pb(const RBOutcome& outcome);

// r_gate = (1 - p_interleaved/p_reference)/2
double interleaved_error(const RBFit& reference, const RBFit& interleaved);

// expected per-Clifford depolarizing parameter: mean over the table of
// (1-lambda)^pulses, the analytic counterpart of a run_rb fit
double depolarizing_clifford_p(double lambda);

}  // namespace fluxonium
