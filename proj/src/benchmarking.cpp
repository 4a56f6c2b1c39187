#include "fluxonium/benchmarking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "fluxonium/circuit.hpp"
#include "fluxonium/fitting.hpp"
#include "fluxonium/rng.hpp"

namespace fluxonium {

namespace {

using cd = std::complex<double>;

struct AxisAngle {
    int axis;      // 0 = x, 1 = y
    double angle;  // radians
};

AxisAngle gate_axis_angle(Gate g) {
    switch (g) {
        case Gate::Xp: return {0, M_PI};
        case Gate::Xm: return {0, -M_PI};
        case Gate::Yp: return {1, M_PI};
        case Gate::Ym: return {1, -M_PI};
        case Gate::Xp2: return {0, M_PI / 2.0};
        case Gate::Xm2: return {0, -M_PI / 2.0};
        case Gate::Yp2: return {1, M_PI / 2.0};
        case Gate::Ym2: return {1, -M_PI / 2.0};
        case Gate::I: return {0, 0.0};
    }
    throw std::logic_error("unreachable gate");
}

Eigen::Matrix3i gate_rotation(Gate g) {
    const AxisAngle aa = gate_axis_angle(g);
    const int c = static_cast<int>(std::lround(std::cos(aa.angle)));
    const int s = static_cast<int>(std::lround(std::sin(aa.angle)));
    Eigen::Matrix3i r = Eigen::Matrix3i::Identity();
    if (g == Gate::I) return r;
    if (aa.axis == 0) {
        r << 1, 0, 0, 0, c, -s, 0, s, c;
    } else {
        r << c, 0, s, 0, 1, 0, -s, 0, c;
    }
    return r;
}

Eigen::Matrix2cd rotation_unitary(int axis, double angle) {
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    Eigen::Matrix2cd u;
    if (axis == 0) {
        u << cd(c, 0), cd(0, -s), cd(0, -s), cd(c, 0);
    } else {
        u << cd(c, 0), cd(-s, 0), cd(s, 0), cd(c, 0);
    }
    return u;
}

Eigen::Matrix2cd gate_unitary(Gate g) {
    if (g == Gate::I) return Eigen::Matrix2cd::Identity();
    const AxisAngle aa = gate_axis_angle(g);
    return rotation_unitary(aa.axis, aa.angle);
}

int encode_rotation(const Eigen::Matrix3i& r) {
    int key = 0, weight = 1;
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            key += (r(row, col) + 1) * weight;
            weight *= 3;
        }
    }
    return key;
}

// the half pulses actually played for each decomposition gate
void append_pulses(Gate g, std::vector<Gate>& pulses) {
    switch (g) {
        case Gate::I: return;
        case Gate::Xp: pulses.push_back(Gate::Xp2); pulses.push_back(Gate::Xp2); return;
        case Gate::Xm: pulses.push_back(Gate::Xm2); pulses.push_back(Gate::Xm2); return;
        case Gate::Yp: pulses.push_back(Gate::Yp2); pulses.push_back(Gate::Yp2); return;
        case Gate::Ym: pulses.push_back(Gate::Ym2); pulses.push_back(Gate::Ym2); return;
        default: pulses.push_back(g); return;
    }
}

}  // namespace

std::string gate_name(Gate g) {
    switch (g) {
        case Gate::I: return "I";
        case Gate::Xp: return "X";
        case Gate::Xm: return "-X";
        case Gate::Yp: return "Y";
        case Gate::Ym: return "-Y";
        case Gate::Xp2: return "X/2";
        case Gate::Xm2: return "-X/2";
        case Gate::Yp2: return "Y/2";
        case Gate::Ym2: return "-Y/2";
    }
    throw std::logic_error("unreachable gate");
}

int gate_pulse_count(Gate g) {
    switch (g) {
        case Gate::I: return 0;
        case Gate::Xp:
        case Gate::Xm:
        case Gate::Yp:
        case Gate::Ym: return 2;
        default: return 1;
    }
}

CliffordTable::CliffordTable() : rotation_lookup_(19683, -1) {
    const Gate generators[] = {Gate::Xp, Gate::Xm, Gate::Yp, Gate::Ym,
                               Gate::Xp2, Gate::Xm2, Gate::Yp2, Gate::Ym2};

    CliffordElement identity;
    identity.index = 0;
    identity.rotation = Eigen::Matrix3i::Identity();
    identity.unitary = Eigen::Matrix2cd::Identity();
    identity.gates = {};
    identity.gate_count = 0;
    elements_.push_back(identity);
    rotation_lookup_[encode_rotation(identity.rotation)] = 0;

    // breadth-first over generator strings; generators expanded in enum order
    // so the first string reaching a rotation is the shortest and, among
    // equals, lexicographically first in application order
    std::deque<int> frontier{0};
    while (!frontier.empty()) {
        const int parent = frontier.front();
        frontier.pop_front();
        for (Gate g : generators) {
            const Eigen::Matrix3i rot = gate_rotation(g) * elements_[parent].rotation;
            const int key = encode_rotation(rot);
            if (rotation_lookup_[key] >= 0) continue;
            CliffordElement elem;
            elem.index = static_cast<int>(elements_.size());
            elem.rotation = rot;
            elem.unitary = gate_unitary(g) * elements_[parent].unitary;
            elem.gates = elements_[parent].gates;
            elem.gates.push_back(g);
            elem.gate_count = static_cast<int>(elem.gates.size());
            rotation_lookup_[key] = elem.index;
            elements_.push_back(elem);
            frontier.push_back(elem.index);
        }
    }
    if (elements_.size() != 24) {
        throw std::logic_error("clifford table construction found " +
                               std::to_string(elements_.size()) + " elements");
    }
    // the identity Clifford is played as the (uncounted) identity gate
    elements_[0].gates = {Gate::I};
}

const CliffordTable& CliffordTable::instance() {
    static const CliffordTable table;
    return table;
}

const CliffordElement& CliffordTable::element(int index) const {
    if (index < 0 || index >= size()) {
        throw std::out_of_range("clifford index out of range");
    }
    return elements_[index];
}

int CliffordTable::find(const Eigen::Matrix3i& rotation) const {
    const int key = encode_rotation(rotation);
    if (key < 0 || key >= static_cast<int>(rotation_lookup_.size())) return -1;
    return rotation_lookup_[key];
}

int CliffordTable::compose(int first, int then) const {
    const Eigen::Matrix3i rot = element(then).rotation * element(first).rotation;
    return find(rot);
}

int CliffordTable::inverse(int index) const {
    return find(element(index).rotation.transpose());
}

int CliffordTable::clifford_of_gate(Gate g) const { return find(gate_rotation(g)); }

double CliffordTable::average_gate_count() const {
    double total = 0.0;
    for (const auto& e : elements_) total += e.gate_count;
    return total / static_cast<double>(elements_.size());
}

NoiseChannel NoiseChannel::none() { return NoiseChannel{}; }

NoiseChannel NoiseChannel::make_depolarizing(double lambda) {
    NoiseChannel n;
    n.depolarizing = lambda;
    n.validate();
    return n;
}

NoiseChannel NoiseChannel::make_overrotation(double epsilon) {
    NoiseChannel n;
    n.overrotation = epsilon;
    n.validate();
    return n;
}

NoiseChannel NoiseChannel::make_amplitude_dephasing(double gamma, double lambda_phi) {
    NoiseChannel n;
    n.amplitude_damping = gamma;
    n.dephasing = lambda_phi;
    n.validate();
    return n;
}

void NoiseChannel::validate() const {
    if (!std::isfinite(depolarizing) || depolarizing < 0.0 || depolarizing > 1.0) {
        throw std::invalid_argument("depolarizing weight must lie in [0, 1]");
    }
    if (!std::isfinite(amplitude_damping) || amplitude_damping < 0.0 ||
        amplitude_damping > 1.0) {
        throw std::invalid_argument("amplitude damping probability must lie in [0, 1]");
    }
    if (!std::isfinite(dephasing) || dephasing < 0.0 || dephasing > 1.0) {
        throw std::invalid_argument("dephasing weight must lie in [0, 1]");
    }
    if (!std::isfinite(overrotation) || std::abs(overrotation) >= 1.0) {
        throw std::invalid_argument("overrotation must be a small relative error");
    }
}

SpamReadout SpamReadout::ideal() {
    SpamReadout s;
    s.prep_fidelity = 1.0;
    s.meas_scale = 1.0;
    s.meas_offset = 0.0;
    return s;
}

void SpamReadout::validate() const {
    if (!(prep_fidelity >= 0.0) || !(prep_fidelity <= 1.0)) {
        throw std::invalid_argument("prep fidelity must lie in [0, 1]");
    }
    if (!(meas_scale > 0.0) || !(meas_offset >= 0.0) ||
        meas_offset + meas_scale > 1.0 + 1e-12) {
        throw std::invalid_argument("measurement map must keep survival in [0, 1]");
    }
}

namespace {

void apply_pulse(Eigen::Matrix2cd& rho, Gate pulse, const NoiseChannel& noise) {
    const AxisAngle aa = gate_axis_angle(pulse);
    const Eigen::Matrix2cd u =
        rotation_unitary(aa.axis, aa.angle * (1.0 + noise.overrotation));
    rho = u * rho * u.adjoint();
    if (noise.amplitude_damping > 0.0) {
        const double g = noise.amplitude_damping;
        const double root = std::sqrt(1.0 - g);
        const cd r01 = rho(0, 1), r11 = rho(1, 1);
        rho(0, 0) += g * r11;
        rho(1, 1) = (1.0 - g) * r11;
        rho(0, 1) = root * r01;
        rho(1, 0) = std::conj(rho(0, 1));
    }
    if (noise.dephasing > 0.0) {
        rho(0, 1) *= 1.0 - noise.dephasing;
        rho(1, 0) *= 1.0 - noise.dephasing;
    }
    if (noise.depolarizing > 0.0) {
        const double l = noise.depolarizing;
        const cd trace = rho(0, 0) + rho(1, 1);
        rho = (1.0 - l) * rho;
        rho(0, 0) += 0.5 * l * trace;
        rho(1, 1) += 0.5 * l * trace;
    }
}

void apply_clifford(Eigen::Matrix2cd& rho, const CliffordElement& elem,
                    const NoiseChannel& noise) {
    std::vector<Gate> pulses;
    for (Gate g : elem.gates) append_pulses(g, pulses);
    for (Gate pulse : pulses) apply_pulse(rho, pulse, noise);
}

void check_rb_arguments(const std::vector<int>& lengths, int n_random,
                        const NoiseChannel& noise, const SpamReadout& spam) {
    if (lengths.size() < 2) throw std::invalid_argument("need at least 2 lengths");
    for (size_t k = 0; k < lengths.size(); ++k) {
        if (lengths[k] < 1) throw std::invalid_argument("sequence lengths must be >= 1");
        if (k > 0 && lengths[k] <= lengths[k - 1]) {
            throw std::invalid_argument("lengths must be strictly increasing");
        }
    }
    if (n_random < 1) throw std::invalid_argument("n_random must be >= 1");
    noise.validate();
    spam.validate();
}

}  // namespace

RBOutcome run_rb(const std::vector<int>& lengths, int n_random,
                 const NoiseChannel& noise, const SpamReadout& spam, uint64_t seed,
                 std::optional<int> interleaved_clifford) {
    check_rb_arguments(lengths, n_random, noise, spam);
    const CliffordTable& table = CliffordTable::instance();
    if (interleaved_clifford &&
        (*interleaved_clifford < 0 || *interleaved_clifford >= table.size())) {
        throw std::invalid_argument("interleaved clifford index out of range");
    }

    RBOutcome out;
    out.lengths = lengths;
    out.n_random = n_random;
    out.interleaved_clifford = interleaved_clifford;
    out.seed = seed;

    const Rng root(seed);
    Eigen::Matrix2cd rho0 = Eigen::Matrix2cd::Zero();
    rho0(0, 0) = 1.0 - spam.prep_fidelity;
    rho0(1, 1) = spam.prep_fidelity;

    for (size_t li = 0; li < lengths.size(); ++li) {
        const int m = lengths[li];
        std::vector<double> values(n_random);
        for (int s = 0; s < n_random; ++s) {
            Rng rng = root.child(li * static_cast<size_t>(n_random) + s);
            Eigen::Matrix2cd rho = rho0;
            Eigen::Matrix3i composite = Eigen::Matrix3i::Identity();
            for (int k = 0; k < m; ++k) {
                const int c = static_cast<int>(rng.below(24));
                apply_clifford(rho, table.element(c), noise);
                composite = table.element(c).rotation * composite;
                if (interleaved_clifford) {
                    const auto& gate = table.element(*interleaved_clifford);
                    apply_clifford(rho, gate, noise);
                    composite = gate.rotation * composite;
                }
            }
            const int recovery = table.inverse(table.find(composite));
            apply_clifford(rho, table.element(recovery), noise);
            values[s] = spam.meas_offset + spam.meas_scale * std::real(rho(1, 1));
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n_random;
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        out.mean.push_back(mean);
        out.std_error.push_back(
            n_random > 1 ? std::sqrt(var / (n_random * (n_random - 1.0))) : 0.0);
    }
    return out;
}

RBOutcome run_pb(const std::vector<int>& lengths, int n_random,
                 const NoiseChannel& noise, const SpamReadout& spam, uint64_t seed,
                 double shot_noise_sigma) {
    check_rb_arguments(lengths, n_random, noise, spam);
    if (shot_noise_sigma < 0.0) throw std::invalid_argument("shot noise must be >= 0");
    const CliffordTable& table = CliffordTable::instance();

    RBOutcome out;
    out.lengths = lengths;
    out.n_random = n_random;
    out.purity = true;
    out.seed = seed;

    const Rng root(seed);
    Eigen::Matrix2cd rho0 = Eigen::Matrix2cd::Zero();
    rho0(0, 0) = 1.0 - spam.prep_fidelity;
    rho0(1, 1) = spam.prep_fidelity;

    for (size_t li = 0; li < lengths.size(); ++li) {
        const int m = lengths[li];
        std::vector<double> values(n_random);
        for (int s = 0; s < n_random; ++s) {
            Rng rng = root.child(li * static_cast<size_t>(n_random) + s);
            Eigen::Matrix2cd rho = rho0;
            for (int k = 0; k < m; ++k) {
                apply_clifford(rho, table.element(static_cast<int>(rng.below(24))),
                               noise);
            }
            double purity = std::real((rho * rho).trace());
            if (shot_noise_sigma > 0.0) purity += shot_noise_sigma * rng.normal();
            values[s] = purity;
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n_random;
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        out.mean.push_back(mean);
        out.std_error.push_back(
            n_random > 1 ? std::sqrt(var / (n_random * (n_random - 1.0))) : 0.0);
    }
    return out;
}

namespace {

struct CurveFit {
    double a, b, p;
    double a_err, b_err, p_err;
};

CurveFit fit_decay_curve(const std::vector<int>& lengths,
                         const std::vector<double>& y, int shift) {
    if (lengths.size() < 4) {
        throw std::invalid_argument("decay fit needs at least 4 sequence lengths");
    }
    if (lengths.size() != y.size()) {
        throw std::invalid_argument("curve length mismatch");
    }
    const int m = static_cast<int>(y.size());

    double y_lo = y[0], y_hi = y[0];
    for (double v : y) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite curve value");
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
    }
    // a flat curve carries no decay information: p = 1 by convention
    if (y_hi - y_lo <= 1e-12 * std::max(1.0, std::abs(y_hi))) {
        double mean = 0.0;
        for (double v : y) mean += v;
        return {mean / m, 0.0, 1.0, 0.0, 0.0, 0.0};
    }

    // coarse scan over decay bases; (a, b) is linear at fixed p. Growth
    // bases above 1 are scanned too so that non-decaying data land on
    // their true p and get rejected below instead of stalling on the
    // degenerate a -> inf, b -> -inf, p -> 1 ridge.
    const double candidates[] = {0.3,     0.7,      0.9,    0.97,   0.99,
                                 0.997,   0.999,    0.9997, 0.9999, 0.99997,
                                 0.99999, 0.999999, 1.0001, 1.001,  1.01,
                                 1.1,     1.3,      2.0};
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::Vector3d init(0.0, 0.0, 0.999);
    for (double p : candidates) {
        double s11 = m, s1x = 0.0, sxx = 0.0, s1y = 0.0, sxy = 0.0;
        for (int k = 0; k < m; ++k) {
            const double x = std::pow(p, lengths[k] - shift);
            s1x += x;
            sxx += x * x;
            s1y += y[k];
            sxy += x * y[k];
        }
        const double det = s11 * sxx - s1x * s1x;
        if (std::abs(det) < 1e-30) continue;
        const double a = (sxx * s1y - s1x * sxy) / det;
        const double b = (s11 * sxy - s1x * s1y) / det;
        double cost = 0.0;
        for (int k = 0; k < m; ++k) {
            const double r = a + b * std::pow(p, lengths[k] - shift) - y[k];
            cost += r * r;
        }
        if (cost < best_cost) {
            best_cost = cost;
            init = Eigen::Vector3d(a, b, p);
        }
    }

    FitProblem problem;
    problem.residual = [&lengths, &y, m, shift](const Eigen::VectorXd& q) {
        Eigen::VectorXd r(m);
        for (int k = 0; k < m; ++k) {
            r[k] = q[0] + q[1] * std::pow(q[2], lengths[k] - shift) - y[k];
        }
        return r;
    };
    problem.init = init;
    const double inf = std::numeric_limits<double>::infinity();
    problem.lower = Eigen::Vector3d(-inf, -inf, 1e-9);
    problem.upper = Eigen::Vector3d(inf, inf, inf);
    problem.cost_tol = 1e-30;
    problem.max_iterations = 400;
    const FitResult res = nlls_fit(problem);
    if (!res.converged) {
        throw NumericError("benchmarking curve fit did not converge: " + res.message);
    }

    double p = res.params[2];
    if (!(p > 0.0) || p > 1.0 + 1e-9) {
        throw NumericError("fitted decay parameter " + std::to_string(p) +
                           " outside (0, 1]: fit rejected");
    }
    p = std::min(p, 1.0);
    return {res.params[0],     res.params[1],     p,
            res.std_errors[0], res.std_errors[1], res.std_errors[2]};
}

}  // namespace

RBFit fit_rb(const RBOutcome& outcome) {
    if (outcome.purity) {
        throw std::invalid_argument("fit_rb expects a survival curve, not purity");
    }
    const CurveFit c = fit_decay_curve(outcome.lengths, outcome.mean, 0);
    RBFit fit;
    fit.a = c.a;
    fit.b = c.b;
    fit.p = c.p;
    fit.a_err = c.a_err;
    fit.b_err = c.b_err;
    fit.p_err = c.p_err;
    fit.r_cliff = 0.5 * (1.0 - c.p);
    fit.r_cliff_err = 0.5 * c.p_err;
    fit.avg_fidelity = 1.0 - fit.r_cliff / CliffordTable::instance().average_gate_count();
    return fit;
}

PBFit fit_pb(const RBOutcome& outcome) {
    if (!outcome.purity) {
        throw std::invalid_argument("fit_pb expects a purity curve");
    }
    const CurveFit c = fit_decay_curve(outcome.lengths, outcome.mean, 1);
    PBFit fit;
    fit.a = c.a;
    fit.b = c.b;
    fit.u = c.p;
    fit.a_err = c.a_err;
    fit.b_err = c.b_err;
    fit.u_err = c.p_err;
    const double root = std::sqrt(fit.u);
    fit.r_dec_cliff = 0.5 * (1.0 - root);
    fit.r_dec_cliff_err = root > 0.0 ? c.p_err / (4.0 * root) : 0.0;
    fit.r_dec_gate = fit.r_dec_cliff / CliffordTable::instance().average_gate_count();
    return fit;
}

double interleaved_error(const RBFit& reference, const RBFit& interleaved) {
    if (!(reference.p > 0.0)) {
        throw std::invalid_argument("reference decay parameter must be positive");
    }
    return 0.5 * (1.0 - interleaved.p / reference.p);
}

double depolarizing_clifford_p(double lambda) {
    if (!(lambda >= 0.0) || lambda > 1.0) {
        throw std::invalid_argument("depolarizing weight must lie in [0, 1]");
    }
    const CliffordTable& table = CliffordTable::instance();
    double total = 0.0;
    for (int k = 0; k < table.size(); ++k) {
        int pulses = 0;
        for (Gate g : table.element(k).gates) pulses += gate_pulse_count(g);
        total += std::pow(1.0 - lambda, pulses);
    }
    return total / table.size();
}

}  // namespace fluxonium
