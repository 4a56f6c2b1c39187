#include "fluxonium/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "fluxonium/fitting.hpp"
#include "fluxonium/units.hpp"

namespace fluxonium {

namespace {

int clamp_bin(double x, double lo, double hi, int bins) {
    if (hi <= lo) return 0;
    int idx = static_cast<int>((x - lo) / (hi - lo) * bins);
    return std::clamp(idx, 0, bins - 1);
}

}  // namespace

IQHistogram IQHistogram::from_shots(const std::vector<std::pair<double, double>>& shots,
                                    int bins) {
    if (shots.empty()) throw std::invalid_argument("no shots");
    if (bins < 8) throw std::invalid_argument("need at least 8 bins per axis");
    IQHistogram h;
    h.bins = bins;
    double i_lo = shots[0].first, i_hi = shots[0].first;
    double q_lo = shots[0].second, q_hi = shots[0].second;
    for (const auto& s : shots) {
        if (!std::isfinite(s.first) || !std::isfinite(s.second)) {
            throw std::invalid_argument("non-finite shot");
        }
        i_lo = std::min(i_lo, s.first);
        i_hi = std::max(i_hi, s.first);
        q_lo = std::min(q_lo, s.second);
        q_hi = std::max(q_hi, s.second);
    }
    // pad by one bin so edge samples do not pile into the boundary bins
    const double i_pad = std::max((i_hi - i_lo) / bins, 1e-12);
    const double q_pad = std::max((q_hi - q_lo) / bins, 1e-12);
    h.i_min = i_lo - i_pad;
    h.i_max = i_hi + i_pad;
    h.q_min = q_lo - q_pad;
    h.q_max = q_hi + q_pad;
    h.counts.assign(static_cast<size_t>(bins) * bins, 0.0);
    for (const auto& s : shots) {
        const int ix = clamp_bin(s.first, h.i_min, h.i_max, bins);
        const int iq = clamp_bin(s.second, h.q_min, h.q_max, bins);
        h.counts[static_cast<size_t>(ix) * bins + iq] += 1.0;
    }
    h.total = static_cast<double>(shots.size());
    return h;
}

double IQHistogram::bin_center_i(int ix) const {
    return i_min + (ix + 0.5) * (i_max - i_min) / bins;
}

double IQHistogram::bin_center_q(int iq) const {
    return q_min + (iq + 0.5) * (q_max - q_min) / bins;
}

ReadoutFit fit_double_gaussian(const IQHistogram& hist,
                               const std::optional<BlobInit>& init) {
    if (hist.bins < 8 || hist.counts.size() != static_cast<size_t>(hist.bins) * hist.bins) {
        throw std::invalid_argument("malformed histogram");
    }
    double total = 0.0;
    for (double c : hist.counts) {
        if (c < 0.0 || !std::isfinite(c)) throw std::invalid_argument("negative bin count");
        total += c;
    }
    if (total < 1000.0) {
        throw std::invalid_argument("double-gaussian fit needs at least 1000 shots");
    }

    // principal axis of the count-weighted covariance of the bin centers
    const int b = hist.bins;
    double mi = 0.0, mq = 0.0;
    for (int ix = 0; ix < b; ++ix) {
        for (int iq = 0; iq < b; ++iq) {
            const double w = hist.counts[static_cast<size_t>(ix) * b + iq];
            mi += w * hist.bin_center_i(ix);
            mq += w * hist.bin_center_q(iq);
        }
    }
    mi /= total;
    mq /= total;
    double cii = 0.0, ciq = 0.0, cqq = 0.0;
    for (int ix = 0; ix < b; ++ix) {
        for (int iq = 0; iq < b; ++iq) {
            const double w = hist.counts[static_cast<size_t>(ix) * b + iq];
            if (w == 0.0) continue;
            const double di = hist.bin_center_i(ix) - mi;
            const double dq = hist.bin_center_q(iq) - mq;
            cii += w * di * di;
            ciq += w * di * dq;
            cqq += w * dq * dq;
        }
    }
    const double lam = 0.5 * (cii + cqq) +
                       std::sqrt(0.25 * (cii - cqq) * (cii - cqq) + ciq * ciq);
    double vi, vq;
    if (std::abs(lam - cii) > std::abs(lam - cqq)) {
        vi = ciq;
        vq = lam - cii;
    } else {
        vi = lam - cqq;
        vq = ciq;
    }
    double vnorm = std::hypot(vi, vq);
    if (vnorm == 0.0) {
        vi = 1.0;
        vq = 0.0;
        vnorm = 1.0;
    }
    vi /= vnorm;
    vq /= vnorm;
    // orient toward positive I so blob labels are reproducible without an init
    if (vi < 0.0 || (vi == 0.0 && vq < 0.0)) {
        vi = -vi;
        vq = -vq;
    }

    // 1-D histogram of the projected coordinate
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -x_lo;
    for (int ix = 0; ix < b; ++ix) {
        for (int iq = 0; iq < b; ++iq) {
            if (hist.counts[static_cast<size_t>(ix) * b + iq] == 0.0) continue;
            const double x = vi * hist.bin_center_i(ix) + vq * hist.bin_center_q(iq);
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
        }
    }
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    std::vector<double> proj(b, 0.0);
    const double width = (x_hi - x_lo) / b;
    for (int ix = 0; ix < b; ++ix) {
        for (int iq = 0; iq < b; ++iq) {
            const double w = hist.counts[static_cast<size_t>(ix) * b + iq];
            if (w == 0.0) continue;
            const double x = vi * hist.bin_center_i(ix) + vq * hist.bin_center_q(iq);
            proj[clamp_bin(x, x_lo, x_hi, b)] += w;
        }
    }
    auto bin_x = [&](int k) { return x_lo + (k + 0.5) * width; };

    // starting point: init centers if given, otherwise the two dominant peaks
    double x0_init, x1_init, a0_init, a1_init;
    if (init) {
        x0_init = vi * init->c0[0] + vq * init->c0[1];
        x1_init = vi * init->c1[0] + vq * init->c1[1];
        if (std::abs(x1_init - x0_init) < width) {
            throw std::invalid_argument("init centers coincide along the principal axis");
        }
        a0_init = std::max(proj[clamp_bin(x0_init, x_lo, x_hi, b)], 1.0);
        a1_init = std::max(proj[clamp_bin(x1_init, x_lo, x_hi, b)], 1.0);
    } else {
        const int peak1 = static_cast<int>(
            std::max_element(proj.begin(), proj.end()) - proj.begin());
        const int mask = std::max(b / 5, 2);
        int peak2 = -1;
        for (int k = 0; k < b; ++k) {
            if (std::abs(k - peak1) <= mask) continue;
            if (peak2 < 0 || proj[k] > proj[peak2]) peak2 = k;
        }
        if (peak2 < 0 || proj[peak2] < 0.05 * proj[peak1]) {
            throw NonIdentifiableError(
                "only one mode is resolvable; pass init centers to force a two-mode fit");
        }
        // blob 0 = lower projected coordinate
        const int left = std::min(peak1, peak2);
        const int right = std::max(peak1, peak2);
        x0_init = bin_x(left);
        x1_init = bin_x(right);
        a0_init = proj[left];
        a1_init = proj[right];
    }
    const double sigma_init = std::max(std::abs(x1_init - x0_init) / 4.0, width);

    FitProblem problem;
    problem.residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(b);
        const double s2 = p[4] * p[4];
        for (int k = 0; k < b; ++k) {
            const double d0 = bin_x(k) - p[1];
            const double d1 = bin_x(k) - p[3];
            r[k] = p[0] * std::exp(-d0 * d0 / s2) + p[2] * std::exp(-d1 * d1 / s2) -
                   proj[k];
        }
        return r;
    };
    problem.init = Eigen::VectorXd(5);
    problem.init << a0_init, x0_init, a1_init, x1_init, sigma_init;
    const double inf = std::numeric_limits<double>::infinity();
    problem.lower = Eigen::VectorXd(5);
    problem.lower << 0.0, -inf, 0.0, -inf, width / 4.0;
    problem.upper = Eigen::VectorXd(5);
    problem.upper << inf, inf, inf, inf, inf;

    const FitResult res = nlls_fit(problem);
    if (!res.converged) {
        throw NumericError("double-gaussian fit did not converge: " + res.message);
    }

    ReadoutFit out;
    out.a0 = res.params[0];
    out.a1 = res.params[2];
    out.sigma = res.params[4];
    const double x0 = res.params[1];
    const double x1 = res.params[3];
    const double weight = out.a0 + out.a1;
    if (weight <= 0.0) {
        throw NonIdentifiableError("fit collapsed: both mode amplitudes are zero");
    }
    out.p0 = std::clamp(out.a0 / weight, 0.0, 1.0);
    out.p1 = 1.0 - out.p0;
    out.low_population = std::min(out.p0, out.p1) < 0.01;
    // with both modes populated, the separation must resolve them
    if (!out.low_population && std::abs(x1 - x0) < out.sigma) {
        throw NonIdentifiableError("modes are closer than their width");
    }

    // place the centers on the principal line through the data mean
    const double mproj = vi * mi + vq * mq;
    out.center0 = {mi + vi * (x0 - mproj), mq + vq * (x0 - mproj)};
    out.center1 = {mi + vi * (x1 - mproj), mq + vq * (x1 - mproj)};

    const double n0 = std::hypot(out.center0[0], out.center0[1]);
    const double n1 = std::hypot(out.center1[0], out.center1[1]);
    if (n0 > 0.0 && n1 > 0.0) {
        const double cosang =
            (out.center0[0] * out.center1[0] + out.center0[1] * out.center1[1]) / (n0 * n1);
        out.blob_angle = std::acos(std::clamp(cosang, -1.0, 1.0));
    }
    return out;
}

double dispersive_shift_from_angle(double blob_angle_rad, double kappa_mhz) {
    if (!(kappa_mhz > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(blob_angle_rad >= 0.0) || blob_angle_rad >= M_PI) {
        throw std::invalid_argument("blob angle must lie in [0, pi)");
    }
    return 0.5 * kappa_mhz * std::tan(0.5 * blob_angle_rad);
}

double blob_angle_from_shift(double chi_mhz, double kappa_mhz) {
    if (!(kappa_mhz > 0.0)) throw std::invalid_argument("kappa must be positive");
    if (!(chi_mhz >= 0.0)) throw std::invalid_argument("chi must be non-negative");
    return 2.0 * std::atan(2.0 * chi_mhz / kappa_mhz);
}

double temperature_from_populations(double p0, double f01_ghz) {
    if (!(f01_ghz > 0.0)) throw std::invalid_argument("frequency must be positive");
    if (!(p0 < 1.0)) throw std::invalid_argument("p0 must be below 1");
    if (!(p0 > 0.5)) {
        throw std::invalid_argument(
            "population inversion (p0 <= 0.5) has no positive temperature");
    }
    const double hf_over_kb = units::planck_h * f01_ghz * 1e9 / units::boltzmann_kb;
    return hf_over_kb / std::log(p0 / (1.0 - p0));
}

double populations_from_temperature(double temperature_k, double f01_ghz) {
    if (!(f01_ghz > 0.0)) throw std::invalid_argument("frequency must be positive");
    if (!(temperature_k >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (temperature_k == 0.0) return 1.0;
    const double x = units::thermal_exponent(f01_ghz, temperature_k);
    return 1.0 / (1.0 + std::exp(-x));
}

namespace {

// fraction of the initial deviation from equilibrium that survives averaging
// an exponential decay over the readout window
double readout_decay_factor(double t1_ro_us, double t_ro_us) {
    if (!(t_ro_us > 0.0)) throw std::invalid_argument("readout window must be positive");
    if (!(t1_ro_us > 0.0)) throw std::invalid_argument("decay time must be positive");
    if (std::isinf(t1_ro_us)) return 1.0;
    return (t1_ro_us / t_ro_us) * (1.0 - std::exp(-t_ro_us / t1_ro_us));
}

}  // namespace

double deconvolve_readout_decay(double p0_measured, double p0_infinity,
                                double t1_ro_us, double t_ro_us) {
    const double f = readout_decay_factor(t1_ro_us, t_ro_us);
    return p0_infinity + (p0_measured - p0_infinity) / f;
}

double average_during_readout(double p0_at_zero, double p0_infinity,
                              double t1_ro_us, double t_ro_us) {
    const double f = readout_decay_factor(t1_ro_us, t_ro_us);
    return p0_infinity + (p0_at_zero - p0_infinity) * f;
}

std::array<double, 3> reset_populations(double fidelity) {
    if (!(fidelity >= 0.0) || !(fidelity <= 1.0)) {
        throw std::invalid_argument("reset fidelity must lie in [0, 1]");
    }
    return {fidelity, 1.0 - fidelity, 0.0};
}

std::vector<std::pair<double, double>> simulate_shots(
    int n_shots, double p0, const std::array<double, 2>& center0,
    const std::array<double, 2>& center1, double sigma, Rng& rng) {
    if (n_shots < 1) throw std::invalid_argument("need at least one shot");
    if (!(p0 >= 0.0) || !(p0 <= 1.0)) throw std::invalid_argument("p0 must lie in [0, 1]");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    // mode profile exp(-|z - c|^2 / sigma^2): per-axis standard deviation sigma/sqrt(2)
    const double s = sigma / std::sqrt(2.0);
    std::vector<std::pair<double, double>> shots;
    shots.reserve(static_cast<size_t>(n_shots));
    for (int k = 0; k < n_shots; ++k) {
        const auto& c = (rng.uniform() < p0) ? center0 : center1;
        shots.emplace_back(c[0] + s * rng.normal(), c[1] + s * rng.normal());
    }
    return shots;
}

}  // namespace fluxonium
