#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fluxonium/fitting.hpp"
#include "fluxonium/pumping.hpp"
#include "fluxonium/rng.hpp"
#include "oracles.hpp"

using namespace fluxonium;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1.0);
    return v;
}

Eigen::Matrix3d rate_matrix_per_us(const QutritRates& r) {
    const double gu = r.gamma_up() * 1e-3;
    const double gd = r.gamma_down() * 1e-3;
    const double g02 = r.gamma_02 * 1e-3;
    const double w = r.omega_12;
    Eigen::Matrix3d m;
    m << -gu, gd, g02,
          gu, -gd - w, w,
          0.0, w, -g02 - w;
    return m;
}

}  // namespace

TEST_CASE("input validation") {
    QutritRates r;
    r.p1_th = 0.5;  // breaks p0 + p1 = 1
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);

    r = QutritRates{};
    r.gamma_01 = -1.0;
    CHECK_THROWS_AS(simulate_qutrit(r, {1, 0, 0}, {0.0, 1.0}), std::invalid_argument);

    r = QutritRates{};
    CHECK_THROWS_AS(simulate_qutrit(r, {0.7, 0.7, -0.4}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(simulate_qutrit(r, {0.5, 0.5, 0.0}, {1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(simulate_qutrit(r, {0.5, 0.5, 0.0}, {}), std::invalid_argument);

    // saturation assertion
    r.gamma_01 = 1.0;
    r.omega_12 = 0.01;  // only 10x the decay rate
    CHECK_THROWS_AS(r.assert_saturating(), std::invalid_argument);
    r.omega_12 = 1.0;
    CHECK_NOTHROW(r.assert_saturating());
}

TEST_CASE("equilibrium start with no drive stays constant") {
    QutritRates r;
    r.gamma_01 = 1.0;
    r.gamma_02 = 0.0;
    r.omega_12 = 0.0;
    const auto trace = simulate_qutrit(r, {r.p0_th, r.p1_th, 0.0}, linspace(0, 4000, 21));
    for (size_t i = 0; i < trace.times.size(); ++i) {
        CHECK(trace.p0[i] == doctest::Approx(r.p0_th).epsilon(1e-12));
        CHECK(trace.p1[i] == doctest::Approx(r.p1_th).epsilon(1e-12));
        CHECK(trace.p2[i] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("populations conserved and inside [0,1] along the trace") {
    QutritRates r;
    r.gamma_01 = 1.0;
    r.gamma_02 = 2.0;
    r.omega_12 = 1.0;
    const auto trace = simulate_qutrit(r, {1.0, 0.0, 0.0}, linspace(0, 3000, 61));
    for (size_t i = 0; i < trace.times.size(); ++i) {
        const double sum = trace.p0[i] + trace.p1[i] + trace.p2[i];
        CHECK(std::abs(sum - 1.0) < 1e-9);
        for (double p : {trace.p0[i], trace.p1[i], trace.p2[i]}) {
            CHECK(p >= -1e-12);
            CHECK(p <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("saturated relaxation rate matches the analytic reduction within 0.5%") {
    QutritRates r;
    r.gamma_01 = 1.0;
    r.gamma_02 = 0.0;
    r.omega_12 = 1.0;  // 1/us, 1000x the decay scale
    const auto grid = linspace(0, 5000, 120);
    const auto trace = simulate_qutrit(r, {1.0, 0.0, 0.0}, grid);

    // fit p0(t) = c + a exp(-k t), k in 1/us
    FitProblem prob;
    prob.residual = [&](const Eigen::VectorXd& q) {
        Eigen::VectorXd res(static_cast<int>(grid.size()));
        for (size_t i = 0; i < grid.size(); ++i) {
            res[static_cast<int>(i)] =
                q[0] + q[1] * std::exp(-q[2] * grid[i]) - trace.p0[i];
        }
        return res;
    };
    prob.init = Eigen::Vector3d(0.5, 0.5, 1e-3);
    const FitResult fit = nlls_fit(prob);
    REQUIRE(fit.converged);
    const double rate_per_ms = fit.params[2] * 1e3;
    CHECK(rate_per_ms == doctest::Approx(effective_rate(r)).epsilon(0.005));
}

TEST_CASE("simulation matches the exact linear-system solution on random rate sets") {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        QutritRates r;
        r.gamma_01 = rng.uniform(0.1, 5.0);
        r.p0_th = rng.uniform(0.3, 0.9);
        r.p1_th = 1.0 - r.p0_th;
        r.gamma_02 = rng.uniform(0.0, 5.0);
        const double ratio = std::pow(10.0, rng.uniform(2.0, 4.0));
        r.omega_12 = ratio * std::max(r.gamma_01, r.gamma_02) * 1e-3;

        Eigen::Vector3d init(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                             rng.uniform(0.0, 1.0));
        init /= init.sum();

        const auto grid = linspace(0, 1000, 6);
        const auto trace =
            simulate_qutrit(r, {init[0], init[1], init[2]}, grid);
        const Eigen::Matrix3d m = rate_matrix_per_us(r);
        for (size_t i = 0; i < grid.size(); ++i) {
            const Eigen::Vector3d exact = oracles::rate_matrix_solution(m, init, grid[i]);
            CHECK(std::abs(trace.p0[i] - exact[0]) < 1e-6);
            CHECK(std::abs(trace.p1[i] - exact[1]) < 1e-6);
            CHECK(std::abs(trace.p2[i] - exact[2]) < 1e-6);
        }
    }
}

TEST_CASE("step-size failure is reported, not silently mis-integrated") {
    QutritRates r;
    r.omega_12 = 1e4;
    CHECK_THROWS_AS(simulate_qutrit(r, {1, 0, 0}, {0.0, 1e7}), NumericError);
}

TEST_CASE("effective rate arithmetic and reduced-system eigenvalue") {
    QutritRates r;
    r.gamma_01 = 1.0;
    r.p0_th = 0.58;
    r.p1_th = 0.42;
    r.gamma_02 = 2.0;
    CHECK(effective_rate(r) == doctest::Approx(1.71).epsilon(1e-12));

    // nonzero eigenvalue of the saturated 2-variable system is -gamma_eff
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        QutritRates q;
        q.gamma_01 = rng.uniform(0.1, 4.0);
        q.p0_th = rng.uniform(0.2, 0.9);
        q.p1_th = 1.0 - q.p0_th;
        q.gamma_02 = rng.uniform(0.0, 4.0);
        Eigen::Matrix2d reduced;
        const double gu = q.gamma_up(), gdc = q.gamma_down() + q.gamma_02;
        reduced << -gu, gdc, gu / 2.0, -gdc / 2.0;
        const Eigen::Vector2cd eigs = reduced.eigenvalues();
        const double slowest = std::min(eigs[0].real(), eigs[1].real());
        CHECK(slowest == doctest::Approx(-effective_rate(q)).epsilon(1e-12));
    }
}

TEST_CASE("invert_t102 reproduces the trace-derived time constants") {
    const auto a = invert_t102(0.338, 1.0, 0.58, 0.026);
    REQUIRE(a.kind == T102Estimate::Kind::Value);
    CHECK(a.t102_ms == doctest::Approx(0.2224).epsilon(1e-3));
    // stderr via the closed-form derivative 2 T1^2 / denom^2
    const double denom = 2.0 - 1.42 * 0.338;
    CHECK(a.stderr_ms == doctest::Approx(0.026 * 2.0 / (denom * denom)).epsilon(1e-12));

    const auto b = invert_t102(0.651, 1.0, 0.58);
    CHECK(b.t102_ms == doctest::Approx(0.6053).epsilon(1e-3));

    // gamma_02 = 0 limit: t_eff at the ceiling 2 T1/(2 - p0_th)
    const auto c = invert_t102(2.0 / 1.42, 1.0, 0.58);
    CHECK(c.kind == T102Estimate::Kind::Unbounded);
    CHECK(std::isinf(c.t102_ms));

    CHECK_THROWS_AS(invert_t102(-0.1, 1.0, 0.58), std::invalid_argument);
}

TEST_CASE("invert_t102 of effective_rate is the identity on gamma_02") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        QutritRates r;
        r.gamma_01 = rng.uniform(0.2, 4.0);
        r.p0_th = rng.uniform(0.3, 0.9);
        r.p1_th = 1.0 - r.p0_th;
        r.gamma_02 = rng.uniform(1e-3, 10.0);
        const double t_eff = 1.0 / effective_rate(r);
        const auto est = invert_t102(t_eff, 1.0 / r.gamma_01, r.p0_th);
        REQUIRE(est.kind == T102Estimate::Kind::Value);
        CHECK(est.t102_ms == doctest::Approx(1.0 / r.gamma_02).epsilon(1e-12));
    }
}

TEST_CASE("stderr propagation matches a finite-difference of the inversion") {
    const double t_eff = 0.42, t1 = 1.1, p0 = 0.61, sigma = 0.013;
    const auto est = invert_t102(t_eff, t1, p0, sigma);
    const double dh = 1e-7;
    const double up = invert_t102(t_eff + dh, t1, p0).t102_ms;
    const double dn = invert_t102(t_eff - dh, t1, p0).t102_ms;
    const double fd = (up - dn) / (2.0 * dh) * sigma;
    CHECK(est.stderr_ms == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("cooling analysis: limits, monotonicity, blind window") {
    const auto cool = cooling_analysis(1.0, 0.580, 0.005);

    // without the pump pathway the protocol heats: saturation below p0_th
    CHECK(cool.p0_heat_limit == doctest::Approx(0.580 / 1.420).epsilon(1e-12));
    CHECK(cool.p0_heat_limit < 0.580);

    // strong gamma_02 cools toward 1
    CHECK(cooling_saturation_p0(0.580, 1e6) > 0.999);

    // saturation decreases as T1^02 grows
    double prev = 2.0;
    for (const auto& [t102, p0s] : cool.curve) {
        CHECK(p0s < prev);
        prev = p0s;
        CHECK(p0s >= 0.0);
        CHECK(p0s <= 1.0);
    }

    // blind window where the saturation shift is below the precision
    CHECK(cool.blind_center_r == doctest::Approx(0.580).epsilon(1e-12));
    CHECK(cool.r_low == doctest::Approx(0.5565).epsilon(1e-3));
    CHECK(cool.r_high == doctest::Approx(0.6041).epsilon(1e-3));
    CHECK(cool.t102_low_ms == doctest::Approx(1.0 / 0.6041).epsilon(1e-3));
    CHECK(cool.t102_high_ms == doctest::Approx(1.0 / 0.5565).epsilon(1e-3));

    // the window sits in the quoted ballpark of r ~ 0.63
    CHECK(std::abs(cool.blind_center_r - 0.63) < 0.1);

    // inside the window the saturation really is indistinguishable
    const double mid_r = 0.5 * (cool.r_low + cool.r_high);
    CHECK(std::abs(cooling_saturation_p0(0.580, mid_r) - 0.580) < 0.005);
    CHECK(std::abs(cooling_saturation_p0(0.580, cool.r_low * 0.8) - 0.580) > 0.005);
    CHECK(std::abs(cooling_saturation_p0(0.580, cool.r_high * 1.2) - 0.580) > 0.005);
}

TEST_CASE("thermal escape adds to the direct rate") {
    // a 20/ms downward 2-3 dielectric rate at 25 mK makes the upward escape
    // about 0.82/ms at f23 = 1.64 GHz
    const double base = 0.4;
    const double combined = gamma_02_with_escape(base, 20.0, 1.6432, 0.025);
    CHECK(combined > base);
    CHECK(combined - base == doctest::Approx(0.8187).epsilon(2e-3));
    CHECK(gamma_02_with_escape(base, 0.0, 1.6432, 0.025) == base);
}
