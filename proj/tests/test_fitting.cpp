#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fluxonium/fitting.hpp"
#include "fluxonium/rng.hpp"

using namespace fluxonium;

TEST_CASE("linear model with exact data converges in a few iterations") {
    Eigen::VectorXd t(8), y(8);
    for (int i = 0; i < 8; ++i) {
        t[i] = i;
        y[i] = 2.5 * i - 1.25;
    }
    FitProblem prob;
    prob.residual = [&](const Eigen::VectorXd& p) {
        return (p[0] * t.array() + p[1] - y.array()).matrix().eval();
    };
    prob.init = Eigen::Vector2d(0.0, 0.0);
    const FitResult res = nlls_fit(prob);
    CHECK(res.converged);
    CHECK(res.iterations <= 3);
    // accuracy floor set by forward-difference Jacobian roundoff
    CHECK(res.params[0] == doctest::Approx(2.5).epsilon(1e-7));
    CHECK(res.params[1] == doctest::Approx(-1.25).epsilon(1e-7));
    CHECK(res.cost < 1e-12);
}

TEST_CASE("curved valley: converges from a displaced start") {
    FitProblem prob;
    prob.residual = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2);
        r[0] = 10.0 * (p[1] - p[0] * p[0]);
        r[1] = 1.0 - p[0];
        return r;
    };
    prob.init = Eigen::Vector2d(-1.2, 1.0);
    const FitResult res = nlls_fit(prob);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(1.0).epsilon(1e-6));
}

namespace {

Eigen::VectorXd exp_decay_data(double amp, double tau, const Eigen::VectorXd& t,
                               double noise_sigma, Rng& rng) {
    Eigen::VectorXd y(t.size());
    for (int i = 0; i < t.size(); ++i) {
        y[i] = amp * std::exp(-t[i] / tau) + noise_sigma * rng.normal();
    }
    return y;
}

FitResult fit_exp_decay(const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                        double amp0, double tau0) {
    FitProblem prob;
    prob.residual = [&](const Eigen::VectorXd& p) {
        return ((p[0] * (-t.array() / p[1]).exp()) - y.array()).matrix().eval();
    };
    prob.init = Eigen::Vector2d(amp0, tau0);
    prob.lower = Eigen::Vector2d(1e-12, 1e-12);
    return nlls_fit(prob);
}

}  // namespace

TEST_CASE("reported standard errors match Monte-Carlo scatter within 25%") {
    const double amp = 1.0, tau = 1.2, sigma = 0.01;
    Eigen::VectorXd t(40);
    for (int i = 0; i < 40; ++i) t[i] = 3.6 * i / 39.0;

    const int n_seeds = 200;
    std::vector<double> amps, taus;
    double err_amp_mean = 0.0, err_tau_mean = 0.0;
    Rng rng(20260814);
    for (int s = 0; s < n_seeds; ++s) {
        Rng child = rng.child(s);
        const Eigen::VectorXd y = exp_decay_data(amp, tau, t, sigma, child);
        const FitResult res = fit_exp_decay(t, y, 0.8, 1.0);
        REQUIRE(res.converged);
        amps.push_back(res.params[0]);
        taus.push_back(res.params[1]);
        err_amp_mean += res.std_errors[0] / n_seeds;
        err_tau_mean += res.std_errors[1] / n_seeds;
    }
    auto scatter = [](const std::vector<double>& v) {
        double mean = 0.0, var = 0.0;
        for (double x : v) mean += x / v.size();
        for (double x : v) var += (x - mean) * (x - mean) / (v.size() - 1);
        return std::sqrt(var);
    };
    CHECK(err_amp_mean == doctest::Approx(scatter(amps)).epsilon(0.25));
    CHECK(err_tau_mean == doctest::Approx(scatter(taus)).epsilon(0.25));
}

TEST_CASE("fit is invariant under residual permutation") {
    Eigen::VectorXd t(30);
    for (int i = 0; i < 30; ++i) t[i] = 0.1 * i;
    Rng rng(7);
    const Eigen::VectorXd y = exp_decay_data(2.0, 0.9, t, 0.02, rng);

    const FitResult fwd = fit_exp_decay(t, y, 1.5, 0.5);

    Eigen::VectorXd t_rev = t.reverse();
    Eigen::VectorXd y_rev = y.reverse();
    const FitResult rev = fit_exp_decay(t_rev, y_rev, 1.5, 0.5);

    CHECK(fwd.params[0] == doctest::Approx(rev.params[0]).epsilon(1e-10));
    CHECK(fwd.params[1] == doctest::Approx(rev.params[1]).epsilon(1e-10));
}

TEST_CASE("forward-difference step rule tracks central differences") {
    auto f = [](double x) { return std::sin(3.0 * x) * std::exp(-0.5 * x); };
    for (double x : {0.3, 1.7, 42.0}) {
        const double h = std::max(1e-6 * std::abs(x), 1e-9);
        const double fwd = (f(x + h) - f(x)) / h;
        const double ctr = (f(x + h / 2) - f(x - h / 2)) / h;
        CHECK(std::abs(fwd - ctr) <
              1e3 * h * std::max(1.0, std::abs(ctr)));
    }
}

TEST_CASE("input validation") {
    FitProblem prob;
    prob.residual = [](const Eigen::VectorXd& p) { return p; };
    prob.init = Eigen::VectorXd();
    CHECK_THROWS_AS(nlls_fit(prob), std::invalid_argument);

    // more parameters than residuals
    prob.init = Eigen::Vector3d(1, 2, 3);
    prob.residual = [](const Eigen::VectorXd& p) {
        return Eigen::VectorXd::Constant(2, p[0]).eval();
    };
    CHECK_THROWS_AS(nlls_fit(prob), std::invalid_argument);

    // init outside bounds
    prob.residual = [](const Eigen::VectorXd& p) { return p; };
    prob.lower = Eigen::Vector3d(2, 2, 2);
    CHECK_THROWS_AS(nlls_fit(prob), std::invalid_argument);
}

TEST_CASE("non-converged result carries diagnostics") {
    FitProblem prob;
    prob.residual = [](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(2);
        r[0] = 100.0 * (p[1] - p[0] * p[0]);
        r[1] = 1.0 - p[0];
        return r;
    };
    prob.init = Eigen::Vector2d(-3.0, 9.5);
    prob.max_iterations = 2;
    const FitResult res = nlls_fit(prob);
    CHECK_FALSE(res.converged);
    CHECK(res.message == "maximum iterations reached");
    CHECK(res.iterations == 2);
}

TEST_CASE("transition code round trip") {
    CHECK(encode_transition(0, 1) == 1);
    CHECK(encode_transition(1, 2) == 12);
    CHECK(encode_transition(0, 3) == 3);
    CHECK(decode_transition(23) == std::pair<int, int>(2, 3));
    CHECK(decode_transition(1) == std::pair<int, int>(0, 1));
    CHECK_THROWS_AS(encode_transition(2, 1), std::invalid_argument);
    CHECK_THROWS_AS(decode_transition(11), std::invalid_argument);
}

namespace {

std::vector<SpectroscopyPoint> synth_spectroscopy(const CircuitParams& truth,
                                                  int n_flux, double noise_ghz,
                                                  Rng* rng) {
    const std::vector<std::pair<int, int>> transitions = {{0, 1}, {1, 2}, {0, 3}};
    std::vector<SpectroscopyPoint> data;
    for (int i = 0; i < n_flux; ++i) {
        CircuitParams p = truth;
        p.flux = 0.35 + 0.3 * i / (n_flux - 1.0);
        const EigenSystem eig = solve(p, 4, false);
        for (auto [a, b] : transitions) {
            double f = transition_frequency(eig, a, b);
            if (rng) f += noise_ghz * rng->normal();
            data.push_back({p.flux, a, b, f});
        }
    }
    return data;
}

}  // namespace

TEST_CASE("spectroscopy fit: noiseless round trip within 0.001 GHz") {
    CircuitParams truth;  // defaults
    const auto data = synth_spectroscopy(truth, 20, 0.0, nullptr);

    CircuitParams init = truth;
    init.e_c = 1.5;
    init.e_l = 0.45;
    init.e_j = 7.0;
    const FitResult res = fit_spectroscopy(data, init);
    CHECK(res.converged);
    CHECK(std::abs(res.params[0] - truth.e_c) < 0.001);
    CHECK(std::abs(res.params[1] - truth.e_l) < 0.001);
    CHECK(std::abs(res.params[2] - truth.e_j) < 0.001);
    CHECK(res.std_errors.maxCoeff() < 0.001);
}

TEST_CASE("spectroscopy fit: init at truth converges with zero iterations") {
    CircuitParams truth;
    const auto data = synth_spectroscopy(truth, 8, 0.0, nullptr);
    const FitResult res = fit_spectroscopy(data, truth);
    CHECK(res.converged);
    CHECK(res.iterations == 0);
    CHECK(res.cost == 0.0);
}

TEST_CASE("spectroscopy fit: 1 MHz noise recovered within 0.005 GHz") {
    CircuitParams truth;
    truth.basis_dim = 60;  // converged to far below the noise scale, keeps this fast
    Rng rng(11);
    for (int trial = 0; trial < 3; ++trial) {
        Rng child = rng.child(trial);
        const auto data = synth_spectroscopy(truth, 20, 0.001, &child);
        CircuitParams init = truth;
        init.e_c = 1.3;
        init.e_l = 0.5;
        init.e_j = 6.5;
        const FitResult res = fit_spectroscopy(data, init);
        CHECK(res.converged);
        CHECK(std::abs(res.params[0] - truth.e_c) < 0.005);
        CHECK(std::abs(res.params[1] - truth.e_l) < 0.005);
        CHECK(std::abs(res.params[2] - truth.e_j) < 0.005);
    }
}

TEST_CASE("spectroscopy fit: degenerate data rejected") {
    CircuitParams truth;
    const EigenSystem eig = solve(truth, 4, false);
    std::vector<SpectroscopyPoint> one_flux;
    for (int rep = 0; rep < 4; ++rep) {
        one_flux.push_back({0.5, 0, 1, transition_frequency(eig, 0, 1)});
        one_flux.push_back({0.5, 1, 2, transition_frequency(eig, 1, 2)});
    }
    CHECK_THROWS_AS(fit_spectroscopy(one_flux, truth), std::invalid_argument);

    std::vector<SpectroscopyPoint> too_few(one_flux.begin(), one_flux.begin() + 4);
    CHECK_THROWS_AS(fit_spectroscopy(too_few, truth), std::invalid_argument);

    // single transition across many fluxes
    auto data = synth_spectroscopy(truth, 8, 0.0, nullptr);
    std::vector<SpectroscopyPoint> single;
    for (const auto& pt : data) {
        if (pt.level_i == 0 && pt.level_j == 1) single.push_back(pt);
    }
    CHECK_THROWS_AS(fit_spectroscopy(single, truth), std::invalid_argument);
}
